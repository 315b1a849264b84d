#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <unistd.h>

namespace gba::testing {

SimCorpus simulate(CorpusConfig config) {
  SimCorpus s;
  config.path.steps = config.frames * config.stride;
  s.config = config;
  s.world = generate_world(config.world, config.seed);
  SessionSpec spec;
  spec.seed = config.seed;
  spec.width = config.width;
  spec.height = config.height;
  s.session = simulate_session(s.world, config.path, config.stride, spec);
  s.captures = capture_session(s.session.streams, 0);
  std::vector<FramePatches> frames;
  for (const FrameCapture& c : s.captures) frames.push_back(decompose(c));
  s.corpus = make_corpus(std::move(frames));
  s.truth = patch_truth(s.corpus, s.session.oracle);
  return s;
}

const SimCorpus& default_corpus() {
  static const SimCorpus corpus = simulate(CorpusConfig{});
  return corpus;
}

const SimCorpus& small_corpus() {
  static const SimCorpus corpus = [] {
    CorpusConfig c;
    c.frames = 40;
    c.stride = 300;
    c.width = 160;
    c.height = 90;
    return simulate(c);
  }();
  return corpus;
}

PersistentKey key_of(ResourceKind kind, const std::string& name) {
  return hash_resource(kind, std::span(reinterpret_cast<const std::uint8_t*>(name.data()), name.size()));
}

MtsKey mts(const std::string& mesh, const std::string& texture, const std::string& shader) {
  return {key_of(ResourceKind::Mesh, mesh), key_of(ResourceKind::Texture, texture),
          key_of(ResourceKind::Shader, shader)};
}

Corpus synthetic_corpus(const std::vector<std::vector<MtsKey>>& frames, std::uint32_t area) {
  std::vector<FramePatches> out;
  for (std::uint32_t f = 0; f < frames.size(); ++f) {
    FramePatches fp;
    fp.frameIndex = f;
    fp.width = static_cast<std::uint16_t>(std::max<std::size_t>(1, frames[f].size()) * area);
    fp.height = 1;
    std::vector<MtsKey> keys = frames[f];
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (std::uint32_t i = 0; i < keys.size(); ++i)
      fp.patches.push_back({f, keys[i], {{i * area, area}}, area});
    out.push_back(std::move(fp));
  }
  return make_corpus(std::move(out));
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gba_test_" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace gba::testing
