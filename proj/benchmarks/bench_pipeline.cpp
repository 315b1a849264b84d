#include <benchmark/benchmark.h>

#include <random>

#include "gba/capture.hpp"
#include "gba/labels.hpp"
#include "gba/patch_engine.hpp"
#include "gba/resource_identity.hpp"
#include "gba/scene_sim.hpp"

namespace {

struct Session {
  gba::World world;
  gba::SessionOutput output;
  std::vector<gba::FrameCapture> captures;
  gba::Corpus corpus;
  gba::PatchTruth truth;
};

// 60 frames of the default world.
const Session& session() {
  static const Session s = [] {
    Session s;
    s.world = gba::generate_world({}, 42);
    gba::CameraPath path;
    path.steps = 60 * 40;
    s.output = gba::simulate_session(s.world, path, 40, {});
    s.captures = gba::capture_session(s.output.streams, 1);
    std::vector<gba::FramePatches> frames;
    for (const auto& c : s.captures) frames.push_back(gba::decompose(c));
    s.corpus = gba::make_corpus(std::move(frames));
    s.truth = gba::patch_truth(s.corpus, s.output.oracle);
    return s;
  }();
  return s;
}

void BM_Murmur3(benchmark::State& state) {
  std::vector<std::uint8_t> data(static_cast<std::size_t>(state.range(0)));
  std::mt19937 rng(1);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng());
  for (auto _ : state) benchmark::DoNotOptimize(gba::hash_resource(gba::ResourceKind::Texture, data));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Murmur3)->Arg(64)->Arg(4096)->Arg(1 << 20);

void BM_ReplayFrame(benchmark::State& state) {
  const auto& s = session();
  const gba::CommandStream& stream = s.output.streams[7];
  const auto passes = gba::identify_passes(stream);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gba::replay_color(stream, passes));
    benchmark::DoNotOptimize(gba::replay_ids(stream, passes));
  }
  state.SetItemsProcessed(state.iterations() * stream.width * stream.height);
}
BENCHMARK(BM_ReplayFrame)->Unit(benchmark::kMillisecond);

void BM_CaptureSession(benchmark::State& state) {
  const auto& s = session();
  for (auto _ : state) benchmark::DoNotOptimize(gba::capture_session(s.output.streams, static_cast<unsigned>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.output.streams.size()));
}
BENCHMARK(BM_CaptureSession)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_Decompose(benchmark::State& state) {
  const auto& s = session();
  for (auto _ : state) benchmark::DoNotOptimize(gba::decompose(s.captures[7]));
}
BENCHMARK(BM_Decompose)->Unit(benchmark::kMicrosecond);

void BM_MineRules(benchmark::State& state) {
  const auto& s = session();
  const gba::Palette palette = gba::Palette::default_palette();
  gba::LabelStore labeled;
  for (std::size_t f = 0; f < s.corpus.frames.size(); ++f)
    for (std::size_t p = 0; p < s.corpus.frames[f].patches.size(); ++p)
      if (s.truth[f][p] != gba::kUnlabeled)
        labeled.apply_label(s.corpus.index, palette, s.corpus.frames[f].patches[p].key, s.truth[f][p]);
  for (auto _ : state) {
    gba::LabelStore store = labeled;
    benchmark::DoNotOptimize(store.mine_rules());
  }
  state.counters["labeled_mts"] = static_cast<double>(labeled.mts_labels().size());
}
BENCHMARK(BM_MineRules)->Unit(benchmark::kMicrosecond);

void BM_SimulateAnnotator(benchmark::State& state) {
  const auto& s = session();
  const gba::Palette palette = gba::Palette::default_palette();
  for (auto _ : state) benchmark::DoNotOptimize(gba::simulate_annotator(s.corpus, s.truth, palette, {}));
}
BENCHMARK(BM_SimulateAnnotator)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
