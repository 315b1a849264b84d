// Shared corpora for tests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gba/capture.hpp"
#include "gba/labels.hpp"
#include "gba/patch_engine.hpp"
#include "gba/scene_sim.hpp"

namespace gba::testing {

struct SimCorpus {
  CorpusConfig config;
  World world;
  SessionOutput session;
  std::vector<FrameCapture> captures;
  Corpus corpus;
  PatchTruth truth;
};

/// Simulates, captures and decomposes one session of `config`.
SimCorpus simulate(CorpusConfig config);

/// The default 300-frame corpus, built once per process.
const SimCorpus& default_corpus();

/// A small corpus (40 frames, 160x90) for fast tests, built once per process.
const SimCorpus& small_corpus();

/// Deterministic resource keys for hand-built corpora.
PersistentKey key_of(ResourceKind kind, const std::string& name);
MtsKey mts(const std::string& mesh, const std::string& texture, const std::string& shader);

/// Frames whose patches are the given keys (one pixel run each, `area`
/// pixels per patch) laid out left to right in a one-row image.
Corpus synthetic_corpus(const std::vector<std::vector<MtsKey>>& frames, std::uint32_t area = 10);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path);

}  // namespace gba::testing
