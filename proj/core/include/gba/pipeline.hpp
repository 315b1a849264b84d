#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gba/analytics.hpp"
#include "gba/labels.hpp"
#include "gba/scene_sim.hpp"

namespace gba {

/// Fixed run-directory layout. Stages communicate only through these files.
///
///   captures/  corpus.cfg, classes.txt, session_NNN.gbcap, session_NNN.oracle
///   frames/    frame_NNNNNN.{ppm,idp,tbl}
///   patches/   frame_NNNNNN.pat
///   labels/    params.txt, clicks.log, schedule.txt, rules.txt, maps/frame_NNNNNN.pgm
///   reports/   report.txt, report.kv, fig4.svg, fig5.svg, fig6.svg, verify.txt, gallery/
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path captures() const { return root / "captures"; }
  std::filesystem::path frames() const { return root / "frames"; }
  std::filesystem::path patches() const { return root / "patches"; }
  std::filesystem::path labels() const { return root / "labels"; }
  std::filesystem::path reports() const { return root / "reports"; }

  std::filesystem::path corpus_config() const { return captures() / "corpus.cfg"; }
  std::filesystem::path palette() const { return captures() / "classes.txt"; }
  std::filesystem::path session_capture(std::uint32_t session) const;
  std::filesystem::path session_oracle(std::uint32_t session) const;

  std::filesystem::path params() const { return labels() / "params.txt"; }
  std::filesystem::path clicks() const { return labels() / "clicks.log"; }
  std::filesystem::path schedule() const { return labels() / "schedule.txt"; }
  std::filesystem::path rules() const { return labels() / "rules.txt"; }
  std::filesystem::path maps() const { return labels() / "maps"; }
};

/// Number of session files under captures/.
std::uint32_t session_count(const RunLayout& run);

/// Corpus frame index of session `s`'s first frame is s * frames; session s
/// starts its camera path s * stride / sessions steps in.
void run_sim(const RunLayout& run, CorpusConfig config, const Palette& palette);

/// Captures and decomposes every session. Returns the frame count.
std::size_t run_process(const RunLayout& run, unsigned jobs);

Palette load_palette(const RunLayout& run);
CorpusConfig load_config(const RunLayout& run, const Palette& palette);
Corpus load_corpus(const RunLayout& run);
std::vector<OracleFrame> load_oracle(const RunLayout& run);

AnnotationRun run_autolabel(const RunLayout& run, const LabelParams& params);

/// The persisted annotation run, with its store rebuilt by replay.
struct SavedRun {
  LabelParams params;
  std::vector<ClickRecord> log;
  std::vector<FrameCheck> checks;
  std::vector<PresentedFrame> presented;
  LabelStore store;
};
SavedRun load_saved_run(const RunLayout& run, const Corpus& corpus, const Palette& palette);

struct VerifyResult {
  std::uint64_t annotatablePixels = 0;
  std::uint64_t labeledPixels = 0;
  std::uint64_t mislabeledPixels = 0;
  std::uint64_t ruleMislabeledPixels = 0;
  std::uint64_t scheduleViolations = 0;  // checks whose recorded state does not replay
  double density() const { return annotatablePixels ? double(labeledPixels) / double(annotatablePixels) : 1.0; }
  bool ok() const { return mislabeledPixels == 0 && scheduleViolations == 0; }
};

/// Diffs the exported label maps against the oracle and re-checks the schedule.
VerifyResult run_verify(const RunLayout& run, unsigned jobs);

struct StatsResult {
  CorpusReport report;
  PreAnnotationCurve curve;
  MtsDistribution distribution;
};
StatsResult run_stats(const RunLayout& run, unsigned jobs);

/// Writes label maps for `frames` (all frames when empty). Returns the count.
std::size_t run_export(const RunLayout& run, const std::vector<std::uint32_t>& frames);

/// Writes `count` randomly chosen frames and their label overlays.
std::vector<std::uint32_t> run_gallery(const RunLayout& run, std::size_t count, std::uint64_t seed);

/// Label overlay: labeled pixels blended toward the class color.
ColorImage overlay_labels(const ColorImage& image, const LabelMap& labels, const Palette& palette, double opacity);

}  // namespace gba
