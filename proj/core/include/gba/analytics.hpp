#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gba/classes.hpp"
#include "gba/labels.hpp"
#include "gba/patch_engine.hpp"

namespace gba {

struct CorpusReport {
  std::uint64_t frameCount = 0;
  std::uint64_t totalPixels = 0;        // every pixel of every frame
  std::uint64_t annotatablePixels = 0;  // non-background pixels
  std::uint64_t labeledPixels = 0;
  std::uint64_t explicitPixels = 0;
  std::uint64_t rulePixels = 0;
  std::uint64_t conflictPixels = 0;
  double annotationDensity = 0.0;  // labeled / annotatable
  double mtsCoveredFraction = 0.0;   // explicit / annotatable
  double ruleCoveredFraction = 0.0;  // rule / annotatable
  std::map<ClassId, std::uint64_t> perClassPixels;  // labeled classes only
  std::uint64_t ruleCount = 0;      // active rules
  std::uint64_t rulesCreated = 0;   // including retracted ones
  std::uint64_t presentedFrameCount = 0;
  std::uint64_t clickCount = 0;
  std::uint64_t labeledMtsCount = 0;

  double clicks_per_presented_frame() const {
    return presentedFrameCount ? double(clickCount) / double(presentedFrameCount) : 0.0;
  }
  bool operator==(const CorpusReport&) const = default;
};

/// Full-corpus scan resolving every patch with the store's precedence.
/// Frames are split over `jobs` threads; the reduction is in frame order.
CorpusReport density_report(const Corpus& corpus, const LabelStore& store, std::uint64_t presentedFrames,
                            unsigned jobs = 1);

struct CurvePoint {
  std::uint32_t frameIndex = 0;
  double fraction = 0.0;
  bool presented = false;
  bool operator==(const CurvePoint&) const = default;
};

struct PreAnnotationCurve {
  std::vector<CurvePoint> perFrame;  // in the order frames were reached
  std::vector<double> sortedVariant; // same fractions, descending

  /// Share of frames whose fraction is at least `threshold`, optionally
  /// ignoring the first `skipFirst` frames reached.
  double share_at_least(double threshold, std::size_t skipFirst = 0) const;
  bool operator==(const PreAnnotationCurve&) const = default;
};

/// Replays `log` (mining at `minePoints`) and evaluates each frame at the
/// click position recorded in its check.
PreAnnotationCurve preannotation_curve(const Corpus& corpus, const Palette& palette, const LabelParams& params,
                                       std::span<const ClickRecord> log, std::span<const std::uint64_t> minePoints,
                                       std::span<const FrameCheck> checks);

struct MtsDistribution {
  std::uint64_t mtsCount = 0;
  double singleFrameFraction = 0.0;
  std::uint32_t medianOccurrences = 0;  // lower median
  std::map<std::uint32_t, std::uint64_t> histogram;  // frames -> MTS count
  bool operator==(const MtsDistribution&) const = default;
};

MtsDistribution mts_distribution(std::span<const std::uint32_t> occurrenceCounts);
/// Occurrence count of an MTS is the number of frames it appears in.
MtsDistribution mts_distribution_report(const MtsIndex& index);

// Report files.
std::string report_text(const CorpusReport& report, const PreAnnotationCurve& curve, const MtsDistribution& dist,
                        const Palette& palette);
std::string report_kv(const CorpusReport& report, const PreAnnotationCurve& curve, const MtsDistribution& dist,
                      const Palette& palette);

std::string svg_class_pixels(const CorpusReport& report, const Palette& palette);  // fig4
std::string svg_preannotation(const PreAnnotationCurve& curve);                      // fig5
std::string svg_occurrences(const MtsDistribution& dist);                            // fig6

}  // namespace gba
