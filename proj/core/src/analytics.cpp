#include "gba/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace gba {
namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string percent(double v) { return fmt("%.2f", 100.0 * v); }

void add_frame(CorpusReport& r, const FramePatches& frame, const LabelStore& store) {
  ++r.frameCount;
  r.totalPixels += frame.pixel_count();
  for (const Patch& p : frame.patches) {
    r.annotatablePixels += p.area;
    const PatchLabel l = store.resolve(p.key);
    if (l.conflict) r.conflictPixels += p.area;
    if (l.provenance == Provenance::Unlabeled) continue;
    (l.provenance == Provenance::ExplicitMts ? r.explicitPixels : r.rulePixels) += p.area;
    r.perClassPixels[l.cls] += p.area;
  }
}

void merge(CorpusReport& into, const CorpusReport& part) {
  into.frameCount += part.frameCount;
  into.totalPixels += part.totalPixels;
  into.annotatablePixels += part.annotatablePixels;
  into.explicitPixels += part.explicitPixels;
  into.rulePixels += part.rulePixels;
  into.conflictPixels += part.conflictPixels;
  for (const auto& [cls, n] : part.perClassPixels) into.perClassPixels[cls] += n;
}

}  // namespace

CorpusReport density_report(const Corpus& corpus, const LabelStore& store, std::uint64_t presentedFrames,
                            unsigned jobs) {
  const std::size_t n = corpus.frames.size();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<CorpusReport> parts(jobs);
  auto work = [&](unsigned j) {
    for (std::size_t i = j; i < n; i += jobs) add_frame(parts[j], corpus.frames[i], store);
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(work, j);
  }
  CorpusReport r;
  for (const CorpusReport& p : parts) merge(r, p);  // integer sums: order does not matter
  r.labeledPixels = r.explicitPixels + r.rulePixels;
  if (r.annotatablePixels) {
    const double a = static_cast<double>(r.annotatablePixels);
    r.annotationDensity = static_cast<double>(r.labeledPixels) / a;
    r.mtsCoveredFraction = static_cast<double>(r.explicitPixels) / a;
    r.ruleCoveredFraction = static_cast<double>(r.rulePixels) / a;
  } else {
    r.annotationDensity = 1.0;
  }
  r.ruleCount = store.rules().size();
  r.rulesCreated = store.rule_history().size();
  r.presentedFrameCount = presentedFrames;
  r.clickCount = store.click_log().size();
  r.labeledMtsCount = store.mts_labels().size();
  return r;
}

double PreAnnotationCurve::share_at_least(double threshold, std::size_t skipFirst) const {
  if (perFrame.size() <= skipFirst) return 0.0;
  const auto hits = std::count_if(perFrame.begin() + static_cast<std::ptrdiff_t>(skipFirst), perFrame.end(),
                                  [&](const CurvePoint& p) { return p.fraction >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(perFrame.size() - skipFirst);
}

PreAnnotationCurve preannotation_curve(const Corpus& corpus, const Palette& palette, const LabelParams& params,
                                       std::span<const ClickRecord> log, std::span<const std::uint64_t> minePoints,
                                       std::span<const FrameCheck> checks) {
  LabelStore store(params);
  std::size_t applied = 0, nextMine = 0;
  auto advance = [&](std::uint64_t position) {
    while (true) {
      while (nextMine < minePoints.size() && minePoints[nextMine] <= applied) {
        if (minePoints[nextMine] == applied) store.mine_rules();
        ++nextMine;
      }
      if (applied >= position || applied >= log.size()) break;
      const ClickRecord& r = log[applied++];
      store.apply_label(corpus.index, palette, r.key, r.cls, r.timestamp, r.kind);
    }
  };
  PreAnnotationCurve curve;
  for (const FrameCheck& c : checks) {
    advance(c.clickPosition);
    const auto pos = corpus.position(c.frameIndex);
    if (!pos) throw Error("schedule names unknown frame " + std::to_string(c.frameIndex));
    curve.perFrame.push_back({c.frameIndex, frame_coverage(corpus.frames[*pos], store).covered_fraction(), c.presented});
  }
  for (const CurvePoint& p : curve.perFrame) curve.sortedVariant.push_back(p.fraction);
  std::sort(curve.sortedVariant.begin(), curve.sortedVariant.end(), std::greater<>());
  return curve;
}

MtsDistribution mts_distribution(std::span<const std::uint32_t> occurrenceCounts) {
  MtsDistribution d;
  d.mtsCount = occurrenceCounts.size();
  if (occurrenceCounts.empty()) return d;
  std::vector<std::uint32_t> sorted(occurrenceCounts.begin(), occurrenceCounts.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::uint32_t c : sorted) ++d.histogram[c];
  d.singleFrameFraction = static_cast<double>(d.histogram.contains(1) ? d.histogram.at(1) : 0) /
                          static_cast<double>(sorted.size());
  d.medianOccurrences = sorted[(sorted.size() - 1) / 2];
  return d;
}

MtsDistribution mts_distribution_report(const MtsIndex& index) {
  std::vector<std::uint32_t> counts;
  counts.reserve(index.byMts.size());
  for (const auto& [key, occ] : index.byMts) counts.push_back(static_cast<std::uint32_t>(occ.size()));
  return mts_distribution(counts);
}

// ---------------------------------------------------------------------------

std::string report_text(const CorpusReport& r, const PreAnnotationCurve& curve, const MtsDistribution& dist,
                        const Palette& palette) {
  std::ostringstream out;
  char line[256];
  out << "Annotation summary\n\n";
  std::snprintf(line, sizeof line, "%-10s %14s %12s %10s %14s\n", "frames", "pixels", "density[%]", "clicks",
                "clicks/frame");
  out << line;
  std::snprintf(line, sizeof line, "%-10llu %14llu %12s %10llu %14.2f\n", (unsigned long long)r.frameCount,
                (unsigned long long)r.annotatablePixels, percent(r.annotationDensity).c_str(),
                (unsigned long long)r.clickCount, r.clicks_per_presented_frame());
  out << line << '\n';

  out << "Coverage by provenance\n";
  std::snprintf(line, sizeof line, "  %-22s %14llu %8s%%\n", "labeled MTS", (unsigned long long)r.explicitPixels,
                percent(r.mtsCoveredFraction).c_str());
  out << line;
  std::snprintf(line, sizeof line, "  %-22s %14llu %8s%%\n", "association rules", (unsigned long long)r.rulePixels,
                percent(r.ruleCoveredFraction).c_str());
  out << line;
  std::snprintf(line, sizeof line, "  %-22s %14llu\n", "held by conflicts", (unsigned long long)r.conflictPixels);
  out << line;
  std::snprintf(line, sizeof line, "  %-22s %14llu\n", "all pixels", (unsigned long long)r.totalPixels);
  out << line << '\n';

  std::snprintf(line, sizeof line, "Rules: %llu active, %llu created; labeled MTS: %llu; presented frames: %llu\n\n",
                (unsigned long long)r.ruleCount, (unsigned long long)r.rulesCreated,
                (unsigned long long)r.labeledMtsCount, (unsigned long long)r.presentedFrameCount);
  out << line;

  out << "Pixels per class\n";
  for (const auto& [cls, n] : r.perClassPixels) {
    const double share = r.labeledPixels ? double(n) / double(r.labeledPixels) : 0.0;
    std::snprintf(line, sizeof line, "  %-14s %14llu %8s%%\n", palette.at(cls).name.c_str(), (unsigned long long)n,
                  percent(share).c_str());
    out << line;
  }
  out << '\n';

  out << "Pre-annotation\n";
  std::snprintf(line, sizeof line, "  frames >= 90%% pre-annotated: %s%%\n", percent(curve.share_at_least(0.9)).c_str());
  out << line;
  std::snprintf(line, sizeof line, "  same, after the first 20:    %s%%\n",
                percent(curve.share_at_least(0.9, 20)).c_str());
  out << line << '\n';

  out << "MTS occurrence\n";
  std::snprintf(line, sizeof line, "  combinations:         %llu\n", (unsigned long long)dist.mtsCount);
  out << line;
  std::snprintf(line, sizeof line, "  in a single frame:    %s%%\n", percent(dist.singleFrameFraction).c_str());
  out << line;
  std::snprintf(line, sizeof line, "  median frames:        %u\n", dist.medianOccurrences);
  out << line;
  return out.str();
}

std::string report_kv(const CorpusReport& r, const PreAnnotationCurve& curve, const MtsDistribution& dist,
                      const Palette& palette) {
  std::ostringstream out;
  out.precision(17);
  out << "frames = " << r.frameCount << '\n'
      << "total_pixels = " << r.totalPixels << '\n'
      << "annotatable_pixels = " << r.annotatablePixels << '\n'
      << "labeled_pixels = " << r.labeledPixels << '\n'
      << "explicit_pixels = " << r.explicitPixels << '\n'
      << "rule_pixels = " << r.rulePixels << '\n'
      << "conflict_pixels = " << r.conflictPixels << '\n'
      << "annotation_density = " << r.annotationDensity << '\n'
      << "mts_covered_fraction = " << r.mtsCoveredFraction << '\n'
      << "rule_covered_fraction = " << r.ruleCoveredFraction << '\n'
      << "rule_count = " << r.ruleCount << '\n'
      << "rules_created = " << r.rulesCreated << '\n'
      << "presented_frames = " << r.presentedFrameCount << '\n'
      << "clicks = " << r.clickCount << '\n'
      << "labeled_mts = " << r.labeledMtsCount << '\n';
  for (const auto& [cls, n] : r.perClassPixels) out << "class_pixels." << palette.at(cls).name << " = " << n << '\n';
  out << "preannotated_90_share = " << curve.share_at_least(0.9) << '\n'
      << "preannotated_90_share_after_20 = " << curve.share_at_least(0.9, 20) << '\n'
      << "mts_count = " << dist.mtsCount << '\n'
      << "mts_single_frame_fraction = " << dist.singleFrameFraction << '\n'
      << "mts_median_occurrences = " << dist.medianOccurrences << '\n';
  for (const auto& [k, n] : dist.histogram) out << "mts_histogram." << k << " = " << n << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kW = 640, kH = 360, kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;

std::string svg_open(const std::string& title) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
      << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\""
      << kH - kBottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
      << "\" stroke=\"black\"/>\n";
  return out.str();
}

std::string hex_color(Rgb8 c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

}  // namespace

std::string svg_class_pixels(const CorpusReport& report, const Palette& palette) {
  std::ostringstream out;
  out << svg_open("Labeled pixels per class (log scale)");
  const double plotW = kW - kLeft - kRight, plotH = kH - kTop - kBottom;
  double maxLog = 1.0;
  for (const auto& [cls, n] : report.perClassPixels) maxLog = std::max(maxLog, std::log10(double(n) + 1));
  const double slot = report.perClassPixels.empty() ? plotW : plotW / double(report.perClassPixels.size());
  std::size_t i = 0;
  for (const auto& [cls, n] : report.perClassPixels) {
    const double h = plotH * std::log10(double(n) + 1) / std::ceil(maxLog);
    const double x = kLeft + slot * double(i++) + slot * 0.15;
    out << "<rect x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", kH - kBottom - h) << "\" width=\""
        << fmt("%.1f", slot * 0.7) << "\" height=\"" << fmt("%.1f", h) << "\" fill=\""
        << hex_color(palette.at(cls).color) << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n"
        << "<text x=\"" << fmt("%.1f", x + slot * 0.35) << "\" y=\"" << kH - kBottom + 14
        << "\" text-anchor=\"middle\">" << palette.at(cls).name << "</text>\n";
  }
  for (int e = 0; e <= static_cast<int>(std::ceil(maxLog)); ++e) {
    const double y = kH - kBottom - plotH * e / std::ceil(maxLog);
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt("%.1f", y + 4) << "\" text-anchor=\"end\">1e" << e
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_preannotation(const PreAnnotationCurve& curve) {
  std::ostringstream out;
  out << svg_open("Pre-annotated fraction per frame: processing order (blue), sorted (orange)");
  const double plotW = kW - kLeft - kRight, plotH = kH - kTop - kBottom;
  const std::size_t n = curve.perFrame.size();
  auto polyline = [&](auto value, const char* color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      const double x = kLeft + (n > 1 ? plotW * double(i) / double(n - 1) : 0.0);
      out << fmt("%.1f", x) << ',' << fmt("%.1f", kH - kBottom - plotH * value(i)) << ' ';
    }
    out << "\"/>\n";
  };
  polyline([&](std::size_t i) { return curve.perFrame[i].fraction; }, "#1f77b4");
  polyline([&](std::size_t i) { return curve.sortedVariant[i]; }, "#ff7f0e");
  for (int t = 0; t <= 4; ++t) {
    const double y = kH - kBottom - plotH * t / 4.0;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt("%.1f", y + 4) << "\" text-anchor=\"end\">" << t * 25
        << "%</text>\n";
  }
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">frames (" << n
      << ")</text>\n</svg>\n";
  return out.str();
}

std::string svg_occurrences(const MtsDistribution& dist) {
  std::ostringstream out;
  out << svg_open("MTS combinations by number of frames they occur in");
  const double plotW = kW - kLeft - kRight, plotH = kH - kTop - kBottom;
  std::uint32_t maxK = 1;
  std::uint64_t maxN = 1;
  for (const auto& [k, c] : dist.histogram) {
    maxK = std::max(maxK, k);
    maxN = std::max(maxN, c);
  }
  const double slot = plotW / double(maxK);
  for (const auto& [k, c] : dist.histogram) {
    const double h = plotH * double(c) / double(maxN);
    out << "<rect x=\"" << fmt("%.2f", kLeft + slot * (k - 1)) << "\" y=\"" << fmt("%.1f", kH - kBottom - h)
        << "\" width=\"" << fmt("%.2f", std::max(slot * 0.9, 0.5)) << "\" height=\"" << fmt("%.1f", h)
        << "\" fill=\"#4c72b0\"/>\n";
  }
  out << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 4 << "\" text-anchor=\"end\">" << maxN << "</text>\n"
      << "<text x=\"" << kLeft << "\" y=\"" << kH - kBottom + 14 << "\">1</text>\n"
      << "<text x=\"" << kW - kRight << "\" y=\"" << kH - kBottom + 14 << "\" text-anchor=\"end\">" << maxK
      << "</text>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">frames per MTS (median "
      << dist.medianOccurrences << ", single-frame " << percent(dist.singleFrameFraction) << "%)</text>\n</svg>\n";
  return out.str();
}

}  // namespace gba
