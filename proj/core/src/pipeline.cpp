#include "gba/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <string>

#include "gba/errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace gba {
namespace fs = std::filesystem;

namespace {

std::string numbered(const char* prefix, unsigned width, std::uint32_t n, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*u%s", prefix, static_cast<int>(width), n, ext);
  return buf;
}

std::string read_text(const fs::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Files in `dir` named prefix + digits + ext, by number.
std::vector<std::uint32_t> numbered_files(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  std::vector<std::uint32_t> out;
  if (!fs::is_directory(dir)) return out;
  const std::regex pattern(prefix + "([0-9]+)" + std::regex_replace(ext, std::regex(R"(\.)"), R"(\.)"));
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) out.push_back(static_cast<std::uint32_t>(std::stoul(m[1])));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Removes files in `dir` whose names match `pattern`.
void remove_matching(const fs::path& dir, const std::regex& pattern) {
  if (!fs::is_directory(dir)) return;
  std::vector<fs::path> doomed;
  for (const auto& entry : fs::directory_iterator(dir))
    if (std::regex_match(entry.path().filename().string(), pattern)) doomed.push_back(entry.path());
  for (const fs::path& p : doomed) fs::remove(p);
}

// Prefixes errors from one input file with its name.
template <typename F>
auto with_file(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(path.filename().string() + ": " + e.what());
  }
}

}  // namespace

fs::path RunLayout::session_capture(std::uint32_t session) const {
  return captures() / numbered("session_", 3, session, ".gbcap");
}

fs::path RunLayout::session_oracle(std::uint32_t session) const {
  return captures() / numbered("session_", 3, session, ".oracle");
}

std::uint32_t session_count(const RunLayout& run) {
  const auto found = numbered_files(run.captures(), "session_", ".gbcap");
  for (std::size_t i = 0; i < found.size(); ++i)
    if (found[i] != i) throw Error("session files are not numbered consecutively from 0");
  return static_cast<std::uint32_t>(found.size());
}

void run_sim(const RunLayout& run, CorpusConfig config, const Palette& palette) {
  if (config.frames == 0) throw Error("frames must be at least 1");
  config.path.steps = config.frames * config.stride;
  const World world = generate_world(config.world, config.seed);
  fs::create_directories(run.captures());
  remove_matching(run.captures(), std::regex(R"(session_[0-9]+\.(gbcap|oracle))"));
  write_text(run.palette(), palette.to_text());
  write_text(run.corpus_config(), config.to_text(palette));
  for (std::uint32_t s = 0; s < config.sessions; ++s) {
    SessionSpec spec;
    spec.seed = detail::mix_seed(config.seed, 1000 + s);
    spec.firstFrameIndex = s * config.frames;
    spec.width = config.width;
    spec.height = config.height;
    spec.stepOffset = s * config.stride / config.sessions;
    SessionOutput out = simulate_session(world, config.path, config.stride, spec);
    write_file(run.session_capture(s), serialize_session(out.streams));
    write_file(run.session_oracle(s), encode_oracle({world, std::move(out.oracle)}));
  }
}

std::size_t run_process(const RunLayout& run, unsigned jobs) {
  const std::uint32_t sessions = session_count(run);
  if (sessions == 0) throw Error("no session captures under " + run.captures().string());
  remove_matching(run.frames(), std::regex(R"(frame_[0-9]+\.(ppm|idp|tbl))"));
  remove_matching(run.patches(), std::regex(R"(frame_[0-9]+\.pat)"));
  fs::create_directories(run.frames());
  fs::create_directories(run.patches());
  std::size_t total = 0;
  for (std::uint32_t s = 0; s < sessions; ++s) {
    const fs::path file = run.session_capture(s);
    const std::vector<CommandStream> streams = with_file(file, [&] { return parse_session(read_file(file)); });
    const std::vector<FrameCapture> captures = with_file(file, [&] { return capture_session(streams, jobs); });
    detail::parallel_for(captures.size(), jobs, [&](std::size_t i) {
      write_capture(run.frames(), captures[i]);
      write_file(patch_file(run.patches(), captures[i].frameIndex), encode_patches(decompose(captures[i])));
    });
    total += captures.size();
  }
  return total;
}

Palette load_palette(const RunLayout& run) {
  if (!fs::exists(run.palette())) return Palette::default_palette();
  return with_file(run.palette(), [&] { return Palette::from_text(read_text(run.palette())); });
}

CorpusConfig load_config(const RunLayout& run, const Palette& palette) {
  return with_file(run.corpus_config(), [&] { return CorpusConfig::parse(read_text(run.corpus_config()), palette); });
}

Corpus load_corpus(const RunLayout& run) {
  const auto indices = numbered_files(run.patches(), "frame_", ".pat");
  if (indices.empty()) throw Error("no patch files under " + run.patches().string() + " (run process first)");
  std::vector<FramePatches> frames(indices.size());
  detail::parallel_for(indices.size(), 0, [&](std::size_t i) {
    const fs::path file = patch_file(run.patches(), indices[i]);
    frames[i] = with_file(file, [&] { return decode_patches(read_file(file)); });
  });
  return make_corpus(std::move(frames));
}

std::vector<OracleFrame> load_oracle(const RunLayout& run) {
  std::vector<OracleFrame> frames;
  const std::uint32_t sessions = session_count(run);
  for (std::uint32_t s = 0; s < sessions; ++s) {
    const fs::path file = run.session_oracle(s);
    OracleSidecar sc = with_file(file, [&] { return decode_oracle(read_file(file)); });
    for (OracleFrame& f : sc.frames) frames.push_back(std::move(f));
  }
  return frames;
}

AnnotationRun run_autolabel(const RunLayout& run, const LabelParams& params) {
  const Palette palette = load_palette(run);
  const Corpus corpus = load_corpus(run);
  const PatchTruth truth = patch_truth(corpus, load_oracle(run));
  AnnotationRun result = simulate_annotator(corpus, truth, palette, params);
  fs::create_directories(run.labels());
  write_text(run.params(), params.to_text());
  write_text(run.clicks(), click_log_to_text(result.store.click_log()));
  write_text(run.schedule(), schedule_to_text(result));
  write_text(run.rules(), rules_to_text(result.store));
  return result;
}

SavedRun load_saved_run(const RunLayout& run, const Corpus& corpus, const Palette& palette) {
  if (!fs::exists(run.clicks()) || !fs::exists(run.schedule()))
    throw Error("no annotation run under " + run.labels().string() + " (run autolabel first)");
  SavedRun saved;
  if (fs::exists(run.params()))
    saved.params = with_file(run.params(), [&] { return LabelParams::parse(read_text(run.params())); });
  saved.log = with_file(run.clicks(), [&] { return click_log_from_text(read_text(run.clicks())); });
  with_file(run.schedule(), [&] { schedule_from_text(read_text(run.schedule()), saved.checks, saved.presented); });
  std::vector<std::uint64_t> minePoints;
  for (const PresentedFrame& p : saved.presented) minePoints.push_back(p.clickEnd);
  saved.store = with_file(run.clicks(), [&] {
    return LabelStore::replay(saved.params, corpus.index, palette, saved.log, minePoints);
  });
  return saved;
}

VerifyResult run_verify(const RunLayout& run, unsigned jobs) {
  const Palette palette = load_palette(run);
  const Corpus corpus = load_corpus(run);
  const std::vector<OracleFrame> oracle = load_oracle(run);
  const SavedRun saved = load_saved_run(run, corpus, palette);

  std::vector<const OracleFrame*> oracleAt(corpus.frames.size(), nullptr);
  for (const OracleFrame& o : oracle)
    if (auto pos = corpus.position(o.frameIndex)) oracleAt[*pos] = &o;

  std::vector<VerifyResult> perFrame(corpus.frames.size());
  detail::parallel_for(corpus.frames.size(), jobs, [&](std::size_t i) {
    const FramePatches& frame = corpus.frames[i];
    const OracleFrame* o = oracleAt[i];
    if (!o) throw Error("oracle lacks frame " + std::to_string(frame.frameIndex));
    const PreAnnotation pre = pre_annotate(frame, saved.store);
    VerifyResult& r = perFrame[i];
    r.annotatablePixels = pre.coverage.annotatable;
    r.labeledPixels = pre.coverage.labeled();
    for (std::size_t px = 0; px < pre.labelMap.size(); ++px) {
      if (pre.labelMap[px] == kUnlabeled || pre.labelMap[px] == o->classImage[px]) continue;
      ++r.mislabeledPixels;
      if (pre.provenance[px] == Provenance::Rule) ++r.ruleMislabeledPixels;
    }
  });
  VerifyResult total;
  for (const VerifyResult& r : perFrame) {
    total.annotatablePixels += r.annotatablePixels;
    total.labeledPixels += r.labeledPixels;
    total.mislabeledPixels += r.mislabeledPixels;
    total.ruleMislabeledPixels += r.ruleMislabeledPixels;
  }

  // The recorded schedule must be what replaying the click log produces.
  std::vector<std::uint64_t> minePoints;
  for (const PresentedFrame& p : saved.presented) minePoints.push_back(p.clickEnd);
  const PreAnnotationCurve curve =
      preannotation_curve(corpus, palette, saved.params, saved.log, minePoints, saved.checks);
  for (std::size_t i = 0; i < saved.checks.size(); ++i) {
    const FrameCheck& c = saved.checks[i];
    const double fraction = curve.perFrame[i].fraction;
    const bool shouldPresent = 1.0 - fraction > saved.params.unlabeledThreshold;
    if (fraction != c.preAnnotated || shouldPresent != c.presented) ++total.scheduleViolations;
  }
  if (saved.checks.size() != corpus.frames.size()) ++total.scheduleViolations;

  fs::create_directories(run.reports());
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "annotatable_pixels = %llu\nlabeled_pixels = %llu\ndensity = %.17g\nmislabeled_pixels = %llu\n"
                "rule_mislabeled_pixels = %llu\nschedule_violations = %llu\nresult = %s\n",
                (unsigned long long)total.annotatablePixels, (unsigned long long)total.labeledPixels, total.density(),
                (unsigned long long)total.mislabeledPixels, (unsigned long long)total.ruleMislabeledPixels,
                (unsigned long long)total.scheduleViolations, total.ok() ? "pass" : "fail");
  write_text(run.reports() / "verify.txt", buf);
  return total;
}

StatsResult run_stats(const RunLayout& run, unsigned jobs) {
  const Palette palette = load_palette(run);
  const Corpus corpus = load_corpus(run);
  const SavedRun saved = load_saved_run(run, corpus, palette);
  std::vector<std::uint64_t> minePoints;
  for (const PresentedFrame& p : saved.presented) minePoints.push_back(p.clickEnd);

  StatsResult s;
  s.report = density_report(corpus, saved.store, saved.presented.size(), detail::effective_jobs(jobs, corpus.frames.size()));
  s.curve = preannotation_curve(corpus, palette, saved.params, saved.log, minePoints, saved.checks);
  s.distribution = mts_distribution_report(corpus.index);

  fs::create_directories(run.reports());
  write_text(run.reports() / "report.txt", report_text(s.report, s.curve, s.distribution, palette));
  write_text(run.reports() / "report.kv", report_kv(s.report, s.curve, s.distribution, palette));
  write_text(run.reports() / "fig4.svg", svg_class_pixels(s.report, palette));
  write_text(run.reports() / "fig5.svg", svg_preannotation(s.curve));
  write_text(run.reports() / "fig6.svg", svg_occurrences(s.distribution));
  return s;
}

std::size_t run_export(const RunLayout& run, const std::vector<std::uint32_t>& frames) {
  const Palette palette = load_palette(run);
  const Corpus corpus = load_corpus(run);
  const SavedRun saved = load_saved_run(run, corpus, palette);
  std::vector<std::size_t> positions;
  if (frames.empty()) {
    for (std::size_t i = 0; i < corpus.frames.size(); ++i) positions.push_back(i);
  } else {
    for (std::uint32_t f : frames) {
      auto pos = corpus.position(f);
      if (!pos) throw Error("no such frame: " + std::to_string(f));
      positions.push_back(*pos);
    }
  }
  fs::create_directories(run.maps());
  detail::parallel_for(positions.size(), 0, [&](std::size_t i) {
    const FramePatches& frame = corpus.frames[positions[i]];
    write_file(run.maps() / numbered("frame_", 6, frame.frameIndex, ".pgm"),
               encode_pgm(export_label_map(frame, saved.store)));
  });
  return positions.size();
}

ColorImage overlay_labels(const ColorImage& image, const LabelMap& labels, const Palette& palette, double opacity) {
  if (labels.ids.size() != image.pixel_count()) throw Error("label map and image sizes differ");
  ColorImage out = image;
  auto blend = [&](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround((1.0 - opacity) * a + opacity * b));
  };
  for (std::size_t px = 0; px < out.pixel_count(); ++px) {
    const ClassId cls = labels.ids[px];
    if (cls == kUnlabeled || !palette.contains(cls)) continue;
    const Rgb8 a = image.at(px), c = palette.at(cls).color;
    out.set(px, {blend(a.r, c.r), blend(a.g, c.g), blend(a.b, c.b)});
  }
  return out;
}

std::vector<std::uint32_t> run_gallery(const RunLayout& run, std::size_t count, std::uint64_t seed) {
  const Palette palette = load_palette(run);
  const Corpus corpus = load_corpus(run);
  std::optional<SavedRun> saved;
  if (fs::exists(run.clicks())) saved = load_saved_run(run, corpus, palette);

  std::vector<std::uint32_t> all;
  for (const FramePatches& f : corpus.frames) all.push_back(f.frameIndex);
  detail::Rng rng(seed);
  rng.shuffle(all);
  all.resize(std::min(count, all.size()));
  std::sort(all.begin(), all.end());

  const fs::path dir = run.reports() / "gallery";
  fs::create_directories(dir);
  for (std::uint32_t f : all) {
    const Bytes ppm = read_file(capture_stem(run.frames(), f).string() + ".ppm");
    write_file(dir / numbered("frame_", 6, f, ".ppm"), ppm);
    if (saved) {
      const LabelMap map = export_label_map(corpus.frames[*corpus.position(f)], saved->store);
      write_file(dir / numbered("frame_", 6, f, "_labels.ppm"),
                 encode_ppm(overlay_labels(decode_ppm(ppm), map, palette, 0.6)));
    }
  }
  return all;
}

}  // namespace gba
