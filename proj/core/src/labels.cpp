#include "gba/labels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "gba/errors.hpp"

namespace gba {

LabelParams LabelParams::parse(std::string_view text) {
  LabelParams p;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const auto eq = line.find('=');
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t\r"));
    key.erase(key.find_last_not_of(" \t\r") + 1);
    if (key.empty() && eq == std::string::npos) continue;
    if (eq == std::string::npos) throw Error("params: expected key = value: " + line);
    std::istringstream value(line.substr(eq + 1));
    bool ok = false;
    if (key == "min_support") ok = static_cast<bool>(value >> p.minSupport);
    else if (key == "min_confidence") ok = static_cast<bool>(value >> p.minConfidence);
    else if (key == "unlabeled_threshold") ok = static_cast<bool>(value >> p.unlabeledThreshold);
    else throw Error("params: unknown key " + key);
    if (!ok) throw Error("params: bad value for " + key);
  }
  if (p.minSupport < 1) throw Error("params: min_support must be at least 1");
  if (!(p.minConfidence > 0.0 && p.minConfidence <= 1.0)) throw Error("params: min_confidence must be in (0,1]");
  if (!(p.unlabeledThreshold >= 0.0 && p.unlabeledThreshold < 1.0))
    throw Error("params: unlabeled_threshold must be in [0,1)");
  return p;
}

std::string LabelParams::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "min_support = " << minSupport << "\nmin_confidence = " << minConfidence
      << "\nunlabeled_threshold = " << unlabeledThreshold << '\n';
  return out.str();
}

std::string Antecedent::describe() const {
  std::string s = "{" + std::string(kind_name(first.kind)) + ":" + first.key.hex();
  if (second) s += ", " + std::string(kind_name(second->kind)) + ":" + second->key.hex();
  return s + "}";
}

std::array<Antecedent, 6> antecedents_of(const MtsKey& key) {
  const RuleItem m{ResourceKind::Mesh, key.mesh};
  const RuleItem t{ResourceKind::Texture, key.texture};
  const RuleItem s{ResourceKind::Shader, key.shader};
  return {Antecedent{m, std::nullopt}, Antecedent{t, std::nullopt}, Antecedent{s, std::nullopt},
          Antecedent{m, t},            Antecedent{m, s},            Antecedent{t, s}};
}

bool meets_confidence(std::uint32_t majority, std::uint32_t support, double minConfidence) {
  if (support == 0) return false;
  // Small slack so thresholds such as 0.995 * 200 are not lost to rounding.
  return static_cast<double>(majority) >= minConfidence * static_cast<double>(support) - 1e-9;
}

std::string ClickRecord::to_line() const {
  return std::to_string(sequence) + ' ' + key.hex() + ' ' + std::to_string(cls) + ' ' + std::to_string(timestamp) +
         ' ' + (kind == ClickKind::Undo ? 'U' : 'L');
}

std::optional<ClickRecord> ClickRecord::from_line(std::string_view line) {
  std::istringstream in{std::string(line)};
  ClickRecord r;
  std::string hex, kind;
  unsigned cls = 0;
  if (!(in >> r.sequence >> hex >> cls >> r.timestamp >> kind)) return std::nullopt;
  std::string extra;
  if (in >> extra) return std::nullopt;
  auto key = MtsKey::from_hex(hex);
  if (!key || cls > 255 || (kind != "L" && kind != "U")) return std::nullopt;
  r.key = *key;
  r.cls = static_cast<ClassId>(cls);
  r.kind = kind == "U" ? ClickKind::Undo : ClickKind::Label;
  return r;
}

void LabelStore::apply_label(const MtsIndex& index, const Palette& palette, const MtsKey& key, ClassId cls,
                             std::int64_t timestamp, ClickKind kind) {
  if (!palette.contains(cls) || (cls == kUnlabeled && kind == ClickKind::Label)) throw UnknownClass(cls);
  if (!index.contains(key)) throw UnknownMts("unknown MTS " + key.hex());
  clickLog_.push_back({clickLog_.size(), key, cls, timestamp, kind});
  if (cls == kUnlabeled)
    mtsLabels_.erase(key);
  else
    mtsLabels_[key] = cls;
}

std::size_t LabelStore::mine_rules() {
  // antecedent -> per-class count of distinct labeled keys
  std::map<Antecedent, std::map<ClassId, std::uint32_t>> counts;
  for (const auto& [key, cls] : mtsLabels_)
    for (const Antecedent& a : antecedents_of(key)) ++counts[a][cls];

  struct Qualified {
    ClassId cls;
    std::uint32_t support;
    double confidence;
  };
  std::map<Antecedent, Qualified> qualified;
  for (const auto& [a, perClass] : counts) {
    std::uint32_t support = 0, best = 0;
    ClassId bestClass = kUnlabeled;
    for (const auto& [cls, n] : perClass) {
      support += n;
      if (n > best) {
        best = n;
        bestClass = cls;
      }
    }
    if (support >= params_.minSupport && meets_confidence(best, support, params_.minConfidence))
      qualified[a] = {bestClass, support, static_cast<double>(best) / support};
  }
  // Drop pairs already implied by a singleton with the same consequent.
  for (auto it = qualified.begin(); it != qualified.end();) {
    const Antecedent& a = it->first;
    bool redundant = false;
    if (a.second) {
      for (const RuleItem& item : {a.first, *a.second}) {
        auto single = qualified.find(Antecedent{item, std::nullopt});
        if (single != qualified.end() && single->second.cls == it->second.cls) redundant = true;
      }
    }
    it = redundant ? qualified.erase(it) : std::next(it);
  }

  for (auto it = rules_.begin(); it != rules_.end();) {
    auto q = qualified.find(it->first);
    if (q == qualified.end() || q->second.cls != it->second.consequent) {
      it = rules_.erase(it);
      ++retracted_;
    } else {
      ++it;
    }
  }
  std::size_t created = 0;
  for (const auto& [a, q] : qualified) {
    if (rules_.contains(a)) continue;
    AssociationRule rule{a, q.cls, q.support, q.confidence, clickLog_.size()};
    rules_.emplace(a, rule);
    history_.push_back(rule);
    ++created;
  }
  return created;
}

std::optional<ClassId> LabelStore::label_of(const MtsKey& key) const {
  auto it = mtsLabels_.find(key);
  if (it == mtsLabels_.end()) return std::nullopt;
  return it->second;
}

RuleMatch LabelStore::rule_match(const MtsKey& key) const {
  RuleMatch match;
  if (rules_.empty()) return match;
  for (const Antecedent& a : antecedents_of(key)) {
    auto it = rules_.find(a);
    if (it == rules_.end()) continue;
    if (match.kind == RuleMatch::Kind::None) {
      match = {RuleMatch::Kind::Unique, it->second.consequent};
    } else if (match.cls != it->second.consequent) {
      return {RuleMatch::Kind::Conflict, kUnlabeled};
    }
  }
  return match;
}

PatchLabel LabelStore::resolve(const MtsKey& key) const {
  if (auto cls = label_of(key)) return {Provenance::ExplicitMts, *cls, false};
  const RuleMatch m = rule_match(key);
  if (m.kind == RuleMatch::Kind::Unique) return {Provenance::Rule, m.cls, false};
  return {Provenance::Unlabeled, kUnlabeled, m.kind == RuleMatch::Kind::Conflict};
}

LabelStore LabelStore::replay(LabelParams params, const MtsIndex& index, const Palette& palette,
                              std::span<const ClickRecord> log, std::span<const std::uint64_t> minePoints) {
  LabelStore store(params);
  std::size_t nextMine = 0;
  auto mine_due = [&] {
    while (nextMine < minePoints.size() && minePoints[nextMine] <= store.clickLog_.size()) {
      if (minePoints[nextMine] == store.clickLog_.size()) store.mine_rules();
      ++nextMine;
    }
  };
  mine_due();
  for (const ClickRecord& r : log) {
    if (r.sequence != store.clickLog_.size())
      throw Error("click log out of order at sequence " + std::to_string(r.sequence));
    store.apply_label(index, palette, r.key, r.cls, r.timestamp, r.kind);
    mine_due();
  }
  return store;
}

// ---------------------------------------------------------------------------

Coverage frame_coverage(const FramePatches& frame, const LabelStore& store) {
  Coverage c;
  for (const Patch& p : frame.patches) {
    c.annotatable += p.area;
    const PatchLabel l = store.resolve(p.key);
    if (l.provenance == Provenance::ExplicitMts) c.explicitPixels += p.area;
    else if (l.provenance == Provenance::Rule) c.rulePixels += p.area;
    else if (l.conflict) c.conflictPixels += p.area;
  }
  return c;
}

PreAnnotation pre_annotate(const FramePatches& frame, const LabelStore& store) {
  PreAnnotation out;
  out.frameIndex = frame.frameIndex;
  out.width = frame.width;
  out.height = frame.height;
  out.labelMap.assign(frame.pixel_count(), kUnlabeled);
  out.provenance.assign(frame.pixel_count(), Provenance::Unlabeled);
  for (const Patch& p : frame.patches) {
    const PatchLabel l = store.resolve(p.key);
    out.coverage.annotatable += p.area;
    if (l.provenance == Provenance::ExplicitMts) out.coverage.explicitPixels += p.area;
    else if (l.provenance == Provenance::Rule) out.coverage.rulePixels += p.area;
    if (l.conflict) {
      out.coverage.conflictPixels += p.area;
      out.conflicts.push_back(p.key);
    }
    if (l.provenance == Provenance::Unlabeled) continue;
    p.for_each_pixel([&](std::uint32_t px) {
      out.labelMap[px] = l.cls;
      out.provenance[px] = l.provenance;
    });
  }
  out.coveredFraction = out.coverage.covered_fraction();
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> Scheduler::next_frame(const Corpus& corpus, const LabelStore& store) {
  while (cursor_ < corpus.frames.size()) {
    const FramePatches& f = corpus.frames[cursor_];
    const Coverage c = frame_coverage(f, store);
    const bool present = c.unlabeled_fraction() > store.params().unlabeledThreshold;
    checks_.push_back({f.frameIndex, c.covered_fraction(), present, store.click_log().size()});
    const std::size_t pos = cursor_++;
    if (present) return pos;
  }
  return std::nullopt;
}

PatchTruth patch_truth(const Corpus& corpus, std::span<const OracleFrame> oracle) {
  std::map<std::uint32_t, const OracleFrame*> byIndex;
  for (const OracleFrame& o : oracle) byIndex[o.frameIndex] = &o;
  PatchTruth truth;
  truth.reserve(corpus.frames.size());
  for (const FramePatches& f : corpus.frames) {
    auto it = byIndex.find(f.frameIndex);
    if (it == byIndex.end()) throw Error("oracle lacks frame " + std::to_string(f.frameIndex));
    const OracleFrame& o = *it->second;
    if (o.width != f.width || o.height != f.height)
      throw Error("oracle frame " + std::to_string(f.frameIndex) + " size differs from capture");
    std::vector<ClassId> classes;
    for (const Patch& p : f.patches) {
      std::array<std::uint32_t, 256> hist{};
      p.for_each_pixel([&](std::uint32_t px) { ++hist[o.classImage[px]]; });
      ClassId best = kUnlabeled;
      for (unsigned c = 1; c < 256; ++c)
        if (hist[c] > hist[best] || (best == kUnlabeled && hist[c] > 0)) best = static_cast<ClassId>(c);
      classes.push_back(best);
    }
    truth.push_back(std::move(classes));
  }
  return truth;
}

std::vector<std::uint64_t> AnnotationRun::mine_points() const {
  std::vector<std::uint64_t> points;
  for (const PresentedFrame& p : presented) points.push_back(p.clickEnd);
  return points;
}

AnnotationRun simulate_annotator(const Corpus& corpus, const PatchTruth& truth, const Palette& palette,
                                 LabelParams params) {
  AnnotationRun run{LabelStore(params), {}, {}};
  Scheduler scheduler;
  while (auto pos = scheduler.next_frame(corpus, run.store)) {
    const FramePatches& frame = corpus.frames[*pos];
    PresentedFrame pf{frame.frameIndex, run.store.click_log().size(), 0, 0};
    // Pre-labels are fixed for the duration of the frame: clicks only touch
    // their own key and mining waits until the frame is done.
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < frame.patches.size(); ++i)
      if (run.store.resolve(frame.patches[i].key).provenance == Provenance::Unlabeled) todo.push_back(i);
    for (std::size_t i : todo) {
      const ClassId cls = truth[*pos][i];
      if (cls == kUnlabeled) continue;
      run.store.apply_label(corpus.index, palette, frame.patches[i].key, cls,
                            static_cast<std::int64_t>(run.store.click_log().size()));
      pf.handLabeledPixels += frame.patches[i].area;
    }
    pf.clickEnd = run.store.click_log().size();
    run.store.mine_rules();
    run.presented.push_back(pf);
  }
  run.checks = scheduler.checks();
  return run;
}

std::string schedule_to_text(const AnnotationRun& run) {
  std::ostringstream out;
  out << std::setprecision(17);
  std::size_t pi = 0;
  for (const FrameCheck& c : run.checks) {
    std::uint64_t begin = c.clickPosition, end = c.clickPosition;
    if (c.presented) {
      const PresentedFrame& p = run.presented.at(pi++);
      begin = p.clickBegin;
      end = p.clickEnd;
    }
    out << c.frameIndex << ' ' << c.preAnnotated << ' ' << (c.presented ? 1 : 0) << ' ' << begin << ' ' << end << '\n';
  }
  return out.str();
}

void schedule_from_text(std::string_view text, std::vector<FrameCheck>& checks,
                        std::vector<PresentedFrame>& presented) {
  checks.clear();
  presented.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    FrameCheck c;
    int flag = 0;
    std::uint64_t begin = 0, end = 0;
    if (!(ls >> c.frameIndex >> c.preAnnotated >> flag >> begin >> end) || flag < 0 || flag > 1 || end < begin)
      throw Error("bad schedule line: " + line);
    c.presented = flag == 1;
    c.clickPosition = begin;
    checks.push_back(c);
    if (c.presented) presented.push_back({c.frameIndex, begin, end, 0});
  }
}

std::string click_log_to_text(std::span<const ClickRecord> log) {
  std::string out;
  for (const ClickRecord& r : log) out += r.to_line() + '\n';
  return out;
}

std::vector<ClickRecord> click_log_from_text(std::string_view text) {
  std::vector<ClickRecord> log;
  std::size_t start = 0;
  std::size_t lineNo = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    ++lineNo;
    if (end == std::string_view::npos) break;  // an unterminated tail is an interrupted write
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    auto r = ClickRecord::from_line(line);
    if (!r) throw Error("bad click log line " + std::to_string(lineNo));
    log.push_back(*r);
  }
  return log;
}

std::string rules_to_text(const LabelStore& store) {
  std::ostringstream out;
  out << std::setprecision(6);
  for (const AssociationRule& r : store.rule_history()) {
    const bool active = store.rules().contains(r.antecedent) &&
                        store.rules().at(r.antecedent).createdAtClick == r.createdAtClick;
    out << r.createdAtClick << ' ' << r.antecedent.describe() << " -> " << unsigned{r.consequent} << " support "
        << r.support << " confidence " << r.confidence << (active ? " active" : " retracted") << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

LabelMap export_label_map(const FramePatches& frame, const LabelStore& store) {
  LabelMap map{frame.frameIndex, frame.width, frame.height, std::vector<ClassId>(frame.pixel_count(), kUnlabeled)};
  for (const Patch& p : frame.patches) {
    const PatchLabel l = store.resolve(p.key);
    if (l.provenance == Provenance::Unlabeled) continue;
    p.for_each_pixel([&](std::uint32_t px) { map.ids[px] = l.cls; });
  }
  return map;
}

Bytes encode_pgm(const LabelMap& map) {
  const std::string header = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), map.ids.begin(), map.ids.end());
  return out;
}

LabelMap decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw CorruptCapture("not a P5 image");
  std::size_t pos = 2;
  unsigned fields[3] = {};
  for (unsigned& f : fields) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw CorruptCapture("bad P5 header");
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      f = f * 10 + (bytes[pos++] - '0');
      if (f > 1'000'000) throw CorruptCapture("bad P5 header");
    }
  }
  if (fields[2] != 255 || fields[0] > 0xFFFF || fields[1] > 0xFFFF) throw CorruptCapture("unsupported P5 image");
  ++pos;
  if (pos > bytes.size() || bytes.size() - pos != std::size_t{fields[0]} * fields[1])
    throw CorruptCapture("P5 raster size mismatch");
  LabelMap map;
  map.width = static_cast<std::uint16_t>(fields[0]);
  map.height = static_cast<std::uint16_t>(fields[1]);
  map.ids.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return map;
}

}  // namespace gba
