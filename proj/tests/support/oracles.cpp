#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gba::oracle {

bool covers(const Triangle& tri, int x, int y, double* depth) {
  // Sample point in 24.8 fixed point.
  const std::int64_t px = std::int64_t{x} * 256 + 128;
  const std::int64_t py = std::int64_t{y} * 256 + 128;
  const Vertex* v[3] = {&tri.v[0], &tri.v[1], &tri.v[2]};
  auto cross = [](const Vertex& p, const Vertex& q, std::int64_t sx, std::int64_t sy) {
    return (std::int64_t{q.x} - p.x) * (sy - p.y) - (std::int64_t{q.y} - p.y) * (sx - p.x);
  };
  // Orient so the signed area is positive in the library's convention,
  // which is the negation of the cross product above.
  std::int64_t area = -cross(*v[0], *v[1], v[2]->x, v[2]->y);
  if (area == 0) return false;
  if (area < 0) {
    std::swap(v[1], v[2]);
    area = -area;
  }
  double weighted = 0;
  for (int e = 0; e < 3; ++e) {
    const Vertex& p = *v[(e + 1) % 3];
    const Vertex& q = *v[(e + 2) % 3];
    const std::int64_t w = -cross(p, q, px, py);
    if (w < 0) return false;
    if (w == 0) {
      // Interior lies along the gradient (dy, -dx) of the edge function.
      const std::int64_t gx = std::int64_t{q.y} - p.y;
      const std::int64_t gy = -(std::int64_t{q.x} - p.x);
      const bool left = gx > 0;
      const bool top = gx == 0 && gy > 0;
      if (!left && !top) return false;
    }
    weighted += static_cast<double>(w) * v[e]->depth;
  }
  if (depth) *depth = weighted * (1.0 / static_cast<double>(area));
  return true;
}

Replay replay(const CommandStream& stream, std::span<const PassRole> tags) {
  const int w = stream.width, h = stream.height;
  Replay out{ColorImage(stream.width, stream.height, Rgb8{0, 0, 0}), IdImage(stream.width, stream.height)};
  std::vector<double> zbuf(std::size_t(w) * h, std::numeric_limits<double>::infinity());
  for (std::size_t d = 0; d < stream.draws.size(); ++d) {
    if (tags[d] != PassRole::MainGeometry) continue;
    const DrawCall& draw = stream.draws[d];
    for (const Triangle& tri : draw.triangles) {
      double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
      for (const Vertex& v : tri.v) {
        lo[0] = std::min(lo[0], v.x / 256.0);
        hi[0] = std::max(hi[0], v.x / 256.0);
        lo[1] = std::min(lo[1], v.y / 256.0);
        hi[1] = std::max(hi[1], v.y / 256.0);
      }
      const int x0 = std::max(0, int(std::floor(lo[0])) - 1), x1 = std::min(w - 1, int(std::ceil(hi[0])) + 1);
      const int y0 = std::max(0, int(std::floor(lo[1])) - 1), y1 = std::min(h - 1, int(std::ceil(hi[1])) + 1);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double z;
          if (!covers(tri, x, y, &z)) continue;
          const std::size_t p = std::size_t(y) * w + x;
          if (z > zbuf[p]) continue;
          zbuf[p] = z;
          out.color.set(p, tri.albedo);
          out.ids.set(p, {draw.mesh, draw.texture, draw.shader});
        }
    }
  }
  return out;
}

std::map<MtsKey, std::set<std::uint32_t>> group_pixels(const FrameCapture& capture) {
  std::map<VolatileId, PersistentKey> live;
  for (const auto& [id, entry] : capture.table.entries()) live[id] = entry.key;
  std::map<MtsKey, std::set<std::uint32_t>> groups;
  for (std::uint32_t p = 0; p < capture.ids.pixel_count(); ++p) {
    const IdTriple t = capture.ids.at(p);
    if (t.is_sentinel()) continue;
    groups[MtsKey{live.at(t.mesh), live.at(t.texture), live.at(t.shader)}].insert(p);
  }
  return groups;
}

// ---------------------------------------------------------------------------

namespace {

bool contains(const MtsKey& key, const RuleItem& item) {
  switch (item.kind) {
    case ResourceKind::Mesh: return key.mesh == item.key;
    case ResourceKind::Texture: return key.texture == item.key;
    case ResourceKind::Shader: return key.shader == item.key;
  }
  return false;
}

bool contains(const MtsKey& key, const Antecedent& a) {
  return contains(key, a.first) && (!a.second || contains(key, *a.second));
}

}  // namespace

std::map<Antecedent, Rule> mine(const std::map<MtsKey, ClassId>& labels, const LabelParams& params) {
  std::set<Antecedent> candidates;
  for (const auto& [key, cls] : labels) {
    const RuleItem m{ResourceKind::Mesh, key.mesh}, t{ResourceKind::Texture, key.texture},
        s{ResourceKind::Shader, key.shader};
    for (const Antecedent& a : {Antecedent{m, {}}, Antecedent{t, {}}, Antecedent{s, {}}, Antecedent{m, t},
                                Antecedent{m, s}, Antecedent{t, s}})
      candidates.insert(a);
  }
  std::map<Antecedent, Rule> out;
  for (const Antecedent& a : candidates) {
    std::uint32_t counts[256] = {};
    std::uint32_t support = 0;
    for (const auto& [key, cls] : labels)
      if (contains(key, a)) {
        ++counts[cls];
        ++support;
      }
    int best = 0;
    for (int c = 1; c < 256; ++c)
      if (counts[c] > counts[best]) best = c;
    if (support < params.minSupport) continue;
    if (double(counts[best]) < params.minConfidence * double(support) - 1e-9) continue;
    out[a] = {static_cast<ClassId>(best), support, double(counts[best]) / double(support)};
  }
  std::map<Antecedent, Rule> kept;
  for (const auto& [a, r] : out) {
    if (a.second) {
      auto s1 = out.find(Antecedent{a.first, {}});
      auto s2 = out.find(Antecedent{*a.second, {}});
      if ((s1 != out.end() && s1->second.cls == r.cls) || (s2 != out.end() && s2->second.cls == r.cls)) continue;
    }
    kept[a] = r;
  }
  return kept;
}

void RuleBook::update(const std::map<MtsKey, ClassId>& labels, const LabelParams& params, std::uint64_t click) {
  const auto now = mine(labels, params);
  for (auto it = active.begin(); it != active.end();) {
    auto q = now.find(it->first);
    if (q == now.end() || q->second.cls != it->second.cls) {
      createdAt.erase(it->first);
      it = active.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& [a, r] : now)
    if (!active.contains(a)) {
      active[a] = r;
      createdAt[a] = click;
    }
}

Resolved resolve(const MtsKey& key, const std::map<MtsKey, ClassId>& labels, const std::map<Antecedent, Rule>& rules) {
  if (auto it = labels.find(key); it != labels.end()) return {Provenance::ExplicitMts, it->second};
  std::set<ClassId> classes;
  for (const auto& [a, r] : rules)
    if (contains(key, a)) classes.insert(r.cls);
  if (classes.size() == 1) return {Provenance::Rule, *classes.begin()};
  return {};
}

PatchTruth truth(const Corpus& corpus, std::span<const OracleFrame> frames) {
  PatchTruth out;
  for (const FramePatches& f : corpus.frames) {
    const OracleFrame* o = nullptr;
    for (const OracleFrame& cand : frames)
      if (cand.frameIndex == f.frameIndex) o = &cand;
    std::vector<ClassId> row;
    for (const Patch& p : f.patches) {
      std::map<ClassId, std::uint32_t> hist;
      for (const PixelRun& r : p.runs)
        for (std::uint32_t i = 0; i < r.length; ++i) ++hist[o->classImage.at(r.start + i)];
      ClassId best = kUnlabeled;
      std::uint32_t bestN = 0;
      for (const auto& [c, n] : hist)
        if (c != kUnlabeled && n > bestN) {
          best = c;
          bestN = n;
        }
      row.push_back(best);
    }
    out.push_back(row);
  }
  return out;
}

namespace {

double covered(const FramePatches& f, const std::map<MtsKey, ClassId>& labels, const std::map<Antecedent, Rule>& rules) {
  std::vector<std::uint8_t> state(f.pixel_count(), 0);  // 0 background, 1 unlabeled, 2 labeled
  for (const Patch& p : f.patches) {
    const bool labeled = resolve(p.key, labels, rules).provenance != Provenance::Unlabeled;
    for (const PixelRun& r : p.runs)
      for (std::uint32_t i = 0; i < r.length; ++i) state[r.start + i] = labeled ? 2 : 1;
  }
  const auto annotatable = std::count_if(state.begin(), state.end(), [](auto s) { return s != 0; });
  const auto labeled = std::count(state.begin(), state.end(), 2);
  return annotatable ? double(labeled) / double(annotatable) : 1.0;
}

}  // namespace

ScheduleResult schedule(const Corpus& corpus, const PatchTruth& truthTable, const LabelParams& params) {
  ScheduleResult out;
  for (std::size_t i = 0; i < corpus.frames.size(); ++i) {
    const FramePatches& f = corpus.frames[i];
    const double c = covered(f, out.labels, out.rules.active);
    out.reached.push_back(c);
    if (1.0 - c <= params.unlabeledThreshold) continue;
    out.presented.push_back(f.frameIndex);
    std::vector<std::size_t> todo;
    for (std::size_t j = 0; j < f.patches.size(); ++j)
      if (resolve(f.patches[j].key, out.labels, out.rules.active).provenance == Provenance::Unlabeled) todo.push_back(j);
    for (std::size_t j : todo) {
      if (truthTable[i][j] == kUnlabeled) continue;
      out.labels[f.patches[j].key] = truthTable[i][j];
      ++out.clicks;
      out.handLabeled += f.patches[j].area;
    }
    out.rules.update(out.labels, params, out.clicks);
  }
  return out;
}

Recount recount(const Corpus& corpus, const std::map<MtsKey, ClassId>& labels, const std::map<Antecedent, Rule>& rules) {
  Recount r;
  for (const FramePatches& f : corpus.frames) {
    r.total += f.pixel_count();
    for (const Patch& p : f.patches) {
      const Resolved res = resolve(p.key, labels, rules);
      std::set<ClassId> matching;
      for (const auto& [a, rule] : rules)
        if (contains(p.key, a)) matching.insert(rule.cls);
      const bool conflict = res.provenance == Provenance::Unlabeled && matching.size() > 1;
      for (const PixelRun& run : p.runs)
        for (std::uint32_t i = 0; i < run.length; ++i) {
          ++r.annotatable;
          if (conflict) ++r.conflictPx;
          if (res.provenance == Provenance::ExplicitMts) ++r.explicitPx;
          if (res.provenance == Provenance::Rule) ++r.rulePx;
          if (res.provenance != Provenance::Unlabeled) ++r.perClass[res.cls];
        }
    }
  }
  return r;
}

Occurrences occurrences(const Corpus& corpus) {
  Occurrences o;
  for (const FramePatches& f : corpus.frames) {
    std::set<MtsKey> seen;
    for (const Patch& p : f.patches) seen.insert(p.key);
    for (const MtsKey& k : seen) ++o.frames[k];
  }
  std::vector<std::uint32_t> counts;
  for (const auto& [k, n] : o.frames) counts.push_back(n);
  if (counts.empty()) return o;
  std::sort(counts.begin(), counts.end());
  o.single = double(std::count(counts.begin(), counts.end(), 1u)) / double(counts.size());
  o.median = counts[counts.size() % 2 ? counts.size() / 2 : counts.size() / 2 - 1];
  return o;
}

}  // namespace gba::oracle
