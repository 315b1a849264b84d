#include "gba/patch_engine.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "gba/errors.hpp"

namespace gba {

std::string MtsKey::hex() const { return mesh.hex() + texture.hex() + shader.hex(); }

std::optional<MtsKey> MtsKey::from_hex(std::string_view hex) {
  if (hex.size() != 96) return std::nullopt;
  auto m = PersistentKey::from_hex(hex.substr(0, 32));
  auto t = PersistentKey::from_hex(hex.substr(32, 32));
  auto s = PersistentKey::from_hex(hex.substr(64, 32));
  if (!m || !t || !s) return std::nullopt;
  return MtsKey{*m, *t, *s};
}

std::size_t FramePatches::annotatable_pixels() const {
  std::size_t n = 0;
  for (const Patch& p : patches) n += p.area;
  return n;
}

const Patch* FramePatches::find(const MtsKey& key) const {
  auto it = std::lower_bound(patches.begin(), patches.end(), key,
                             [](const Patch& p, const MtsKey& k) { return p.key < k; });
  return it != patches.end() && it->key == key ? &*it : nullptr;
}

namespace {

void append_pixel(std::vector<PixelRun>& runs, std::uint32_t p) {
  if (!runs.empty() && runs.back().start + runs.back().length == p)
    ++runs.back().length;
  else
    runs.push_back({p, 1});
}

// Merges sorted run lists and coalesces adjacent runs.
std::vector<PixelRun> merge_runs(const std::vector<std::vector<PixelRun>*>& lists) {
  std::vector<PixelRun> all;
  for (const auto* l : lists) all.insert(all.end(), l->begin(), l->end());
  std::sort(all.begin(), all.end(), [](const PixelRun& a, const PixelRun& b) { return a.start < b.start; });
  std::vector<PixelRun> out;
  for (const PixelRun& r : all) {
    if (!out.empty() && out.back().start + out.back().length == r.start)
      out.back().length += r.length;
    else
      out.push_back(r);
  }
  return out;
}

}  // namespace

FramePatches decompose(const FrameCapture& capture) {
  const IdImage& ids = capture.ids;
  const std::size_t n = ids.pixel_count();

  // Group by volatile triple first; resolution happens once per triple.
  std::map<IdTriple, std::vector<PixelRun>> byTriple;
  std::map<IdTriple, std::uint32_t> firstPixel;
  IdTriple last = kSentinelTriple;
  std::vector<PixelRun>* lastRuns = nullptr;
  for (std::size_t p = 0; p < n; ++p) {
    const IdTriple t = ids.at(p);
    if (t.is_sentinel()) continue;
    if (!lastRuns || t != last) {
      auto [it, inserted] = byTriple.try_emplace(t);
      if (inserted) firstPixel[t] = static_cast<std::uint32_t>(p);
      lastRuns = &it->second;
      last = t;
    }
    append_pixel(*lastRuns, static_cast<std::uint32_t>(p));
  }

  std::map<MtsKey, std::vector<std::vector<PixelRun>*>> byKey;
  for (auto& [triple, runs] : byTriple) {
    const TableEntry* m = capture.table.find(triple.mesh);
    const TableEntry* t = capture.table.find(triple.texture);
    const TableEntry* s = capture.table.find(triple.shader);
    if (!m || !t || !s) throw UnresolvableId(capture.frameIndex, firstPixel[triple]);
    byKey[MtsKey{m->key, t->key, s->key}].push_back(&runs);
  }

  FramePatches out;
  out.frameIndex = capture.frameIndex;
  out.width = ids.width;
  out.height = ids.height;
  for (auto& [key, lists] : byKey) {
    Patch patch;
    patch.frameIndex = capture.frameIndex;
    patch.key = key;
    patch.runs = lists.size() == 1 ? *lists.front() : merge_runs(lists);
    for (const PixelRun& r : patch.runs) patch.area += r.length;
    out.patches.push_back(std::move(patch));
  }
  return out;
}

std::vector<std::vector<PixelRun>> connected_components(const Patch& patch, std::uint16_t width) {
  std::vector<std::uint32_t> pixels;
  pixels.reserve(patch.area);
  patch.for_each_pixel([&](std::uint32_t p) { pixels.push_back(p); });
  // Union-find over the patch's own pixels.
  std::vector<std::uint32_t> parent(pixels.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto root = [&](std::uint32_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = root(a);
    b = root(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  auto index_of = [&](std::uint32_t p) -> std::optional<std::uint32_t> {
    auto it = std::lower_bound(pixels.begin(), pixels.end(), p);
    if (it == pixels.end() || *it != p) return std::nullopt;
    return static_cast<std::uint32_t>(it - pixels.begin());
  };
  for (std::uint32_t i = 0; i < pixels.size(); ++i) {
    const std::uint32_t p = pixels[i];
    if (p % width != 0)
      if (auto j = index_of(p - 1)) unite(i, *j);
    if (p >= width)
      if (auto j = index_of(p - width)) unite(i, *j);
  }
  std::map<std::uint32_t, std::vector<PixelRun>> comps;
  for (std::uint32_t i = 0; i < pixels.size(); ++i) append_pixel(comps[root(i)], pixels[i]);
  std::vector<std::vector<PixelRun>> out;
  for (auto& [r, runs] : comps) out.push_back(std::move(runs));
  auto area = [](const std::vector<PixelRun>& runs) {
    std::uint64_t a = 0;
    for (const PixelRun& r : runs) a += r.length;
    return a;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return area(a) > area(b); });
  return out;
}

MtsIndex build_corpus_index(std::span<const FramePatches> frames) {
  MtsIndex index;
  index.frameCount = static_cast<std::uint32_t>(frames.size());
  for (const FramePatches& f : frames)
    for (const Patch& p : f.patches) index.byMts[p.key].push_back({f.frameIndex, p.area});
  for (auto& [key, occ] : index.byMts) {
    std::stable_sort(occ.begin(), occ.end(),
                     [](const Occurrence& a, const Occurrence& b) { return a.frameIndex < b.frameIndex; });
    index.byResource[key.mesh].insert(key);
    index.byResource[key.texture].insert(key);
    index.byResource[key.shader].insert(key);
  }
  return index;
}

Bytes encode_patches(const FramePatches& frame) {
  ByteWriter w;
  w.raw(kPatchMagic);
  w.u16(kPatchVersion);
  w.u32(frame.frameIndex);
  w.u16(frame.width);
  w.u16(frame.height);
  w.u32(static_cast<std::uint32_t>(frame.patches.size()));
  for (const Patch& p : frame.patches) {
    w.raw(p.key.mesh.bytes());
    w.raw(p.key.texture.bytes());
    w.raw(p.key.shader.bytes());
    w.u32(p.area);
    w.u32(static_cast<std::uint32_t>(p.runs.size()));
    for (const PixelRun& r : p.runs) {
      w.u32(r.start);
      w.u32(r.length);
    }
  }
  return std::move(w).take();
}

FramePatches decode_patches(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto magic = r.raw(kPatchMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kPatchMagic.begin())) throw CorruptCapture("bad GBPAT1 magic");
    const std::uint16_t version = r.u16();
    if (version != kPatchVersion) throw CorruptCapture("unsupported GBPAT1 version " + std::to_string(version));
    FramePatches f;
    f.frameIndex = r.u32();
    f.width = r.u16();
    f.height = r.u16();
    const std::uint32_t count = r.u32();
    if (count > r.remaining() / 56) throw CorruptCapture("patch count exceeds file size");
    const std::uint64_t pixels = std::uint64_t{f.width} * f.height;
    std::uint64_t covered = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
      Patch p;
      p.frameIndex = f.frameIndex;
      p.key.mesh = PersistentKey::from_bytes(r.raw(16).first<16>());
      p.key.texture = PersistentKey::from_bytes(r.raw(16).first<16>());
      p.key.shader = PersistentKey::from_bytes(r.raw(16).first<16>());
      p.area = r.u32();
      const std::uint32_t runs = r.u32();
      if (runs > r.remaining() / 8) throw CorruptCapture("run count exceeds file size");
      std::uint64_t area = 0;
      for (std::uint32_t k = 0; k < runs; ++k) {
        PixelRun run{r.u32(), r.u32()};
        if (run.length == 0 || std::uint64_t{run.start} + run.length > pixels)
          throw CorruptCapture("patch run out of range");
        if (!p.runs.empty() && p.runs.back().start + p.runs.back().length >= run.start)
          throw CorruptCapture("patch runs not canonical");
        area += run.length;
        p.runs.push_back(run);
      }
      if (area != p.area || area == 0) throw CorruptCapture("patch area mismatch");
      if (!f.patches.empty() && !(f.patches.back().key < p.key)) throw CorruptCapture("patches not sorted by key");
      covered += area;
      f.patches.push_back(std::move(p));
    }
    if (covered > pixels) throw CorruptCapture("patches overlap");
    if (!r.done()) throw CorruptCapture("trailing bytes in GBPAT1 file");
    return f;
  } catch (const TruncatedStream& e) {
    throw CorruptCapture(std::string("GBPAT1: ") + e.what());
  }
}

std::string dump_patches(const FramePatches& frame) {
  std::ostringstream out;
  out << "frame " << frame.frameIndex << ' ' << frame.width << 'x' << frame.height << " patches "
      << frame.patches.size() << '\n';
  for (const Patch& p : frame.patches) {
    out << p.key.hex() << " area " << p.area << " runs " << p.runs.size();
    for (const PixelRun& r : p.runs) out << ' ' << r.start << '+' << r.length;
    out << '\n';
  }
  return out.str();
}

std::filesystem::path patch_file(const std::filesystem::path& dir, std::uint32_t frameIndex) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06u.pat", frameIndex);
  return dir / name;
}

}  // namespace gba

namespace gba {

std::optional<std::size_t> Corpus::position(std::uint32_t frameIndex) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frameIndex,
                             [](const FramePatches& f, std::uint32_t i) { return f.frameIndex < i; });
  if (it == frames.end() || it->frameIndex != frameIndex) return std::nullopt;
  return static_cast<std::size_t>(it - frames.begin());
}

Corpus make_corpus(std::vector<FramePatches> frames) {
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FramePatches& a, const FramePatches& b) { return a.frameIndex < b.frameIndex; });
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].frameIndex == frames[i - 1].frameIndex)
      throw Error("duplicate frame index " + std::to_string(frames[i].frameIndex) + " in corpus");
  Corpus c;
  c.index = build_corpus_index(frames);
  c.frames = std::move(frames);
  return c;
}

}  // namespace gba
