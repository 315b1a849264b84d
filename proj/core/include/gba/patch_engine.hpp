#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gba/capture.hpp"
#include "gba/resource_identity.hpp"

namespace gba {

/// Persistent identity of a rendered surface: <mesh, texture, shader>.
/// Ordered lexicographically.
struct MtsKey {
  PersistentKey mesh;
  PersistentKey texture;
  PersistentKey shader;

  auto operator<=>(const MtsKey&) const = default;

  /// 96 lowercase hex digits: mesh, texture, shader.
  std::string hex() const;
  static std::optional<MtsKey> from_hex(std::string_view hex);
};

struct MtsKeyHash {
  std::size_t operator()(const MtsKey& k) const noexcept {
    PersistentKeyHash h;
    return h(k.mesh) ^ (h(k.texture) * 31) ^ (h(k.shader) * 1009);
  }
};

/// Half-open run [start, start + length) of row-major pixel indices.
struct PixelRun {
  std::uint32_t start = 0;
  std::uint32_t length = 0;
  bool operator==(const PixelRun&) const = default;
};

/// All pixels of one frame whose visible surface carries one MtsKey.
/// Runs are sorted, non-empty and never adjacent (canonical RLE).
struct Patch {
  std::uint32_t frameIndex = 0;
  MtsKey key;
  std::vector<PixelRun> runs;
  std::uint32_t area = 0;

  bool operator==(const Patch&) const = default;

  template <typename F>
  void for_each_pixel(F&& f) const {
    for (const PixelRun& r : runs)
      for (std::uint32_t p = r.start; p < r.start + r.length; ++p) f(p);
  }
};

/// Patches of one frame, sorted by key, plus the frame geometry.
struct FramePatches {
  std::uint32_t frameIndex = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<Patch> patches;

  std::size_t pixel_count() const { return std::size_t{width} * height; }
  /// Pixels that belong to some patch (i.e. are not background).
  std::size_t annotatable_pixels() const;
  const Patch* find(const MtsKey& key) const;
  bool operator==(const FramePatches&) const = default;
};

/// One patch per distinct resolved MtsKey. Distinct volatile triples that
/// resolve to the same key are merged. Throws UnresolvableId.
FramePatches decompose(const FrameCapture& capture);

/// Display-only split of a patch into 4-connected components, largest first
/// (ties by first pixel).
std::vector<std::vector<PixelRun>> connected_components(const Patch& patch, std::uint16_t width);

struct Occurrence {
  std::uint32_t frameIndex = 0;
  std::uint32_t area = 0;
  bool operator==(const Occurrence&) const = default;
};

struct MtsIndex {
  std::map<MtsKey, std::vector<Occurrence>> byMts;         // occurrences sorted by frame
  std::map<PersistentKey, std::set<MtsKey>> byResource;    // inverted component index
  std::uint32_t frameCount = 0;

  bool contains(const MtsKey& key) const { return byMts.contains(key); }
  bool operator==(const MtsIndex&) const = default;
};

MtsIndex build_corpus_index(std::span<const FramePatches> frames);

// GBPAT1 sidecar: "GBPAT1", u16 version, u32 frameIndex, u16 w, u16 h,
// u32 patch count, then per patch: 48 key bytes, u32 area, u32 run count,
// runs as (u32 start, u32 length).
inline constexpr std::array<std::uint8_t, 6> kPatchMagic{'G', 'B', 'P', 'A', 'T', '1'};
inline constexpr std::uint16_t kPatchVersion = 1;

Bytes encode_patches(const FramePatches& frame);
/// Throws CorruptCapture on any structural violation.
FramePatches decode_patches(std::span<const std::uint8_t> bytes);
/// Human-readable dump, one line per patch.
std::string dump_patches(const FramePatches& frame);

std::filesystem::path patch_file(const std::filesystem::path& dir, std::uint32_t frameIndex);

}  // namespace gba

template <>
struct std::hash<gba::MtsKey> : gba::MtsKeyHash {};

namespace gba {

/// Decomposed frames in sequence order plus their index.
struct Corpus {
  std::vector<FramePatches> frames;
  MtsIndex index;

  /// Position of `frameIndex` in `frames`, if present.
  std::optional<std::size_t> position(std::uint32_t frameIndex) const;
};

Corpus make_corpus(std::vector<FramePatches> frames);

}  // namespace gba
