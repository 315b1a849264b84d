#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "gba/command_stream.hpp"
#include "gba/resource_identity.hpp"

namespace gba {

// ---------------------------------------------------------------------------
// Pass identification
// ---------------------------------------------------------------------------

enum class PassRole : std::uint8_t {
  MainGeometry = 0,
  PostProcess = 1,
  Hud = 2,
  Other = 3,  // e.g. shadow maps or backbuffer work before the main pass
};

std::string_view role_name(PassRole role) noexcept;

struct PassGroup {
  TargetSet targets;
  std::vector<std::uint32_t> drawIndices;
  PassRole role = PassRole::Other;
  bool operator==(const PassGroup&) const = default;
};

struct PassPartition {
  std::vector<PassGroup> groups;

  bool has_main() const;
  /// Role of every draw, indexed by draw position.
  std::vector<PassRole> draw_roles(std::size_t drawCount) const;
};

/// Groups consecutive draws binding an identical target set, then assigns
/// roles: groups whose targets include the G-buffer set are MainGeometry;
/// backbuffer groups after the first main group are PostProcess when any
/// draw samples the scene image and Hud otherwise.
PassPartition identify_passes(const CommandStream& stream);

// ---------------------------------------------------------------------------
// Images and the id codec
// ---------------------------------------------------------------------------

/// Clear color for pixels no main-pass geometry covers.
inline constexpr Rgb8 kClearColor{0, 0, 0};

struct ColorImage {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  ColorImage() = default;
  ColorImage(std::uint16_t w, std::uint16_t h, Rgb8 fill);
  Rgb8 at(std::size_t pixel) const { return {rgb[3 * pixel], rgb[3 * pixel + 1], rgb[3 * pixel + 2]}; }
  void set(std::size_t pixel, Rgb8 c) {
    rgb[3 * pixel] = c.r;
    rgb[3 * pixel + 1] = c.g;
    rgb[3 * pixel + 2] = c.b;
  }
  std::size_t pixel_count() const { return std::size_t{width} * height; }
  bool operator==(const ColorImage&) const = default;
};

struct IdTriple {
  VolatileId mesh = kSentinelId;
  VolatileId texture = kSentinelId;
  VolatileId shader = kSentinelId;

  bool is_sentinel() const { return mesh == kSentinelId && texture == kSentinelId && shader == kSentinelId; }
  auto operator<=>(const IdTriple&) const = default;
};

inline constexpr IdTriple kSentinelTriple{};

/// Three 32-bit id planes; uncovered pixels hold the sentinel in all three.
struct IdImage {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint32_t> mesh;
  std::vector<std::uint32_t> texture;
  std::vector<std::uint32_t> shader;

  IdImage() = default;
  IdImage(std::uint16_t w, std::uint16_t h);
  IdTriple at(std::size_t pixel) const { return {mesh[pixel], texture[pixel], shader[pixel]}; }
  void set(std::size_t pixel, IdTriple t) {
    mesh[pixel] = t.mesh;
    texture[pixel] = t.texture;
    shader[pixel] = t.shader;
  }
  std::size_t pixel_count() const { return std::size_t{width} * height; }
  bool operator==(const IdImage&) const = default;
};

/// 12 channel bytes: mesh || texture || shader big-endian, laid out as
/// T0.rgb, T1.rgb, T2.rgb, T3.rgb.
using EncodedIds = std::array<std::uint8_t, 12>;

EncodedIds encode_ids(IdTriple ids);
IdTriple decode_ids(std::span<const std::uint8_t, 12> channels);

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

/// Conventional color pass over the main geometry only.
ColorImage replay_color(const CommandStream& stream, const PassPartition& partition);

/// Id pass: same geometry and depth test as replay_color, every main-pass
/// shader replaced by one that writes encode_ids() into four RGB8 targets,
/// which are then decoded into the id planes.
IdImage replay_ids(const CommandStream& stream, const PassPartition& partition);

struct FrameCapture {
  std::uint32_t frameIndex = 0;
  ColorImage color;
  IdImage ids;
  SessionResourceTable table;
  bool operator==(const FrameCapture&) const = default;
};

/// Folds the stream's events onto `prior` (the session table before this
/// frame), partitions passes and runs both replays. Throws NoMainPass,
/// MalformedEventLog, or UnknownVolatileId for a main-pass draw whose ids
/// are not live.
FrameCapture make_frame_capture(const CommandStream& stream, const SessionResourceTable& prior = {});

/// Captures every frame of a session in order. Tables are folded
/// sequentially; replays run on up to `jobs` threads (0 = all cores).
std::vector<FrameCapture> capture_session(std::span<const CommandStream> frames, unsigned jobs = 1);

// ---------------------------------------------------------------------------
// Disk formats
// ---------------------------------------------------------------------------

inline constexpr std::array<std::uint8_t, 8> kIdPlaneMagic{'G', 'B', 'I', 'D', 'P', '1', 0, 0};
inline constexpr std::array<std::uint8_t, 8> kTableMagic{'G', 'B', 'T', 'B', 'L', '1', 0, 0};

Bytes encode_ppm(const ColorImage& image);
ColorImage decode_ppm(std::span<const std::uint8_t> bytes);
Bytes encode_id_planes(const IdImage& image);
IdImage decode_id_planes(std::span<const std::uint8_t> bytes);
Bytes encode_table(const SessionResourceTable& table);
SessionResourceTable decode_table(std::span<const std::uint8_t> bytes);

std::filesystem::path capture_stem(const std::filesystem::path& dir, std::uint32_t frameIndex);

/// Writes <dir>/frame_NNNNNN.{ppm,idp,tbl}.
void write_capture(const std::filesystem::path& dir, const FrameCapture& capture);
/// Throws CorruptCapture on a missing or malformed file.
FrameCapture read_capture(const std::filesystem::path& dir, std::uint32_t frameIndex);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gba
