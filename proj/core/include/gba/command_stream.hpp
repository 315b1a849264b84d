#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gba/byte_io.hpp"
#include "gba/resource_identity.hpp"

namespace gba {

/// Render-target identifiers a draw may bind. The G-buffer set written by
/// the main geometry pass is {Albedo, Depth}.
enum class RenderTarget : std::uint8_t {
  Backbuffer = 0,
  Albedo = 1,
  Depth = 2,
  Normal = 3,
  Specular = 4,
  Stencil = 5,
  Shadow = 6,
};
inline constexpr std::uint8_t kRenderTargetCount = 7;

/// Ordered set of render targets, stored as a bitmask.
class TargetSet {
 public:
  constexpr TargetSet() = default;
  constexpr TargetSet(std::initializer_list<RenderTarget> targets) {
    for (RenderTarget t : targets) insert(t);
  }

  constexpr void insert(RenderTarget t) { bits_ |= bit(t); }
  constexpr bool contains(RenderTarget t) const { return (bits_ & bit(t)) != 0; }
  constexpr bool contains_all(TargetSet other) const { return (bits_ & other.bits_) == other.bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  std::vector<RenderTarget> targets() const;

  static constexpr TargetSet from_bits(std::uint8_t bits) {
    TargetSet s;
    s.bits_ = bits;
    return s;
  }

  constexpr bool operator==(const TargetSet&) const = default;

 private:
  static constexpr std::uint8_t bit(RenderTarget t) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t)); }
  std::uint8_t bits_ = 0;
};

inline constexpr TargetSet kGBufferTargets{RenderTarget::Albedo, RenderTarget::Depth};

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

/// Screen-space vertex. x and y are pixels in 24.8 fixed point.
struct Vertex {
  std::int32_t x = 0;
  std::int32_t y = 0;
  float depth = 0.0f;
  bool operator==(const Vertex&) const = default;
};

inline constexpr int kSubpixelBits = 8;
inline constexpr std::int32_t kSubpixelOne = 1 << kSubpixelBits;
/// Vertex coordinates are limited so edge-function products fit in int64.
inline constexpr std::int32_t kMaxCoordinate = 1 << 27;

inline constexpr std::int32_t to_fixed(double pixels) {
  return static_cast<std::int32_t>(pixels * kSubpixelOne + (pixels >= 0 ? 0.5 : -0.5));
}

struct Triangle {
  std::array<Vertex, 3> v{};
  Rgb8 albedo;
  bool operator==(const Triangle&) const = default;
};

struct DrawCall {
  VolatileId mesh = 0;
  VolatileId texture = 0;
  VolatileId shader = 0;
  TargetSet targets;
  bool samplesScene = false;  // reads the scene color image (post-processing)
  std::vector<Triangle> triangles;
  bool operator==(const DrawCall&) const = default;
};

/// Everything the capture wrapper records for one frame: the resource
/// events since the previous recorded frame of the session, then the draws.
struct CommandStream {
  std::uint32_t frameIndex = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<ResourceEvent> events;
  std::vector<DrawCall> draws;
  bool operator==(const CommandStream&) const = default;
};

/// Container format: "GBCAP1", u16 version, u32 frame count, frame records.
inline constexpr std::array<std::uint8_t, 6> kCaptureMagic{'G', 'B', 'C', 'A', 'P', '1'};
inline constexpr std::uint16_t kCaptureVersion = 1;

Bytes serialize_session(std::span<const CommandStream> frames);
std::vector<CommandStream> parse_session(std::span<const std::uint8_t> bytes);

/// Single-frame container.
Bytes serialize_stream(const CommandStream& stream);
/// Parses a container holding exactly one frame.
CommandStream parse_stream(std::span<const std::uint8_t> bytes);

}  // namespace gba
