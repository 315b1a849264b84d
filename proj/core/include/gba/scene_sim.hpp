#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gba/capture.hpp"
#include "gba/classes.hpp"
#include "gba/command_stream.hpp"

namespace gba {

struct WorldConfig {
  std::uint32_t objectCount = 150;
  std::uint32_t resourceCount = 250;
  /// Classes objects are drawn from. Must be non-empty and exclude kUnlabeled.
  std::vector<ClassId> classPalette{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  /// Fraction of textures deliberately shared by two classes.
  double ambiguity = 0.0;
  /// Length of the street strip in world units (1 unit = screen height at zoom 1).
  double worldLength = 8.0;
  bool operator==(const WorldConfig&) const = default;
};

struct WorldResource {
  ResourceKind kind = ResourceKind::Mesh;
  Bytes content;
  bool operator==(const WorldResource&) const = default;
};

/// One rectangular band of an object: two triangles sharing the object's
/// depth, drawn with one mesh/texture/shader triple. Band geometry is given
/// as fractions of the object's box.
struct WorldPart {
  std::uint32_t mesh = 0;  // indices into World::resources
  std::uint32_t texture = 0;
  std::uint32_t shader = 0;
  float top = 0, bottom = 1, left = 0, right = 1;
  Rgb8 albedo;
  bool operator==(const WorldPart&) const = default;
};

struct WorldObject {
  ClassId cls = kUnlabeled;
  double x = 0, y = 0, width = 0, height = 0;  // box, world units, y down
  float depth = 0.5f;
  std::vector<WorldPart> parts;
  bool operator==(const WorldObject&) const = default;
};

/// Resources the engine itself uses for passes outside the scene geometry.
struct EngineResources {
  std::uint32_t quadMesh = 0, sceneTexture = 0, distortionShader = 0;
  std::uint32_t hudMesh = 0, hudTexture = 0, hudShader = 0, shadowShader = 0;
  bool operator==(const EngineResources&) const = default;
};

struct World {
  WorldConfig config;
  std::uint64_t seed = 0;
  std::vector<WorldObject> objects;
  /// Object resources first, then the engine resources.
  std::vector<WorldResource> resources;
  std::uint32_t objectResourceCount = 0;
  EngineResources engine;
  bool operator==(const World&) const = default;
};

/// Deterministic in (config, seed). Throws InfeasibleConfig when counts are
/// zero, ambiguity is outside [0,1], the palette is invalid, or there are
/// too few resources to give every class a class-exclusive mesh, texture and
/// shader.
World generate_world(const WorldConfig& config, std::uint64_t seed);

/// Classes referencing each object resource (index < objectResourceCount).
std::vector<std::vector<ClassId>> resource_classes(const World& world);

struct CameraPath {
  std::uint32_t steps = 12000;
  double sweeps = 3.0;  // one-way traversals of the strip (ping-pong)
  double zoomMin = 1.0;
  double zoomMax = 1.3;
  double zoomCycles = 7.0;
  double centerY = 0.45;
};

struct CameraPose {
  double x = 0, y = 0, zoom = 1;
};

CameraPose camera_at(const CameraPath& path, const World& world, double aspect, std::uint32_t step);

struct OracleFrame {
  std::uint32_t frameIndex = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<ClassId> classImage;  // kUnlabeled where no geometry
  std::vector<PassRole> passTags;   // ground-truth role of every draw
  bool operator==(const OracleFrame&) const = default;
};

struct SessionSpec {
  std::uint64_t seed = 1;             // drives volatile id assignment and streaming
  std::uint32_t firstFrameIndex = 0;  // corpus-global index of the first recorded frame
  std::uint16_t width = 320;
  std::uint16_t height = 180;
  std::uint32_t stepOffset = 0;       // first camera step recorded
};

struct SessionOutput {
  std::vector<CommandStream> streams;
  std::vector<OracleFrame> oracle;
  /// Volatile id assigned to each world resource when the session began.
  std::vector<VolatileId> initialIds;
};

/// Records every `frameStride`-th step of the path. Volatile ids are drawn
/// at random per session; some resources are re-streamed (deleted and
/// re-created under a new id) between recorded frames. Every stream holds a
/// shadow draw, the main geometry, one post-process draw and one HUD draw.
SessionOutput simulate_session(const World& world, const CameraPath& path, std::uint32_t frameStride,
                               const SessionSpec& spec);

/// Plain "key = value" corpus configuration.
struct CorpusConfig {
  WorldConfig world;
  CameraPath path;
  std::uint64_t seed = 42;
  std::uint32_t frames = 300;  // recorded frames per session
  std::uint32_t stride = 40;
  std::uint32_t sessions = 1;
  std::uint16_t width = 320;
  std::uint16_t height = 180;

  /// Keys: seed, frames, stride, sessions, width, height, objects,
  /// resources, ambiguity, world_length, classes (comma-separated names),
  /// sweeps, zoom_min, zoom_max, zoom_cycles. Unknown keys are errors.
  static CorpusConfig parse(std::string_view text, const Palette& palette);
  std::string to_text(const Palette& palette) const;
};

/// Sidecar written next to a session capture: the world and the oracle.
inline constexpr std::array<std::uint8_t, 6> kOracleMagic{'G', 'B', 'O', 'R', 'C', '1'};
inline constexpr std::uint16_t kOracleVersion = 1;

struct OracleSidecar {
  World world;
  std::vector<OracleFrame> frames;
  bool operator==(const OracleSidecar&) const = default;
};

Bytes encode_oracle(const OracleSidecar& sidecar);
OracleSidecar decode_oracle(std::span<const std::uint8_t> bytes);

}  // namespace gba
