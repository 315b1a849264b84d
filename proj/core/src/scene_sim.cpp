#include "gba/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gba/errors.hpp"
#include "gba/raster.hpp"
#include "rng.hpp"

namespace gba {
namespace {

using detail::Rng;

struct ClassTemplate {
  bool tiling = false;
  double bottom0 = 0.5, bottom1 = 0.5;  // tiling: fixed top = bottom0 - height0
  double height0 = 0.1, height1 = 0.1;
  double width0 = 0.1, width1 = 0.1;
  float depth0 = 0.5f, depth1 = 0.5f;
  int parts0 = 1, parts1 = 1;
  double weight = 10;
  Rgb8 color;
};

ClassTemplate template_for(ClassId cls) {
  using namespace classes;
  switch (cls) {
    case Building: return {false, 0.42, 0.42, 0.30, 0.70, 0.30, 0.70, 0.85f, 0.93f, 3, 5, 20, {120, 110, 100}};
    case Tree: return {false, 0.46, 0.50, 0.30, 0.50, 0.12, 0.25, 0.60f, 0.80f, 2, 3, 15, {60, 120, 40}};
    case Sky: return {true, 0.42, 0.42, 1.62, 1.62, 0, 0, 0.99f, 0.99f, 2, 3, 12, {130, 170, 220}};
    case Car: return {false, 0.62, 0.90, 0.10, 0.16, 0.25, 0.40, 0.20f, 0.45f, 3, 4, 22, {30, 40, 150}};
    case Sign: return {false, 0.12, 0.25, 0.06, 0.10, 0.06, 0.12, 0.45f, 0.60f, 1, 2, 10, {210, 200, 30}};
    case Road: return {true, 1.80, 1.80, 1.28, 1.28, 0, 0, 0.97f, 0.97f, 2, 3, 12, {90, 80, 90}};
    case Pedestrian: return {false, 0.50, 0.58, 0.14, 0.20, 0.04, 0.07, 0.30f, 0.50f, 2, 3, 15, {200, 60, 70}};
    case Fence: return {false, 0.47, 0.50, 0.06, 0.10, 0.30, 0.60, 0.70f, 0.80f, 1, 2, 10, {170, 150, 140}};
    case Pole: return {false, 0.50, 0.54, 0.35, 0.50, 0.015, 0.03, 0.50f, 0.70f, 1, 2, 15, {150, 150, 150}};
    case Sidewalk: return {true, 0.52, 0.52, 0.10, 0.10, 0, 0, 0.96f, 0.96f, 1, 2, 12, {200, 180, 190}};
    case Bicyclist: return {false, 0.60, 0.75, 0.15, 0.20, 0.10, 0.14, 0.25f, 0.40f, 2, 3, 6, {120, 30, 40}};
    default: return {false, 0.50, 0.70, 0.10, 0.30, 0.10, 0.30, 0.30f, 0.80f, 1, 3, 10, {128, 128, 128}};
  }
}

// Largest-remainder apportionment of `total` over `weights`, with every
// entry receiving at least `floor` when total allows it.
std::vector<std::uint32_t> apportion(std::uint32_t total, const std::vector<double>& weights, std::uint32_t floor) {
  const std::size_t n = weights.size();
  std::vector<std::uint32_t> out(n, 0);
  if (n == 0) return out;
  if (total < floor * n) {
    for (std::size_t i = 0; i < total; ++i) out[i % n] += 1;
    return out;
  }
  const std::uint32_t spare = total - floor * static_cast<std::uint32_t>(n);
  double sum = 0;
  for (double w : weights) sum += w;
  std::vector<std::pair<double, std::size_t>> rema;
  std::uint32_t given = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = spare * weights[i] / sum;
    const auto whole = static_cast<std::uint32_t>(exact);
    out[i] = floor + whole;
    given += whole;
    rema.emplace_back(exact - whole, i);
  }
  std::stable_sort(rema.begin(), rema.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; given < spare; ++k, ++given) out[rema[k % n].second] += 1;
  return out;
}

Bytes random_content(Rng& rng, std::unordered_set<std::string>& seen) {
  for (;;) {
    const std::size_t len = 48 + rng.below(113);
    Bytes b(len);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng.next());
    if (seen.insert(std::string(b.begin(), b.end())).second) return b;
  }
}

std::uint8_t jitter(Rng& rng, std::uint8_t v) {
  return static_cast<std::uint8_t>(std::clamp<int>(v + rng.range(-25, 25), 0, 255));
}

// Sequence of length `count` over `pool` containing every member at least once.
std::vector<std::uint32_t> covering_sequence(Rng& rng, std::vector<std::uint32_t> pool, std::size_t count) {
  std::vector<std::uint32_t> seq = pool;
  rng.shuffle(seq);
  while (seq.size() < count) seq.push_back(pool[rng.below(pool.size())]);
  rng.shuffle(seq);
  return seq;
}

}  // namespace

World generate_world(const WorldConfig& config, std::uint64_t seed) {
  if (config.objectCount < 1) throw InfeasibleConfig("objectCount must be at least 1");
  if (config.resourceCount < 1) throw InfeasibleConfig("resourceCount must be at least 1");
  if (!(config.ambiguity >= 0.0 && config.ambiguity <= 1.0)) throw InfeasibleConfig("ambiguity must lie in [0,1]");
  if (!(config.worldLength > 0.0)) throw InfeasibleConfig("worldLength must be positive");
  if (config.classPalette.empty()) throw InfeasibleConfig("class palette is empty");
  {
    std::set<ClassId> unique(config.classPalette.begin(), config.classPalette.end());
    if (unique.size() != config.classPalette.size()) throw InfeasibleConfig("class palette repeats a class");
    if (unique.contains(kUnlabeled)) throw InfeasibleConfig("class palette may not contain the unlabeled id");
  }

  Rng rng(seed);
  World world;
  world.config = config;
  world.seed = seed;

  // Objects per class.
  std::vector<double> weights;
  for (ClassId c : config.classPalette) weights.push_back(template_for(c).weight);
  const auto perClass = apportion(config.objectCount, weights, 1);
  std::vector<ClassId> used;
  for (std::size_t i = 0; i < perClass.size(); ++i)
    if (perClass[i] > 0) used.push_back(config.classPalette[i]);
  const auto C = static_cast<std::uint32_t>(used.size());

  // Resource kinds.
  const auto R = config.resourceCount;
  const std::uint32_t S = std::max<std::uint32_t>(C, static_cast<std::uint32_t>(std::lround(0.1 * R)));
  const std::uint32_t T = std::max<std::uint32_t>(C, static_cast<std::uint32_t>(std::lround(0.4 * R)));
  if (S + T + C > R)
    throw InfeasibleConfig("resourceCount " + std::to_string(R) + " cannot give each of " + std::to_string(C) +
                           " classes an exclusive mesh, texture and shader");
  const std::uint32_t M = R - S - T;
  const auto shared = static_cast<std::uint32_t>(std::lround(config.ambiguity * T));
  if (shared > 0 && C < 2) throw InfeasibleConfig("texture sharing needs at least two classes");

  // Part counts, before resources are known.
  std::vector<std::vector<std::size_t>> classObjects(C);
  std::vector<int> partCount;
  for (std::size_t ci = 0, ui = 0; ci < perClass.size(); ++ci) {
    if (perClass[ci] == 0) continue;
    const ClassTemplate tpl = template_for(config.classPalette[ci]);
    for (std::uint32_t k = 0; k < perClass[ci]; ++k) {
      WorldObject obj;
      obj.cls = config.classPalette[ci];
      classObjects[ui].push_back(world.objects.size());
      world.objects.push_back(obj);
      partCount.push_back(rng.range(tpl.parts0, tpl.parts1));
    }
    ++ui;
  }

  std::vector<double> demand(C, 0);
  for (std::uint32_t u = 0; u < C; ++u)
    for (std::size_t o : classObjects[u]) demand[u] += partCount[o];
  const auto meshAlloc = apportion(M, demand, 1);
  const auto texAlloc = apportion(T, demand, 1);
  const auto shaderAlloc = apportion(S, demand, 1);

  // Resource contents: meshes [0,M), textures [M,M+T), shaders [M+T,R).
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < R; ++i) {
    const ResourceKind kind = i < M ? ResourceKind::Mesh : i < M + T ? ResourceKind::Texture : ResourceKind::Shader;
    world.resources.push_back({kind, random_content(rng, seen)});
  }
  world.objectResourceCount = R;

  std::vector<std::vector<std::uint32_t>> meshPool(C), texPool(C), shaderPool(C);
  std::vector<std::uint32_t> texOwner(T);
  {
    std::uint32_t m = 0, t = 0, s = 0;
    for (std::uint32_t u = 0; u < C; ++u) {
      for (std::uint32_t k = 0; k < meshAlloc[u]; ++k) meshPool[u].push_back(m++);
      for (std::uint32_t k = 0; k < texAlloc[u]; ++k) {
        texOwner[t] = u;
        texPool[u].push_back(M + t++);
      }
      for (std::uint32_t k = 0; k < shaderAlloc[u]; ++k) shaderPool[u].push_back(M + T + s++);
    }
  }
  if (shared > 0) {
    std::vector<std::uint32_t> order(T);
    for (std::uint32_t i = 0; i < T; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::uint32_t k = 0; k < shared; ++k) {
      const std::uint32_t t = order[k];
      std::uint32_t other = static_cast<std::uint32_t>(rng.below(C - 1));
      if (other >= texOwner[t]) ++other;
      texPool[other].push_back(M + t);
    }
  }

  // Every pooled resource must be referenced, so grow part counts as needed.
  for (std::uint32_t u = 0; u < C; ++u) {
    const std::size_t need = std::max({meshPool[u].size(), texPool[u].size(), shaderPool[u].size()});
    std::size_t have = 0;
    for (std::size_t o : classObjects[u]) have += partCount[o];
    for (std::size_t k = 0; have < need; ++k, ++have) ++partCount[classObjects[u][k % classObjects[u].size()]];
  }

  // Geometry and resource assignment.
  for (std::uint32_t u = 0; u < C; ++u) {
    const ClassTemplate tpl = template_for(used[u]);
    const auto& objs = classObjects[u];
    std::size_t parts = 0;
    for (std::size_t o : objs) parts += partCount[o];
    const auto meshSeq = covering_sequence(rng, meshPool[u], parts);
    const auto texSeq = covering_sequence(rng, texPool[u], parts);
    const auto shaderSeq = covering_sequence(rng, shaderPool[u], parts);

    std::size_t cursor = 0;
    for (std::size_t k = 0; k < objs.size(); ++k) {
      WorldObject& obj = world.objects[objs[k]];
      if (tpl.tiling) {
        const double tile = config.worldLength / static_cast<double>(objs.size());
        obj.x = tile * static_cast<double>(k);
        obj.width = k + 1 == objs.size() ? config.worldLength - obj.x : tile;
        obj.height = tpl.height0;
        obj.y = tpl.bottom0 - tpl.height0;
        obj.depth = tpl.depth0;
      } else {
        obj.width = std::min(rng.uniform(tpl.width0, tpl.width1), config.worldLength);
        obj.height = rng.uniform(tpl.height0, tpl.height1);
        obj.x = rng.uniform(0.0, config.worldLength - obj.width);
        obj.y = rng.uniform(tpl.bottom0, tpl.bottom1) - obj.height;
        obj.depth = static_cast<float>(rng.uniform(tpl.depth0, tpl.depth1));
      }

      const int p = partCount[objs[k]];
      std::vector<double> cuts(p);
      double total = 0;
      for (double& c : cuts) total += (c = rng.uniform(0.5, 1.5));
      double acc = 0;
      for (int j = 0; j < p; ++j) {
        WorldPart part;
        part.top = static_cast<float>(acc / total);
        acc += cuts[j];
        part.bottom = j + 1 == p ? 1.0f : static_cast<float>(acc / total);
        if (!tpl.tiling) {
          part.left = static_cast<float>(rng.uniform(0.0, 0.15));
          part.right = static_cast<float>(1.0 - rng.uniform(0.0, 0.15));
        }
        part.mesh = meshSeq[cursor];
        part.texture = texSeq[cursor];
        part.shader = shaderSeq[cursor];
        ++cursor;
        part.albedo = {jitter(rng, tpl.color.r), jitter(rng, tpl.color.g), jitter(rng, tpl.color.b)};
        obj.parts.push_back(part);
      }
    }
  }

  // Engine-owned resources.
  auto add_engine = [&](ResourceKind kind) {
    world.resources.push_back({kind, random_content(rng, seen)});
    return static_cast<std::uint32_t>(world.resources.size() - 1);
  };
  world.engine.quadMesh = add_engine(ResourceKind::Mesh);
  world.engine.sceneTexture = add_engine(ResourceKind::Texture);
  world.engine.distortionShader = add_engine(ResourceKind::Shader);
  world.engine.hudMesh = add_engine(ResourceKind::Mesh);
  world.engine.hudTexture = add_engine(ResourceKind::Texture);
  world.engine.hudShader = add_engine(ResourceKind::Shader);
  world.engine.shadowShader = add_engine(ResourceKind::Shader);
  return world;
}

std::vector<std::vector<ClassId>> resource_classes(const World& world) {
  std::vector<std::set<ClassId>> sets(world.objectResourceCount);
  for (const WorldObject& o : world.objects)
    for (const WorldPart& p : o.parts)
      for (std::uint32_t r : {p.mesh, p.texture, p.shader}) sets.at(r).insert(o.cls);
  std::vector<std::vector<ClassId>> out;
  for (auto& s : sets) out.emplace_back(s.begin(), s.end());
  return out;
}

CameraPose camera_at(const CameraPath& path, const World& world, double aspect, std::uint32_t step) {
  const double L = world.config.worldLength;
  const double half = 0.5 * aspect / path.zoomMin;
  double x0 = half, x1 = L - half;
  if (x1 < x0) x0 = x1 = 0.5 * L;
  const double t = path.steps > 0 ? static_cast<double>(step) / path.steps : 0.0;
  const double phase = std::fmod(t * path.sweeps, 2.0);
  const double pos = phase < 1.0 ? phase : 2.0 - phase;
  CameraPose pose;
  pose.x = x0 + pos * (x1 - x0);
  pose.y = path.centerY;
  pose.zoom = path.zoomMin +
              (path.zoomMax - path.zoomMin) * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * path.zoomCycles * t));
  return pose;
}

namespace {

struct Projector {
  CameraPose pose;
  double width, height;
  double sx(double wx) const { return (wx - pose.x) * pose.zoom * height + 0.5 * width; }
  double sy(double wy) const { return (wy - pose.y) * pose.zoom * height + 0.5 * height; }
};

std::vector<Triangle> quad(double x0, double y0, double x1, double y1, float depth, Rgb8 albedo) {
  const Vertex a{to_fixed(x0), to_fixed(y0), depth};
  const Vertex b{to_fixed(x1), to_fixed(y0), depth};
  const Vertex c{to_fixed(x1), to_fixed(y1), depth};
  const Vertex d{to_fixed(x0), to_fixed(y1), depth};
  return {Triangle{{a, b, c}, albedo}, Triangle{{a, c, d}, albedo}};
}

constexpr TargetSet kMainTargets{RenderTarget::Albedo, RenderTarget::Depth, RenderTarget::Normal};
constexpr TargetSet kShadowTargets{RenderTarget::Shadow, RenderTarget::Depth};
constexpr TargetSet kPostTargets{RenderTarget::Backbuffer};
constexpr TargetSet kHudTargets{RenderTarget::Backbuffer, RenderTarget::Stencil};

}  // namespace

SessionOutput simulate_session(const World& world, const CameraPath& path, std::uint32_t frameStride,
                               const SessionSpec& spec) {
  if (frameStride < 1) throw Error("frameStride must be at least 1");
  Rng rng(detail::mix_seed(spec.seed, 0x5e55));
  SessionOutput out;

  std::unordered_set<VolatileId> usedIds;
  auto fresh_id = [&] {
    for (;;) {
      const auto id = static_cast<VolatileId>(rng.next() & 0xFFFFFFFFu);
      if (id != kSentinelId && usedIds.insert(id).second) return id;
    }
  };

  const std::size_t nRes = world.resources.size();
  std::vector<VolatileId> current(nRes);
  for (auto& id : current) id = fresh_id();
  out.initialIds = current;

  const double W = spec.width;
  const double H = spec.height;
  std::uint32_t frameIndex = spec.firstFrameIndex;

  for (std::uint32_t step = spec.stepOffset; step < path.steps; step += frameStride) {
    CommandStream stream;
    stream.frameIndex = frameIndex;
    stream.width = spec.width;
    stream.height = spec.height;

    if (step == spec.stepOffset) {
      std::vector<std::uint32_t> order(nRes);
      for (std::uint32_t i = 0; i < nRes; ++i) order[i] = i;
      rng.shuffle(order);
      for (std::uint32_t r : order)
        stream.events.push_back(ResourceEvent::create(current[r], world.resources[r].kind, world.resources[r].content));
    } else if (world.objectResourceCount > 0) {
      // Re-stream a few resources: the game evicts and reloads them under new handles.
      const auto restream = rng.below(3);
      for (std::uint64_t k = 0; k < restream; ++k) {
        const auto r = static_cast<std::uint32_t>(rng.below(world.objectResourceCount));
        stream.events.push_back(ResourceEvent::destroy(current[r]));
        current[r] = fresh_id();
        stream.events.push_back(ResourceEvent::create(current[r], world.resources[r].kind, world.resources[r].content));
      }
    }

    const Projector proj{camera_at(path, world, W / H, step), W, H};
    std::vector<PassRole> tags;
    std::vector<ClassId> drawClass;

    // Main geometry, one draw per visible part.
    std::vector<DrawCall> main;
    for (const WorldObject& obj : world.objects) {
      const double ox0 = proj.sx(obj.x), ox1 = proj.sx(obj.x + obj.width);
      const double oy0 = proj.sy(obj.y), oy1 = proj.sy(obj.y + obj.height);
      if (ox1 <= 0 || ox0 >= W || oy1 <= 0 || oy0 >= H) continue;
      for (const WorldPart& part : obj.parts) {
        DrawCall d;
        d.mesh = current[part.mesh];
        d.texture = current[part.texture];
        d.shader = current[part.shader];
        d.targets = kMainTargets;
        d.triangles = quad(proj.sx(obj.x + obj.width * part.left), proj.sy(obj.y + obj.height * part.top),
                           proj.sx(obj.x + obj.width * part.right), proj.sy(obj.y + obj.height * part.bottom),
                           obj.depth, part.albedo);
        main.push_back(std::move(d));
        drawClass.push_back(obj.cls);
      }
    }

    // Shadow map pass before the main pass.
    {
      DrawCall d;
      d.mesh = main.empty() ? current[world.engine.quadMesh] : main.front().mesh;
      d.texture = current[world.engine.sceneTexture];
      d.shader = current[world.engine.shadowShader];
      d.targets = kShadowTargets;
      d.triangles = quad(0, 0, W, H, 0.5f, {0, 0, 0});
      stream.draws.push_back(std::move(d));
      tags.push_back(PassRole::Other);
    }
    for (DrawCall& d : main) {
      stream.draws.push_back(std::move(d));
      tags.push_back(PassRole::MainGeometry);
    }
    {
      DrawCall d;
      d.mesh = current[world.engine.quadMesh];
      d.texture = current[world.engine.sceneTexture];
      d.shader = current[world.engine.distortionShader];
      d.targets = kPostTargets;
      d.samplesScene = true;
      d.triangles = quad(0, 0, W, H, 0.0f, {255, 0, 255});
      stream.draws.push_back(std::move(d));
      tags.push_back(PassRole::PostProcess);
    }
    {
      DrawCall d;
      d.mesh = current[world.engine.hudMesh];
      d.texture = current[world.engine.hudTexture];
      d.shader = current[world.engine.hudShader];
      d.targets = kHudTargets;
      d.triangles = quad(0, 0, W, std::floor(H * 0.12), 0.0f, {255, 255, 255});
      auto minimap = quad(W * 0.8, H * 0.75, W - 4, H - 4, 0.0f, {20, 200, 20});
      d.triangles.insert(d.triangles.end(), minimap.begin(), minimap.end());
      stream.draws.push_back(std::move(d));
      tags.push_back(PassRole::Hud);
    }

    // Oracle: same depth rule as the replay, writing the owning class.
    OracleFrame oracle;
    oracle.frameIndex = frameIndex;
    oracle.width = spec.width;
    oracle.height = spec.height;
    oracle.classImage.assign(std::size_t(spec.width) * spec.height, kUnlabeled);
    oracle.passTags = tags;
    std::vector<double> depth(oracle.classImage.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < drawClass.size(); ++i) {
      const DrawCall& d = stream.draws[1 + i];
      for (const Triangle& tri : d.triangles) {
        rasterize_triangle(tri, spec.width, spec.height, [&](int x, int y, double z) {
          const std::size_t p = std::size_t(y) * spec.width + x;
          if (z <= depth[p]) {
            depth[p] = z;
            oracle.classImage[p] = drawClass[i];
          }
        });
      }
    }

    out.streams.push_back(std::move(stream));
    out.oracle.push_back(std::move(oracle));
    ++frameIndex;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  if constexpr (std::is_same_v<T, std::uint16_t>) {
    unsigned long tmp;
    if (!(in >> tmp) || tmp > 0xFFFF) throw Error("bad value for " + key + ": " + value);
    v = static_cast<T>(tmp);
  } else {
    if (!(in >> v)) throw Error("bad value for " + key + ": " + value);
  }
  in >> std::ws;
  if (!in.eof()) throw Error("bad value for " + key + ": " + value);
  return v;
}

}  // namespace

CorpusConfig CorpusConfig::parse(std::string_view text, const Palette& palette) {
  CorpusConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineNo) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "frames") cfg.frames = parse_number<std::uint32_t>(key, value);
    else if (key == "stride") cfg.stride = parse_number<std::uint32_t>(key, value);
    else if (key == "sessions") cfg.sessions = parse_number<std::uint32_t>(key, value);
    else if (key == "width") cfg.width = parse_number<std::uint16_t>(key, value);
    else if (key == "height") cfg.height = parse_number<std::uint16_t>(key, value);
    else if (key == "objects") cfg.world.objectCount = parse_number<std::uint32_t>(key, value);
    else if (key == "resources") cfg.world.resourceCount = parse_number<std::uint32_t>(key, value);
    else if (key == "ambiguity") cfg.world.ambiguity = parse_number<double>(key, value);
    else if (key == "world_length") cfg.world.worldLength = parse_number<double>(key, value);
    else if (key == "sweeps") cfg.path.sweeps = parse_number<double>(key, value);
    else if (key == "zoom_min") cfg.path.zoomMin = parse_number<double>(key, value);
    else if (key == "zoom_max") cfg.path.zoomMax = parse_number<double>(key, value);
    else if (key == "zoom_cycles") cfg.path.zoomCycles = parse_number<double>(key, value);
    else if (key == "classes") {
      cfg.world.classPalette.clear();
      std::istringstream names(value);
      std::string name;
      while (std::getline(names, name, ',')) {
        const auto id = palette.find(trim(name));
        if (!id || *id == kUnlabeled) throw Error("unknown class in config: " + trim(name));
        cfg.world.classPalette.push_back(*id);
      }
    } else {
      throw Error("unknown config key: " + key);
    }
  }
  if (cfg.width == 0 || cfg.height == 0) throw Error("width and height must be positive");
  if (cfg.stride == 0) throw Error("stride must be at least 1");
  if (cfg.sessions == 0) throw Error("sessions must be at least 1");
  cfg.path.steps = cfg.frames * cfg.stride;
  return cfg;
}

std::string CorpusConfig::to_text(const Palette& palette) const {
  std::ostringstream out;
  out.precision(17);
  out << "seed = " << seed << "\nframes = " << frames << "\nstride = " << stride << "\nsessions = " << sessions
      << "\nwidth = " << width << "\nheight = " << height << "\nobjects = " << world.objectCount
      << "\nresources = " << world.resourceCount << "\nambiguity = " << world.ambiguity
      << "\nworld_length = " << world.worldLength << "\nsweeps = " << path.sweeps << "\nzoom_min = " << path.zoomMin
      << "\nzoom_max = " << path.zoomMax << "\nzoom_cycles = " << path.zoomCycles << "\nclasses = ";
  for (std::size_t i = 0; i < world.classPalette.size(); ++i)
    out << (i ? "," : "") << palette.at(world.classPalette[i]).name;
  out << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

Bytes encode_oracle(const OracleSidecar& sc) {
  ByteWriter w;
  w.raw(kOracleMagic);
  w.u16(kOracleVersion);
  const World& world = sc.world;
  w.u32(world.config.objectCount);
  w.u32(world.config.resourceCount);
  w.u8(static_cast<std::uint8_t>(world.config.classPalette.size()));
  for (ClassId c : world.config.classPalette) w.u8(c);
  w.f64(world.config.ambiguity);
  w.f64(world.config.worldLength);
  w.u64(world.seed);
  w.u32(world.objectResourceCount);
  const EngineResources& e = world.engine;
  for (std::uint32_t v : {e.quadMesh, e.sceneTexture, e.distortionShader, e.hudMesh, e.hudTexture, e.hudShader,
                          e.shadowShader})
    w.u32(v);
  w.u32(static_cast<std::uint32_t>(world.resources.size()));
  for (const WorldResource& r : world.resources) {
    w.u8(static_cast<std::uint8_t>(r.kind));
    w.u32(static_cast<std::uint32_t>(r.content.size()));
    w.raw(r.content);
  }
  w.u32(static_cast<std::uint32_t>(world.objects.size()));
  for (const WorldObject& o : world.objects) {
    w.u8(o.cls);
    w.f64(o.x);
    w.f64(o.y);
    w.f64(o.width);
    w.f64(o.height);
    w.f32(o.depth);
    w.u32(static_cast<std::uint32_t>(o.parts.size()));
    for (const WorldPart& p : o.parts) {
      w.u32(p.mesh);
      w.u32(p.texture);
      w.u32(p.shader);
      w.f32(p.top);
      w.f32(p.bottom);
      w.f32(p.left);
      w.f32(p.right);
      w.u8(p.albedo.r);
      w.u8(p.albedo.g);
      w.u8(p.albedo.b);
    }
  }
  w.u32(static_cast<std::uint32_t>(sc.frames.size()));
  for (const OracleFrame& f : sc.frames) {
    w.u32(f.frameIndex);
    w.u16(f.width);
    w.u16(f.height);
    w.raw(f.classImage);
    w.u32(static_cast<std::uint32_t>(f.passTags.size()));
    for (PassRole r : f.passTags) w.u8(static_cast<std::uint8_t>(r));
  }
  return std::move(w).take();
}

OracleSidecar decode_oracle(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(kOracleMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kOracleMagic.begin())) throw BadMagic("not a GBORC1 oracle sidecar");
  const std::uint16_t version = r.u16();
  if (version != kOracleVersion) throw VersionMismatch(version, kOracleVersion);

  OracleSidecar sc;
  World& world = sc.world;
  world.config.objectCount = r.u32();
  world.config.resourceCount = r.u32();
  world.config.classPalette.resize(r.u8());
  for (ClassId& c : world.config.classPalette) c = r.u8();
  world.config.ambiguity = r.f64();
  world.config.worldLength = r.f64();
  world.seed = r.u64();
  world.objectResourceCount = r.u32();
  EngineResources& e = world.engine;
  for (std::uint32_t* v : {&e.quadMesh, &e.sceneTexture, &e.distortionShader, &e.hudMesh, &e.hudTexture, &e.hudShader,
                           &e.shadowShader})
    *v = r.u32();
  const std::uint32_t nRes = r.u32();
  if (nRes > r.remaining() / 5) throw TruncatedStream(r.offset());
  for (std::uint32_t i = 0; i < nRes; ++i) {
    const std::size_t at = r.offset();
    const std::uint8_t kind = r.u8();
    if (!is_valid_kind(kind)) throw MalformedStream(at, "bad resource kind");
    const std::uint32_t len = r.u32();
    auto body = r.raw(len);
    world.resources.push_back({static_cast<ResourceKind>(kind), Bytes(body.begin(), body.end())});
  }
  const std::uint32_t nObj = r.u32();
  if (nObj > r.remaining() / 41) throw TruncatedStream(r.offset());
  for (std::uint32_t i = 0; i < nObj; ++i) {
    WorldObject o;
    o.cls = r.u8();
    o.x = r.f64();
    o.y = r.f64();
    o.width = r.f64();
    o.height = r.f64();
    o.depth = r.f32();
    const std::uint32_t nParts = r.u32();
    if (nParts > r.remaining() / 31) throw TruncatedStream(r.offset());
    for (std::uint32_t k = 0; k < nParts; ++k) {
      WorldPart p;
      p.mesh = r.u32();
      p.texture = r.u32();
      p.shader = r.u32();
      p.top = r.f32();
      p.bottom = r.f32();
      p.left = r.f32();
      p.right = r.f32();
      p.albedo.r = r.u8();
      p.albedo.g = r.u8();
      p.albedo.b = r.u8();
      for (std::uint32_t ref : {p.mesh, p.texture, p.shader})
        if (ref >= world.resources.size()) throw MalformedStream(r.offset(), "part references unknown resource");
      o.parts.push_back(p);
    }
    world.objects.push_back(std::move(o));
  }
  const std::uint32_t nFrames = r.u32();
  if (nFrames > r.remaining() / 12) throw TruncatedStream(r.offset());
  for (std::uint32_t i = 0; i < nFrames; ++i) {
    OracleFrame f;
    f.frameIndex = r.u32();
    f.width = r.u16();
    f.height = r.u16();
    auto img = r.raw(std::size_t(f.width) * f.height);
    f.classImage.assign(img.begin(), img.end());
    const std::uint32_t nTags = r.u32();
    auto tags = r.raw(nTags);
    for (std::uint8_t t : tags) {
      if (t > static_cast<std::uint8_t>(PassRole::Other)) throw MalformedStream(r.offset(), "bad pass tag");
      f.passTags.push_back(static_cast<PassRole>(t));
    }
    sc.frames.push_back(std::move(f));
  }
  if (!r.done()) throw MalformedStream(r.offset(), "trailing bytes in oracle sidecar");
  return sc;
}

}  // namespace gba
