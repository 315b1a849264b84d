#include "gba/capture.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <string>

#include "gba/errors.hpp"
#include "gba/raster.hpp"
#include "parallel.hpp"

namespace gba {

std::string_view role_name(PassRole role) noexcept {
  switch (role) {
    case PassRole::MainGeometry: return "main";
    case PassRole::PostProcess: return "postprocess";
    case PassRole::Hud: return "hud";
    case PassRole::Other: return "other";
  }
  return "?";
}

bool PassPartition::has_main() const {
  for (const PassGroup& g : groups)
    if (g.role == PassRole::MainGeometry) return true;
  return false;
}

std::vector<PassRole> PassPartition::draw_roles(std::size_t drawCount) const {
  std::vector<PassRole> roles(drawCount, PassRole::Other);
  for (const PassGroup& g : groups)
    for (std::uint32_t i : g.drawIndices) roles.at(i) = g.role;
  return roles;
}

PassPartition identify_passes(const CommandStream& stream) {
  PassPartition partition;
  std::vector<bool> samples;
  for (std::uint32_t i = 0; i < stream.draws.size(); ++i) {
    const DrawCall& d = stream.draws[i];
    if (partition.groups.empty() || partition.groups.back().targets != d.targets) {
      partition.groups.push_back({d.targets, {}, PassRole::Other});
      samples.push_back(false);
    }
    partition.groups.back().drawIndices.push_back(i);
    if (d.samplesScene) samples.back() = true;
  }

  bool seenMain = false;
  for (std::size_t g = 0; g < partition.groups.size(); ++g) {
    PassGroup& group = partition.groups[g];
    if (group.targets.contains_all(kGBufferTargets)) {
      group.role = PassRole::MainGeometry;
      seenMain = true;
    } else if (seenMain && group.targets.contains(RenderTarget::Backbuffer)) {
      group.role = samples[g] ? PassRole::PostProcess : PassRole::Hud;
    }
  }
  return partition;
}

ColorImage::ColorImage(std::uint16_t w, std::uint16_t h, Rgb8 fill)
    : width(w), height(h), rgb(std::size_t{w} * h * 3) {
  for (std::size_t p = 0; p < pixel_count(); ++p) set(p, fill);
}

IdImage::IdImage(std::uint16_t w, std::uint16_t h)
    : width(w),
      height(h),
      mesh(std::size_t{w} * h, kSentinelId),
      texture(std::size_t{w} * h, kSentinelId),
      shader(std::size_t{w} * h, kSentinelId) {}

EncodedIds encode_ids(IdTriple ids) {
  EncodedIds out{};
  const std::uint32_t words[3] = {ids.mesh, ids.texture, ids.shader};
  for (int w = 0; w < 3; ++w)
    for (int b = 0; b < 4; ++b) out[4 * w + b] = static_cast<std::uint8_t>(words[w] >> (24 - 8 * b));
  return out;
}

IdTriple decode_ids(std::span<const std::uint8_t, 12> channels) {
  std::uint32_t words[3] = {};
  for (int w = 0; w < 3; ++w)
    for (int b = 0; b < 4; ++b) words[w] = words[w] << 8 | channels[4 * w + b];
  return {words[0], words[1], words[2]};
}

namespace {

// Runs the depth-tested main pass. `shade(drawIndex, triangle, pixel)` is
// called for every fragment that passes. Equal depth lets the later
// fragment win.
template <typename Shade>
void run_main_pass(const CommandStream& stream, const PassPartition& partition, Shade&& shade) {
  if (!partition.has_main()) throw NoMainPass(stream.frameIndex);
  const int w = stream.width;
  const int h = stream.height;
  std::vector<double> depth(std::size_t(w) * h, std::numeric_limits<double>::infinity());
  for (const PassGroup& group : partition.groups) {
    if (group.role != PassRole::MainGeometry) continue;
    for (std::uint32_t di : group.drawIndices) {
      const DrawCall& draw = stream.draws[di];
      for (const Triangle& tri : draw.triangles) {
        rasterize_triangle(tri, w, h, [&](int x, int y, double z) {
          const std::size_t p = std::size_t(y) * w + x;
          if (z <= depth[p]) {
            depth[p] = z;
            shade(draw, tri, p);
          }
        });
      }
    }
  }
}

}  // namespace

ColorImage replay_color(const CommandStream& stream, const PassPartition& partition) {
  ColorImage image(stream.width, stream.height, kClearColor);
  run_main_pass(stream, partition, [&](const DrawCall&, const Triangle& tri, std::size_t p) {
    image.set(p, tri.albedo);
  });
  return image;
}

IdImage replay_ids(const CommandStream& stream, const PassPartition& partition) {
  const std::size_t n = std::size_t(stream.width) * stream.height;
  // Four RGB8 render targets; cleared to the sentinel encoding.
  std::array<std::vector<std::uint8_t>, 4> targets;
  const EncodedIds clear = encode_ids(kSentinelTriple);
  for (int t = 0; t < 4; ++t) {
    targets[t].resize(3 * n);
    for (std::size_t p = 0; p < n; ++p)
      for (int c = 0; c < 3; ++c) targets[t][3 * p + c] = clear[3 * t + c];
  }
  run_main_pass(stream, partition, [&](const DrawCall& draw, const Triangle&, std::size_t p) {
    const EncodedIds enc = encode_ids({draw.mesh, draw.texture, draw.shader});
    for (int t = 0; t < 4; ++t)
      for (int c = 0; c < 3; ++c) targets[t][3 * p + c] = enc[3 * t + c];
  });

  IdImage image(stream.width, stream.height);
  EncodedIds px{};
  for (std::size_t p = 0; p < n; ++p) {
    for (int t = 0; t < 4; ++t)
      for (int c = 0; c < 3; ++c) px[3 * t + c] = targets[t][3 * p + c];
    image.set(p, decode_ids(px));
  }
  return image;
}

namespace {

void check_main_ids_live(const CommandStream& stream, const PassPartition& partition,
                         const SessionResourceTable& table) {
  for (const PassGroup& g : partition.groups) {
    if (g.role != PassRole::MainGeometry) continue;
    for (std::uint32_t di : g.drawIndices) {
      const DrawCall& d = stream.draws[di];
      for (VolatileId id : {d.mesh, d.texture, d.shader})
        if (!table.find(id)) throw UnknownVolatileId(id);
    }
  }
}

FrameCapture replay_frame(const CommandStream& stream, SessionResourceTable table) {
  const PassPartition partition = identify_passes(stream);
  if (!partition.has_main()) throw NoMainPass(stream.frameIndex);
  check_main_ids_live(stream, partition, table);
  FrameCapture cap;
  cap.frameIndex = stream.frameIndex;
  cap.color = replay_color(stream, partition);
  cap.ids = replay_ids(stream, partition);
  cap.table = std::move(table);
  return cap;
}

}  // namespace

FrameCapture make_frame_capture(const CommandStream& stream, const SessionResourceTable& prior) {
  return replay_frame(stream, build_session_table(stream.events, prior));
}

std::vector<FrameCapture> capture_session(std::span<const CommandStream> frames, unsigned jobs) {
  std::vector<SessionResourceTable> tables;
  tables.reserve(frames.size());
  SessionResourceTable running;
  for (const CommandStream& s : frames) {
    running = build_session_table(s.events, std::move(running));
    tables.push_back(running);
  }

  std::vector<FrameCapture> out(frames.size());
  // On failure the lowest failing frame's error is rethrown, so the report
  // does not depend on the schedule.
  detail::parallel_for(frames.size(), jobs, [&](std::size_t i) { out[i] = replay_frame(frames[i], std::move(tables[i])); });
  return out;
}

// ---------------------------------------------------------------------------

Bytes encode_ppm(const ColorImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

namespace {

// Reads one whitespace-delimited ASCII integer from a PNM header.
unsigned pnm_field(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw CorruptCapture("bad PNM header");
  unsigned v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos++] - '0');
    if (v > 1'000'000) throw CorruptCapture("bad PNM header");
  }
  return v;
}

}  // namespace

ColorImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw CorruptCapture("not a P6 image");
  std::size_t pos = 2;
  const unsigned w = pnm_field(bytes, pos);
  const unsigned h = pnm_field(bytes, pos);
  const unsigned maxval = pnm_field(bytes, pos);
  if (maxval != 255 || w > 0xFFFF || h > 0xFFFF) throw CorruptCapture("unsupported P6 image");
  ++pos;  // single whitespace before the raster
  const std::size_t need = std::size_t{w} * h * 3;
  if (bytes.size() < pos || bytes.size() - pos != need) throw CorruptCapture("P6 raster size mismatch");
  ColorImage img;
  img.width = static_cast<std::uint16_t>(w);
  img.height = static_cast<std::uint16_t>(h);
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

Bytes encode_id_planes(const IdImage& image) {
  ByteWriter w;
  w.raw(kIdPlaneMagic);
  w.u32(image.width);
  w.u32(image.height);
  for (const auto* plane : {&image.mesh, &image.texture, &image.shader})
    for (std::uint32_t v : *plane) w.u32(v);
  return std::move(w).take();
}

IdImage decode_id_planes(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto magic = r.raw(kIdPlaneMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kIdPlaneMagic.begin())) throw CorruptCapture("bad id plane magic");
    const std::uint32_t w = r.u32();
    const std::uint32_t h = r.u32();
    if (w > 0xFFFF || h > 0xFFFF) throw CorruptCapture("id plane dimensions out of range");
    if (r.remaining() != std::size_t{w} * h * 12) throw CorruptCapture("id plane size mismatch");
    IdImage img(static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h));
    for (auto* plane : {&img.mesh, &img.texture, &img.shader})
      for (std::uint32_t& v : *plane) v = r.u32();
    return img;
  } catch (const TruncatedStream& e) {
    throw CorruptCapture(std::string("id planes: ") + e.what());
  }
}

Bytes encode_table(const SessionResourceTable& table) {
  ByteWriter w;
  w.raw(kTableMagic);
  w.u64(table.generation());
  w.u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& [id, entry] : table.entries()) {
    w.u32(id);
    w.u8(static_cast<std::uint8_t>(entry.kind));
    w.raw(entry.key.bytes());
  }
  return std::move(w).take();
}

SessionResourceTable decode_table(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto magic = r.raw(kTableMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kTableMagic.begin())) throw CorruptCapture("bad table magic");
    const std::uint64_t generation = r.u64();
    const std::uint32_t count = r.u32();
    if (r.remaining() != std::size_t{count} * 21) throw CorruptCapture("table size mismatch");
    std::map<VolatileId, TableEntry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
      const VolatileId id = r.u32();
      const std::uint8_t kind = r.u8();
      if (!is_valid_kind(kind)) throw CorruptCapture("bad resource kind in table");
      auto key = r.raw(16);
      entries[id] = {static_cast<ResourceKind>(kind), PersistentKey::from_bytes(key.first<16>())};
    }
    if (entries.size() != count) throw CorruptCapture("duplicate volatile id in table");
    return SessionResourceTable::restore(std::move(entries), generation);
  } catch (const TruncatedStream& e) {
    throw CorruptCapture(std::string("table: ") + e.what());
  }
}

std::filesystem::path capture_stem(const std::filesystem::path& dir, std::uint32_t frameIndex) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06u", frameIndex);
  return dir / name;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

void write_capture(const std::filesystem::path& dir, const FrameCapture& capture) {
  std::filesystem::create_directories(dir);
  const auto stem = capture_stem(dir, capture.frameIndex).string();
  write_file(stem + ".ppm", encode_ppm(capture.color));
  write_file(stem + ".idp", encode_id_planes(capture.ids));
  write_file(stem + ".tbl", encode_table(capture.table));
}

FrameCapture read_capture(const std::filesystem::path& dir, std::uint32_t frameIndex) {
  const auto stem = capture_stem(dir, frameIndex).string();
  auto load = [](const std::string& path) {
    try {
      return read_file(path);
    } catch (const Error&) {
      throw CorruptCapture("missing capture file " + path);
    }
  };
  FrameCapture cap;
  cap.frameIndex = frameIndex;
  cap.color = decode_ppm(load(stem + ".ppm"));
  cap.ids = decode_id_planes(load(stem + ".idp"));
  cap.table = decode_table(load(stem + ".tbl"));
  if (cap.color.width != cap.ids.width || cap.color.height != cap.ids.height)
    throw CorruptCapture("color and id image sizes differ for frame " + std::to_string(frameIndex));
  return cap;
}

}  // namespace gba
