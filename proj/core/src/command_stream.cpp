#include "gba/command_stream.hpp"

#include <algorithm>
#include <cmath>

namespace gba {

std::vector<RenderTarget> TargetSet::targets() const {
  std::vector<RenderTarget> out;
  for (std::uint8_t i = 0; i < kRenderTargetCount; ++i)
    if (bits_ & (1u << i)) out.push_back(static_cast<RenderTarget>(i));
  return out;
}

namespace {

void write_event(ByteWriter& w, const ResourceEvent& e) {
  w.u8(static_cast<std::uint8_t>(e.type));
  w.u32(e.id);
  if (e.type == ResourceEvent::Type::Create) w.u8(static_cast<std::uint8_t>(e.kind));
  if (e.type != ResourceEvent::Type::Delete) {
    w.u32(static_cast<std::uint32_t>(e.content.size()));
    w.raw(e.content);
  }
}

void write_draw(ByteWriter& w, const DrawCall& d) {
  w.u32(d.mesh);
  w.u32(d.texture);
  w.u32(d.shader);
  w.u8(d.samplesScene ? 1 : 0);
  const auto targets = d.targets.targets();
  w.u8(static_cast<std::uint8_t>(targets.size()));
  for (RenderTarget t : targets) w.u8(static_cast<std::uint8_t>(t));
  w.u32(static_cast<std::uint32_t>(d.triangles.size()));
  for (const Triangle& tri : d.triangles) {
    for (const Vertex& v : tri.v) {
      w.i32(v.x);
      w.i32(v.y);
      w.f32(v.depth);
    }
    w.u8(tri.albedo.r);
    w.u8(tri.albedo.g);
    w.u8(tri.albedo.b);
  }
}

void write_frame(ByteWriter& w, const CommandStream& s) {
  w.u32(s.frameIndex);
  w.u16(s.width);
  w.u16(s.height);
  w.u32(static_cast<std::uint32_t>(s.events.size()));
  for (const ResourceEvent& e : s.events) write_event(w, e);
  w.u32(static_cast<std::uint32_t>(s.draws.size()));
  for (const DrawCall& d : s.draws) write_draw(w, d);
}

// Guards element counts against the bytes actually left, so a corrupt count
// fails as truncation instead of a huge allocation.
std::size_t checked_count(ByteReader& r, std::size_t minElementBytes) {
  const std::size_t at = r.offset();
  const std::uint32_t n = r.u32();
  if (minElementBytes > 0 && n > r.remaining() / minElementBytes) throw TruncatedStream(at);
  return n;
}

ResourceEvent read_event(ByteReader& r) {
  const std::size_t at = r.offset();
  const std::uint8_t type = r.u8();
  ResourceEvent e;
  e.id = r.u32();
  switch (type) {
    case 1: {
      e.type = ResourceEvent::Type::Create;
      const std::size_t kindAt = r.offset();
      const std::uint8_t kind = r.u8();
      if (!is_valid_kind(kind)) throw MalformedStream(kindAt, "bad resource kind");
      e.kind = static_cast<ResourceKind>(kind);
      break;
    }
    case 2: e.type = ResourceEvent::Type::Modify; break;
    case 3: e.type = ResourceEvent::Type::Delete; return e;
    default: throw MalformedStream(at, "bad event type");
  }
  const std::size_t n = checked_count(r, 1);
  auto body = r.raw(n);
  e.content.assign(body.begin(), body.end());
  return e;
}

Vertex read_vertex(ByteReader& r) {
  const std::size_t at = r.offset();
  Vertex v;
  v.x = r.i32();
  v.y = r.i32();
  v.depth = r.f32();
  if (std::abs(static_cast<std::int64_t>(v.x)) > kMaxCoordinate ||
      std::abs(static_cast<std::int64_t>(v.y)) > kMaxCoordinate)
    throw MalformedStream(at, "vertex coordinate out of range");
  if (!(v.depth >= 0.0f && v.depth <= 1.0f)) throw MalformedStream(at, "depth outside [0,1]");
  return v;
}

DrawCall read_draw(ByteReader& r) {
  DrawCall d;
  d.mesh = r.u32();
  d.texture = r.u32();
  d.shader = r.u32();
  const std::size_t flagsAt = r.offset();
  const std::uint8_t flags = r.u8();
  if (flags > 1) throw MalformedStream(flagsAt, "bad draw flags");
  d.samplesScene = flags == 1;
  const std::uint8_t targetCount = r.u8();
  for (std::uint8_t i = 0; i < targetCount; ++i) {
    const std::size_t at = r.offset();
    const std::uint8_t t = r.u8();
    if (t >= kRenderTargetCount) throw MalformedStream(at, "bad render target");
    d.targets.insert(static_cast<RenderTarget>(t));
  }
  if (d.targets.empty()) throw MalformedStream(flagsAt, "draw binds no render target");
  const std::size_t triAt = r.offset();
  const std::size_t triCount = checked_count(r, 39);
  if (triCount == 0) throw MalformedStream(triAt, "draw has no triangles");
  d.triangles.resize(triCount);
  for (Triangle& tri : d.triangles) {
    for (Vertex& v : tri.v) v = read_vertex(r);
    tri.albedo.r = r.u8();
    tri.albedo.g = r.u8();
    tri.albedo.b = r.u8();
  }
  return d;
}

CommandStream read_frame(ByteReader& r) {
  CommandStream s;
  s.frameIndex = r.u32();
  s.width = r.u16();
  s.height = r.u16();
  const std::size_t eventCount = checked_count(r, 5);
  s.events.reserve(eventCount);
  for (std::size_t i = 0; i < eventCount; ++i) s.events.push_back(read_event(r));
  const std::size_t drawCount = checked_count(r, 18);
  s.draws.reserve(drawCount);
  for (std::size_t i = 0; i < drawCount; ++i) s.draws.push_back(read_draw(r));
  return s;
}

std::size_t read_header(ByteReader& r) {
  if (r.remaining() < kCaptureMagic.size()) {
    // A short file that is a prefix of the magic is a truncation, anything
    // else is simply not a capture.
    auto head = r.raw(r.remaining());
    if (std::equal(head.begin(), head.end(), kCaptureMagic.begin())) throw TruncatedStream(head.size());
    throw BadMagic("not a GBCAP1 capture");
  }
  auto magic = r.raw(kCaptureMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kCaptureMagic.begin())) throw BadMagic("not a GBCAP1 capture");
  const std::uint16_t version = r.u16();
  if (version != kCaptureVersion) throw VersionMismatch(version, kCaptureVersion);
  return checked_count(r, 16);
}

}  // namespace

Bytes serialize_session(std::span<const CommandStream> frames) {
  ByteWriter w;
  w.raw(kCaptureMagic);
  w.u16(kCaptureVersion);
  w.u32(static_cast<std::uint32_t>(frames.size()));
  for (const CommandStream& s : frames) write_frame(w, s);
  return std::move(w).take();
}

std::vector<CommandStream> parse_session(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::size_t count = read_header(r);
  std::vector<CommandStream> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(read_frame(r));
  if (!r.done()) throw MalformedStream(r.offset(), "trailing bytes after last frame");
  return out;
}

Bytes serialize_stream(const CommandStream& stream) { return serialize_session(std::span(&stream, 1)); }

CommandStream parse_stream(std::span<const std::uint8_t> bytes) {
  auto frames = parse_session(bytes);
  if (frames.size() != 1)
    throw MalformedStream(8, "expected a single-frame container, found " + std::to_string(frames.size()) + " frames");
  return std::move(frames.front());
}

}  // namespace gba
