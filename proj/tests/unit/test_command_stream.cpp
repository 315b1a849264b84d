#include "doctest.h"
#include "fixtures.hpp"
#include "gba/command_stream.hpp"
#include "gba/errors.hpp"

using namespace gba;

namespace {

Triangle tri(double x0, double y0, double x1, double y1, double x2, double y2, float depth = 0.5f) {
  return {{Vertex{to_fixed(x0), to_fixed(y0), depth}, Vertex{to_fixed(x1), to_fixed(y1), depth},
           Vertex{to_fixed(x2), to_fixed(y2), depth}},
          Rgb8{10, 20, 30}};
}

CommandStream sample_stream() {
  CommandStream s;
  s.frameIndex = 3;
  s.width = 8;
  s.height = 4;
  s.events = {ResourceEvent::create(1, ResourceKind::Mesh, {1, 2}), ResourceEvent::create(2, ResourceKind::Texture, {3}),
              ResourceEvent::create(3, ResourceKind::Shader, {4}), ResourceEvent::modify(2, {5, 6}),
              ResourceEvent::destroy(3), ResourceEvent::create(3, ResourceKind::Shader, {7})};
  s.draws = {DrawCall{1, 2, 3, TargetSet{RenderTarget::Albedo, RenderTarget::Depth}, false, {tri(0, 0, 8, 0, 0, 4)}},
             DrawCall{1, 2, 3, TargetSet{RenderTarget::Backbuffer}, true, {tri(0, 0, 8, 0, 8, 4, 0.0f)}}};
  return s;
}

}  // namespace

TEST_SUITE("command_stream") {

TEST_CASE("header-only stream parses to zero draws") {
  CommandStream s;
  s.width = 4;
  s.height = 4;
  const CommandStream back = parse_stream(serialize_stream(s));
  CHECK(back.draws.empty());
  CHECK(back.events.empty());
  CHECK(back == s);
}

TEST_CASE("serialize then parse is the identity") {
  const CommandStream s = sample_stream();
  CHECK(parse_stream(serialize_stream(s)) == s);
}

TEST_CASE("simulator sessions round trip exactly") {
  const auto& sim = gba::testing::small_corpus();
  const Bytes bytes = serialize_session(sim.session.streams);
  const auto back = parse_session(bytes);
  REQUIRE(back.size() == sim.session.streams.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == sim.session.streams[i]);
  CHECK(serialize_session(back) == bytes);
}

TEST_CASE("every truncation raises TruncatedStream at the cut") {
  const Bytes full = serialize_stream(sample_stream());
  for (std::size_t cut = 0; cut < full.size(); ++cut) {
    const std::span<const std::uint8_t> prefix(full.data(), cut);
    CAPTURE(cut);
    try {
      parse_stream(prefix);
      FAIL("parsed a truncated stream");
    } catch (const TruncatedStream& e) {
      CHECK(e.offset() <= cut);
      CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
  }
}

TEST_CASE("bad magic, version and trailing bytes") {
  Bytes bytes = serialize_stream(sample_stream());
  Bytes badMagic = bytes;
  badMagic[0] = 'X';
  CHECK_THROWS_AS(parse_stream(badMagic), BadMagic);

  Bytes badVersion = bytes;
  badVersion[6] = 2;
  CHECK_THROWS_AS(parse_stream(badVersion), VersionMismatch);

  Bytes trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_stream(trailing), MalformedStream);
}

TEST_CASE("semantic violations are MalformedStream") {
  SUBCASE("depth outside [0,1]") {
    CommandStream s = sample_stream();
    s.draws[0].triangles[0].v[1].depth = 1.5f;
    CHECK_THROWS_AS(parse_stream(serialize_stream(s)), MalformedStream);
  }
  SUBCASE("empty target set") {
    CommandStream s = sample_stream();
    s.draws[0].targets = TargetSet{};
    CHECK_THROWS_AS(parse_stream(serialize_stream(s)), MalformedStream);
  }
  SUBCASE("empty triangle list") {
    CommandStream s = sample_stream();
    s.draws[0].triangles.clear();
    CHECK_THROWS_AS(parse_stream(serialize_stream(s)), MalformedStream);
  }
  SUBCASE("coordinate out of range") {
    CommandStream s = sample_stream();
    s.draws[0].triangles[0].v[0].x = kMaxCoordinate + 1;
    CHECK_THROWS_AS(parse_stream(serialize_stream(s)), MalformedStream);
  }
}

TEST_CASE("a session of several frames keeps their order") {
  std::vector<CommandStream> frames{sample_stream(), sample_stream()};
  frames[1].frameIndex = 4;
  frames[1].events.clear();
  const auto back = parse_session(serialize_session(frames));
  REQUIRE(back.size() == 2);
  CHECK(back[1].frameIndex == 4);
  CHECK_THROWS(parse_stream(serialize_session(frames)));
}

}  // TEST_SUITE
