#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "gba/service.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace gba;
using nlohmann::json;

namespace {

// A processed 40-frame run shared by every test; each test gets its own log.
const std::filesystem::path& processed_run() {
  static const std::filesystem::path dir = [] {
    const auto d = gba::testing::temp_dir("service_run");
    CorpusConfig c;
    c.frames = 40;
    c.stride = 300;
    c.width = 160;
    c.height = 90;
    const Palette p = Palette::default_palette();
    run_sim({d}, c, p);
    run_process({d}, 0);
    return d;
  }();
  return dir;
}

ServiceConfig config_for(const std::string& name) {
  return {processed_run(), {}, gba::testing::temp_dir("service_" + name) / "clicks.log"};
}

const PatchTruth& truth() {
  static const PatchTruth t = [] {
    const RunLayout run{processed_run()};
    return patch_truth(load_corpus(run), load_oracle(run));
  }();
  return t;
}

json get(AnnotationService& s, const std::string& path, int status = 200) {
  const HttpResponse r = s.handle("GET", path);
  CHECK(r.status == status);
  return json::parse(r.body);
}

json post(AnnotationService& s, const std::string& path, const json& body, int status = 200) {
  const HttpResponse r = s.handle("POST", path, body.is_null() ? "" : body.dump());
  CHECK(r.status == status);
  return json::parse(r.body);
}

// Labels the unlabeled patches of `frame` with their oracle class.
// Returns the responses in order.
std::vector<json> label_frame(AnnotationService& s, std::uint32_t frame) {
  const json patches = get(s, "/api/frames/" + std::to_string(frame) + "/patches");
  const std::size_t pos = *s.corpus().position(frame);
  std::vector<json> out;
  for (const json& p : patches["patches"]) {
    if (p["provenance"] != "unlabeled") continue;
    const MtsKey key = *MtsKey::from_hex(p["mts"].get<std::string>());
    const FramePatches& fp = s.corpus().frames[pos];
    const auto idx = static_cast<std::size_t>(fp.find(key) - fp.patches.data());
    out.push_back(post(s, "/api/labels", {{"mts", p["mts"]}, {"classId", truth()[pos][idx]}, {"frame", frame}}));
  }
  return out;
}

}  // namespace

TEST_SUITE("annotation_service") {

TEST_CASE("read endpoints") {
  AnnotationService s(config_for("read"));
  const json classes = get(s, "/api/classes");
  CHECK(classes.size() == 12);

  const json next = get(s, "/api/frames/next");
  CHECK(next["frame"] == 0);
  CHECK(next["done"] == false);
  CHECK(next["width"] == 160);
  CHECK(next["coveredFraction"] == 0.0);

  const json patches = get(s, "/api/frames/0/patches");
  CHECK(patches["patches"].size() == s.corpus().frames[0].patches.size());
  std::uint64_t area = 0;
  for (const json& p : patches["patches"]) area += p["area"].get<std::uint64_t>();
  CHECK(area == s.corpus().frames[0].annotatable_pixels());

  const HttpResponse img = s.handle("GET", "/api/frames/0/image");
  CHECK(img.status == 200);
  CHECK(img.contentType == "image/png");
  CHECK(img.body.substr(0, 8) == std::string("\x89PNG\r\n\x1a\n", 8));

  const json ex = get(s, "/api/export/0");
  CHECK(ex["ids"].size() == 160u * 90u);
  const json stats = get(s, "/api/stats");
  CHECK(stats["clickCount"] == 0);
}

TEST_CASE("errors") {
  AnnotationService s(config_for("errors"));
  CHECK(get(s, "/api/frames/9999/patches", 404)["error"] == "UnknownFrame");
  CHECK(get(s, "/api/frames/9999/image", 404)["error"] == "UnknownFrame");
  CHECK(get(s, "/api/export/9999", 404)["error"] == "UnknownFrame");
  CHECK(get(s, "/api/nothing", 404)["error"] == "NotFound");
  CHECK(post(s, "/api/labels", {{"mts", std::string(96, '0')}, {"classId", 4}}, 404)["error"] == "UnknownMts");
  const std::string key = s.corpus().frames[0].patches[0].key.hex();
  CHECK(post(s, "/api/labels", {{"mts", key}, {"classId", 99}}, 400)["error"] == "UnknownClass");
  CHECK(post(s, "/api/labels", {{"mts", key}, {"classId", 0}}, 400)["error"] == "UnknownClass");
  CHECK(post(s, "/api/labels", {{"mts", "abc"}, {"classId", 4}}, 400)["error"] == "BadRequest");
  CHECK(post(s, "/api/labels", {{"classId", 4}}, 400)["error"] == "BadRequest");
  CHECK(s.handle("POST", "/api/labels", "{not json").status == 400);
  CHECK(post(s, "/api/undo", nullptr, 409)["error"] == "NothingToUndo");
  CHECK(s.click_count() == 0);
  CHECK_THROWS_AS(AnnotationService({gba::testing::temp_dir("service_missing"), {}, {}}), CorpusMissing);
}

TEST_CASE("labeling session") {
  AnnotationService s(config_for("session"));
  std::size_t newRules = 0;
  std::size_t frames = 0;
  for (;;) {
    const json next = get(s, "/api/frames/next");
    if (next["done"] == true) break;
    const auto frame = next["frame"].get<std::uint32_t>();
    CHECK(next["coveredFraction"].get<double>() < 1.0 - 0.03 + 1e-12);
    const auto responses = label_frame(s, frame);
    REQUIRE_FALSE(responses.empty());
    for (const json& r : responses) newRules += r["newRules"].get<std::size_t>();
    // Read your writes: the last click on the frame completes it.
    CHECK(responses.back()["frameComplete"] == true);
    CHECK(responses.back()["coveredFraction"] == 1.0);
    CHECK(get(s, "/api/frames/" + std::to_string(frame) + "/patches")["coveredFraction"] == 1.0);
    ++frames;
  }
  CHECK(newRules >= 1);
  CHECK(frames < s.corpus().frames.size());
  const json stats = get(s, "/api/stats");
  CHECK(stats["clickCount"] == s.click_count());
  CHECK(stats["framesAboveThreshold"] == 0);
  CHECK(stats["annotationDensity"].get<double>() > 0.99);
}

TEST_CASE("undo and restart") {
  const ServiceConfig cfg = config_for("restart");
  const FramePatches& f0 = [&]() -> const FramePatches& {
    static AnnotationService probe(config_for("probe"));
    return probe.corpus().frames[0];
  }();
  const std::string a = f0.patches[0].key.hex(), b = f0.patches[1].key.hex();
  json before;
  {
    AnnotationService s(cfg);
    post(s, "/api/labels", {{"mts", a}, {"classId", 4}});
    post(s, "/api/labels", {{"mts", a}, {"classId", 2}});
    post(s, "/api/labels", {{"mts", b}, {"classId", 6}});
    post(s, "/api/undo", nullptr);
    CHECK(s.click_count() == 4);
    const json p = get(s, "/api/frames/0/patches");
    for (const json& q : p["patches"]) {
      if (q["mts"] == a) CHECK(q["classId"] == 2);
      if (q["mts"] == b) CHECK(q["provenance"] == "unlabeled");
    }
    post(s, "/api/undo", nullptr);
    before = get(s, "/api/frames/0/patches");
    for (const json& q : before["patches"])
      if (q["mts"] == a) CHECK(q["classId"] == 4);
  }
  {
    AnnotationService s(cfg);
    CHECK(s.click_count() == 5);
    CHECK(get(s, "/api/frames/0/patches") == before);
    post(s, "/api/undo", nullptr);
    post(s, "/api/undo", nullptr, 409);
  }
  // A torn trailing record was never acknowledged and is dropped.
  {
    std::ofstream out(cfg.logPath, std::ios::app | std::ios::binary);
    out << "6 " << b.substr(0, 30);
  }
  {
    AnnotationService s(cfg);
    CHECK(s.click_count() == 6);
    CHECK(std::filesystem::file_size(cfg.logPath) == gba::testing::file_bytes(cfg.logPath).size());
    const auto bytes = gba::testing::file_bytes(cfg.logPath);
    CHECK(bytes.back() == '\n');
    post(s, "/api/labels", {{"mts", b}, {"classId", 6}});
  }
  AnnotationService s(cfg);
  CHECK(s.click_count() == 7);
}

TEST_CASE("http front end") {
  AnnotationService s(config_for("http"));
  AnnotationServer server(s);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.run(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  auto r = client.Get("/api/classes");
  REQUIRE(r);
  CHECK(r->status == 200);
  const std::string key = s.corpus().frames[0].patches[0].key.hex();
  r = client.Post("/api/labels", json{{"mts", key}, {"classId", 3}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["sequence"] == 0);
  r = client.Get("/api/frames/0/image");
  REQUIRE(r);
  CHECK(r->get_header_value("Content-Type") == "image/png");
  r = client.Get("/api/frames/77777/patches");
  REQUIRE(r);
  CHECK(r->status == 404);
  AnnotationServer other(s);
  CHECK_THROWS_AS(other.bind("127.0.0.1", port), PortUnavailable);
  server.stop();
  t.join();
}

TEST_CASE("png encoding") {
  ColorImage img(3, 2, {1, 2, 3});
  const Bytes png = encode_png(img);
  CHECK(png.size() > 8 + 25 + 12);
  CHECK(std::string(png.begin() + 12, png.begin() + 16) == "IHDR");
  CHECK(std::string(png.end() - 8, png.end() - 4) == "IEND");
}

}  // TEST_SUITE
