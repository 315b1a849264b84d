#include "gba/service.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <chrono>
#include <cstring>
#include <regex>

#include "httplib.h"
#include "json.hpp"

namespace gba {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResponse error_response(int status, const std::string& kind, const std::string& message) {
  return json_response(status, {{"error", kind}, {"message", message}});
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::ExplicitMts: return "explicit";
    case Provenance::Rule: return "rule";
    default: return "unlabeled";
  }
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void put_u32be(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void png_chunk(Bytes& out, const char* type, const Bytes& data) {
  put_u32be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

Bytes encode_png(const ColorImage& image) {
  Bytes raw;
  raw.reserve(image.height * (1 + std::size_t{image.width} * 3));
  for (std::size_t y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const auto* row = image.rgb.data() + y * image.width * 3;
    raw.insert(raw.end(), row, row + std::size_t{image.width} * 3);
  }
  uLongf packedSize = compressBound(static_cast<uLong>(raw.size()));
  Bytes packed(packedSize);
  if (compress2(packed.data(), &packedSize, raw.data(), static_cast<uLong>(raw.size()), Z_DEFAULT_COMPRESSION) != Z_OK)
    throw Error("png: deflate failed");
  packed.resize(packedSize);

  Bytes out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  Bytes ihdr;
  put_u32be(ihdr, image.width);
  put_u32be(ihdr, image.height);
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, deflate, no filter, no interlace
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", packed);
  png_chunk(out, "IEND", {});
  return out;
}

// ---------------------------------------------------------------------------

namespace {

RunLayout checked_run(const fs::path& dir) {
  const RunLayout run{dir};
  if (!fs::is_directory(run.patches()) || !fs::is_directory(run.frames()))
    throw CorpusMissing("not a processed corpus: " + dir.string());
  return run;
}

}  // namespace

AnnotationService::AnnotationService(ServiceConfig config)
    : config_(std::move(config)),
      palette_(load_palette(checked_run(config_.corpusDir))),
      corpus_(load_corpus(checked_run(config_.corpusDir))),
      store_(config_.params) {
  const RunLayout run{config_.corpusDir};
  if (config_.logPath.empty()) config_.logPath = run.labels() / "service.log";
  fs::create_directories(config_.logPath.parent_path());

  if (fs::exists(config_.logPath)) {
    const Bytes bytes = read_file(config_.logPath);
    std::string text(bytes.begin(), bytes.end());
    // A crash can leave a torn last line; it was never acknowledged.
    const auto keep = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
    if (keep != text.size()) {
      text.resize(keep);
      fs::resize_file(config_.logPath, keep);
    }
    for (const ClickRecord& r : click_log_from_text(text)) {
      if (r.sequence != store_.click_log().size())
        throw Error("service log out of order at sequence " + std::to_string(r.sequence));
      const ClassId previous = store_.label_of(r.key).value_or(kUnlabeled);
      store_.apply_label(corpus_.index, palette_, r.key, r.cls, r.timestamp, r.kind);
      store_.mine_rules();
      if (r.kind == ClickKind::Label) {
        undo_.push_back({r.key, previous});
      } else if (!undo_.empty()) {
        undo_.pop_back();
      }
    }
  }
  logFd_ = ::open(config_.logPath.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (logFd_ < 0) throw Error("cannot open click log " + config_.logPath.string() + ": " + std::strerror(errno));
}

AnnotationService::~AnnotationService() {
  if (logFd_ >= 0) ::close(logFd_);
}

std::size_t AnnotationService::click_count() const {
  std::shared_lock lock(mutex_);
  return store_.click_log().size();
}

const FramePatches* AnnotationService::frame(std::uint32_t frameIndex) const {
  const auto pos = corpus_.position(frameIndex);
  return pos ? &corpus_.frames[*pos] : nullptr;
}

void AnnotationService::append_line(const std::string& line) {
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(logFd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("click log write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(logFd_) != 0) throw Error(std::string("click log sync failed: ") + std::strerror(errno));
}

std::size_t AnnotationService::commit(const MtsKey& key, ClassId cls, ClickKind kind) {
  const ClickRecord record{store_.click_log().size(), key, cls, now_ms(), kind};
  append_line(record.to_line() + '\n');
  store_.apply_label(corpus_.index, palette_, key, cls, record.timestamp, kind);
  return store_.mine_rules();
}

HttpResponse AnnotationService::handle(const std::string& method, const std::string& path, const std::string& body) {
  static const std::regex frameRoute(R"(/api/frames/([0-9]{1,9})/(image|patches))");
  static const std::regex exportRoute(R"(/api/export/([0-9]{1,9}))");
  try {
    std::smatch m;
    if (method == "GET") {
      if (path == "/api/frames/next") return next_frame();
      if (path == "/api/classes") return classes();
      if (path == "/api/stats") return stats();
      if (std::regex_match(path, m, frameRoute)) {
        const auto f = static_cast<std::uint32_t>(std::stoul(m[1]));
        return m[2] == "image" ? frame_image(f) : frame_patches(f);
      }
      if (std::regex_match(path, m, exportRoute)) return export_map(static_cast<std::uint32_t>(std::stoul(m[1])));
    } else if (method == "POST") {
      if (path == "/api/labels") return post_label(body);
      if (path == "/api/undo") return post_undo();
    }
    return error_response(404, "NotFound", method + " " + path);
  } catch (const UnknownMts& e) {
    return error_response(404, "UnknownMts", e.what());
  } catch (const UnknownClass& e) {
    return error_response(400, "UnknownClass", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "InternalError", e.what());
  }
}

HttpResponse AnnotationService::next_frame() const {
  std::shared_lock lock(mutex_);
  std::size_t remaining = 0;
  const FramePatches* next = nullptr;
  Coverage nextCoverage;
  for (const FramePatches& f : corpus_.frames) {
    const Coverage c = frame_coverage(f, store_);
    if (c.unlabeled_fraction() <= store_.params().unlabeledThreshold) continue;
    ++remaining;
    if (!next) {
      next = &f;
      nextCoverage = c;
    }
  }
  if (!next) return json_response(200, {{"frame", nullptr}, {"done", true}, {"remaining", 0}});
  return json_response(200, {{"frame", next->frameIndex},
                             {"done", false},
                             {"width", next->width},
                             {"height", next->height},
                             {"coveredFraction", nextCoverage.covered_fraction()},
                             {"remaining", remaining}});
}

HttpResponse AnnotationService::frame_image(std::uint32_t frameIndex) const {
  if (!frame(frameIndex)) return error_response(404, "UnknownFrame", "no frame " + std::to_string(frameIndex));
  const RunLayout run{config_.corpusDir};
  const Bytes ppm = read_file(capture_stem(run.frames(), frameIndex).string() + ".ppm");
  const Bytes png = encode_png(decode_ppm(ppm));
  return {200, "image/png", std::string(png.begin(), png.end())};
}

HttpResponse AnnotationService::frame_patches(std::uint32_t frameIndex) const {
  const FramePatches* f = frame(frameIndex);
  if (!f) return error_response(404, "UnknownFrame", "no frame " + std::to_string(frameIndex));
  std::shared_lock lock(mutex_);
  json patches = json::array();
  Coverage coverage;
  for (const Patch& p : f->patches) {
    const PatchLabel l = store_.resolve(p.key);
    json runs = json::array();
    for (const PixelRun& r : p.runs) runs.push_back({r.start, r.length});
    patches.push_back({{"mts", p.key.hex()},
                       {"classId", l.cls},
                       {"provenance", provenance_name(l.provenance)},
                       {"conflict", l.conflict},
                       {"area", p.area},
                       {"runs", std::move(runs)}});
  }
  coverage = frame_coverage(*f, store_);
  return json_response(200, {{"frame", f->frameIndex},
                             {"width", f->width},
                             {"height", f->height},
                             {"coveredFraction", coverage.covered_fraction()},
                             {"patches", std::move(patches)}});
}

HttpResponse AnnotationService::post_label(const std::string& body) {
  const json req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return error_response(400, "BadRequest", "body must be a JSON object");
  if (!req.contains("mts") || !req["mts"].is_string()) return error_response(400, "BadRequest", "mts must be a string");
  const auto key = MtsKey::from_hex(req["mts"].get<std::string>());
  if (!key) return error_response(400, "BadRequest", "mts must be 96 hex digits");
  if (!req.contains("classId") || !req["classId"].is_number_integer())
    return error_response(400, "UnknownClass", "classId must be an integer");
  const auto raw = req["classId"].get<std::int64_t>();
  if (raw <= 0 || raw > 255 || !palette_.contains(static_cast<ClassId>(raw)))
    throw UnknownClass(static_cast<unsigned>(std::clamp<std::int64_t>(raw, 0, 0xFFFF)));
  const auto cls = static_cast<ClassId>(raw);
  if (!corpus_.index.contains(*key)) throw UnknownMts("unknown MTS " + key->hex());

  const FramePatches* f = nullptr;
  if (req.contains("frame") && req["frame"].is_number_unsigned()) {
    f = frame(req["frame"].get<std::uint32_t>());
    if (!f) return error_response(404, "UnknownFrame", "no frame " + req["frame"].dump());
  } else {
    f = frame(corpus_.index.byMts.at(*key).front().frameIndex);
  }

  std::unique_lock lock(mutex_);
  const ClassId previous = store_.label_of(*key).value_or(kUnlabeled);
  const std::size_t created = commit(*key, cls, ClickKind::Label);
  undo_.push_back({*key, previous});
  const double covered = frame_coverage(*f, store_).covered_fraction();
  return json_response(200, {{"sequence", store_.click_log().size() - 1},
                             {"frame", f->frameIndex},
                             {"coveredFraction", covered},
                             {"frameComplete", covered >= 1.0},
                             {"newRules", created}});
}

HttpResponse AnnotationService::post_undo() {
  std::unique_lock lock(mutex_);
  if (undo_.empty()) return error_response(409, "NothingToUndo", "no label to undo");
  const UndoEntry entry = undo_.back();
  const std::size_t created = commit(entry.key, entry.previous, ClickKind::Undo);
  undo_.pop_back();
  return json_response(200, {{"sequence", store_.click_log().size() - 1},
                             {"mts", entry.key.hex()},
                             {"classId", entry.previous},
                             {"newRules", created}});
}

HttpResponse AnnotationService::classes() const {
  json out = json::array();
  for (const ClassDef& c : palette_.classes())
    out.push_back({{"id", c.id}, {"name", c.name}, {"color", {c.color.r, c.color.g, c.color.b}}});
  return json_response(200, out);
}

HttpResponse AnnotationService::stats() const {
  LabelStore snapshot;
  {
    std::shared_lock lock(mutex_);
    snapshot = store_;
  }
  const CorpusReport r = density_report(corpus_, snapshot, 0);
  std::size_t remaining = 0;
  for (const FramePatches& f : corpus_.frames)
    if (frame_coverage(f, snapshot).unlabeled_fraction() > snapshot.params().unlabeledThreshold) ++remaining;
  json perClass = json::object();
  for (const auto& [cls, n] : r.perClassPixels) perClass[palette_.at(cls).name] = n;
  return json_response(200, {{"frames", r.frameCount},
                             {"totalPixels", r.totalPixels},
                             {"annotatablePixels", r.annotatablePixels},
                             {"labeledPixels", r.labeledPixels},
                             {"explicitPixels", r.explicitPixels},
                             {"rulePixels", r.rulePixels},
                             {"conflictPixels", r.conflictPixels},
                             {"annotationDensity", r.annotationDensity},
                             {"mtsCoveredFraction", r.mtsCoveredFraction},
                             {"ruleCoveredFraction", r.ruleCoveredFraction},
                             {"perClassPixels", perClass},
                             {"ruleCount", r.ruleCount},
                             {"rulesCreated", r.rulesCreated},
                             {"retractedRules", snapshot.retracted_count()},
                             {"clickCount", r.clickCount},
                             {"labeledMts", r.labeledMtsCount},
                             {"framesAboveThreshold", remaining}});
}

HttpResponse AnnotationService::export_map(std::uint32_t frameIndex) const {
  const FramePatches* f = frame(frameIndex);
  if (!f) return error_response(404, "UnknownFrame", "no frame " + std::to_string(frameIndex));
  LabelMap map;
  {
    std::shared_lock lock(mutex_);
    map = export_label_map(*f, store_);
  }
  return json_response(200, {{"frame", map.frameIndex}, {"width", map.width}, {"height", map.height}, {"ids", map.ids}});
}

// ---------------------------------------------------------------------------

struct AnnotationServer::Impl {
  AnnotationService& service;
  httplib::Server server;
};

AnnotationServer::AnnotationServer(AnnotationService& service) : impl_(new Impl{service, {}}) {
  // httplib's default also sets SO_REUSEPORT, which lets a second server
  // silently share the port.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = impl_->service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.contentType.c_str());
  };
  impl_->server.Get(".*", forward);
  impl_->server.Post(".*", forward);
}

AnnotationServer::~AnnotationServer() = default;

int AnnotationServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw PortUnavailable("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void AnnotationServer::run() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() { impl_->server.stop(); }

}  // namespace gba
