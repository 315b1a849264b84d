#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "gba/errors.hpp"
#include "gba/labels.hpp"
#include "gba/pipeline.hpp"

namespace gba {

class CorpusMissing : public Error {
 public:
  using Error::Error;
};

class PortUnavailable : public Error {
 public:
  using Error::Error;
};

struct ServiceConfig {
  std::filesystem::path corpusDir;  // a processed run directory
  LabelParams params;
  /// Click log; defaults to <corpus>/labels/service.log.
  std::filesystem::path logPath;
};

struct HttpResponse {
  int status = 200;
  std::string contentType = "application/json";
  std::string body;
};

/// Label session over a processed corpus. Every mutation is appended to the
/// click log and flushed to disk before it is applied and acknowledged; on
/// construction the existing log is replayed. Rules are mined after every
/// click.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Routes one request. Paths and bodies are documented in the README.
  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body = {});

  std::size_t click_count() const;
  const Corpus& corpus() const noexcept { return corpus_; }
  const Palette& palette() const noexcept { return palette_; }
  const std::filesystem::path& log_path() const noexcept { return config_.logPath; }

 private:
  struct UndoEntry {
    MtsKey key;
    ClassId previous = kUnlabeled;
  };

  HttpResponse next_frame() const;
  HttpResponse frame_image(std::uint32_t frameIndex) const;
  HttpResponse frame_patches(std::uint32_t frameIndex) const;
  HttpResponse post_label(const std::string& body);
  HttpResponse post_undo();
  HttpResponse classes() const;
  HttpResponse stats() const;
  HttpResponse export_map(std::uint32_t frameIndex) const;

  const FramePatches* frame(std::uint32_t frameIndex) const;
  /// Appends, syncs, applies and mines. Caller holds the write lock.
  std::size_t commit(const MtsKey& key, ClassId cls, ClickKind kind);
  void append_line(const std::string& line);

  ServiceConfig config_;
  Palette palette_;
  Corpus corpus_;
  mutable std::shared_mutex mutex_;
  LabelStore store_;
  std::vector<UndoEntry> undo_;
  int logFd_ = -1;
};

/// HTTP front end for an AnnotationService.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service);
  ~AnnotationServer();

  /// Binds to host:port (0 picks a free port) and returns the bound port.
  /// Throws PortUnavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// RGB8 PNG, filter 0, zlib default compression.
Bytes encode_png(const ColorImage& image);

}  // namespace gba
