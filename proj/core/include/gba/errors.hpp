#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gba {

/// Root of every error the pipeline raises. Callers that only need a
/// diagnostic can catch this; tests match the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedEventLog : public Error {
 public:
  MalformedEventLog(std::size_t eventIndex, const std::string& what)
      : Error("malformed event log at event " + std::to_string(eventIndex) + ": " + what),
        eventIndex_(eventIndex) {}
  std::size_t eventIndex() const noexcept { return eventIndex_; }

 private:
  std::size_t eventIndex_;
};

class UnknownVolatileId : public Error {
 public:
  explicit UnknownVolatileId(std::uint32_t id)
      : Error("unknown volatile id " + std::to_string(id)), id_(id) {}
  std::uint32_t id() const noexcept { return id_; }

 private:
  std::uint32_t id_;
};

class BadMagic : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  VersionMismatch(unsigned found, unsigned expected)
      : Error("version mismatch: found " + std::to_string(found) + ", expected " +
              std::to_string(expected)) {}
};

class TruncatedStream : public Error {
 public:
  explicit TruncatedStream(std::size_t offset)
      : Error("truncated stream at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Structurally readable but semantically invalid record (bad enum value,
/// out-of-range coordinate, ...).
class MalformedStream : public Error {
 public:
  MalformedStream(std::size_t offset, const std::string& what)
      : Error("malformed stream at offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class NoMainPass : public Error {
 public:
  explicit NoMainPass(std::uint32_t frameIndex)
      : Error("frame " + std::to_string(frameIndex) + " has no main geometry pass") {}
};

class CorruptCapture : public Error {
 public:
  using Error::Error;
};

class InfeasibleConfig : public Error {
 public:
  using Error::Error;
};

class UnresolvableId : public Error {
 public:
  UnresolvableId(std::uint32_t frame, std::size_t pixel)
      : Error("frame " + std::to_string(frame) + " pixel " + std::to_string(pixel) +
              " carries an id missing from the resource table"),
        frame_(frame),
        pixel_(pixel) {}
  std::uint32_t frame() const noexcept { return frame_; }
  std::size_t pixel() const noexcept { return pixel_; }

 private:
  std::uint32_t frame_;
  std::size_t pixel_;
};

class UnknownClass : public Error {
 public:
  explicit UnknownClass(unsigned id) : Error("unknown class id " + std::to_string(id)) {}
};

class UnknownMts : public Error {
 public:
  using Error::Error;
};

}  // namespace gba
