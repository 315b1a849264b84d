#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gba/byte_io.hpp"

namespace gba {

enum class ResourceKind : std::uint8_t { Mesh = 1, Texture = 2, Shader = 3 };

bool is_valid_kind(std::uint8_t raw) noexcept;
std::string_view kind_name(ResourceKind kind) noexcept;

using VolatileId = std::uint32_t;

/// Reserved "no geometry" id. Sessions allocate volatile ids strictly below it.
inline constexpr VolatileId kSentinelId = 0xFFFFFFFFu;

/// Fixed seed for content hashing. Changing it re-keys every corpus.
inline constexpr std::uint32_t kHashSeed = 0;

/// 128-bit content hash of a resource. Serialized little-endian as h1 then
/// h2; `hex()` renders those 16 bytes in serialization order.
struct PersistentKey {
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;

  auto operator<=>(const PersistentKey&) const = default;

  std::array<std::uint8_t, 16> bytes() const;
  static PersistentKey from_bytes(std::span<const std::uint8_t, 16> b);
  std::string hex() const;
  static std::optional<PersistentKey> from_hex(std::string_view hex);
};

struct PersistentKeyHash {
  std::size_t operator()(const PersistentKey& k) const noexcept {
    return static_cast<std::size_t>(k.h1 ^ (k.h2 * 0x9e3779b97f4a7c15ULL));
  }
};

/// Digest of the kind-tag byte followed by `content`.
PersistentKey hash_resource(ResourceKind kind, std::span<const std::uint8_t> content);

/// One resource lifecycle event as recorded by the capture wrapper.
struct ResourceEvent {
  enum class Type : std::uint8_t { Create = 1, Modify = 2, Delete = 3 };

  Type type = Type::Create;
  VolatileId id = 0;
  ResourceKind kind = ResourceKind::Mesh;  // meaningful for Create only
  Bytes content;                           // empty for Delete

  static ResourceEvent create(VolatileId id, ResourceKind kind, Bytes content);
  static ResourceEvent modify(VolatileId id, Bytes content);
  static ResourceEvent destroy(VolatileId id);

  bool operator==(const ResourceEvent&) const = default;
};

struct TableEntry {
  ResourceKind kind = ResourceKind::Mesh;
  PersistentKey key;
  bool operator==(const TableEntry&) const = default;
};

/// Volatile id -> persistent key map for one capture session. `generation`
/// counts the events folded in so far, so error indices are session-global.
class SessionResourceTable {
 public:
  /// Folds one event. Throws MalformedEventLog on Modify/Delete of an
  /// unknown id, Create of a live id, or Create of the sentinel id.
  void apply(const ResourceEvent& event);

  const TableEntry* find(VolatileId id) const;
  PersistentKey resolve(VolatileId id) const;

  const std::map<VolatileId, TableEntry>& entries() const noexcept { return entries_; }
  std::uint64_t generation() const noexcept { return generation_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Restores a table from persisted state (capture sidecar).
  static SessionResourceTable restore(std::map<VolatileId, TableEntry> entries,
                                      std::uint64_t generation);

  bool operator==(const SessionResourceTable&) const = default;

 private:
  std::map<VolatileId, TableEntry> entries_;
  std::uint64_t generation_ = 0;
};

SessionResourceTable build_session_table(std::span<const ResourceEvent> events,
                                         SessionResourceTable base = {});

PersistentKey resolve(const SessionResourceTable& table, VolatileId id);

}  // namespace gba

template <>
struct std::hash<gba::PersistentKey> : gba::PersistentKeyHash {};
