#include "gba/resource_identity.hpp"

#include "gba/errors.hpp"
#include "gba/murmur3.hpp"

namespace gba {

bool is_valid_kind(std::uint8_t raw) noexcept { return raw >= 1 && raw <= 3; }

std::string_view kind_name(ResourceKind kind) noexcept {
  switch (kind) {
    case ResourceKind::Mesh: return "mesh";
    case ResourceKind::Texture: return "texture";
    case ResourceKind::Shader: return "shader";
  }
  return "?";
}

std::array<std::uint8_t, 16> PersistentKey::bytes() const {
  std::array<std::uint8_t, 16> out{};
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<std::uint8_t>(h1 >> (8 * i));
    out[8 + i] = static_cast<std::uint8_t>(h2 >> (8 * i));
  }
  return out;
}

PersistentKey PersistentKey::from_bytes(std::span<const std::uint8_t, 16> b) {
  PersistentKey k;
  for (int i = 0; i < 8; ++i) {
    k.h1 |= std::uint64_t{b[i]} << (8 * i);
    k.h2 |= std::uint64_t{b[8 + i]} << (8 * i);
  }
  return k;
}

std::string PersistentKey::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(32);
  for (std::uint8_t b : bytes()) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

std::optional<PersistentKey> PersistentKey::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::array<std::uint8_t, 16> b{};
  for (std::size_t i = 0; i < 16; ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    b[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return from_bytes(b);
}

PersistentKey hash_resource(ResourceKind kind, std::span<const std::uint8_t> content) {
  Bytes tagged;
  tagged.reserve(content.size() + 1);
  tagged.push_back(static_cast<std::uint8_t>(kind));
  tagged.insert(tagged.end(), content.begin(), content.end());
  const Hash128 h = murmur3_x64_128(tagged, kHashSeed);
  return {h.h1, h.h2};
}

ResourceEvent ResourceEvent::create(VolatileId id, ResourceKind kind, Bytes content) {
  return {Type::Create, id, kind, std::move(content)};
}

ResourceEvent ResourceEvent::modify(VolatileId id, Bytes content) {
  return {Type::Modify, id, ResourceKind::Mesh, std::move(content)};
}

ResourceEvent ResourceEvent::destroy(VolatileId id) { return {Type::Delete, id, ResourceKind::Mesh, {}}; }

void SessionResourceTable::apply(const ResourceEvent& event) {
  const std::size_t index = generation_;
  switch (event.type) {
    case ResourceEvent::Type::Create: {
      if (event.id == kSentinelId) throw MalformedEventLog(index, "create of the sentinel id");
      if (entries_.contains(event.id))
        throw MalformedEventLog(index, "create of live id " + std::to_string(event.id));
      entries_.emplace(event.id, TableEntry{event.kind, hash_resource(event.kind, event.content)});
      break;
    }
    case ResourceEvent::Type::Modify: {
      auto it = entries_.find(event.id);
      if (it == entries_.end())
        throw MalformedEventLog(index, "modify of unknown id " + std::to_string(event.id));
      it->second.key = hash_resource(it->second.kind, event.content);
      break;
    }
    case ResourceEvent::Type::Delete: {
      if (entries_.erase(event.id) == 0)
        throw MalformedEventLog(index, "delete of unknown id " + std::to_string(event.id));
      break;
    }
    default:
      throw MalformedEventLog(index, "unknown event type");
  }
  ++generation_;
}

const TableEntry* SessionResourceTable::find(VolatileId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

PersistentKey SessionResourceTable::resolve(VolatileId id) const {
  if (const TableEntry* e = find(id)) return e->key;
  throw UnknownVolatileId(id);
}

SessionResourceTable SessionResourceTable::restore(std::map<VolatileId, TableEntry> entries,
                                                   std::uint64_t generation) {
  SessionResourceTable t;
  t.entries_ = std::move(entries);
  t.generation_ = generation;
  return t;
}

SessionResourceTable build_session_table(std::span<const ResourceEvent> events,
                                         SessionResourceTable base) {
  for (const ResourceEvent& e : events) base.apply(e);
  return base;
}

PersistentKey resolve(const SessionResourceTable& table, VolatileId id) { return table.resolve(id); }

}  // namespace gba
