#pragma once

#include <cstdint>
#include <span>

namespace gba {

struct Hash128 {
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;
};

/// MurmurHash3, x64 128-bit variant (Austin Appleby's reference algorithm).
Hash128 murmur3_x64_128(std::span<const std::uint8_t> data, std::uint32_t seed);

}  // namespace gba
