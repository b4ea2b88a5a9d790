#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "xenoflow/packet.hpp"

namespace xenoflow {

namespace detail {

// Reflected table for polynomial 0x04C11DB7 (0xEDB88320 bit-reversed).
constexpr std::array<std::uint32_t, 256> make_crc32_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
    table[i] = c;
  }
  return table;
}

inline constexpr auto kCrc32Table = make_crc32_table();

}  // namespace detail

/// CRC-32 (IEEE 802.3): reflected in/out, init and final xor 0xFFFFFFFF.
constexpr std::uint32_t crc32(std::span<const std::uint8_t> data) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (auto b : data) c = detail::kCrc32Table[(c ^ b) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

using FiveTupleKey = std::array<std::uint8_t, 13>;

/// Network-order concatenation ip_src | ip_dst | proto | sport | dport.
inline FiveTupleKey five_tuple_key(const HeaderView& v) {
  FiveTupleKey k{};
  detail::store_be32(k.data(), v.ip_src.value);
  detail::store_be32(k.data() + 4, v.ip_dst.value);
  k[8] = v.ip_proto;
  detail::store_be16(k.data() + 9, v.udp_src);
  detail::store_be16(k.data() + 11, v.udp_dst);
  return k;
}

inline std::uint32_t five_tuple_hash(const HeaderView& v) {
  auto k = five_tuple_key(v);
  return crc32(k);
}

}  // namespace xenoflow
