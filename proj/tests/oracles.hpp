#pragma once

// Reference implementations written independently of the library, in the
// slowest obvious way, for cross-checking.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Bit-at-a-time reflected CRC-32, no table.
inline std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) {
    crc ^= data[i];
    for (int b = 0; b < 8; ++b) crc = (crc & 1u) ? (crc >> 1) ^ 0xEDB88320u : crc >> 1;
  }
  return ~crc;
}

inline std::uint32_t crc32(const std::vector<std::uint8_t>& v) { return crc32(v.data(), v.size()); }

// One's-complement sum over 16-bit big-endian words, 32-bit accumulator.
inline std::uint16_t internet_checksum(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < bytes.size(); i += 2) {
    std::uint32_t hi = bytes[i];
    std::uint32_t lo = i + 1 < bytes.size() ? bytes[i + 1] : 0;
    sum += (hi << 8) | lo;
    while (sum > 0xFFFF) sum = (sum & 0xFFFF) + (sum >> 16);
  }
  return static_cast<std::uint16_t>(~sum & 0xFFFF);
}

// Per-bit comparison of the masked bits.
inline bool masked_equal(std::uint64_t field, std::uint64_t value, std::uint64_t mask, unsigned width) {
  for (unsigned b = 0; b < width; ++b) {
    if (!((mask >> b) & 1)) continue;
    if (((field >> b) & 1) != ((value >> b) & 1)) return false;
  }
  return true;
}

struct TwoPass {
  double mean = 0;
  double stddev = 0;
  double cv = 0;
};

inline TwoPass two_pass(const std::vector<double>& xs) {
  TwoPass r;
  if (xs.empty()) return r;
  long double sum = 0;
  for (double x : xs) sum += x;
  long double mean = sum / static_cast<long double>(xs.size());
  long double sq = 0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  r.mean = static_cast<double>(mean);
  r.stddev = static_cast<double>(std::sqrt(sq / static_cast<long double>(xs.size())));
  r.cv = r.mean != 0 ? r.stddev / std::fabs(r.mean) : 0;
  return r;
}

// Upper-tail p-value of a chi-square statistic with k degrees of freedom via
// the Wilson-Hilferty normal approximation (good for k >= 30).
inline double chi_square_p(double stat, double k) {
  double z = (std::cbrt(stat / k) - (1 - 2 / (9 * k))) / std::sqrt(2 / (9 * k));
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace oracle
