#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xenoflow {

using PortId = std::uint32_t;
using SimTime = std::uint64_t;  // simulated nanoseconds

inline constexpr std::size_t kEthHeaderLen = 14;
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kUdpHeaderLen = 8;
inline constexpr std::size_t kMinBuiltFrame = kEthHeaderLen + kIpv4HeaderLen + kUdpHeaderLen;  // 42
inline constexpr std::size_t kMaxUdpPayload = 1500 - kIpv4HeaderLen - kUdpHeaderLen;           // 1458

// FCS (4) + preamble/SFD (8) + inter-frame gap (12)
inline constexpr std::size_t kWireOverhead = 24;

inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::uint8_t kIpProtoUdp = 17;
inline constexpr std::size_t kMetaRegisters = 4;

struct MacAddr {
  std::array<std::uint8_t, 6> bytes{};

  static MacAddr from_u64(std::uint64_t v) {
    MacAddr m;
    for (int i = 5; i >= 0; --i) {
      m.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xFF);
      v >>= 8;
    }
    return m;
  }

  std::uint64_t to_u64() const {
    std::uint64_t v = 0;
    for (auto b : bytes) v = (v << 8) | b;
    return v;
  }

  // Canonical colon-hex form, e.g. "02:00:00:00:00:0a".
  static MacAddr parse(std::string_view text) {
    MacAddr m;
    if (text.size() != 17) throw std::invalid_argument("malformed MAC address: " + std::string(text));
    for (std::size_t i = 0; i < 6; ++i) {
      if (i > 0 && text[i * 3 - 1] != ':') {
        throw std::invalid_argument("malformed MAC address: " + std::string(text));
      }
      unsigned value = 0;
      auto first = text.data() + i * 3;
      auto [ptr, ec] = std::from_chars(first, first + 2, value, 16);
      if (ec != std::errc{} || ptr != first + 2) {
        throw std::invalid_argument("malformed MAC address: " + std::string(text));
      }
      m.bytes[i] = static_cast<std::uint8_t>(value);
    }
    return m;
  }

  std::string to_string() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(17);
    for (std::size_t i = 0; i < 6; ++i) {
      if (i) out.push_back(':');
      out.push_back(kHex[bytes[i] >> 4]);
      out.push_back(kHex[bytes[i] & 0xF]);
    }
    return out;
  }

  friend bool operator==(const MacAddr&, const MacAddr&) = default;
};

struct Ipv4Addr {
  std::uint32_t value = 0;  // host order

  static Ipv4Addr parse(std::string_view text) {
    std::uint32_t v = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
      if (octet > 0) {
        if (p == end || *p != '.') throw std::invalid_argument("malformed IPv4 address: " + std::string(text));
        ++p;
      }
      unsigned part = 0;
      auto [next, ec] = std::from_chars(p, end, part, 10);
      if (ec != std::errc{} || next == p || part > 255) {
        throw std::invalid_argument("malformed IPv4 address: " + std::string(text));
      }
      v = (v << 8) | part;
      p = next;
    }
    if (p != end) throw std::invalid_argument("malformed IPv4 address: " + std::string(text));
    return Ipv4Addr{v};
  }

  std::string to_string() const {
    return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xFF) + "." +
           std::to_string((value >> 8) & 0xFF) + "." + std::to_string(value & 0xFF);
  }

  friend bool operator==(const Ipv4Addr&, const Ipv4Addr&) = default;
};

struct Packet {
  std::vector<std::uint8_t> frame;
  PortId ingress_port = 0;
  SimTime arrival_ns = 0;
  std::array<std::uint32_t, kMetaRegisters> meta{};
};

struct TimedPacket {
  SimTime send_time_ns = 0;
  Packet packet;
};

namespace detail {

inline std::uint16_t load_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

inline std::uint32_t load_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

inline void store_be16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v);
}

inline void store_be32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

// Unfolded 32-bit one's-complement accumulation over big-endian 16-bit words.
inline std::uint32_t ones_sum(std::span<const std::uint8_t> bytes, std::uint32_t sum = 0) {
  std::size_t i = 0;
  for (; i + 1 < bytes.size(); i += 2) sum += load_be16(bytes.data() + i);
  if (i < bytes.size()) sum += std::uint32_t{bytes[i]} << 8;
  return sum;
}

inline std::uint16_t fold(std::uint32_t sum) {
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(sum);
}

}  // namespace detail

/// Internet checksum of a 20-byte IPv4 header. With the checksum field
/// zeroed this yields the value to store; over a header that already carries
/// a valid checksum it yields 0x0000.
inline std::uint16_t ipv4_header_checksum(std::span<const std::uint8_t> header) {
  if (header.size() != kIpv4HeaderLen) {
    throw std::invalid_argument("IPv4 header must be 20 bytes, got " + std::to_string(header.size()));
  }
  return static_cast<std::uint16_t>(~detail::fold(detail::ones_sum(header)));
}

// UDP checksum with IPv4 pseudo-header. `udp` spans the UDP header and payload
// with the checksum field treated as zero.
inline std::uint16_t udp_checksum(std::uint32_t ip_src, std::uint32_t ip_dst, std::span<const std::uint8_t> udp) {
  std::uint32_t sum = 0;
  sum += ip_src >> 16;
  sum += ip_src & 0xFFFF;
  sum += ip_dst >> 16;
  sum += ip_dst & 0xFFFF;
  sum += kIpProtoUdp;
  sum += static_cast<std::uint32_t>(udp.size());
  sum = detail::ones_sum(udp.first(6), sum);
  if (udp.size() > kUdpHeaderLen) sum = detail::ones_sum(udp.subspan(kUdpHeaderLen), sum);
  auto c = static_cast<std::uint16_t>(~detail::fold(sum));
  return c == 0 ? 0xFFFF : c;  // zero is reserved for "no checksum"
}

enum class ParseStatus {
  ok,
  truncated,
  unsupported_ethertype,
  unsupported_protocol,
};

inline const char* to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::truncated: return "truncated";
    case ParseStatus::unsupported_ethertype: return "unsupported_ethertype";
    case ParseStatus::unsupported_protocol: return "unsupported_protocol";
  }
  return "?";
}

struct HeaderView {
  MacAddr eth_src;
  MacAddr eth_dst;
  std::uint16_t ether_type = 0;
  Ipv4Addr ip_src;
  Ipv4Addr ip_dst;
  std::uint8_t ip_proto = 0;
  std::uint16_t udp_src = 0;
  std::uint16_t udp_dst = 0;
  std::size_t l3_offset = kEthHeaderLen;
  std::size_t l4_offset = kEthHeaderLen + kIpv4HeaderLen;
  std::size_t udp_payload_len = 0;

  std::size_t payload_offset() const { return l4_offset + kUdpHeaderLen; }
};

struct ParseResult {
  ParseStatus status = ParseStatus::truncated;
  HeaderView view;

  bool ok() const { return status == ParseStatus::ok; }
};

/// Decodes Ethernet/IPv4/UDP. Anything that is not IPv4 carrying UDP comes
/// back with a non-ok status (a slow-path candidate) but with whatever layers
/// were decodable filled in.
inline ParseResult parse(std::span<const std::uint8_t> frame) {
  ParseResult r;
  if (frame.size() < kEthHeaderLen) return r;
  auto& v = r.view;
  std::copy_n(frame.data(), 6, v.eth_dst.bytes.begin());
  std::copy_n(frame.data() + 6, 6, v.eth_src.bytes.begin());
  v.ether_type = detail::load_be16(frame.data() + 12);
  if (v.ether_type != kEtherTypeIpv4) {
    r.status = ParseStatus::unsupported_ethertype;
    return r;
  }
  if (frame.size() < kEthHeaderLen + kIpv4HeaderLen) return r;
  const std::uint8_t* ip = frame.data() + kEthHeaderLen;
  std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0F) * 4;
  if ((ip[0] >> 4) != 4 || ihl < kIpv4HeaderLen) {
    r.status = ParseStatus::unsupported_ethertype;
    return r;
  }
  if (frame.size() < kEthHeaderLen + ihl) return r;
  v.l3_offset = kEthHeaderLen;
  v.l4_offset = kEthHeaderLen + ihl;
  v.ip_proto = ip[9];
  v.ip_src = Ipv4Addr{detail::load_be32(ip + 12)};
  v.ip_dst = Ipv4Addr{detail::load_be32(ip + 16)};
  if (v.ip_proto != kIpProtoUdp) {
    r.status = ParseStatus::unsupported_protocol;
    return r;
  }
  if (frame.size() < v.l4_offset + kUdpHeaderLen) return r;
  const std::uint8_t* udp = frame.data() + v.l4_offset;
  v.udp_src = detail::load_be16(udp);
  v.udp_dst = detail::load_be16(udp + 2);
  std::size_t udp_len = detail::load_be16(udp + 4);
  if (udp_len < kUdpHeaderLen || v.l4_offset + udp_len > frame.size()) return r;
  v.udp_payload_len = udp_len - kUdpHeaderLen;
  r.status = ParseStatus::ok;
  return r;
}

/// Writes the view's addressing fields back into `frame` at the offsets the
/// view was decoded from. Checksums are left untouched.
inline void write_back(const HeaderView& v, std::span<std::uint8_t> frame) {
  std::copy(v.eth_dst.bytes.begin(), v.eth_dst.bytes.end(), frame.begin());
  std::copy(v.eth_src.bytes.begin(), v.eth_src.bytes.end(), frame.begin() + 6);
  detail::store_be16(frame.data() + 12, v.ether_type);
  std::uint8_t* ip = frame.data() + v.l3_offset;
  ip[9] = v.ip_proto;
  detail::store_be32(ip + 12, v.ip_src.value);
  detail::store_be32(ip + 16, v.ip_dst.value);
  std::uint8_t* udp = frame.data() + v.l4_offset;
  detail::store_be16(udp, v.udp_src);
  detail::store_be16(udp + 2, v.udp_dst);
}

inline void refresh_ipv4_checksum(std::span<std::uint8_t> frame, std::size_t l3_offset = kEthHeaderLen) {
  std::uint8_t* ip = frame.data() + l3_offset;
  ip[10] = ip[11] = 0;
  auto c = ipv4_header_checksum(std::span<const std::uint8_t>(ip, kIpv4HeaderLen));
  detail::store_be16(ip + 10, c);
}

inline void refresh_udp_checksum(std::span<std::uint8_t> frame, const HeaderView& v) {
  std::uint8_t* udp = frame.data() + v.l4_offset;
  udp[6] = udp[7] = 0;
  auto c = udp_checksum(v.ip_src.value, v.ip_dst.value,
                        std::span<const std::uint8_t>(udp, kUdpHeaderLen + v.udp_payload_len));
  detail::store_be16(udp + 6, c);
}

struct UdpEndpoints {
  MacAddr src_mac;
  MacAddr dst_mac;
  Ipv4Addr ip_src;
  Ipv4Addr ip_dst;
  std::uint16_t sport = 0;
  std::uint16_t dport = 0;
};

inline Packet build_udp_packet(const UdpEndpoints& ep, std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxUdpPayload) {
    throw std::invalid_argument("UDP payload of " + std::to_string(payload.size()) +
                                " bytes exceeds the 1458-byte MTU budget");
  }
  Packet pkt;
  auto& f = pkt.frame;
  f.resize(kMinBuiltFrame + payload.size());
  std::copy(ep.dst_mac.bytes.begin(), ep.dst_mac.bytes.end(), f.begin());
  std::copy(ep.src_mac.bytes.begin(), ep.src_mac.bytes.end(), f.begin() + 6);
  detail::store_be16(f.data() + 12, kEtherTypeIpv4);

  std::uint8_t* ip = f.data() + kEthHeaderLen;
  ip[0] = 0x45;
  ip[1] = 0;
  detail::store_be16(ip + 2, static_cast<std::uint16_t>(f.size() - kEthHeaderLen));
  detail::store_be16(ip + 4, 0);
  detail::store_be16(ip + 6, 0x4000);  // DF
  ip[8] = 64;
  ip[9] = kIpProtoUdp;
  detail::store_be32(ip + 12, ep.ip_src.value);
  detail::store_be32(ip + 16, ep.ip_dst.value);

  std::uint8_t* udp = ip + kIpv4HeaderLen;
  detail::store_be16(udp, ep.sport);
  detail::store_be16(udp + 2, ep.dport);
  detail::store_be16(udp + 4, static_cast<std::uint16_t>(kUdpHeaderLen + payload.size()));
  std::copy(payload.begin(), payload.end(), udp + kUdpHeaderLen);

  refresh_ipv4_checksum(f);
  HeaderView v;
  v.ip_src = ep.ip_src;
  v.ip_dst = ep.ip_dst;
  v.udp_payload_len = payload.size();
  refresh_udp_checksum(f, v);
  return pkt;
}

inline std::span<const std::uint8_t> udp_payload(const Packet& pkt, const HeaderView& v) {
  return std::span<const std::uint8_t>(pkt.frame).subspan(v.payload_offset(), v.udp_payload_len);
}

/// Bytes a frame (stored without FCS) occupies on the wire.
constexpr std::size_t wire_size(std::size_t frame_len) { return frame_len + kWireOverhead; }

constexpr std::size_t frame_size_for_payload(std::size_t udp_payload) { return kMinBuiltFrame + udp_payload; }

/// Standard DNS query: 12-byte header (RD set), QNAME, QTYPE A, QCLASS IN.
inline std::vector<std::uint8_t> dns_query(std::string_view name, std::uint16_t id = 0) {
  std::vector<std::uint8_t> out(12, 0);
  detail::store_be16(out.data(), id);
  detail::store_be16(out.data() + 2, 0x0100);
  detail::store_be16(out.data() + 4, 1);
  while (!name.empty()) {
    auto dot = name.find('.');
    auto label = name.substr(0, dot);
    if (label.size() > 63) {
      throw std::invalid_argument("DNS label exceeds 63 bytes: " + std::string(label.substr(0, 16)) + "...");
    }
    if (label.empty()) throw std::invalid_argument("empty DNS label");
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
    if (dot == std::string_view::npos) break;
    name.remove_prefix(dot + 1);
  }
  out.push_back(0);
  out.push_back(0x00);
  out.push_back(0x01);  // QTYPE A
  out.push_back(0x00);
  out.push_back(0x01);  // QCLASS IN
  return out;
}

}  // namespace xenoflow
