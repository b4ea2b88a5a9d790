#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xenoflow/packet.hpp"

namespace xenoflow {

// Classic libpcap container, microsecond timestamps, LINKTYPE_ETHERNET.
// Frames are stored as-is, which for this library means without FCS.
inline constexpr std::uint32_t kPcapMagic = 0xA1B2C3D4;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

struct PcapRecord {
  SimTime timestamp_ns = 0;
  std::vector<std::uint8_t> frame;
};

class PcapWriter {
 public:
  explicit PcapWriter(const std::string& path, std::uint32_t snaplen = 65535)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open pcap file for writing: " + path);
    put32(kPcapMagic);
    put16(2);
    put16(4);
    put32(0);  // thiszone
    put32(0);  // sigfigs
    put32(snaplen);
    put32(kLinkTypeEthernet);
  }

  void write(SimTime timestamp_ns, std::span<const std::uint8_t> frame) {
    put32(static_cast<std::uint32_t>(timestamp_ns / 1'000'000'000ULL));
    put32(static_cast<std::uint32_t>((timestamp_ns / 1000ULL) % 1'000'000ULL));
    put32(static_cast<std::uint32_t>(frame.size()));
    put32(static_cast<std::uint32_t>(frame.size()));
    out_.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    if (!out_) throw std::runtime_error("pcap write failed");
  }

  void write(const Packet& pkt) { write(pkt.arrival_ns, pkt.frame); }

 private:
  // Native byte order; readers detect it from the magic.
  void put32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
  void put16(std::uint16_t v) { out_.write(reinterpret_cast<const char*>(&v), 2); }

  std::ofstream out_;
};

inline std::vector<PcapRecord> read_pcap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open pcap file: " + path);
  auto get32 = [&](bool swap) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return swap ? __builtin_bswap32(v) : v;
  };
  std::uint32_t magic = get32(false);
  bool swap = false;
  if (magic == __builtin_bswap32(kPcapMagic)) {
    swap = true;
  } else if (magic != kPcapMagic) {
    throw std::runtime_error("not a classic microsecond pcap file: " + path);
  }
  char rest[20];
  in.read(rest, sizeof rest);
  std::uint32_t linktype;
  std::memcpy(&linktype, rest + 16, 4);
  if (swap) linktype = __builtin_bswap32(linktype);
  if (!in || linktype != kLinkTypeEthernet) throw std::runtime_error("unsupported pcap linktype");

  std::vector<PcapRecord> records;
  while (in.peek() != std::ifstream::traits_type::eof()) {
    std::uint32_t sec = get32(swap);
    std::uint32_t usec = get32(swap);
    std::uint32_t incl = get32(swap);
    get32(swap);
    if (!in) throw std::runtime_error("truncated pcap record header");
    PcapRecord r;
    r.timestamp_ns = std::uint64_t{sec} * 1'000'000'000ULL + std::uint64_t{usec} * 1000ULL;
    r.frame.resize(incl);
    in.read(reinterpret_cast<char*>(r.frame.data()), incl);
    if (!in) throw std::runtime_error("truncated pcap record");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace xenoflow
