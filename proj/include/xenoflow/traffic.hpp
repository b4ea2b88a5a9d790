#pragma once

// Deterministic traffic generation. Randomness comes from std::mt19937_64
// (fully specified by the C++ standard) and is consumed only through raw
// 64-bit draws, so a (profile, seed) pair yields the same stream everywhere.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "xenoflow/fabric.hpp"
#include "xenoflow/packet.hpp"
#include "xenoflow/rational.hpp"

namespace xenoflow {

inline constexpr std::uint16_t kDnsPort = 53;

struct UniformRange {
  Ipv4Addr lo{0x0A000000};
  Ipv4Addr hi{0x0AFFFFFF};
};

// Exactly floor(even_percent) even source addresses in every 100 packets.
struct ParitySplit {
  double even_percent = 50;
  UniformRange range;
};

using SourceDistribution = std::variant<UniformRange, ParitySplit>;

struct TrafficProfile {
  std::size_t payload_bytes = 22;
  double rate_pps = 1e6;
  std::uint64_t packet_count = 1000;
  std::optional<double> duration_s;  // overrides packet_count when set
  SourceDistribution ip_src_dist = UniformRange{};
  Ipv4Addr dst_ip{0x0A010001};   // 10.1.0.1
  std::uint16_t dst_port = kDnsPort;
  std::optional<std::uint16_t> src_port;  // nullopt: random ephemeral port per packet
  MacAddr src_mac = MacAddr::from_u64(0x020000000004);
  MacAddr dst_mac = MacAddr::from_u64(0x020000000005);
  PortId ingress_port = 0;
  SimTime start_ns = 0;
  std::string qname = "a.de";  // 22-byte DNS query
  bool exponential_jitter = false;
  std::uint64_t seed = 1;

  std::uint64_t count() const {
    if (duration_s) return static_cast<std::uint64_t>(std::floor(*duration_s * rate_pps));
    return packet_count;
  }

  void validate() const {
    if (!(rate_pps > 0)) throw std::invalid_argument("traffic rate must be positive");
    if (payload_bytes > kMaxUdpPayload) throw std::invalid_argument("payload exceeds 1458 bytes");
    if (auto* p = std::get_if<ParitySplit>(&ip_src_dist)) {
      if (!(p->even_percent >= 0 && p->even_percent <= 100)) {
        throw std::invalid_argument("even_percent must lie in [0, 100]");
      }
      if (p->range.hi.value <= p->range.lo.value) throw std::invalid_argument("parity split needs at least two addresses");
    }
    if (auto* u = std::get_if<UniformRange>(&ip_src_dist)) {
      if (u->hi.value < u->lo.value) throw std::invalid_argument("empty source address range");
    }
  }
};

/// DNS query for `qname`, zero-padded or truncated to exactly `payload_bytes`.
inline std::vector<std::uint8_t> dns_payload(const std::string& qname, std::size_t payload_bytes, std::uint16_t id) {
  auto q = dns_query(qname, id);
  q.resize(payload_bytes, 0);
  return q;
}

class TrafficGenerator {
 public:
  explicit TrafficGenerator(TrafficProfile profile)
      : profile_(std::move(profile)), rng_(profile_.seed), remaining_(profile_.count()) {
    profile_.validate();
    interval_ns_ = Rational::from_double(profile_.rate_pps).reciprocal() * Rational(1'000'000'000);
  }

  const TrafficProfile& profile() const { return profile_; }

  /// Nominal send time of packet k under deterministic pacing.
  SimTime nominal_time(std::uint64_t k) const {
    return profile_.start_ns + static_cast<SimTime>((interval_ns_ * Rational(static_cast<std::int64_t>(k))).floor());
  }

  std::optional<TimedPacket> next() {
    if (emitted_ == remaining_) return std::nullopt;
    auto k = emitted_++;

    SimTime t;
    if (profile_.exponential_jitter) {
      // Exponential inter-arrivals with the nominal mean.
      double u = (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
      jitter_clock_ns_ += -std::log(u) * interval_ns_.to_double();
      t = profile_.start_ns + static_cast<SimTime>(jitter_clock_ns_);
    } else {
      t = nominal_time(k);
    }

    UdpEndpoints ep;
    ep.src_mac = profile_.src_mac;
    ep.dst_mac = profile_.dst_mac;
    ep.ip_src = next_source(k);
    ep.ip_dst = profile_.dst_ip;
    ep.sport = profile_.src_port ? *profile_.src_port : static_cast<std::uint16_t>(1024 + draw(65536 - 1024));
    ep.dport = profile_.dst_port;
    auto payload = dns_payload(profile_.qname, profile_.payload_bytes, static_cast<std::uint16_t>(draw(65536)));
    TimedPacket tp{t, build_udp_packet(ep, payload)};
    tp.packet.ingress_port = profile_.ingress_port;
    tp.packet.arrival_ns = t;
    return tp;
  }

 private:
  std::uint64_t draw(std::uint64_t bound) { return rng_() % bound; }

  Ipv4Addr next_source(std::uint64_t k) {
    if (auto* u = std::get_if<UniformRange>(&profile_.ip_src_dist)) {
      std::uint64_t span = std::uint64_t{u->hi.value} - u->lo.value + 1;
      return Ipv4Addr{static_cast<std::uint32_t>(u->lo.value + draw(span))};
    }
    const auto& split = std::get<ParitySplit>(profile_.ip_src_dist);
    auto slot = k % 100;
    if (slot == 0) {
      // Fresh window: place floor(x) even slots at shuffled positions.
      auto evens = static_cast<std::size_t>(std::floor(split.even_percent));
      for (std::size_t i = 0; i < window_.size(); ++i) window_[i] = i < evens;
      for (std::size_t i = window_.size() - 1; i > 0; --i) std::swap(window_[i], window_[draw(i + 1)]);
    }
    const auto& range = split.range;
    auto base =
        static_cast<std::uint32_t>(range.lo.value + draw(std::uint64_t{range.hi.value} - range.lo.value + 1));
    return Ipv4Addr{(base & ~1u) | (window_[slot] ? 0u : 1u)};
  }

  TrafficProfile profile_;
  std::mt19937_64 rng_;
  std::uint64_t remaining_;
  std::uint64_t emitted_ = 0;
  Rational interval_ns_;
  double jitter_clock_ns_ = 0;
  std::array<bool, 100> window_{};
};

inline std::vector<TimedPacket> generate(const TrafficProfile& profile) {
  TrafficGenerator gen(profile);
  std::vector<TimedPacket> out;
  out.reserve(profile.count());
  while (auto tp = gen.next()) out.push_back(std::move(*tp));
  return out;
}

/// Latency probes: a fixed even client address and the probe UDP port, so the
/// fabric can account them apart from background traffic.
inline TrafficGenerator probe_stream(double rate_pps, std::uint64_t count, std::size_t payload_bytes,
                                     SimTime start_ns = 0, PortId ingress = 0, std::uint64_t seed = 7) {
  TrafficProfile p;
  p.payload_bytes = payload_bytes;
  p.rate_pps = rate_pps;
  p.packet_count = count;
  p.ip_src_dist = UniformRange{Ipv4Addr{0x0A000002}, Ipv4Addr{0x0A000002}};
  p.dst_port = kProbePort;
  p.src_port = 40001;
  p.src_mac = MacAddr::from_u64(0x020000000001);
  p.ingress_port = ingress;
  p.start_ns = start_ns;
  p.seed = seed;
  return TrafficGenerator(p);
}

/// Time-ordered merge of two streams; ties go to the first.
template <PacketStream A, PacketStream B>
class MergedStream {
 public:
  MergedStream(A a, B b) : a_(std::move(a)), b_(std::move(b)), head_a_(a_.next()), head_b_(b_.next()) {}

  std::optional<TimedPacket> next() {
    if (!head_a_ && !head_b_) return std::nullopt;
    bool take_a = head_a_ && (!head_b_ || head_a_->send_time_ns <= head_b_->send_time_ns);
    auto& head = take_a ? head_a_ : head_b_;
    auto out = std::move(head);
    head = take_a ? a_.next() : b_.next();
    return out;
  }

 private:
  A a_;
  B b_;
  std::optional<TimedPacket> head_a_;
  std::optional<TimedPacket> head_b_;
};

}  // namespace xenoflow
