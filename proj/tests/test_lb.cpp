#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xenoflow/lb.hpp"
#include "xenoflow/traffic.hpp"

using namespace xenoflow;

namespace {

LbConfig backends(std::size_t n, LbStrategy s = LbStrategy::low_bits) {
  LbConfig c;
  c.out_port = 1;
  c.strategy = s;
  for (std::size_t i = 0; i < n; ++i) c.backends.push_back({MacAddr::from_u64(0x020000000002 + i), "fips" + std::to_string(2 + i)});
  return c;
}

Packet random_packet(std::mt19937_64& rng) {
  UdpEndpoints ep;
  ep.src_mac = MacAddr::from_u64(0x020000000004);
  ep.dst_mac = MacAddr::from_u64(0x020000000005);
  ep.ip_src = Ipv4Addr{static_cast<std::uint32_t>(rng())};
  ep.ip_dst = Ipv4Addr{static_cast<std::uint32_t>(rng())};
  ep.sport = static_cast<std::uint16_t>(rng());
  ep.dport = static_cast<std::uint16_t>(rng());
  std::vector<std::uint8_t> pl(rng() % 40);
  for (auto& b : pl) b = static_cast<std::uint8_t>(rng());
  auto p = build_udp_packet(ep, pl);
  p.arrival_ns = 1'000'000;
  return p;
}

}  // namespace

TEST(LowBits, TwoBackendLayout) {
  Engine e;
  auto root = build_low_bits_lb(e, backends(2));
  EXPECT_EQ(e.root(), root);
  EXPECT_EQ(e.entry_count(root), 2u);
  const auto& spec = e.pipe_spec(root);
  ASSERT_EQ(spec.match.size(), 1u);
  EXPECT_EQ(spec.match[0].field, FieldSelector::ip_src);
  EXPECT_EQ(spec.match[0].mask, 0x1u);
  EXPECT_EQ(spec.match[0].value, 0xFFFFFFFFu);
  EXPECT_EQ(e.miss_forward(root), ForwardTarget::slow_path());
  EXPECT_TRUE(spec.monitor);

  UdpEndpoints ep;
  ep.ip_src = Ipv4Addr::parse("10.0.0.4");
  auto pkt = build_udp_packet(ep, std::vector<std::uint8_t>{});
  EXPECT_TRUE(e.matches(root, 0, pkt));
  EXPECT_FALSE(e.matches(root, 1, pkt));
}

TEST(LowBits, SingleBackendTakesEverything) {
  Engine e;
  auto root = build_low_bits_lb(e, backends(1));
  EXPECT_EQ(e.pipe_spec(root).match[0].mask, 0x0u);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    auto v = e.process(random_packet(rng));
    ASSERT_TRUE(std::holds_alternative<Egress>(v));
    EXPECT_EQ(parse(std::get<Egress>(v).packet.frame).view.eth_dst, MacAddr::from_u64(0x020000000002));
  }
}

TEST(LowBits, Preconditions) {
  Engine e;
  EXPECT_THROW(build_low_bits_lb(e, backends(3)), std::invalid_argument);
  EXPECT_THROW(build_low_bits_lb(e, backends(0)), std::invalid_argument);
  auto dup = backends(2);
  dup.backends[1].mac = dup.backends[0].mac;
  EXPECT_THROW(build_low_bits_lb(e, dup), std::invalid_argument);
  build_low_bits_lb(e, backends(2));
  EXPECT_THROW(build_low_bits_lb(e, backends(2)), std::invalid_argument);
}

TEST(LowBits, RoutingCorrectnessFourBackends) {
  Engine e;
  auto cfg = backends(4);
  auto root = build_low_bits_lb(e, cfg);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    auto in = random_packet(rng);
    auto src = parse(in.frame).view.ip_src.value;
    auto v = e.process(in);
    ASSERT_TRUE(std::holds_alternative<Egress>(v));
    const auto& out = std::get<Egress>(v).packet;
    EXPECT_EQ(parse(out.frame).view.eth_dst, cfg.backends[src & 3].mac);
    EXPECT_TRUE(std::equal(in.frame.begin() + 6, in.frame.end(), out.frame.begin() + 6));
  }
  std::uint64_t total = 0;
  for (EntryId id = 0; id < 4; ++id) total += e.counters(root, id).packets;
  EXPECT_EQ(total, 10000u);
}

TEST(LowBits, NonUdpNeverReachesBackend) {
  Engine e;
  auto root = build_low_bits_lb(e, backends(2));
  std::mt19937_64 rng(4);
  auto p = random_packet(rng);
  p.frame[14 + 9] = 6;
  EXPECT_TRUE(std::holds_alternative<SlowPath>(e.process(p)));
  EXPECT_EQ(e.counters(root, 0).packets + e.counters(root, 1).packets, 0u);
}

TEST(LowBits, ParitySplitCountersExact) {
  Engine e;
  auto root = build_low_bits_lb(e, backends(2));
  TrafficProfile prof;
  prof.packet_count = 1000;
  prof.rate_pps = 1e6;
  prof.start_ns = 305'000;
  prof.ip_src_dist = ParitySplit{70, UniformRange{}};
  TrafficGenerator gen(prof);
  while (auto tp = gen.next()) e.process(std::move(tp->packet));
  EXPECT_EQ(e.counters(root, 0).packets, 700u);
  EXPECT_EQ(e.counters(root, 1).packets, 300u);
}

TEST(Hash, SingleBackend) {
  Engine e;
  auto pl = build_hash_lb(e, backends(1, LbStrategy::five_tuple_hash));
  EXPECT_EQ(e.root(), pl.hash_pipe);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto v = e.process(random_packet(rng));
    ASSERT_TRUE(std::holds_alternative<Egress>(v));
    EXPECT_EQ(parse(std::get<Egress>(v).packet.frame).view.eth_dst, MacAddr::from_u64(0x020000000002));
  }
}

TEST(Hash, AgreesWithOracleAndIsStable) {
  for (std::size_t n : {2u, 3u, 5u}) {
    Engine e;
    auto cfg = backends(n, LbStrategy::five_tuple_hash);
    build_hash_lb(e, cfg);
    std::mt19937_64 rng(6 + n);
    for (int i = 0; i < 2000; ++i) {
      auto in = random_packet(rng);
      auto v1 = e.process(in);
      auto v2 = e.process(in);
      const auto& out = std::get<Egress>(v1).packet;
      std::vector<std::uint8_t> key(13);
      std::copy(in.frame.begin() + 26, in.frame.begin() + 34, key.begin());
      key[8] = 17;
      std::copy(in.frame.begin() + 34, in.frame.begin() + 38, key.begin() + 9);
      auto want = oracle::crc32(key) % n;
      EXPECT_EQ(out.meta[0], want);
      EXPECT_EQ(parse(out.frame).view.eth_dst, cfg.backends[want].mac);
      EXPECT_EQ(std::get<Egress>(v2).packet.frame, out.frame);
    }
  }
}

TEST(Hash, BuildLbDispatch) {
  Engine a;
  auto low = build_lb(a, backends(2));
  EXPECT_EQ(a.pipe_spec(low).name, "xenoflow_root");
  Engine b;
  auto sel = build_lb(b, backends(2, LbStrategy::five_tuple_hash));
  EXPECT_EQ(b.pipe_spec(sel).name, "xenoflow_select");
  EXPECT_EQ(b.entry_count(sel), 2u);
}

TEST(Throughput, Definition) {
  EXPECT_DOUBLE_EQ(throughput_bps({0, 0}, {1, 12'500'000'000}, 1.0), 100e9);
  EXPECT_NEAR(throughput_bps({0, 0}, {96'700'000, 96'700'000ull * 64}, 1.0), 49.5104e9, 1e3);
  EXPECT_EQ(throughput_bps({5, 500}, {5, 500}, 2.0), 0.0);
  EXPECT_THROW(throughput_bps({0, 0}, {1, 1}, 0.0), std::invalid_argument);
  EXPECT_THROW(throughput_bps({2, 200}, {1, 100}, 1.0), std::invalid_argument);
}
