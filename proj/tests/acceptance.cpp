// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "xenoflow/experiments.hpp"

using namespace xenoflow;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(int n, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, false, std::string("exception: ") + e.what());
  }
}

template <class F>
double seconds(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string str(double v) { return fmt_num(v); }

LbConfig lb_config(std::size_t n, LbStrategy s) {
  auto c = default_lb_config(n, 1);
  c.strategy = s;
  return c;
}

Packet random_udp(std::mt19937_64& rng) {
  UdpEndpoints ep;
  ep.src_mac = MacAddr::from_u64(0x020000000004);
  ep.dst_mac = MacAddr::from_u64(0x020000000005);
  ep.ip_src = Ipv4Addr{static_cast<std::uint32_t>(rng())};
  ep.ip_dst = Ipv4Addr{static_cast<std::uint32_t>(rng())};
  ep.sport = static_cast<std::uint16_t>(rng());
  ep.dport = static_cast<std::uint16_t>(rng());
  std::vector<std::uint8_t> pl(rng() % 64);
  for (auto& b : pl) b = static_cast<std::uint8_t>(rng());
  auto p = build_udp_packet(ep, pl);
  p.arrival_ns = 1'000'000;
  return p;
}

void capacity_step() {
  auto spec = ExperimentSpec::defaults(ExperimentKind::rq2_throughput);
  Rq2Result r;
  double t = seconds([&] { r = run_rq2(spec); });
  double a22 = max_achieved_pps(r, 22);
  double a23 = max_achieved_pps(r, 23);
  bool conserved = !r.runs.empty();
  for (const auto& run : r.runs) conserved = conserved && run.counters.conserved();
  for (const auto& row : r.rows) conserved = conserved && row.counters.conserved();
  bool ok = a22 == 96.7e6 && a23 == 92.8e6 && conserved && t < 60;
  report(1, ok,
         "rq2 max achieved pps payload22=" + str(a22) + " payload23=" + str(a23) +
             " conservation=" + (conserved ? "exact" : "violated") + " runtime_s=" + str(t) + " (<60)");
}

void line_rate() {
  auto spec = ExperimentSpec::defaults(ExperimentKind::rq3_bandwidth);
  auto r = run_rq3(spec);
  double b22 = 0, b1024 = 0, last = -1;
  bool increasing = true;
  for (const auto& row : r.rows) {
    if (row.payload_bytes == 22) b22 = row.achieved_bps;
    if (row.payload_bytes == 1024) b1024 = row.achieved_bps;
    increasing = increasing && row.achieved_bps > last;
    last = row.achieved_bps;
  }
  const double want22 = 96.7e6 * 64 * 8;
  bool ok = std::fabs(b22 - want22) <= 1e-3 * want22 && b1024 >= 0.97 * 100e9 && increasing;
  report(2, ok,
         "rq3 payload22_bps=" + str(b22) + " (target " + str(want22) + " +-0.1%) payload1024_bps=" + str(b1024) +
             " (>=97e9) strictly_increasing=" + (increasing ? "yes" : "no"));
}

void latency_delta() {
  auto spec = ExperimentSpec::defaults(ExperimentKind::rq4_latency);
  Rq4Result r;
  double t = seconds([&] { r = run_rq4(spec); });
  bool ok = r.rows.size() == 3;
  double xeno = ok ? r.rows[1].added_latency_us : 0;
  double host = ok ? r.rows[2].added_latency_us : 0;
  ok = ok && std::fabs(xeno - 5.2) < 1e-6 && std::fabs(host - 9.3) < 1e-6 &&
       std::fabs(r.reduction_pct - 44.09) <= 0.5 && r.rows[1].samples == spec.probes * spec.repetitions && t < 10;
  report(3, ok,
         "rq4 added_us xenoflow=" + str(xeno) + " host=" + str(host) + " reduction_pct=" + str(r.reduction_pct) +
             " (44.09+-0.5) runtime_s=" + str(t) + " (<10)");
}

void load_profile() {
  auto spec = ExperimentSpec::defaults(ExperimentKind::rq5_latency_under_load);
  Rq5Result r;
  double t = seconds([&] { r = run_rq5(spec); });
  std::map<std::string, double> unloaded;
  for (const auto& row : r.rows) {
    if (row.load_fraction == 0) unloaded[row.split] = row.median_rtt_us;
  }
  bool ok = !r.rows.empty() && unloaded.size() == spec.splits.size();
  double worst_flat = 0;
  double min_rise = 1e300;
  for (const auto& row : r.rows) {
    auto it = unloaded.find(row.split);
    if (it == unloaded.end()) {
      ok = false;
      continue;
    }
    double rel = (row.median_rtt_us - it->second) / it->second;
    if (row.load_fraction <= 0.90) {
      worst_flat = std::max(worst_flat, std::fabs(rel));
      ok = ok && std::fabs(rel) <= 0.01;
    }
    if (row.load_fraction >= 0.99) {
      min_rise = std::min(min_rise, row.median_rtt_us - it->second);
      ok = ok && row.median_rtt_us > it->second;
    }
  }
  ok = ok && min_rise < 1e300 && t < 60;
  report(4, ok,
         "rq5 splits=" + std::to_string(unloaded.size()) + " max_rel_dev_at_le90=" + str(worst_flat) +
             " (<=0.01) min_rise_us_at_ge99=" + str(min_rise) + " (>0) runtime_s=" + str(t) + " (<60)");
}

void slow_path() {
  const std::uint64_t count = 200'000;
  const double rate = 10e6;  // below line rate for 1066-byte frames
  auto run = [&](bool wired) {
    auto tb = make_testbed({}, 2, wired);
    TrafficProfile p;
    p.payload_bytes = 1024;
    p.rate_pps = rate;
    p.packet_count = count;
    p.ingress_port = tb.ingress;
    p.start_ns = traffic_start_ns(tb.engine);
    RunOptions o;
    o.end_ns = p.start_ns + static_cast<SimTime>(detail::window_ns(count, rate).ceil());
    return tb.fabric.run(tb.engine, TrafficGenerator(p), o);
  };
  double window_s = static_cast<double>(count) / rate;
  auto bad = run(false);
  double bad_pps = static_cast<double>(bad.achieved + bad.slow_path_delivered) / window_s;
  double bad_bps = static_cast<double>(bad.achieved_bytes + bad.slow_path_bytes) * 8 / window_s;
  auto good = run(true);
  double good_pps = static_cast<double>(good.achieved) / window_s;
  bool ok = bad.achieved == 0 && bad_pps <= 100e3 && bad_bps <= 1e9 && bad.conserved() && good.dropped() == 0 &&
            good.slow_path_delivered == 0 && good_pps >= rate * (1 - 1e-9) && good.conserved();
  report(5, ok,
         "unwired pps=" + str(bad_pps) + " (<=1e5) bps=" + str(bad_bps) + " (<=1e9); wired fast-path pps=" +
             str(good_pps) + " of offered " + str(rate));
}

void match_oracle() {
  std::mt19937_64 rng(6);
  std::size_t templates = 1200, checks = 0, disagreements = 0;
  for (std::size_t t = 0; t < templates; ++t) {
    bool implicit = rng() % 4 == 0;
    bool variable = rng() % 2 == 0;
    std::uint64_t mask = rng() & 0xFFFFFFFF;
    std::uint64_t value = rng() & 0xFFFFFFFF;
    std::uint32_t base = static_cast<std::uint32_t>(rng()) & 0xFFFFFF00u;
    if (rng() % 2 == 0) base = static_cast<std::uint32_t>(value & 0xFFFFFF00u);

    Engine e;
    PipeSpec s;
    s.is_root = true;
    std::optional<std::uint64_t> m = implicit ? std::nullopt : std::optional<std::uint64_t>(mask);
    s.match = {variable ? MatchField::variable(FieldSelector::ip_src, m)
                        : MatchField::constant(FieldSelector::ip_src, value, m)};
    auto root = e.create_pipe(s);
    PipeEntry entry{{}, {}, ForwardTarget::drop()};
    if (variable) entry.match_values = {{FieldSelector::ip_src, value}};
    e.add_entry(root, entry);

    std::uint64_t eff_mask = implicit ? 0xFFFFFFFF : mask;
    UdpEndpoints ep;
    for (std::uint32_t v = 0; v < 256; ++v) {
      ep.ip_src = Ipv4Addr{base | v};
      auto pkt = build_udp_packet(ep, std::vector<std::uint8_t>{});
      bool want = oracle::masked_equal(base | v, value, eff_mask, 32);
      disagreements += e.matches(root, 0, pkt) != want;
      ++checks;
    }
  }
  report(6, disagreements == 0 && templates >= 1000,
         "templates=" + std::to_string(templates) + " checks=" + std::to_string(checks) +
             " disagreements=" + std::to_string(disagreements));
}

void routing() {
  Engine e;
  auto cfg = lb_config(2, LbStrategy::low_bits);
  auto root = build_low_bits_lb(e, cfg);
  std::mt19937_64 rng(7);
  const std::size_t n = 100'000;
  std::size_t wrong_backend = 0, wrong_mac = 0, other_bytes = 0, not_egress = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto in = random_udp(rng);
    auto src = parse(in.frame).view.ip_src.value;
    auto v = e.process(in);
    if (!std::holds_alternative<Egress>(v)) {
      ++not_egress;
      continue;
    }
    const auto& out = std::get<Egress>(v).packet;
    auto dst = parse(out.frame).view.eth_dst;
    auto idx = static_cast<std::size_t>(dst.to_u64() - cfg.backends[0].mac.to_u64());
    wrong_backend += idx != (src & 1);
    wrong_mac += dst != cfg.backends[src & 1].mac;
    other_bytes += out.frame.size() != in.frame.size() || !std::equal(in.frame.begin() + 6, in.frame.end(), out.frame.begin() + 6);
  }
  auto c0 = e.counters(root, 0).packets, c1 = e.counters(root, 1).packets;
  bool ok = not_egress == 0 && wrong_backend == 0 && wrong_mac == 0 && other_bytes == 0 && c0 + c1 == n;
  report(7, ok,
         "packets=" + std::to_string(n) + " wrong_backend=" + std::to_string(wrong_backend) + " wrong_mac=" +
             std::to_string(wrong_mac) + " other_bytes_changed=" + std::to_string(other_bytes) +
             " counter_sum=" + std::to_string(c0 + c1));
}

void hash_agreement() {
  bool ok = true;
  std::string detail;
  for (std::size_t n : {2u, 3u, 4u, 7u}) {
    Engine e;
    auto cfg = lb_config(n, LbStrategy::five_tuple_hash);
    build_hash_lb(e, cfg);
    std::mt19937_64 rng(8 + n);
    std::size_t mismatches = 0;
    std::vector<std::size_t> share(n, 0);
    const std::size_t total = 100'000;
    for (std::size_t i = 0; i < total; ++i) {
      auto in = random_udp(rng);
      std::vector<std::uint8_t> key(13);
      std::copy(in.frame.begin() + 26, in.frame.begin() + 34, key.begin());
      key[8] = in.frame[23];
      std::copy(in.frame.begin() + 34, in.frame.begin() + 38, key.begin() + 9);
      auto want = oracle::crc32(key) % n;
      auto v = e.process(std::move(in));
      if (!std::holds_alternative<Egress>(v)) {
        ++mismatches;
        continue;
      }
      const auto& out = std::get<Egress>(v).packet;
      mismatches += out.meta[0] != want || parse(out.frame).view.eth_dst != cfg.backends[want].mac;
      ++share[want];
    }
    ok = ok && mismatches == 0;
    detail += " N=" + std::to_string(n) + " mismatches=" + std::to_string(mismatches);
    if (n == 2) {
      double pct = 100.0 * static_cast<double>(share[0]) / static_cast<double>(total);
      ok = ok && std::fabs(pct - 50) <= 1;
      detail += " share0_pct=" + str(pct);
    }
  }
  report(8, ok, "1e5 packets per N;" + detail);
}

void determinism() {
  bool ok = true;
  std::string detail;
  auto check = [&](const std::string& name, auto run, ExperimentSpec spec) {
    auto a = run(spec);
    spec.workers = spec.workers == 1 ? 2 : 1;
    auto b = run(spec);
    bool same = to_csv(a) == to_csv(b) && runs_csv(a.runs) == runs_csv(b.runs) && to_dat(a) == to_dat(b);
    ok = ok && same;
    detail += " " + name + "=" + (same ? "identical" : "differs");
  };
  auto scaled = [](ExperimentKind k, std::uint64_t scale) {
    auto s = ExperimentSpec::defaults(k);
    s.scale = scale;
    return s;
  };
  check("rq2", [](const ExperimentSpec& s) { return run_rq2(s); }, scaled(ExperimentKind::rq2_throughput, 10000));
  check("rq3", [](const ExperimentSpec& s) { return run_rq3(s); }, scaled(ExperimentKind::rq3_bandwidth, 10000));
  check("rq4", [](const ExperimentSpec& s) { return run_rq4(s); }, ExperimentSpec::defaults(ExperimentKind::rq4_latency));
  check("rq5", [](const ExperimentSpec& s) { return run_rq5(s); },
        scaled(ExperimentKind::rq5_latency_under_load, 20000));
  report(9, ok, "two runs per experiment, differing worker counts:" + detail);
}

void limits() {
  bool pipe16 = false, entry262145 = false;
  std::size_t pipes_ok = 0, entries_ok = 0;
  {
    Engine e;
    try {
      for (int i = 0; i < 16; ++i) {
        PipeSpec s;
        s.name = "p" + std::to_string(i);
        e.create_pipe(s);
        ++pipes_ok;
      }
    } catch (const FlowError& err) {
      pipe16 = err.code() == FlowErrc::pipe_limit && pipes_ok == 15;
    }
  }
  {
    Engine e;
    PipeSpec s;
    s.is_root = true;
    s.match = {MatchField::variable(FieldSelector::ip_dst)};
    auto pipe = e.create_pipe(s);
    try {
      for (std::uint32_t i = 0; i < 262'145; ++i) {
        e.add_entry(pipe, PipeEntry{{{FieldSelector::ip_dst, i}}, {}, ForwardTarget::drop()});
        ++entries_ok;
      }
    } catch (const FlowError& err) {
      entry262145 = err.code() == FlowErrc::entry_limit && entries_ok == 262'144;
    }
  }
  bool activation = false;
  {
    Engine e;
    auto root = build_low_bits_lb(e, lb_config(2, LbStrategy::low_bits), 0);
    UdpEndpoints ep;
    auto at = [&](SimTime t) {
      auto p = build_udp_packet(ep, std::vector<std::uint8_t>(22, 0));
      p.arrival_ns = t;
      return e.process(p);
    };
    activation = e.entry_active_at(root, 0) == 305'000 && std::holds_alternative<SlowPath>(at(0)) &&
                 std::holds_alternative<SlowPath>(at(304'999)) && std::holds_alternative<Egress>(at(305'000)) &&
                 std::holds_alternative<Egress>(at(305'001));
  }
  report(10, pipe16 && entry262145 && activation,
         std::string("16th pipe rejected=") + (pipe16 ? "yes" : "no") + " 262145th entry rejected=" +
             (entry262145 ? "yes" : "no") + " inactive before 305us, active from 305us=" + (activation ? "yes" : "no"));
}

void performance() {
  Engine e;
  build_low_bits_lb(e, lb_config(2, LbStrategy::low_bits));
  TrafficProfile p;
  p.packet_count = 1'000'000;
  p.rate_pps = 10e6;
  p.start_ns = traffic_start_ns(e);
  p.ip_src_dist = ParitySplit{50, UniformRange{}};
  auto pkts = generate(p);
  std::size_t egress = 0;
  double best = 0;
  for (int round = 0; round < 3; ++round) {
    std::vector<Packet> batch;
    batch.reserve(pkts.size());
    for (const auto& tp : pkts) batch.push_back(tp.packet);
    egress = 0;
    double t = seconds([&] {
      for (auto& pkt : batch) egress += std::holds_alternative<Egress>(e.process(std::move(pkt)));
    });
    best = std::max(best, static_cast<double>(batch.size()) / t);
  }
  report(11, best >= 1e6 && egress == pkts.size(),
         "single-thread engine throughput pps=" + str(std::round(best)) + " (>=1e6) egress=" + std::to_string(egress));
}

}  // namespace

int main() {
  guarded(1, capacity_step);
  guarded(2, line_rate);
  guarded(3, latency_delta);
  guarded(4, load_profile);
  guarded(5, slow_path);
  guarded(6, match_oracle);
  guarded(7, routing);
  guarded(8, hash_agreement);
  guarded(9, determinism);
  guarded(10, limits);
  guarded(11, performance);
  std::printf("%s: %d failure(s)\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
