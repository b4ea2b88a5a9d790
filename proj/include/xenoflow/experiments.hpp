#pragma once

// Benchmark harness: throughput (rq2), bandwidth (rq3), latency (rq4) and
// latency under load (rq5) on the simulated testbed. Every sweep point owns
// its engine and fabric, so points run independently and merge in
// (point, repetition) order.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xenoflow/capacity.hpp"
#include "xenoflow/fabric.hpp"
#include "xenoflow/flowpipe.hpp"
#include "xenoflow/lb.hpp"
#include "xenoflow/stats.hpp"
#include "xenoflow/traffic.hpp"
#include "xenoflow/worker_pool.hpp"

namespace xenoflow {

enum class ExperimentKind : std::uint8_t {
  rq2_throughput,
  rq3_bandwidth,
  rq4_latency,
  rq5_latency_under_load,
  custom,
};

inline std::string_view experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::rq2_throughput: return "rq2";
    case ExperimentKind::rq3_bandwidth: return "rq3";
    case ExperimentKind::rq4_latency: return "rq4";
    case ExperimentKind::rq5_latency_under_load: return "rq5";
    case ExperimentKind::custom: return "custom";
  }
  return "?";
}

struct TrafficSplit {
  std::string label;
  std::size_t backends = 2;
  double even_percent = 50;  // share of background sent to the even (first) backend
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::rq2_throughput;
  std::uint32_t repetitions = 3;
  std::uint64_t seed = 1;
  std::uint64_t scale = 1'000'000;  // background events per sweep point
  std::vector<std::size_t> payloads;
  std::vector<double> offered_pps;
  std::vector<double> load_fractions;
  std::vector<TrafficSplit> splits;
  std::uint64_t probes = 2700;
  double probe_rate_pps = 10'000;  // used when there is no background to pace against
  std::size_t probe_payload = 22;
  std::size_t background_payload = 22;
  CapacityModel model;
  unsigned workers = 0;  // 0: one per hardware thread

  static ExperimentSpec defaults(ExperimentKind kind) {
    ExperimentSpec s;
    s.kind = kind;
    switch (kind) {
      case ExperimentKind::rq2_throughput:
        s.payloads = {0, 22, 23, 64, 512, 1024};
        s.offered_pps = {50e6, 90e6, 100e6, 110e6};
        break;
      case ExperimentKind::rq3_bandwidth: s.payloads = {0, 22, 64, 128, 256, 512, 1024, 1458}; break;
      case ExperimentKind::rq5_latency_under_load:
        s.load_fractions = {0.0, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99};
        s.splits = {{"single", 1, 100}, {"50/50", 2, 50}, {"100/0", 2, 100}, {"0/100", 2, 0}};
        break;
      default: break;
    }
    return s;
  }

  void validate() const {
    if (repetitions < 3) throw std::invalid_argument("experiments need at least 3 repetitions");
    if (scale == 0) throw std::invalid_argument("scale must be positive");
    for (auto p : payloads) {
      if (p > kMaxUdpPayload) throw std::invalid_argument("payload exceeds 1458 bytes");
    }
    for (auto r : offered_pps) {
      if (!(r > 0)) throw std::invalid_argument("offered rates must be positive");
    }
    for (auto f : load_fractions) {
      if (!(f >= 0 && f < 1)) throw std::invalid_argument("load fractions must lie in [0, 1)");
    }
    for (const auto& s : splits) {
      if (s.backends == 0 || !std::has_single_bit(s.backends)) {
        throw std::invalid_argument("split backend count must be a power of two");
      }
      if (!(s.even_percent >= 0 && s.even_percent <= 100)) throw std::invalid_argument("split percent out of range");
    }
    if (!(probe_rate_pps > 0)) throw std::invalid_argument("probe rate must be positive");
    model.validate();
  }
};

// One row of the per-run CSV.
struct RunRecord {
  std::string experiment;
  std::uint32_t run = 0;
  std::size_t payload_bytes = 0;
  double offered_pps = 0;
  double achieved_pps = 0;
  std::uint64_t dropped_capacity = 0;
  std::uint64_t dropped_queue = 0;
  std::uint64_t slow_path = 0;
  double median_rtt_us = 0;
  double stddev_rtt_us = 0;
  TrafficCounters counters;
};

struct Rq2Row {
  std::size_t payload_bytes = 0;
  double offered_pps = 0;
  double achieved_pps = 0;  // median over repetitions
  TrafficCounters counters;  // of the median repetition
};

struct Rq3Row {
  std::size_t payload_bytes = 0;
  double achieved_bps = 0;
  double line_rate_bps = 0;
  double achieved_pps = 0;
};

struct Rq4Row {
  std::string path;
  double median_rtt_us = 0;
  double stddev_rtt_us = 0;
  double added_latency_us = 0;
  std::size_t samples = 0;
};

struct Rq5Row {
  std::string split;
  double load_fraction = 0;
  double background_pps = 0;
  double median_rtt_us = 0;
  double stddev_rtt_us = 0;
  std::uint64_t probes_sent = 0;
  std::uint64_t probes_delivered = 0;
};

template <class Row>
struct ExperimentResult {
  std::vector<Row> rows;
  std::vector<RunRecord> runs;
};

struct Rq4Result : ExperimentResult<Rq4Row> {
  double reduction_pct = 0;  // (host - xenoflow) / host, on added latency
};

using Rq2Result = ExperimentResult<Rq2Row>;
using Rq3Result = ExperimentResult<Rq3Row>;
using Rq5Result = ExperimentResult<Rq5Row>;

// ---------------------------------------------------------------------------
// Testbed

struct Testbed {
  Fabric fabric;
  Engine engine;
  PortId ingress = 0;
  PortId egress = 0;
};

inline constexpr std::string_view kIngressPort = "pf1hpf";
inline constexpr std::string_view kEgressPort = "p1";

inline LbConfig default_lb_config(std::size_t backends, PortId out_port) {
  LbConfig c;
  c.out_port = out_port;
  for (std::size_t i = 0; i < backends; ++i) {
    c.backends.push_back({MacAddr::from_u64(0x020000000002 + i), "fips" + std::to_string(2 + i)});
  }
  return c;
}

/// Ports p0/p1/pf1hpf, optional pf1hpf->p1 wiring, and a low-bits load
/// balancer installed at t=0.
inline Testbed make_testbed(const CapacityModel& model, std::size_t backends, bool wired = true) {
  Testbed tb{Fabric(model), Engine(), 0, 0};
  tb.fabric.add_port("p0");
  tb.egress = tb.fabric.add_port(std::string(kEgressPort));
  tb.ingress = tb.fabric.add_port(std::string(kIngressPort));
  if (wired) tb.fabric.add_wiring(kIngressPort, kEgressPort);
  build_low_bits_lb(tb.engine, default_lb_config(backends, tb.egress));
  return tb;
}

/// Traffic starts once freshly inserted entries are active.
inline SimTime traffic_start_ns(const Engine& engine) {
  return std::uint64_t{engine.config().limits.entry_insertion_latency_us} * 1000;
}

inline MonitorCounters sum_counters(const Engine& engine, PipeId pipe) {
  MonitorCounters total;
  for (EntryId e = 0; e < engine.entry_count(pipe); ++e) {
    auto c = engine.counters(pipe, e);
    total.packets += c.packets;
    total.bytes += c.bytes;
  }
  return total;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t point, std::uint64_t rep) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (point + 1) + 0xBF58476D1CE4E5B9ull * (rep + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Window length for `count` packets at `rate_pps`, in ns.
inline Rational window_ns(std::uint64_t count, double rate_pps) {
  return Rational::from_double(rate_pps).reciprocal() * Rational(1'000'000'000) *
         Rational(static_cast<std::int64_t>(count));
}

inline std::vector<double> probe_rtts(const CapacityModel& m, const RunStats& stats) {
  std::vector<double> out;
  for (const auto& s : stats.samples) {
    if (s.probe) out.push_back(rtt_us(m, s));
  }
  return out;
}

inline std::vector<double> sampled_rtts(const CapacityModel& m, const RunStats& stats) {
  std::vector<double> out;
  out.reserve(stats.samples.size());
  for (const auto& s : stats.samples) out.push_back(rtt_us(m, s));
  return out;
}

template <class T, class Key>
std::size_t median_index(const std::vector<T>& items, Key key) {
  std::vector<std::size_t> idx(items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return key(items[a]) < key(items[b]); });
  return idx[(idx.size() - 1) / 2];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// rq2: achieved packet rate and loss across payload size and offered load

inline Rq2Result run_rq2(const ExperimentSpec& spec) {
  spec.validate();
  std::size_t points = spec.payloads.size() * spec.offered_pps.size();
  std::vector<RunRecord> runs(points * spec.repetitions);

  parallel_for(runs.size(), spec.workers, [&](std::size_t i) {
    std::size_t point = i / spec.repetitions;
    auto rep = static_cast<std::uint32_t>(i % spec.repetitions);
    std::size_t payload = spec.payloads[point / spec.offered_pps.size()];
    double offered = spec.offered_pps[point % spec.offered_pps.size()];

    auto tb = make_testbed(spec.model, 2);
    TrafficProfile profile;
    profile.payload_bytes = payload;
    profile.rate_pps = offered;
    profile.packet_count = spec.scale;
    profile.ingress_port = tb.ingress;
    profile.start_ns = traffic_start_ns(tb.engine);
    profile.seed = detail::mix_seed(spec.seed, point, rep);
    auto window = detail::window_ns(spec.scale, offered);

    RunOptions opts;
    opts.end_ns = profile.start_ns + static_cast<SimTime>(window.ceil());
    opts.sample_every = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, spec.scale / 1000));
    auto stats = tb.fabric.run(tb.engine, TrafficGenerator(profile), opts);

    double seconds = window.to_double() / 1e9;
    auto rtt = summarize(detail::sampled_rtts(spec.model, stats));
    RunRecord& r = runs[i];
    r.experiment = "rq2";
    r.run = rep;
    r.payload_bytes = payload;
    r.offered_pps = static_cast<double>(stats.offered) / seconds;
    r.achieved_pps = static_cast<double>(stats.achieved) / seconds;
    r.dropped_capacity = stats.dropped_capacity;
    r.dropped_queue = stats.dropped_queue;
    r.slow_path = stats.slow_path_delivered;
    r.median_rtt_us = rtt.median;
    r.stddev_rtt_us = rtt.stddev;
    r.counters = stats;
  });

  Rq2Result result;
  for (std::size_t point = 0; point < points; ++point) {
    std::vector<RunRecord> reps(runs.begin() + static_cast<std::ptrdiff_t>(point * spec.repetitions),
                                runs.begin() + static_cast<std::ptrdiff_t>((point + 1) * spec.repetitions));
    const auto& mid = reps[detail::median_index(reps, [](const RunRecord& r) { return r.achieved_pps; })];
    result.rows.push_back({mid.payload_bytes, spec.offered_pps[point % spec.offered_pps.size()], mid.achieved_pps,
                           mid.counters});
  }
  result.runs = std::move(runs);
  return result;
}

/// Highest median achieved rate across offered loads for one payload size.
inline double max_achieved_pps(const Rq2Result& r, std::size_t payload) {
  double best = 0;
  for (const auto& row : r.rows) {
    if (row.payload_bytes == payload) best = std::max(best, row.achieved_pps);
  }
  return best;
}

// ---------------------------------------------------------------------------
// rq3: bandwidth from monitor counters with the generator at line rate

inline Rq3Result run_rq3(const ExperimentSpec& spec) {
  spec.validate();
  std::size_t points = spec.payloads.size();
  std::vector<RunRecord> runs(points * spec.repetitions);
  std::vector<double> bps(runs.size());

  parallel_for(runs.size(), spec.workers, [&](std::size_t i) {
    std::size_t point = i / spec.repetitions;
    auto rep = static_cast<std::uint32_t>(i % spec.repetitions);
    std::size_t payload = spec.payloads[point];
    std::size_t frame = frame_size_for_payload(payload);
    double offered = service_rate_pps(spec.model, frame, ServicePath::direct);

    auto tb = make_testbed(spec.model, 2);
    auto root = *tb.engine.root();
    TrafficProfile profile;
    profile.payload_bytes = payload;
    profile.rate_pps = offered;
    profile.packet_count = spec.scale;
    profile.ingress_port = tb.ingress;
    profile.start_ns = traffic_start_ns(tb.engine);
    profile.seed = detail::mix_seed(spec.seed, point, rep);
    auto window = detail::window_ns(spec.scale, offered);

    RunOptions opts;
    opts.end_ns = profile.start_ns + static_cast<SimTime>(window.ceil());
    opts.sample_every = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, spec.scale / 1000));
    auto c0 = sum_counters(tb.engine, root);
    auto stats = tb.fabric.run(tb.engine, TrafficGenerator(profile), opts);
    auto c1 = sum_counters(tb.engine, root);

    double seconds = window.to_double() / 1e9;
    bps[i] = throughput_bps(c0, c1, seconds);
    auto rtt = summarize(detail::sampled_rtts(spec.model, stats));
    RunRecord& r = runs[i];
    r.experiment = "rq3";
    r.run = rep;
    r.payload_bytes = payload;
    r.offered_pps = static_cast<double>(stats.offered) / seconds;
    r.achieved_pps = static_cast<double>(stats.achieved) / seconds;
    r.dropped_capacity = stats.dropped_capacity;
    r.dropped_queue = stats.dropped_queue;
    r.slow_path = stats.slow_path_delivered;
    r.median_rtt_us = rtt.median;
    r.stddev_rtt_us = rtt.stddev;
    r.counters = stats;
  });

  Rq3Result result;
  for (std::size_t point = 0; point < points; ++point) {
    std::vector<double> b(bps.begin() + static_cast<std::ptrdiff_t>(point * spec.repetitions),
                          bps.begin() + static_cast<std::ptrdiff_t>((point + 1) * spec.repetitions));
    std::vector<double> pps;
    for (std::uint32_t rep = 0; rep < spec.repetitions; ++rep) pps.push_back(runs[point * spec.repetitions + rep].achieved_pps);
    result.rows.push_back({spec.payloads[point], summarize(b).median, spec.model.line_rate_bps, summarize(pps).median});
  }
  result.runs = std::move(runs);
  return result;
}

// ---------------------------------------------------------------------------
// rq4: probe RTT without background for direct, eSwitch and host paths

inline Rq4Result run_rq4(const ExperimentSpec& spec) {
  spec.validate();
  struct PathCase {
    const char* name;
    Datapath datapath;
  };
  static constexpr PathCase kPaths[] = {
      {"direct", Datapath::direct}, {"xenoflow", Datapath::eswitch}, {"host_lb", Datapath::host}};
  constexpr std::size_t kPathCount = std::size(kPaths);

  std::vector<RunRecord> runs(kPathCount * spec.repetitions);
  std::vector<std::vector<double>> rtts(runs.size());
  parallel_for(runs.size(), spec.workers, [&](std::size_t i) {
    std::size_t point = i / spec.repetitions;
    auto rep = static_cast<std::uint32_t>(i % spec.repetitions);
    auto tb = make_testbed(spec.model, 2);
    auto start = traffic_start_ns(tb.engine);
    auto probes = probe_stream(spec.probe_rate_pps, spec.probes, spec.probe_payload, start, tb.ingress,
                               detail::mix_seed(spec.seed, point, rep));
    RunOptions opts;
    opts.datapath = kPaths[point].datapath;
    opts.probe_port = kProbePort;
    auto stats = tb.fabric.run(tb.engine, probes, opts);

    rtts[i] = detail::probe_rtts(spec.model, stats);
    auto s = summarize(rtts[i]);
    double seconds = detail::window_ns(spec.probes, spec.probe_rate_pps).to_double() / 1e9;
    RunRecord& r = runs[i];
    r.experiment = "rq4";
    r.run = rep;
    r.payload_bytes = spec.probe_payload;
    r.offered_pps = static_cast<double>(stats.probes.offered) / seconds;
    r.achieved_pps = static_cast<double>(stats.probes.achieved) / seconds;
    r.dropped_capacity = stats.probes.dropped_capacity;
    r.dropped_queue = stats.probes.dropped_queue;
    r.slow_path = stats.probes.slow_path_delivered;
    r.median_rtt_us = s.median;
    r.stddev_rtt_us = s.stddev;
    r.counters = stats.probes;
  });

  Rq4Result result;
  for (std::size_t point = 0; point < kPathCount; ++point) {
    std::vector<double> all;
    for (std::uint32_t rep = 0; rep < spec.repetitions; ++rep) {
      const auto& v = rtts[point * spec.repetitions + rep];
      all.insert(all.end(), v.begin(), v.end());
    }
    auto s = summarize(all);
    result.rows.push_back({kPaths[point].name, s.median, s.stddev, 0.0, all.size()});
  }
  double direct = result.rows[0].median_rtt_us;
  for (auto& row : result.rows) row.added_latency_us = row.median_rtt_us - direct;
  double host = result.rows[2].added_latency_us;
  double xeno = result.rows[1].added_latency_us;
  result.reduction_pct = host > 0 ? (host - xeno) / host * 100.0 : 0.0;
  result.runs = std::move(runs);
  return result;
}

// ---------------------------------------------------------------------------
// rq5: probe RTT through the eSwitch under background load

inline Rq5Result run_rq5(const ExperimentSpec& spec) {
  spec.validate();
  std::size_t points = spec.splits.size() * spec.load_fractions.size();
  std::vector<RunRecord> runs(points * spec.repetitions);
  std::vector<std::vector<double>> rtts(runs.size());
  std::vector<TrafficCounters> probe_counts(runs.size());
  std::size_t bg_frame = frame_size_for_payload(spec.background_payload);
  double capacity = service_rate_pps(spec.model, bg_frame, ServicePath::fast);

  parallel_for(runs.size(), spec.workers, [&](std::size_t i) {
    std::size_t point = i / spec.repetitions;
    auto rep = static_cast<std::uint32_t>(i % spec.repetitions);
    const auto& split = spec.splits[point / spec.load_fractions.size()];
    double load = spec.load_fractions[point % spec.load_fractions.size()];

    auto tb = make_testbed(spec.model, split.backends);
    auto start = traffic_start_ns(tb.engine);
    auto seed = detail::mix_seed(spec.seed, point, rep);

    double bg_rate = load * capacity;
    std::uint64_t bg_count = load > 0 ? spec.scale : 0;
    Rational window = load > 0 ? detail::window_ns(bg_count, bg_rate) : detail::window_ns(spec.probes, spec.probe_rate_pps);
    double probe_rate = static_cast<double>(spec.probes) / (window.to_double() / 1e9);
    // First probe half an interval in, so probes do not sit on the background grid.
    auto probe_offset = static_cast<SimTime>((detail::window_ns(1, probe_rate) * Rational(1, 2)).floor());

    TrafficProfile bg;
    bg.payload_bytes = spec.background_payload;
    bg.rate_pps = load > 0 ? bg_rate : 1.0;
    bg.packet_count = bg_count;
    bg.ip_src_dist = ParitySplit{split.even_percent, UniformRange{}};
    bg.ingress_port = tb.ingress;
    bg.start_ns = start;
    bg.seed = seed;
    MergedStream stream(TrafficGenerator(bg), probe_stream(probe_rate, spec.probes, spec.probe_payload,
                                                           start + probe_offset, tb.ingress, seed ^ 0x5eed));
    RunOptions opts;
    opts.probe_port = kProbePort;
    opts.end_ns = start + static_cast<SimTime>(window.ceil()) + probe_offset;
    auto stats = tb.fabric.run(tb.engine, stream, opts);

    rtts[i] = detail::probe_rtts(spec.model, stats);
    probe_counts[i] = stats.probes;
    auto s = summarize(rtts[i]);
    double seconds = window.to_double() / 1e9;
    RunRecord& r = runs[i];
    r.experiment = "rq5";
    r.run = rep;
    r.payload_bytes = spec.background_payload;
    r.offered_pps = static_cast<double>(stats.offered) / seconds;
    r.achieved_pps = static_cast<double>(stats.achieved) / seconds;
    r.dropped_capacity = stats.dropped_capacity;
    r.dropped_queue = stats.dropped_queue;
    r.slow_path = stats.slow_path_delivered;
    r.median_rtt_us = s.median;
    r.stddev_rtt_us = s.stddev;
    r.counters = stats;
  });

  Rq5Result result;
  for (std::size_t point = 0; point < points; ++point) {
    const auto& split = spec.splits[point / spec.load_fractions.size()];
    double load = spec.load_fractions[point % spec.load_fractions.size()];
    std::vector<double> medians;
    std::vector<double> all;
    Rq5Row row;
    for (std::uint32_t rep = 0; rep < spec.repetitions; ++rep) {
      auto i = point * spec.repetitions + rep;
      medians.push_back(runs[i].median_rtt_us);
      all.insert(all.end(), rtts[i].begin(), rtts[i].end());
      row.probes_sent += probe_counts[i].offered;
      row.probes_delivered += probe_counts[i].achieved;
    }
    row.split = split.label;
    row.load_fraction = load;
    row.background_pps = load * capacity;
    row.median_rtt_us = summarize(medians).median;
    row.stddev_rtt_us = summarize(all).stddev;
    result.rows.push_back(std::move(row));
  }
  result.runs = std::move(runs);
  return result;
}

// ---------------------------------------------------------------------------
// CSV / gnuplot rendering. Numbers use shortest round-trip formatting so
// identical runs give byte-identical files.

inline std::string fmt_num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string fmt_num(std::uint64_t v) { return std::to_string(v); }

inline std::string runs_csv(const std::vector<RunRecord>& runs) {
  std::string out =
      "experiment,run,payload_bytes,offered_pps,achieved_pps,dropped_capacity,dropped_queue,slow_path,"
      "median_rtt_us,stddev_rtt_us\n";
  for (const auto& r : runs) {
    out += r.experiment + "," + std::to_string(r.run) + "," + std::to_string(r.payload_bytes) + "," +
           fmt_num(r.offered_pps) + "," + fmt_num(r.achieved_pps) + "," + fmt_num(r.dropped_capacity) + "," +
           fmt_num(r.dropped_queue) + "," + fmt_num(r.slow_path) + "," + fmt_num(r.median_rtt_us) + "," +
           fmt_num(r.stddev_rtt_us) + "\n";
  }
  return out;
}

inline std::string to_csv(const Rq2Result& r) {
  std::string out =
      "payload_bytes,frame_bytes,offered_pps,achieved_pps,dropped,offered,achieved,dropped_capacity,dropped_queue,"
      "slow_path,residual_in_queue\n";
  for (const auto& row : r.rows) {
    const auto& c = row.counters;
    out += std::to_string(row.payload_bytes) + "," + std::to_string(frame_size_for_payload(row.payload_bytes)) + "," +
           fmt_num(row.offered_pps) + "," + fmt_num(row.achieved_pps) + "," + fmt_num(c.dropped()) + "," +
           fmt_num(c.offered) + "," + fmt_num(c.achieved) + "," + fmt_num(c.dropped_capacity) + "," +
           fmt_num(c.dropped_queue) + "," + fmt_num(c.slow_path_delivered) + "," + fmt_num(c.residual_in_queue) + "\n";
  }
  return out;
}

inline std::string to_dat(const Rq2Result& r) {
  std::string out = "# payload_bytes offered_pps achieved_pps dropped\n";
  std::size_t last = r.rows.empty() ? 0 : r.rows.front().payload_bytes;
  for (const auto& row : r.rows) {
    if (row.payload_bytes != last) out += "\n\n";  // gnuplot index per payload
    last = row.payload_bytes;
    out += std::to_string(row.payload_bytes) + " " + fmt_num(row.offered_pps) + " " + fmt_num(row.achieved_pps) + " " +
           fmt_num(row.counters.dropped()) + "\n";
  }
  return out;
}

inline std::string to_csv(const Rq3Result& r) {
  std::string out = "payload_bytes,frame_bytes,achieved_bps,line_rate_bps,achieved_pps\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.payload_bytes) + "," + std::to_string(frame_size_for_payload(row.payload_bytes)) + "," +
           fmt_num(row.achieved_bps) + "," + fmt_num(row.line_rate_bps) + "," + fmt_num(row.achieved_pps) + "\n";
  }
  return out;
}

inline std::string to_dat(const Rq3Result& r) {
  std::string out = "# payload_bytes achieved_bps line_rate_bps\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.payload_bytes) + " " + fmt_num(row.achieved_bps) + " " + fmt_num(row.line_rate_bps) + "\n";
  }
  return out;
}

inline std::string to_csv(const Rq4Result& r) {
  std::string out = "path,median_rtt_us,stddev_rtt_us,added_latency_us,samples,reduction_vs_host_pct\n";
  for (const auto& row : r.rows) {
    out += row.path + "," + fmt_num(row.median_rtt_us) + "," + fmt_num(row.stddev_rtt_us) + "," +
           fmt_num(row.added_latency_us) + "," + std::to_string(row.samples) + "," +
           (row.path == "xenoflow" ? fmt_num(r.reduction_pct) : std::string()) + "\n";
  }
  return out;
}

inline std::string to_dat(const Rq4Result& r) {
  std::string out = "# index path median_rtt_us stddev_rtt_us\n# reduction_vs_host_pct " + fmt_num(r.reduction_pct) + "\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    out += std::to_string(i) + " " + row.path + " " + fmt_num(row.median_rtt_us) + " " + fmt_num(row.stddev_rtt_us) + "\n";
  }
  return out;
}

inline std::string to_csv(const Rq5Result& r) {
  std::string out = "split,load_fraction,background_pps,median_rtt_us,stddev_rtt_us,probes_sent,probes_delivered\n";
  for (const auto& row : r.rows) {
    out += row.split + "," + fmt_num(row.load_fraction) + "," + fmt_num(row.background_pps) + "," +
           fmt_num(row.median_rtt_us) + "," + fmt_num(row.stddev_rtt_us) + "," + fmt_num(row.probes_sent) + "," +
           fmt_num(row.probes_delivered) + "\n";
  }
  return out;
}

inline std::string to_dat(const Rq5Result& r) {
  std::string out = "# background_pps median_rtt_us stddev_rtt_us\n";
  std::string last = r.rows.empty() ? "" : r.rows.front().split;
  out += "# split " + last + "\n";
  for (const auto& row : r.rows) {
    if (row.split != last) out += "\n\n# split " + row.split + "\n";
    last = row.split;
    out += fmt_num(row.background_pps) + " " + fmt_num(row.median_rtt_us) + " " + fmt_num(row.stddev_rtt_us) + "\n";
  }
  return out;
}

}  // namespace xenoflow
