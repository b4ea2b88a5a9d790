#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "xenoflow/experiments.hpp"

using namespace xenoflow;

namespace {

ExperimentSpec small(ExperimentKind k, std::uint64_t scale = 20000) {
  auto s = ExperimentSpec::defaults(k);
  s.scale = scale;
  s.workers = 1;
  return s;
}

std::vector<std::string> csv_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) rows.push_back(line);
  return rows;
}

}  // namespace

TEST(Spec, Validation) {
  auto s = ExperimentSpec::defaults(ExperimentKind::rq2_throughput);
  EXPECT_NO_THROW(s.validate());
  s.repetitions = 2;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ExperimentSpec::defaults(ExperimentKind::rq5_latency_under_load);
  s.load_fractions.push_back(1.0);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ExperimentSpec::defaults(ExperimentKind::rq5_latency_under_load);
  s.splits.push_back({"three", 3, 50});
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Rq2, StepAndConservation) {
  auto s = small(ExperimentKind::rq2_throughput, 100000);
  auto r = run_rq2(s);
  EXPECT_EQ(r.rows.size(), s.payloads.size() * s.offered_pps.size());
  EXPECT_EQ(r.runs.size(), r.rows.size() * 3);
  EXPECT_DOUBLE_EQ(max_achieved_pps(r, 22), 96.7e6);
  EXPECT_DOUBLE_EQ(max_achieved_pps(r, 23), 92.8e6);
  EXPECT_DOUBLE_EQ(max_achieved_pps(r, 22) - max_achieved_pps(r, 23), 96.7e6 - 92.8e6);
  for (const auto& run : r.runs) EXPECT_TRUE(run.counters.conserved());
  for (const auto& row : r.rows) {
    if (row.offered_pps <= service_rate_pps(s.model, frame_size_for_payload(row.payload_bytes), ServicePath::fast)) {
      EXPECT_EQ(row.counters.dropped(), 0u);
    }
  }
}

TEST(Rq2, AchievedNonIncreasingInFrameSize) {
  auto s = small(ExperimentKind::rq2_throughput);
  auto r = run_rq2(s);
  for (double offered : s.offered_pps) {
    double last = 1e300;
    for (const auto& row : r.rows) {
      if (row.offered_pps != offered) continue;
      EXPECT_LE(row.achieved_pps, last * (1 + 1e-9));
      last = row.achieved_pps;
    }
  }
}

TEST(Rq3, BandwidthShape) {
  auto r = run_rq3(small(ExperimentKind::rq3_bandwidth));
  double last = 0;
  for (const auto& row : r.rows) {
    EXPECT_GT(row.achieved_bps, last);
    last = row.achieved_bps;
    EXPECT_EQ(row.line_rate_bps, 100e9);
  }
  for (const auto& row : r.rows) {
    if (row.payload_bytes == 22) {
      EXPECT_NEAR(row.achieved_bps, 96.7e6 * 64 * 8, 96.7e6 * 64 * 8 * 1e-3);
    }
    if (row.payload_bytes == 1024) {
      EXPECT_GE(row.achieved_bps, 0.97 * 100e9);
    }
  }
}

TEST(Rq4, LatencyDelta) {
  auto r = run_rq4(small(ExperimentKind::rq4_latency));
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].path, "direct");
  EXPECT_DOUBLE_EQ(r.rows[0].added_latency_us, 0);
  EXPECT_NEAR(r.rows[1].added_latency_us, 5.2, 1e-9);
  EXPECT_NEAR(r.rows[2].added_latency_us, 9.3, 1e-9);
  EXPECT_NEAR(r.reduction_pct, 44.086, 0.01);
  EXPECT_EQ(r.rows[1].samples, 2700u * 3);
  for (const auto& run : r.runs) EXPECT_EQ(run.counters.achieved, 2700u);
}

TEST(Rq5, FlatThenRising) {
  // Probes are spread over the background window, so the scale must keep
  // their share of capacity well below 1 %.
  auto s = small(ExperimentKind::rq5_latency_under_load, 500000);
  s.splits = {{"single", 1, 50}, {"50/50", 2, 50}};
  s.load_fractions = {0.0, 0.5, 0.9, 0.99};
  auto r = run_rq5(s);
  std::map<std::string, double> unloaded;
  for (const auto& row : r.rows) {
    if (row.load_fraction == 0) unloaded[row.split] = row.median_rtt_us;
  }
  for (const auto& row : r.rows) {
    double base = unloaded.at(row.split);
    if (row.load_fraction <= 0.90) {
      EXPECT_LE(std::fabs(row.median_rtt_us - base), 0.01 * base);
    }
    if (row.load_fraction >= 0.99) {
      EXPECT_GT(row.median_rtt_us, base);
    }
    EXPECT_EQ(row.probes_sent, row.probes_delivered);
  }
}

TEST(Rq5, ZeroLoadMatchesRq4) {
  auto r4 = run_rq4(small(ExperimentKind::rq4_latency));
  auto s5 = small(ExperimentKind::rq5_latency_under_load);
  s5.load_fractions = {0.0};
  auto r5 = run_rq5(s5);
  for (const auto& row : r5.rows) EXPECT_EQ(row.median_rtt_us, r4.rows[1].median_rtt_us);
}

TEST(Determinism, IdenticalCsvAcrossRunsAndWorkerCounts) {
  auto s = small(ExperimentKind::rq2_throughput, 5000);
  auto a = run_rq2(s);
  s.workers = 3;
  auto b = run_rq2(s);
  EXPECT_EQ(to_csv(a), to_csv(b));
  EXPECT_EQ(runs_csv(a.runs), runs_csv(b.runs));
  EXPECT_EQ(to_dat(a), to_dat(b));
}

TEST(Determinism, RepetitionsHaveZeroSpread) {
  auto r = run_rq2(small(ExperimentKind::rq2_throughput, 5000));
  for (std::size_t i = 0; i + 2 < r.runs.size(); i += 3) {
    std::vector<double> a = {r.runs[i].achieved_pps, r.runs[i + 1].achieved_pps, r.runs[i + 2].achieved_pps};
    EXPECT_EQ(summarize(a).variation_coefficient, 0.0);
  }
}

TEST(Csv, RunsHeaderAndShape) {
  auto r = run_rq4(small(ExperimentKind::rq4_latency));
  auto rows = csv_rows(runs_csv(r.runs));
  EXPECT_EQ(rows[0],
            "experiment,run,payload_bytes,offered_pps,achieved_pps,dropped_capacity,dropped_queue,slow_path,"
            "median_rtt_us,stddev_rtt_us");
  EXPECT_EQ(rows.size(), 1 + r.runs.size());
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(std::count(rows[i].begin(), rows[i].end(), ','), 9);
  auto summary = csv_rows(to_csv(r));
  EXPECT_EQ(summary[0], "path,median_rtt_us,stddev_rtt_us,added_latency_us,samples,reduction_vs_host_pct");
}

TEST(Csv, Rq2RowsCarryConservationColumns) {
  auto r = run_rq2(small(ExperimentKind::rq2_throughput, 5000));
  auto rows = csv_rows(to_csv(r));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::uint64_t> f;
    std::istringstream in(rows[i]);
    std::string cell;
    while (std::getline(in, cell, ',')) f.push_back(static_cast<std::uint64_t>(std::stod(cell)));
    // offered = achieved + dropped + slow_path + residual
    EXPECT_EQ(f[5], f[6] + f[4] + f[9] + f[10]) << rows[i];
  }
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(fmt_num(96.7e6), "96700000");
  EXPECT_EQ(fmt_num(0.1), "0.1");
  EXPECT_EQ(fmt_num(std::uint64_t{42}), "42");
}
