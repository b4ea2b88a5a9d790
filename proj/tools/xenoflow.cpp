// xenoflow: runs the benchmark sweeps and custom pipelines on the simulator.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xenoflow/config.hpp"
#include "xenoflow/experiments.hpp"
#include "xenoflow/pcap.hpp"

namespace fs = std::filesystem;
using namespace xenoflow;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> scale;
  std::optional<std::uint64_t> seed;
  std::string calibration;
  std::optional<unsigned> jobs;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("XENOFLOW_OUT_DIR"); env && *env) return env;
  return "results";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

ExperimentSpec load_spec(ExperimentKind kind, const CommonOptions& o) {
  ExperimentSpec spec = ExperimentSpec::defaults(kind);
  std::string calibration;
  if (!o.config.empty()) {
    spec = parse_experiment(detail::read_json_file(o.config), kind, &calibration);
    if (!calibration.empty() && fs::path(calibration).is_relative()) {
      calibration = (fs::path(o.config).parent_path() / calibration).string();
    }
  }
  if (!o.calibration.empty()) calibration = o.calibration;
  if (!calibration.empty()) spec.model.pps_cap_table = load_calibration_csv(calibration);
  if (o.scale) spec.scale = *o.scale;
  if (o.seed) spec.seed = *o.seed;
  if (o.jobs) spec.workers = *o.jobs;
  spec.validate();
  return spec;
}

template <class Result>
void emit(const std::string& name, const Result& r, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / (name + ".csv"), to_csv(r));
  write_file(fs::path(out_dir) / (name + "_runs.csv"), runs_csv(r.runs));
  write_file(fs::path(out_dir) / (name + ".dat"), to_dat(r));
}

int run_experiment(ExperimentKind kind, const CommonOptions& o) {
  auto spec = load_spec(kind, o);
  std::string name(experiment_name(kind));
  std::string out = o.out.empty() ? default_out_dir() : o.out;
  switch (kind) {
    case ExperimentKind::rq2_throughput: {
      auto r = run_rq2(spec);
      emit(name, r, out);
      for (auto p : spec.payloads) {
        std::cout << "payload " << p << ": max achieved " << fmt_num(max_achieved_pps(r, p)) << " pps\n";
      }
      break;
    }
    case ExperimentKind::rq3_bandwidth: {
      auto r = run_rq3(spec);
      emit(name, r, out);
      for (const auto& row : r.rows) {
        std::cout << "payload " << row.payload_bytes << ": " << fmt_num(row.achieved_bps / 1e9) << " Gbit/s\n";
      }
      break;
    }
    case ExperimentKind::rq4_latency: {
      auto r = run_rq4(spec);
      emit(name, r, out);
      for (const auto& row : r.rows) {
        std::cout << row.path << ": median " << fmt_num(row.median_rtt_us) << " us, added "
                  << fmt_num(row.added_latency_us) << " us\n";
      }
      std::cout << "reduction vs host: " << fmt_num(r.reduction_pct) << " %\n";
      break;
    }
    case ExperimentKind::rq5_latency_under_load: {
      auto r = run_rq5(spec);
      emit(name, r, out);
      for (const auto& row : r.rows) {
        std::cout << row.split << " @ " << fmt_num(row.load_fraction) << ": median " << fmt_num(row.median_rtt_us)
                  << " us\n";
      }
      break;
    }
    default: break;
  }
  auto base = (fs::path(out) / name).string();
  std::cout << "wrote " << base << ".csv, " << base << "_runs.csv, " << base << ".dat\n";
  return 0;
}

struct RunCommand {
  std::string pipeline;
  std::string out;
  std::string calibration;
  std::string pcap;
  std::size_t pcap_count = 100;
};

int run_pipeline(const RunCommand& o) {
  auto doc = load_pipeline(o.pipeline);
  CapacityModel model;
  if (!o.calibration.empty()) model.pps_cap_table = load_calibration_csv(o.calibration);
  auto installed = install(doc, model);
  auto& fabric = installed.fabric;
  auto& engine = installed.engine;

  TrafficDecl traffic = doc.traffic.value_or(TrafficDecl{});
  traffic.profile.ingress_port = fabric.port_id(traffic.ingress);
  traffic.profile.start_ns = std::max(traffic.profile.start_ns, traffic_start_ns(engine));

  if (!o.pcap.empty()) {
    auto parent = fs::path(o.pcap).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    PcapWriter writer(o.pcap);
    TrafficGenerator gen(traffic.profile);
    for (std::size_t i = 0; i < o.pcap_count; ++i) {
      auto tp = gen.next();
      if (!tp) break;
      writer.write(tp->send_time_ns, tp->packet.frame);
    }
  }

  RunOptions opts;
  opts.probe_port = kProbePort;
  opts.sample_every = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, traffic.profile.count() / 1000));
  auto stats = fabric.run(engine, TrafficGenerator(traffic.profile), opts);

  std::cout << "offered " << stats.offered << "\nachieved " << stats.achieved << "\ndropped_capacity "
            << stats.dropped_capacity << "\ndropped_queue " << stats.dropped_queue << "\ndropped_pipeline "
            << stats.dropped_pipeline << "\nslow_path " << stats.slow_path_delivered << "\nresidual "
            << stats.residual_in_queue << "\n";
  for (PipeId p = 0; p < engine.pipe_count(); ++p) {
    const auto& spec = engine.pipe_spec(p);
    auto ps = engine.pipe_stats(p);
    std::cout << "pipe " << spec.name << ": reached " << ps.reached << ", matched " << ps.matched << ", missed "
              << ps.missed << "\n";
    if (!spec.monitor) continue;
    for (EntryId e = 0; e < engine.entry_count(p); ++e) {
      auto c = engine.counters(p, e);
      std::cout << "  entry " << e << ": " << c.packets << " packets, " << c.bytes << " bytes\n";
    }
  }
  for (const auto& port : fabric.ports()) {
    std::cout << "port " << port.name << ": egress " << port.egress_packets << " packets\n";
  }

  if (!o.out.empty()) {
    double seconds = static_cast<double>(traffic.profile.count()) / traffic.profile.rate_pps;
    RunRecord r;
    r.experiment = "custom";
    r.payload_bytes = traffic.profile.payload_bytes;
    r.offered_pps = static_cast<double>(stats.offered) / seconds;
    r.achieved_pps = static_cast<double>(stats.achieved) / seconds;
    r.dropped_capacity = stats.dropped_capacity;
    r.dropped_queue = stats.dropped_queue;
    r.slow_path = stats.slow_path_delivered;
    auto rtt = summarize(detail::sampled_rtts(model, stats));
    r.median_rtt_us = rtt.median;
    r.stddev_rtt_us = rtt.stddev;
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "custom_runs.csv", runs_csv({r}));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"XenoFlow load balancer on a simulated eSwitch"};
  app.require_subcommand(1);

  CommonOptions common[4];
  const char* names[4] = {"rq2", "rq3", "rq4", "rq5"};
  const char* help[4] = {"packet rate and loss vs payload size", "bandwidth from monitor counters",
                         "RTT of direct, eSwitch and host load balancer paths", "RTT under background load"};
  CLI::App* subs[4];
  for (int i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    auto& o = common[i];
    sub->add_option("--config", o.config, "experiment JSON config")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (default: $XENOFLOW_OUT_DIR or ./results)");
    sub->add_option("--scale", o.scale, "background events per sweep point");
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--calibration", o.calibration, "frame_bytes,pps_cap CSV")->check(CLI::ExistingFile);
    sub->add_option("--jobs", o.jobs, "worker threads (0: all cores)");
    subs[i] = sub;
  }

  RunCommand run;
  auto* run_cmd = app.add_subcommand("run", "run traffic through a pipeline described in JSON");
  run_cmd->add_option("--pipeline", run.pipeline, "pipeline JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "write custom_runs.csv here");
  run_cmd->add_option("--calibration", run.calibration, "frame_bytes,pps_cap CSV")->check(CLI::ExistingFile);
  run_cmd->add_option("--pcap", run.pcap, "dump the first packets of the stream to a pcap file");
  run_cmd->add_option("--pcap-count", run.pcap_count, "packets to dump");

  CLI11_PARSE(app, argc, argv);

  try {
    for (int i = 0; i < 4; ++i) {
      if (subs[i]->parsed()) return run_experiment(*experiment_kind_from_string(names[i]), common[i]);
    }
    if (run_cmd->parsed()) return run_pipeline(run);
  } catch (const std::invalid_argument& e) {
    std::cerr << "xenoflow: config error: " << e.what() << "\n";
    return 2;
  } catch (const FlowError& e) {
    std::cerr << "xenoflow: pipeline error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "xenoflow: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
