#pragma once

// Discrete-event model of the NIC fabric: named ports, the virtual-switch
// wiring layer, and single-server FIFO queues for each datapath. Ingress on a
// wired port is served by the eSwitch fast path; unwired ingress falls back
// to the rate-limited slow path.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xenoflow/capacity.hpp"
#include "xenoflow/flowpipe.hpp"
#include "xenoflow/packet.hpp"
#include "xenoflow/rational.hpp"

namespace xenoflow {

inline constexpr std::uint16_t kProbePort = 5300;

template <class S>
concept PacketStream = requires(S s) {
  { s.next() } -> std::same_as<std::optional<TimedPacket>>;
};

class SpanStream {
 public:
  explicit SpanStream(std::span<const TimedPacket> packets) : packets_(packets) {}
  std::optional<TimedPacket> next() {
    if (pos_ == packets_.size()) return std::nullopt;
    return packets_[pos_++];
  }

 private:
  std::span<const TimedPacket> packets_;
  std::size_t pos_ = 0;
};

/// Event queue ordered by (time, insertion sequence). Time never moves back.
class SimClock {
 public:
  struct Event {
    SimTime time_ns;
    std::uint64_t seq;
    std::uint32_t kind;
    std::uint32_t target;
  };

  SimTime now() const { return now_; }
  bool empty() const { return events_.empty(); }
  std::size_t pending() const { return events_.size(); }
  SimTime next_time() const { return events_.top().time_ns; }

  void schedule(SimTime at, std::uint32_t kind, std::uint32_t target = 0) {
    if (at < now_) throw std::logic_error("event scheduled in the past");
    events_.push(Event{at, seq_++, kind, target});
  }

  Event pop() {
    Event e = events_.top();
    events_.pop();
    now_ = e.time_ns;
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time_ns != b.time_ns ? a.time_ns > b.time_ns : a.seq > b.seq;
    }
  };

  SimTime now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
};

struct Port {
  PortId id = 0;
  std::string name;
  std::uint64_t egress_packets = 0;
  std::uint64_t egress_bytes = 0;
};

struct WiringRule {
  PortId in_port;
  PortId out_port;
};

enum class Datapath : std::uint8_t {
  eswitch,  // wired ports use the fast path, unwired ones the slow path
  host,     // host-resident load balancer
  direct,   // no load balancer in the path
};

struct RunOptions {
  std::optional<SimTime> end_ns;  // nullopt: run until the stream is exhausted and queues drain
  Datapath datapath = Datapath::eswitch;
  std::optional<std::uint16_t> probe_port;  // packets to this UDP port are accounted as probes
  std::uint32_t sample_every = 0;           // also sample every n-th delivered background packet
};

struct LatencySample {
  SimTime arrival_ns = 0;
  double wait_ns = 0;  // time queued before service started
  double latency_us = 0;
  ServicePath path = ServicePath::fast;
  bool probe = false;
};

struct TrafficCounters {
  std::uint64_t offered = 0;
  std::uint64_t achieved = 0;
  std::uint64_t dropped_capacity = 0;  // fast/host path queue overflow
  std::uint64_t dropped_queue = 0;     // slow path queue overflow
  std::uint64_t dropped_pipeline = 0;  // Drop verdicts from the engine
  std::uint64_t slow_path_delivered = 0;
  std::uint64_t residual_in_queue = 0;
  std::uint64_t offered_bytes = 0;
  std::uint64_t achieved_bytes = 0;
  std::uint64_t slow_path_bytes = 0;

  std::uint64_t dropped() const { return dropped_capacity + dropped_queue + dropped_pipeline; }
  bool conserved() const {
    return offered == achieved + dropped_capacity + dropped_queue + dropped_pipeline + slow_path_delivered +
                          residual_in_queue;
  }
};

struct RunStats : TrafficCounters {
  TrafficCounters probes;
  SimTime start_ns = 0;  // first arrival
  SimTime end_ns = 0;    // end of the observation window
  std::vector<LatencySample> samples;
};

/// Round trip seen by a client: base RTT plus the path's added latency plus
/// the queueing delay, which the probe pays on the way out and back.
inline double rtt_us(const CapacityModel& m, const LatencySample& s) {
  return m.base_rtt_us + s.latency_us + s.wait_ns / 1000.0;
}

class Fabric {
 public:
  explicit Fabric(CapacityModel model = {}) : model_(std::move(model)) { model_.validate(); }

  const CapacityModel& model() const { return model_; }

  PortId add_port(std::string name) {
    for (const auto& p : ports_) {
      if (p.name == name) throw std::invalid_argument("duplicate port name " + name);
    }
    Port p;
    p.id = static_cast<PortId>(ports_.size());
    p.name = std::move(name);
    ports_.push_back(std::move(p));
    return ports_.back().id;
  }

  PortId port_id(std::string_view name) const {
    for (const auto& p : ports_) {
      if (p.name == name) return p.id;
    }
    throw std::invalid_argument("unknown port " + std::string(name));
  }

  const Port& port(PortId id) const { return ports_.at(id); }
  std::span<const Port> ports() const { return ports_; }

  std::size_t add_wiring(std::string_view in_port, std::string_view out_port) {
    auto in = port_id(in_port);
    auto out = port_id(out_port);
    for (const auto& w : wiring_) {
      if (w.in_port == in) throw std::invalid_argument("port " + std::string(in_port) + " is already wired");
    }
    wiring_.push_back({in, out});
    return wiring_.size() - 1;
  }

  bool is_wired(PortId in) const {
    for (const auto& w : wiring_) {
      if (w.in_port == in) return true;
    }
    return false;
  }

  std::span<const WiringRule> wiring() const { return wiring_; }

  template <PacketStream S>
  RunStats run(Engine& engine, S& stream, const RunOptions& options = {});

  template <PacketStream S>
  RunStats run(Engine& engine, S&& stream, const RunOptions& options = {}) {
    return run(engine, stream, options);
  }

  /// One probe RTT (µs) with background traffic at `background_load` times the
  /// binding capacity of `datapath` for frames carrying `payload_bytes`.
  double rtt_probe(Engine& engine, Datapath datapath, double background_load, PortId ingress,
                   std::size_t payload_bytes = 22, std::size_t window_packets = 20000, SimTime start_ns = 0);

 private:
  struct Job {
    Packet packet;
    Rational enqueued;
    bool probe = false;
    bool processed = false;  // already ran through the engine
  };

  struct Server {
    ServicePath path;
    bool busy = false;
    Job in_service;
    Rational service_start;
    Rational busy_until;
    std::deque<Job> waiting;
  };

  static Server make_server(ServicePath path) {
    Server s;
    s.path = path;
    return s;
  }

  CapacityModel model_;
  std::vector<Port> ports_;
  std::vector<WiringRule> wiring_;
};

namespace detail {

inline bool is_probe(const Packet& pkt, const std::optional<std::uint16_t>& probe_port) {
  if (!probe_port) return false;
  auto r = parse(pkt.frame);
  return r.ok() && r.view.udp_dst == *probe_port;
}

}  // namespace detail

template <PacketStream S>
RunStats Fabric::run(Engine& engine, S& stream, const RunOptions& options) {
  enum : std::uint32_t { kArrival = 0, kDeparture = 1 };

  RunStats stats;
  SimClock clock;
  std::vector<Server> servers;
  std::map<PortId, std::uint32_t> fast_servers;
  std::optional<std::uint32_t> slow_server, host_server, direct_server;
  std::map<std::pair<ServicePath, std::size_t>, Rational> service_time_cache;
  std::uint64_t delivered_background = 0;
  bool first = true;

  auto server_for = [&](std::optional<std::uint32_t>& slot, ServicePath path) {
    if (!slot) {
      slot = static_cast<std::uint32_t>(servers.size());
      servers.push_back(make_server(path));
    }
    return *slot;
  };
  auto counters_for = [&](const Job& j) -> TrafficCounters& { return j.probe ? stats.probes : stats; };
  auto service_time = [&](ServicePath path, std::size_t frame) {
    auto key = std::make_pair(path, frame);
    auto it = service_time_cache.find(key);
    if (it == service_time_cache.end()) {
      it = service_time_cache.emplace(key, service_rate(model_, frame, path).reciprocal() * Rational(1'000'000'000))
               .first;
    }
    return it->second;
  };

  auto start_service = [&](std::uint32_t idx, Job job, Rational start) {
    auto& s = servers[idx];
    auto done = start + service_time(s.path, job.packet.frame.size());
    s.busy = true;
    s.service_start = start;
    s.busy_until = done;
    s.in_service = std::move(job);
    clock.schedule(static_cast<SimTime>(done.ceil()), kDeparture, idx);
  };

  auto enqueue = [&](std::uint32_t idx, Job job) {
    auto& s = servers[idx];
    if (!s.busy) {
      auto start = job.enqueued;
      start_service(idx, std::move(job), start);
    } else if (s.waiting.size() < model_.queue_depth_packets) {
      s.waiting.push_back(std::move(job));
    } else if (s.path == ServicePath::slow) {
      ++counters_for(job).dropped_queue;
    } else {
      ++counters_for(job).dropped_capacity;
    }
  };

  auto record = [&](const Job& job, const Server& s, Rational done) {
    bool take = job.probe;
    if (!job.probe) {
      take = options.sample_every != 0 && delivered_background % options.sample_every == 0;
      ++delivered_background;
    }
    if (!take) return;
    LatencySample sample;
    sample.arrival_ns = job.packet.arrival_ns;
    sample.wait_ns = (s.service_start - job.enqueued).to_double();
    sample.path = s.path;
    sample.probe = job.probe;
    if (s.path == ServicePath::slow) {
      sample.latency_us = (done - Rational(static_cast<std::int64_t>(job.packet.arrival_ns))).to_double() / 1000.0;
    } else {
      sample.latency_us = sample.wait_ns / 1000.0 + path_added_latency_us(model_, s.path);
    }
    stats.samples.push_back(sample);
  };

  auto egress = [&](PortId port, const Packet& pkt) {
    if (port < ports_.size()) {
      ++ports_[port].egress_packets;
      ports_[port].egress_bytes += pkt.frame.size();
    }
  };

  auto complete = [&](std::uint32_t idx) {
    auto& s = servers[idx];
    Job job = std::move(s.in_service);
    Rational done = s.busy_until;
    s.busy = false;
    auto& c = counters_for(job);
    std::size_t bytes = job.packet.frame.size();

    if (s.path == ServicePath::direct) {
      ++c.achieved;
      c.achieved_bytes += bytes;
      record(job, s, done);
    } else if (s.path == ServicePath::slow) {
      if (job.processed) {
        ++c.slow_path_delivered;
        c.slow_path_bytes += bytes;
        record(job, s, done);
      } else {
        // Unwired ingress: off-path cores apply the same rules in software.
        auto verdict = engine.process(job.packet);
        if (std::holds_alternative<Dropped>(verdict)) {
          ++c.dropped_pipeline;
        } else {
          if (auto* e = std::get_if<Egress>(&verdict)) egress(e->port, e->packet);
          ++c.slow_path_delivered;
          c.slow_path_bytes += bytes;
          record(job, s, done);
        }
      }
    } else {
      auto verdict = engine.process(std::move(job.packet));
      if (auto* e = std::get_if<Egress>(&verdict)) {
        egress(e->port, e->packet);
        ++c.achieved;
        c.achieved_bytes += bytes;
        job.packet = std::move(e->packet);
        record(job, s, done);
      } else if (auto* sp = std::get_if<SlowPath>(&verdict)) {
        Job forwarded{std::move(sp->packet), done, job.probe, true};
        enqueue(server_for(slow_server, ServicePath::slow), std::move(forwarded));
      } else {
        ++c.dropped_pipeline;
      }
    }

    auto& srv = servers[idx];  // enqueue above may have grown `servers`
    if (!srv.busy && !srv.waiting.empty()) {
      Job next = std::move(srv.waiting.front());
      srv.waiting.pop_front();
      // The departure event fires at ceil(done), so a job may have queued after `done`.
      auto start = next.enqueued < done ? done : next.enqueued;
      start_service(idx, std::move(next), start);
    }
  };

  std::optional<TimedPacket> pending;
  auto pull = [&] {
    pending = stream.next();
    if (!pending) return;
    if (options.end_ns && pending->send_time_ns >= *options.end_ns) {
      pending.reset();
      return;
    }
    if (pending->send_time_ns < clock.now()) throw std::invalid_argument("packet stream is not time-ordered");
    clock.schedule(pending->send_time_ns, kArrival);
  };

  pull();
  while (!clock.empty()) {
    if (options.end_ns && clock.next_time() > *options.end_ns) break;
    auto ev = clock.pop();
    if (ev.kind == kDeparture) {
      complete(ev.target);
      continue;
    }
    TimedPacket tp = std::move(*pending);
    if (first) {
      stats.start_ns = tp.send_time_ns;
      first = false;
    }
    Job job{std::move(tp.packet), Rational(static_cast<std::int64_t>(tp.send_time_ns)), false, false};
    job.packet.arrival_ns = tp.send_time_ns;
    job.probe = detail::is_probe(job.packet, options.probe_port);
    auto& c = counters_for(job);
    ++c.offered;
    c.offered_bytes += job.packet.frame.size();

    std::uint32_t idx;
    switch (options.datapath) {
      case Datapath::direct: idx = server_for(direct_server, ServicePath::direct); break;
      case Datapath::host: idx = server_for(host_server, ServicePath::host); break;
      default:
        if (is_wired(job.packet.ingress_port)) {
          auto it = fast_servers.find(job.packet.ingress_port);
          if (it == fast_servers.end()) {
            it = fast_servers.emplace(job.packet.ingress_port, static_cast<std::uint32_t>(servers.size())).first;
            servers.push_back(make_server(ServicePath::fast));
          }
          idx = it->second;
        } else {
          idx = server_for(slow_server, ServicePath::slow);
        }
    }
    enqueue(idx, std::move(job));
    pull();
  }

  stats.end_ns = options.end_ns ? *options.end_ns : clock.now();
  for (const auto& s : servers) {
    if (s.busy) ++counters_for(s.in_service).residual_in_queue;
    for (const auto& j : s.waiting) ++counters_for(j).residual_in_queue;
  }
  return stats;
}

inline double Fabric::rtt_probe(Engine& engine, Datapath datapath, double background_load, PortId ingress,
                                std::size_t payload_bytes, std::size_t window_packets, SimTime start_ns) {
  UdpEndpoints ep;
  ep.src_mac = MacAddr::parse("02:00:00:00:00:01");
  ep.dst_mac = MacAddr::parse("02:00:00:00:00:ff");
  ep.ip_src = Ipv4Addr::parse("10.0.0.2");
  ep.ip_dst = Ipv4Addr::parse("10.1.0.1");
  ep.sport = 40000;
  ep.dport = 53;
  std::vector<std::uint8_t> payload(payload_bytes, 0);
  Packet background = build_udp_packet(ep, payload);
  background.ingress_port = ingress;
  ep.dport = kProbePort;
  Packet probe = build_udp_packet(ep, payload);
  probe.ingress_port = ingress;

  ServicePath path = datapath == Datapath::host     ? ServicePath::host
                     : datapath == Datapath::direct ? ServicePath::direct
                     : is_wired(ingress)            ? ServicePath::fast
                                                    : ServicePath::slow;
  std::vector<TimedPacket> stream;
  SimTime probe_at = start_ns;
  if (background_load > 0) {
    auto rate = service_rate(model_, background.frame.size(), path) * Rational::from_double(background_load);
    auto interval = rate.reciprocal() * Rational(1'000'000'000);
    stream.reserve(window_packets + 1);
    for (std::size_t k = 0; k < window_packets; ++k) {
      stream.push_back({start_ns + static_cast<SimTime>((interval * Rational(static_cast<std::int64_t>(k))).floor()),
                        background});
    }
    // Land the probe mid-window, off the background grid.
    auto mid = interval * Rational(static_cast<std::int64_t>(window_packets / 2)) + interval * Rational(1, 2);
    probe_at = start_ns + static_cast<SimTime>(mid.floor());
  }
  auto pos = std::upper_bound(stream.begin(), stream.end(), probe_at,
                              [](SimTime t, const TimedPacket& tp) { return t < tp.send_time_ns; });
  stream.insert(pos, TimedPacket{probe_at, probe});

  RunOptions opts;
  opts.datapath = datapath;
  opts.probe_port = kProbePort;
  auto stats = run(engine, SpanStream(stream), opts);
  for (const auto& s : stats.samples) {
    if (s.probe) return rtt_us(model_, s);
  }
  throw std::runtime_error("probe was not delivered");
}

}  // namespace xenoflow
