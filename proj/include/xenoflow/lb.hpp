#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "xenoflow/flowpipe.hpp"

namespace xenoflow {

struct Backend {
  MacAddr mac;
  std::string label;
};

enum class LbStrategy : std::uint8_t { low_bits, five_tuple_hash };

struct LbConfig {
  std::vector<Backend> backends;
  PortId out_port = 1;
  LbStrategy strategy = LbStrategy::low_bits;
};

struct HashLbPipeline {
  PipeId hash_pipe;       // root: computes the 5-tuple hash into meta0
  PipeId selection_pipe;  // matches meta0, rewrites eth_dst
};

namespace detail {

inline void validate_backends(const LbConfig& config) {
  if (config.backends.empty()) throw std::invalid_argument("load balancer needs at least one backend");
  for (std::size_t i = 0; i < config.backends.size(); ++i) {
    for (std::size_t j = i + 1; j < config.backends.size(); ++j) {
      if (config.backends[i].mac == config.backends[j].mac) {
        throw std::invalid_argument("duplicate backend MAC " + config.backends[i].mac.to_string());
      }
    }
  }
}

inline void add_backend_entries(Engine& engine, PipeId pipe, FieldSelector selector, const LbConfig& config,
                                SimTime now_ns) {
  for (std::size_t i = 0; i < config.backends.size(); ++i) {
    PipeEntry entry;
    entry.match_values = {{selector, i}};
    entry.action_values = {{FieldSelector::eth_dst, config.backends[i].mac.to_u64()}};
    entry.forward = ForwardTarget::to_port(config.out_port);
    engine.add_entry(pipe, entry, now_ns);
  }
}

}  // namespace detail

/// Root pipe selecting backend `ip_src & (N-1)`: entry i matches value i under
/// an explicit mask N-1 and rewrites eth_dst to backend i. Misses go to the
/// slow path.
inline PipeId build_low_bits_lb(Engine& engine, const LbConfig& config, SimTime now_ns = 0) {
  detail::validate_backends(config);
  auto n = config.backends.size();
  if (!std::has_single_bit(n)) {
    throw std::invalid_argument("low-bits selection needs a power-of-two backend count, got " + std::to_string(n));
  }
  if (engine.pipe_count() != 0) throw std::invalid_argument("load balancer must be built on an empty engine");

  PipeSpec spec;
  spec.name = "xenoflow_root";
  spec.is_root = true;
  spec.match = {MatchField::variable(FieldSelector::ip_src, static_cast<std::uint64_t>(n - 1))};
  spec.actions = {ActionDescriptor::set_variable(FieldSelector::eth_dst)};
  spec.allowed_forwards = {ForwardKind::port};
  spec.miss_forward = ForwardTarget::slow_path();
  spec.monitor = true;
  auto root = engine.create_pipe(std::move(spec));
  detail::add_backend_entries(engine, root, FieldSelector::ip_src, config, now_ns);
  return root;
}

/// Two-stage pipeline: the root hashes the 5-tuple (CRC-32) into meta0 modulo
/// N, then a selection pipe maps meta0 to a backend.
inline HashLbPipeline build_hash_lb(Engine& engine, const LbConfig& config, SimTime now_ns = 0) {
  detail::validate_backends(config);
  auto n = static_cast<std::uint32_t>(config.backends.size());

  PipeSpec select;
  select.name = "xenoflow_select";
  select.match = {MatchField::variable(FieldSelector::meta0)};
  select.actions = {ActionDescriptor::set_variable(FieldSelector::eth_dst)};
  select.allowed_forwards = {ForwardKind::port};
  select.miss_forward = ForwardTarget::slow_path();
  select.monitor = true;
  auto selection = engine.create_pipe(std::move(select));
  detail::add_backend_entries(engine, selection, FieldSelector::meta0, config, now_ns);

  PipeSpec hash;
  hash.name = "xenoflow_hash";
  hash.is_root = true;
  hash.actions = {ActionDescriptor::hash_to_meta(FieldSelector::meta0, n)};
  hash.allowed_forwards = {ForwardKind::pipe};
  hash.miss_forward = ForwardTarget::slow_path();
  hash.monitor = true;
  auto root = engine.create_pipe(std::move(hash));
  engine.add_entry(root, PipeEntry{{}, {}, ForwardTarget::to_pipe(selection)}, now_ns);
  return {root, selection};
}

/// Builds either strategy; returns the pipe holding the per-backend entries.
inline PipeId build_lb(Engine& engine, const LbConfig& config, SimTime now_ns = 0) {
  if (config.strategy == LbStrategy::low_bits) return build_low_bits_lb(engine, config, now_ns);
  return build_hash_lb(engine, config, now_ns).selection_pipe;
}

/// Bandwidth from two monitor snapshots: byte delta * 8 / dt. This is the
/// byte-delta reading of "pps * bytes * 8"; multiplying a packet rate by a
/// cumulative byte count would count every byte once per packet.
inline double throughput_bps(const MonitorCounters& c0, const MonitorCounters& c1, double dt_s) {
  if (!(dt_s > 0)) throw std::invalid_argument("throughput interval must be positive");
  if (c1.packets < c0.packets || c1.bytes < c0.bytes) {
    throw std::invalid_argument("counter snapshots go backwards");
  }
  return static_cast<double>(c1.bytes - c0.bytes) * 8.0 / dt_s;
}

}  // namespace xenoflow
