#pragma once

// Match-action pipes in the style of an eSwitch flow API: a pipe is a template
// (what may be matched, modified, and where traffic may go); entries are the
// concrete rules instantiated under it. Every packet enters at the root pipe.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "xenoflow/crc32.hpp"
#include "xenoflow/packet.hpp"

namespace xenoflow {

using PipeId = std::uint32_t;
using EntryId = std::uint32_t;

enum class FieldSelector : std::uint8_t {
  eth_src,
  eth_dst,
  ip_src,
  ip_dst,
  ip_proto,
  udp_src,
  udp_dst,
  meta0,
  meta1,
  meta2,
  meta3,
};

inline constexpr std::size_t kFieldCount = 11;

constexpr unsigned field_width(FieldSelector f) {
  switch (f) {
    case FieldSelector::eth_src:
    case FieldSelector::eth_dst: return 48;
    case FieldSelector::ip_src:
    case FieldSelector::ip_dst: return 32;
    case FieldSelector::ip_proto: return 8;
    case FieldSelector::udp_src:
    case FieldSelector::udp_dst: return 16;
    default: return 32;
  }
}

constexpr std::uint64_t field_full_mask(FieldSelector f) { return (std::uint64_t{1} << field_width(f)) - 1; }

constexpr bool is_meta(FieldSelector f) { return f >= FieldSelector::meta0; }

constexpr bool is_ip_field(FieldSelector f) {
  return f == FieldSelector::ip_src || f == FieldSelector::ip_dst || f == FieldSelector::ip_proto;
}

inline constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "eth_src", "eth_dst", "ip_src", "ip_dst", "ip_proto", "udp_src",
    "udp_dst", "meta0",   "meta1",  "meta2",  "meta3"};

inline std::string_view to_string(FieldSelector f) { return kFieldNames[static_cast<std::size_t>(f)]; }

inline std::optional<FieldSelector> field_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (kFieldNames[i] == name) return static_cast<FieldSelector>(i);
  }
  if (name == "meta[0]") return FieldSelector::meta0;
  if (name == "meta[1]") return FieldSelector::meta1;
  if (name == "meta[2]") return FieldSelector::meta2;
  if (name == "meta[3]") return FieldSelector::meta3;
  return std::nullopt;
}

enum class Binding : std::uint8_t { constant, variable };

struct MatchField {
  FieldSelector field = FieldSelector::ip_src;
  std::optional<std::uint64_t> mask;  // nullopt: implicit, full field width compared
  Binding binding = Binding::constant;
  std::uint64_t value = 0;  // pipe match value; must be all-ones for variable bindings

  std::uint64_t effective_mask() const { return mask.value_or(field_full_mask(field)); }

  static MatchField variable(FieldSelector f, std::optional<std::uint64_t> mask = std::nullopt) {
    return {f, mask, Binding::variable, field_full_mask(f)};
  }
  static MatchField constant(FieldSelector f, std::uint64_t value, std::optional<std::uint64_t> mask = std::nullopt) {
    return {f, mask, Binding::constant, value};
  }
};

enum class ActionKind : std::uint8_t {
  set_field,
  hash_five_tuple,  // meta register := crc32(5-tuple) % modulus
};

struct ActionDescriptor {
  ActionKind kind = ActionKind::set_field;
  FieldSelector field = FieldSelector::eth_dst;
  std::optional<std::uint64_t> mask;  // explicit write mask; nullopt writes the whole field
  Binding binding = Binding::constant;
  std::uint64_t value = 0;
  std::uint32_t modulus = 1;

  static ActionDescriptor set_variable(FieldSelector f, std::optional<std::uint64_t> mask = std::nullopt) {
    return {ActionKind::set_field, f, mask, Binding::variable, 0, 1};
  }
  static ActionDescriptor set_constant(FieldSelector f, std::uint64_t value,
                                       std::optional<std::uint64_t> mask = std::nullopt) {
    return {ActionKind::set_field, f, mask, Binding::constant, value, 1};
  }
  static ActionDescriptor hash_to_meta(FieldSelector meta, std::uint32_t modulus) {
    return {ActionKind::hash_five_tuple, meta, std::nullopt, Binding::constant, 0, modulus};
  }
};

enum class ForwardKind : std::uint8_t { pipe, port, slow_path, drop };

inline std::string_view to_string(ForwardKind k) {
  switch (k) {
    case ForwardKind::pipe: return "pipe";
    case ForwardKind::port: return "port";
    case ForwardKind::slow_path: return "slow_path";
    case ForwardKind::drop: return "drop";
  }
  return "?";
}

struct ForwardTarget {
  ForwardKind kind = ForwardKind::drop;
  std::uint32_t id = 0;  // pipe or port id

  static ForwardTarget to_pipe(PipeId p) { return {ForwardKind::pipe, p}; }
  static ForwardTarget to_port(PortId p) { return {ForwardKind::port, p}; }
  static ForwardTarget slow_path() { return {ForwardKind::slow_path, 0}; }
  static ForwardTarget drop() { return {ForwardKind::drop, 0}; }

  friend bool operator==(const ForwardTarget&, const ForwardTarget&) = default;
};

class ForwardSet {
 public:
  constexpr ForwardSet() = default;
  constexpr ForwardSet(std::initializer_list<ForwardKind> kinds) {
    for (auto k : kinds) bits_ |= bit(k);
  }
  static constexpr ForwardSet all() {
    return {ForwardKind::pipe, ForwardKind::port, ForwardKind::slow_path, ForwardKind::drop};
  }
  constexpr bool contains(ForwardKind k) const { return bits_ & bit(k); }
  constexpr void insert(ForwardKind k) { bits_ |= bit(k); }
  constexpr bool empty() const { return bits_ == 0; }

 private:
  static constexpr std::uint8_t bit(ForwardKind k) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(k)); }
  std::uint8_t bits_ = 0;
};

struct PipeSpec {
  std::string name;
  bool is_root = false;
  std::vector<MatchField> match;
  std::vector<ActionDescriptor> actions;
  ForwardSet allowed_forwards = ForwardSet::all();
  std::optional<ForwardTarget> miss_forward;  // nullopt: the mode's default
  bool monitor = false;
};

struct FieldValue {
  FieldSelector field;
  std::uint64_t value;
};

struct PipeEntry {
  std::vector<FieldValue> match_values;   // one per variable match field
  std::vector<FieldValue> action_values;  // one per variable action
  ForwardTarget forward;
};

struct MonitorCounters {
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;  // frame bytes, FCS excluded

  friend bool operator==(const MonitorCounters&, const MonitorCounters&) = default;
};

struct EngineLimits {
  std::uint32_t max_pipes = 15;
  std::uint32_t max_entries_per_pipe = 262'144;
  std::uint32_t max_pipe_hops = 15;
  std::uint32_t entry_insertion_latency_us = 305;
};

enum class PipeMode : std::uint8_t { vnf, switch_mode, remote_vnf };

struct EngineConfig {
  PipeMode mode = PipeMode::vnf;
  EngineLimits limits;
};

enum class FlowErrc {
  invalid_config,
  unsupported_mode,
  pipe_limit,
  duplicate_root,
  invalid_template,
  unknown_pipe,
  unknown_entry,
  entry_limit,
  forward_not_allowed,
  missing_value,
  unexpected_value,
  value_out_of_range,
  monitor_disabled,
  no_root,
};

class FlowError : public std::runtime_error {
 public:
  FlowError(FlowErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  FlowErrc code() const noexcept { return code_; }

 private:
  FlowErrc code_;
};

enum class DropReason : std::uint8_t { forwarded_drop, loop_guard, malformed };

inline std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::forwarded_drop: return "forwarded_drop";
    case DropReason::loop_guard: return "loop_guard";
    case DropReason::malformed: return "malformed";
  }
  return "?";
}

struct Egress {
  PortId port;
  Packet packet;
};
struct Dropped {
  DropReason reason;
};
struct SlowPath {
  Packet packet;
};
using Verdict = std::variant<Egress, Dropped, SlowPath>;

struct PipeStats {
  std::uint64_t reached = 0;
  std::uint64_t matched = 0;
  std::uint64_t missed = 0;
};

// Field access against a parsed packet. Writes keep frame and view in sync.
inline std::uint64_t read_field(const Packet& pkt, const HeaderView& v, FieldSelector f) {
  switch (f) {
    case FieldSelector::eth_src: return v.eth_src.to_u64();
    case FieldSelector::eth_dst: return v.eth_dst.to_u64();
    case FieldSelector::ip_src: return v.ip_src.value;
    case FieldSelector::ip_dst: return v.ip_dst.value;
    case FieldSelector::ip_proto: return v.ip_proto;
    case FieldSelector::udp_src: return v.udp_src;
    case FieldSelector::udp_dst: return v.udp_dst;
    default: return pkt.meta[static_cast<std::size_t>(f) - static_cast<std::size_t>(FieldSelector::meta0)];
  }
}

inline void write_field(Packet& pkt, HeaderView& v, FieldSelector f, std::uint64_t value) {
  auto* frame = pkt.frame.data();
  switch (f) {
    case FieldSelector::eth_src:
      v.eth_src = MacAddr::from_u64(value);
      std::copy(v.eth_src.bytes.begin(), v.eth_src.bytes.end(), frame + 6);
      break;
    case FieldSelector::eth_dst:
      v.eth_dst = MacAddr::from_u64(value);
      std::copy(v.eth_dst.bytes.begin(), v.eth_dst.bytes.end(), frame);
      break;
    case FieldSelector::ip_src:
      v.ip_src.value = static_cast<std::uint32_t>(value);
      detail::store_be32(frame + v.l3_offset + 12, v.ip_src.value);
      break;
    case FieldSelector::ip_dst:
      v.ip_dst.value = static_cast<std::uint32_t>(value);
      detail::store_be32(frame + v.l3_offset + 16, v.ip_dst.value);
      break;
    case FieldSelector::ip_proto:
      v.ip_proto = static_cast<std::uint8_t>(value);
      frame[v.l3_offset + 9] = v.ip_proto;
      break;
    case FieldSelector::udp_src:
      v.udp_src = static_cast<std::uint16_t>(value);
      detail::store_be16(frame + v.l4_offset, v.udp_src);
      break;
    case FieldSelector::udp_dst:
      v.udp_dst = static_cast<std::uint16_t>(value);
      detail::store_be16(frame + v.l4_offset + 2, v.udp_dst);
      break;
    default:
      pkt.meta[static_cast<std::size_t>(f) - static_cast<std::size_t>(FieldSelector::meta0)] =
          static_cast<std::uint32_t>(value);
      break;
  }
}

class Engine {
 public:
  explicit Engine(EngineConfig config = {}) : config_(config) {
    const auto& l = config_.limits;
    if (l.max_pipes == 0 || l.max_entries_per_pipe == 0 || l.max_pipe_hops == 0 ||
        l.entry_insertion_latency_us == 0) {
      throw FlowError(FlowErrc::invalid_config, "engine limits must be strictly positive");
    }
    if (config_.mode != PipeMode::vnf) {
      throw FlowError(FlowErrc::unsupported_mode, "only vnf pipe mode is supported");
    }
  }

  const EngineConfig& config() const { return config_; }
  std::size_t pipe_count() const { return pipes_.size(); }
  bool has_root() const { return root_.has_value(); }
  std::optional<PipeId> root() const { return root_; }

  PipeId create_pipe(PipeSpec spec) {
    if (pipes_.size() >= config_.limits.max_pipes) {
      throw FlowError(FlowErrc::pipe_limit,
                      "pipe limit of " + std::to_string(config_.limits.max_pipes) + " reached");
    }
    if (spec.is_root && root_) throw FlowError(FlowErrc::duplicate_root, "engine already has a root pipe");

    PipeState state;
    std::array<bool, kFieldCount> seen{};
    for (std::size_t i = 0; i < spec.match.size(); ++i) {
      const auto& m = spec.match[i];
      auto full = field_full_mask(m.field);
      auto idx = static_cast<std::size_t>(m.field);
      if (seen[idx]) bad_template(spec, "field " + std::string(to_string(m.field)) + " matched twice");
      seen[idx] = true;
      if (m.mask && (*m.mask & ~full)) bad_template(spec, "match mask wider than " + std::string(to_string(m.field)));
      if (m.binding == Binding::variable) {
        if (m.value != full) {
          bad_template(spec, "variable match on " + std::string(to_string(m.field)) +
                                 " requires the pipe match value to be all ones");
        }
        state.var_match.push_back(i);
      } else if (m.value & ~full) {
        bad_template(spec, "constant match value wider than " + std::string(to_string(m.field)));
      }
    }
    seen = {};
    for (std::size_t i = 0; i < spec.actions.size(); ++i) {
      const auto& a = spec.actions[i];
      auto idx = static_cast<std::size_t>(a.field);
      if (seen[idx]) bad_template(spec, "field " + std::string(to_string(a.field)) + " written twice");
      seen[idx] = true;
      if (a.kind == ActionKind::hash_five_tuple) {
        if (!is_meta(a.field)) bad_template(spec, "hash result must target a metadata register");
        if (a.modulus == 0) bad_template(spec, "hash modulus must be positive");
        continue;
      }
      auto full = field_full_mask(a.field);
      if (a.mask && (*a.mask & ~full)) bad_template(spec, "action mask wider than " + std::string(to_string(a.field)));
      if (a.binding == Binding::variable) {
        state.var_action.push_back(i);
      } else if (a.value & ~full) {
        bad_template(spec, "constant action value wider than " + std::string(to_string(a.field)));
      }
      if (is_ip_field(a.field)) state.writes_ip = true;
    }
    if (spec.miss_forward) {
      if (spec.miss_forward->kind == ForwardKind::pipe && spec.miss_forward->id >= pipes_.size()) {
        throw FlowError(FlowErrc::unknown_pipe, "miss forward of pipe '" + spec.name + "' references unknown pipe " +
                                                    std::to_string(spec.miss_forward->id));
      }
      state.miss = *spec.miss_forward;
    } else {
      state.miss = ForwardTarget::slow_path();  // vnf: misses go to the slow path
    }

    auto id = static_cast<PipeId>(pipes_.size());
    if (spec.is_root) root_ = id;
    state.spec = std::move(spec);
    pipes_.push_back(std::move(state));
    return id;
  }

  EntryId add_entry(PipeId pipe, const PipeEntry& entry, SimTime now_ns = 0) {
    auto& p = pipe_state(pipe);
    if (p.entries.size() >= config_.limits.max_entries_per_pipe) {
      throw FlowError(FlowErrc::entry_limit, "pipe '" + p.spec.name + "' is full (" +
                                                 std::to_string(config_.limits.max_entries_per_pipe) + " entries)");
    }
    if (!p.spec.allowed_forwards.contains(entry.forward.kind)) {
      throw FlowError(FlowErrc::forward_not_allowed, "pipe '" + p.spec.name + "' does not allow " +
                                                         std::string(to_string(entry.forward.kind)) + " forwards");
    }
    if (entry.forward.kind == ForwardKind::pipe && entry.forward.id >= pipes_.size()) {
      throw FlowError(FlowErrc::unknown_pipe, "entry forwards to unknown pipe " + std::to_string(entry.forward.id));
    }

    EntryState e;
    e.forward = entry.forward;
    e.active_at_ns = now_ns + std::uint64_t{config_.limits.entry_insertion_latency_us} * 1000;
    e.match_values = bind_values(p, p.var_match, entry.match_values, [&](std::size_t i) {
      return p.spec.match[i].field;
    });
    e.action_values = bind_values(p, p.var_action, entry.action_values, [&](std::size_t i) {
      return p.spec.actions[i].field;
    });

    auto id = static_cast<EntryId>(p.entries.size());
    p.index[index_key(p, e.match_values)].push_back(id);
    p.entries.push_back(std::move(e));
    return id;
  }

  std::size_t entry_count(PipeId pipe) const { return pipe_state(pipe).entries.size(); }
  const PipeSpec& pipe_spec(PipeId pipe) const { return pipe_state(pipe).spec; }
  const PipeStats& pipe_stats(PipeId pipe) const { return pipe_state(pipe).stats; }
  ForwardTarget miss_forward(PipeId pipe) const { return pipe_state(pipe).miss; }

  std::optional<PipeId> find_pipe(std::string_view name) const {
    for (std::size_t i = 0; i < pipes_.size(); ++i) {
      if (pipes_[i].spec.name == name) return static_cast<PipeId>(i);
    }
    return std::nullopt;
  }

  SimTime entry_active_at(PipeId pipe, EntryId entry) const { return entry_state(pipe, entry).active_at_ns; }

  /// Pure match predicate: for every matched field,
  /// (field & mask) == (value & mask), with the mask explicit or full-width and
  /// the value taken from the pipe (constant) or the entry (variable).
  /// Ignores insertion latency.
  bool matches(PipeId pipe, EntryId entry, const Packet& pkt) const {
    const auto& p = pipe_state(pipe);
    const auto& e = entry_state(pipe, entry);
    auto parsed = parse(pkt.frame);
    if (!parsed.ok()) return false;
    std::size_t var = 0;
    for (const auto& m : p.spec.match) {
      std::uint64_t mask = m.effective_mask();
      std::uint64_t value = m.binding == Binding::variable ? e.match_values[var++] : m.value;
      if ((read_field(pkt, parsed.view, m.field) & mask) != (value & mask)) return false;
    }
    return true;
  }

  MonitorCounters counters(PipeId pipe, EntryId entry) const {
    const auto& p = pipe_state(pipe);
    if (!p.spec.monitor) throw FlowError(FlowErrc::monitor_disabled, "pipe '" + p.spec.name + "' has no monitor");
    return entry_state(pipe, entry).counters;
  }

  /// Runs one packet through the pipeline starting at the root pipe.
  Verdict process(Packet pkt) {
    if (!root_) throw FlowError(FlowErrc::no_root, "engine has no root pipe");
    auto parsed = parse(pkt.frame);
    if (parsed.status == ParseStatus::truncated) return Dropped{DropReason::malformed};
    if (!parsed.ok()) return SlowPath{std::move(pkt)};
    HeaderView& view = parsed.view;

    PipeId current = *root_;
    for (std::uint32_t hops = 1;; ++hops) {
      if (hops > config_.limits.max_pipe_hops) return Dropped{DropReason::loop_guard};
      auto& p = pipes_[current];
      ++p.stats.reached;
      ForwardTarget fwd = p.miss;
      if (auto* e = lookup(p, pkt, view)) {
        ++p.stats.matched;
        if (p.spec.monitor) {
          ++e->counters.packets;
          e->counters.bytes += pkt.frame.size();
        }
        apply_actions(p, *e, pkt, view);
        fwd = e->forward;
      } else {
        ++p.stats.missed;
      }
      switch (fwd.kind) {
        case ForwardKind::pipe: current = fwd.id; break;
        case ForwardKind::port: return Egress{fwd.id, std::move(pkt)};
        case ForwardKind::slow_path: return SlowPath{std::move(pkt)};
        case ForwardKind::drop: return Dropped{DropReason::forwarded_drop};
      }
    }
  }

 private:
  using Values = std::array<std::uint64_t, kFieldCount>;

  struct KeyHash {
    std::size_t operator()(const Values& k) const noexcept {
      std::uint64_t h = 0x9E3779B97F4A7C15ull;
      for (auto v : k) {
        h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  struct EntryState {
    Values match_values{};
    Values action_values{};
    ForwardTarget forward;
    SimTime active_at_ns = 0;
    MonitorCounters counters;
  };

  struct PipeState {
    PipeSpec spec;
    ForwardTarget miss;
    std::vector<std::size_t> var_match;   // indices into spec.match
    std::vector<std::size_t> var_action;  // indices into spec.actions
    bool writes_ip = false;
    std::vector<EntryState> entries;
    // Masks are fixed per pipe, so matching reduces to an exact lookup on the
    // masked variable fields. Buckets hold entry ids in insertion order.
    std::unordered_map<Values, std::vector<EntryId>, KeyHash> index;
    PipeStats stats;
  };

  [[noreturn]] static void bad_template(const PipeSpec& spec, const std::string& why) {
    throw FlowError(FlowErrc::invalid_template, "pipe '" + spec.name + "': " + why);
  }

  const PipeState& pipe_state(PipeId id) const {
    if (id >= pipes_.size()) throw FlowError(FlowErrc::unknown_pipe, "unknown pipe " + std::to_string(id));
    return pipes_[id];
  }
  PipeState& pipe_state(PipeId id) {
    return const_cast<PipeState&>(static_cast<const Engine&>(*this).pipe_state(id));
  }

  const EntryState& entry_state(PipeId pipe, EntryId entry) const {
    const auto& p = pipe_state(pipe);
    if (entry >= p.entries.size()) {
      throw FlowError(FlowErrc::unknown_entry, "pipe '" + p.spec.name + "' has no entry " + std::to_string(entry));
    }
    return p.entries[entry];
  }

  template <class FieldOf>
  static Values bind_values(const PipeState& p, const std::vector<std::size_t>& slots,
                            const std::vector<FieldValue>& supplied, FieldOf field_of) {
    Values out{};
    std::array<bool, kFieldCount> used{};
    for (std::size_t s = 0; s < slots.size(); ++s) {
      auto field = field_of(slots[s]);
      auto it = std::find_if(supplied.begin(), supplied.end(), [&](const FieldValue& fv) { return fv.field == field; });
      if (it == supplied.end()) {
        throw FlowError(FlowErrc::missing_value,
                        "entry for pipe '" + p.spec.name + "' lacks a value for " + std::string(to_string(field)));
      }
      if (it->value & ~field_full_mask(field)) {
        throw FlowError(FlowErrc::value_out_of_range,
                        "value for " + std::string(to_string(field)) + " exceeds the field width");
      }
      out[s] = it->value;
      used[static_cast<std::size_t>(field)] = true;
    }
    for (const auto& fv : supplied) {
      if (!used[static_cast<std::size_t>(fv.field)]) {
        throw FlowError(FlowErrc::unexpected_value, "entry for pipe '" + p.spec.name +
                                                        "' supplies a value for non-variable field " +
                                                        std::string(to_string(fv.field)));
      }
    }
    if (supplied.size() != slots.size()) {
      throw FlowError(FlowErrc::unexpected_value, "entry for pipe '" + p.spec.name + "' repeats a field value");
    }
    return out;
  }

  static Values index_key(const PipeState& p, const Values& raw) {
    Values key{};
    for (std::size_t s = 0; s < p.var_match.size(); ++s) key[s] = raw[s] & p.spec.match[p.var_match[s]].effective_mask();
    return key;
  }

  EntryState* lookup(PipeState& p, const Packet& pkt, const HeaderView& view) {
    Values key{};
    std::size_t var = 0;
    for (const auto& m : p.spec.match) {
      std::uint64_t field = read_field(pkt, view, m.field) & m.effective_mask();
      if (m.binding == Binding::variable) {
        key[var++] = field;
      } else if (field != (m.value & m.effective_mask())) {
        return nullptr;
      }
    }
    auto it = p.index.find(key);
    if (it == p.index.end()) return nullptr;
    for (auto id : it->second) {
      auto& e = p.entries[id];
      if (e.active_at_ns <= pkt.arrival_ns) return &e;
    }
    return nullptr;
  }

  static void apply_actions(const PipeState& p, const EntryState& e, Packet& pkt, HeaderView& view) {
    std::size_t var = 0;
    for (const auto& a : p.spec.actions) {
      if (a.kind == ActionKind::hash_five_tuple) {
        write_field(pkt, view, a.field, five_tuple_hash(view) % a.modulus);
        continue;
      }
      std::uint64_t value = a.binding == Binding::variable ? e.action_values[var++] : a.value;
      if (a.mask) value = (read_field(pkt, view, a.field) & ~*a.mask) | (value & *a.mask);
      write_field(pkt, view, a.field, value);
    }
    if (p.writes_ip) refresh_ipv4_checksum(pkt.frame, view.l3_offset);
  }

  EngineConfig config_;
  std::vector<PipeState> pipes_;
  std::optional<PipeId> root_;
};

}  // namespace xenoflow
