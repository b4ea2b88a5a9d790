#pragma once

// JSON loaders for experiment configs and pipeline documents. All schema
// errors surface as std::invalid_argument with the offending key path.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xenoflow/capacity.hpp"
#include "xenoflow/experiments.hpp"
#include "xenoflow/fabric.hpp"
#include "xenoflow/flowpipe.hpp"
#include "xenoflow/lb.hpp"
#include "xenoflow/traffic.hpp"

namespace xenoflow {

using Json = nlohmann::json;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

inline void check_keys(const Json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) schema_error(where, "unknown key '" + key + "'");
  }
}

template <class T>
T get_as(const Json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    schema_error(where, e.what());
  }
}

template <class T>
void read_opt(const Json& obj, const char* key, T& out, const std::string& where) {
  if (auto it = obj.find(key); it != obj.end()) out = get_as<T>(*it, where + "." + key);
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace detail

/// Field value as a number, a "0x" hex string, a decimal string, dotted IPv4
/// or colon-separated MAC.
inline std::uint64_t parse_field_value(const Json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    auto v = j.get<std::int64_t>();
    if (v < 0) detail::schema_error(where, "negative field value");
    return static_cast<std::uint64_t>(v);
  }
  if (!j.is_string()) detail::schema_error(where, "expected a number or string value");
  auto s = j.get<std::string>();
  try {
    if (s.find(':') != std::string::npos) return MacAddr::parse(s).to_u64();
    if (std::count(s.begin(), s.end(), '.') == 3) return Ipv4Addr::parse(s).value;
    bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
    const char* first = s.data() + (hex ? 2 : 0);
    const char* last = s.data() + s.size();
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v, hex ? 16 : 10);
    if (ec != std::errc() || ptr != last) throw std::invalid_argument("malformed");
    return v;
  } catch (const std::exception&) {
    detail::schema_error(where, "malformed value '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// Capacity model and experiment config

inline CapacityModel parse_capacity_model(const Json& j, const std::string& where = "model") {
  detail::check_keys(j, where,
                     {"pps_caps", "line_rate_bps", "wire_overhead_bytes", "slow_path_pps", "slow_path_bps",
                      "host_path_pps", "fastpath_added_latency_us", "hostpath_added_latency_us", "base_rtt_us",
                      "queue_depth_packets"});
  CapacityModel m;
  if (auto it = j.find("pps_caps"); it != j.end()) {
    if (!it->is_array()) detail::schema_error(where + ".pps_caps", "expected an array");
    m.pps_cap_table.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      auto w = where + ".pps_caps[" + std::to_string(i) + "]";
      const auto& row = (*it)[i];
      detail::check_keys(row, w, {"max_frame_bytes", "pps_cap"});
      CapacityStep s;
      if (auto f = row.find("max_frame_bytes"); f != row.end() && !f->is_null()) {
        s.max_frame_bytes = detail::get_as<std::size_t>(*f, w + ".max_frame_bytes");
      }
      if (!row.contains("pps_cap")) detail::schema_error(w, "missing pps_cap");
      s.pps_cap = detail::get_as<double>(row["pps_cap"], w + ".pps_cap");
      m.pps_cap_table.push_back(s);
    }
  }
  detail::read_opt(j, "line_rate_bps", m.line_rate_bps, where);
  detail::read_opt(j, "wire_overhead_bytes", m.wire_overhead_bytes, where);
  detail::read_opt(j, "slow_path_pps", m.slow_path_pps, where);
  detail::read_opt(j, "slow_path_bps", m.slow_path_bps, where);
  detail::read_opt(j, "host_path_pps", m.host_path_pps, where);
  detail::read_opt(j, "fastpath_added_latency_us", m.fastpath_added_latency_us, where);
  detail::read_opt(j, "hostpath_added_latency_us", m.hostpath_added_latency_us, where);
  detail::read_opt(j, "base_rtt_us", m.base_rtt_us, where);
  detail::read_opt(j, "queue_depth_packets", m.queue_depth_packets, where);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    detail::schema_error(where, e.what());
  }
  return m;
}

inline std::optional<ExperimentKind> experiment_kind_from_string(std::string_view s) {
  if (s == "rq2") return ExperimentKind::rq2_throughput;
  if (s == "rq3") return ExperimentKind::rq3_bandwidth;
  if (s == "rq4") return ExperimentKind::rq4_latency;
  if (s == "rq5") return ExperimentKind::rq5_latency_under_load;
  return std::nullopt;
}

/// Overlays a JSON config on the defaults for `kind`. A relative calibration
/// path is resolved by the caller.
inline ExperimentSpec parse_experiment(const Json& j, ExperimentKind kind, std::string* calibration = nullptr) {
  const std::string w = "config";
  detail::check_keys(j, w,
                     {"experiment", "repetitions", "seed", "scale", "workers", "payloads", "offered_pps",
                      "load_fractions", "splits", "probes", "probe_rate_pps", "probe_payload", "background_payload",
                      "model", "calibration"});
  if (auto it = j.find("experiment"); it != j.end()) {
    auto name = detail::get_as<std::string>(*it, w + ".experiment");
    if (experiment_kind_from_string(name) != kind) {
      detail::schema_error(w + ".experiment", "config is for '" + name + "', not '" +
                                                  std::string(experiment_name(kind)) + "'");
    }
  }
  auto spec = ExperimentSpec::defaults(kind);
  detail::read_opt(j, "repetitions", spec.repetitions, w);
  detail::read_opt(j, "seed", spec.seed, w);
  detail::read_opt(j, "scale", spec.scale, w);
  detail::read_opt(j, "workers", spec.workers, w);
  detail::read_opt(j, "payloads", spec.payloads, w);
  detail::read_opt(j, "offered_pps", spec.offered_pps, w);
  detail::read_opt(j, "load_fractions", spec.load_fractions, w);
  detail::read_opt(j, "probes", spec.probes, w);
  detail::read_opt(j, "probe_rate_pps", spec.probe_rate_pps, w);
  detail::read_opt(j, "probe_payload", spec.probe_payload, w);
  detail::read_opt(j, "background_payload", spec.background_payload, w);
  if (auto it = j.find("splits"); it != j.end()) {
    if (!it->is_array()) detail::schema_error(w + ".splits", "expected an array");
    spec.splits.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      auto sw = w + ".splits[" + std::to_string(i) + "]";
      const auto& s = (*it)[i];
      detail::check_keys(s, sw, {"label", "backends", "even_percent"});
      TrafficSplit split;
      detail::read_opt(s, "label", split.label, sw);
      detail::read_opt(s, "backends", split.backends, sw);
      detail::read_opt(s, "even_percent", split.even_percent, sw);
      if (split.label.empty()) split.label = "split" + std::to_string(i);
      spec.splits.push_back(std::move(split));
    }
  }
  if (auto it = j.find("model"); it != j.end()) spec.model = parse_capacity_model(*it, w + ".model");
  if (auto it = j.find("calibration"); it != j.end() && calibration) {
    *calibration = detail::get_as<std::string>(*it, w + ".calibration");
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    detail::schema_error(w, e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Pipeline documents

struct PortRef {
  std::optional<PortId> id;
  std::string name;  // used when id is empty
};

struct ForwardDecl {
  ForwardKind kind = ForwardKind::slow_path;
  std::string pipe;  // for ForwardKind::pipe
  PortRef port;      // for ForwardKind::port
};

struct PipeDecl {
  PipeSpec spec;  // miss_forward is filled in at install time
  std::optional<ForwardDecl> miss;
};

struct EntryDecl {
  std::string pipe;
  std::vector<FieldValue> match_values;
  std::vector<FieldValue> action_values;
  ForwardDecl forward;
};

struct LbDecl {
  std::vector<Backend> backends;
  PortRef out_port;
  LbStrategy strategy = LbStrategy::low_bits;
};

struct TrafficDecl {
  TrafficProfile profile;
  std::string ingress = std::string(kIngressPort);
};

struct PipelineDocument {
  EngineConfig engine;
  std::vector<std::string> ports = {"p0", std::string(kEgressPort), std::string(kIngressPort)};
  std::vector<std::pair<std::string, std::string>> wiring = {{std::string(kIngressPort), std::string(kEgressPort)}};
  std::vector<PipeDecl> pipes;
  std::vector<EntryDecl> entries;
  std::optional<LbDecl> lb;
  std::optional<TrafficDecl> traffic;
};

namespace detail {

inline PortRef parse_port_ref(const Json& j, const std::string& where) {
  if (j.is_string()) return {std::nullopt, j.get<std::string>()};
  return {get_as<PortId>(j, where), {}};
}

inline ForwardDecl parse_forward(const Json& j, const std::string& where) {
  ForwardDecl f;
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "slow_path") {
      f.kind = ForwardKind::slow_path;
    } else if (s == "drop") {
      f.kind = ForwardKind::drop;
    } else {
      schema_error(where, "unknown forward '" + s + "'");
    }
    return f;
  }
  check_keys(j, where, {"port", "pipe"});
  if (j.size() != 1) schema_error(where, "forward needs exactly one of 'port' or 'pipe'");
  if (j.contains("port")) {
    f.kind = ForwardKind::port;
    f.port = parse_port_ref(j["port"], where + ".port");
  } else {
    f.kind = ForwardKind::pipe;
    f.pipe = get_as<std::string>(j["pipe"], where + ".pipe");
  }
  return f;
}

inline FieldSelector parse_field(const Json& j, const std::string& where) {
  auto name = get_as<std::string>(j, where);
  auto f = field_from_string(name);
  if (!f) schema_error(where, "unknown field '" + name + "'");
  return *f;
}

inline Binding parse_binding(const Json& obj, const std::string& where, Binding fallback) {
  auto it = obj.find("binding");
  if (it == obj.end()) return fallback;
  auto s = get_as<std::string>(*it, where + ".binding");
  if (s == "constant") return Binding::constant;
  if (s == "variable") return Binding::variable;
  schema_error(where + ".binding", "expected 'constant' or 'variable'");
}

inline std::vector<FieldValue> parse_field_values(const Json& j, const std::string& where) {
  std::vector<FieldValue> out;
  if (!j.is_object()) schema_error(where, "expected an object of field values");
  for (const auto& [key, value] : j.items()) {
    auto f = field_from_string(key);
    if (!f) schema_error(where, "unknown field '" + key + "'");
    out.push_back({*f, parse_field_value(value, where + "." + key)});
  }
  return out;
}

inline PipeDecl parse_pipe(const Json& j, const std::string& where) {
  check_keys(j, where, {"name", "root", "monitor", "match", "actions", "forwards", "miss"});
  PipeDecl d;
  auto& s = d.spec;
  if (!j.contains("name")) schema_error(where, "missing name");
  s.name = get_as<std::string>(j["name"], where + ".name");
  read_opt(j, "root", s.is_root, where);
  read_opt(j, "monitor", s.monitor, where);
  if (auto it = j.find("match"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      auto mw = where + ".match[" + std::to_string(i) + "]";
      const auto& m = (*it)[i];
      check_keys(m, mw, {"field", "mask", "binding", "value"});
      MatchField mf;
      mf.field = parse_field(m.value("field", Json()), mw + ".field");
      if (auto mk = m.find("mask"); mk != m.end()) mf.mask = parse_field_value(*mk, mw + ".mask");
      mf.binding = parse_binding(m, mw, m.contains("value") ? Binding::constant : Binding::variable);
      if (auto v = m.find("value"); v != m.end()) {
        mf.value = parse_field_value(*v, mw + ".value");
      } else if (mf.binding == Binding::variable) {
        mf.value = field_full_mask(mf.field);
      } else {
        schema_error(mw, "constant match needs a value");
      }
      s.match.push_back(mf);
    }
  }
  if (auto it = j.find("actions"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      auto aw = where + ".actions[" + std::to_string(i) + "]";
      const auto& a = (*it)[i];
      auto type = a.value("type", std::string("set"));
      if (type == "hash5") {
        check_keys(a, aw, {"type", "meta", "modulus"});
        auto meta = parse_field(a.value("meta", Json("meta0")), aw + ".meta");
        std::uint32_t modulus = 1;
        read_opt(a, "modulus", modulus, aw);
        s.actions.push_back(ActionDescriptor::hash_to_meta(meta, modulus));
      } else if (type == "set") {
        check_keys(a, aw, {"type", "field", "mask", "binding", "value"});
        ActionDescriptor ad;
        ad.field = parse_field(a.value("field", Json()), aw + ".field");
        if (auto mk = a.find("mask"); mk != a.end()) ad.mask = parse_field_value(*mk, aw + ".mask");
        ad.binding = parse_binding(a, aw, a.contains("value") ? Binding::constant : Binding::variable);
        if (ad.binding == Binding::constant) {
          if (!a.contains("value")) schema_error(aw, "constant action needs a value");
          ad.value = parse_field_value(a["value"], aw + ".value");
        }
        s.actions.push_back(ad);
      } else {
        schema_error(aw + ".type", "expected 'set' or 'hash5'");
      }
    }
  }
  if (auto it = j.find("forwards"); it != j.end()) {
    s.allowed_forwards = ForwardSet();
    for (const auto& k : *it) {
      auto name = get_as<std::string>(k, where + ".forwards");
      if (name == "pipe") s.allowed_forwards.insert(ForwardKind::pipe);
      else if (name == "port") s.allowed_forwards.insert(ForwardKind::port);
      else if (name == "slow_path") s.allowed_forwards.insert(ForwardKind::slow_path);
      else if (name == "drop") s.allowed_forwards.insert(ForwardKind::drop);
      else schema_error(where + ".forwards", "unknown forward kind '" + name + "'");
    }
  }
  if (auto it = j.find("miss"); it != j.end()) d.miss = parse_forward(*it, where + ".miss");
  return d;
}

inline TrafficDecl parse_traffic(const Json& j, const std::string& where) {
  check_keys(j, where,
             {"payload_bytes", "rate_pps", "packet_count", "duration_s", "even_percent", "src_range", "dst_ip",
              "dst_port", "src_port", "qname", "seed", "ingress", "exponential_jitter"});
  TrafficDecl d;
  auto& p = d.profile;
  read_opt(j, "payload_bytes", p.payload_bytes, where);
  read_opt(j, "rate_pps", p.rate_pps, where);
  read_opt(j, "packet_count", p.packet_count, where);
  if (j.contains("duration_s")) p.duration_s = get_as<double>(j["duration_s"], where + ".duration_s");
  UniformRange range;
  if (auto it = j.find("src_range"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) schema_error(where + ".src_range", "expected [lo, hi]");
    range.lo.value = static_cast<std::uint32_t>(parse_field_value((*it)[0], where + ".src_range[0]"));
    range.hi.value = static_cast<std::uint32_t>(parse_field_value((*it)[1], where + ".src_range[1]"));
  }
  if (j.contains("even_percent")) {
    p.ip_src_dist = ParitySplit{get_as<double>(j["even_percent"], where + ".even_percent"), range};
  } else {
    p.ip_src_dist = range;
  }
  if (j.contains("dst_ip")) p.dst_ip.value = static_cast<std::uint32_t>(parse_field_value(j["dst_ip"], where + ".dst_ip"));
  read_opt(j, "dst_port", p.dst_port, where);
  if (j.contains("src_port")) p.src_port = get_as<std::uint16_t>(j["src_port"], where + ".src_port");
  read_opt(j, "qname", p.qname, where);
  read_opt(j, "seed", p.seed, where);
  read_opt(j, "exponential_jitter", p.exponential_jitter, where);
  read_opt(j, "ingress", d.ingress, where);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    schema_error(where, e.what());
  }
  return d;
}

}  // namespace detail

inline PipelineDocument parse_pipeline(const Json& j) {
  const std::string w = "pipeline";
  detail::check_keys(j, w, {"mode", "limits", "ports", "wiring", "pipes", "entries", "lb", "traffic"});
  PipelineDocument doc;

  if (auto it = j.find("mode"); it != j.end()) {
    auto m = detail::get_as<std::string>(*it, w + ".mode");
    if (m == "vnf") doc.engine.mode = PipeMode::vnf;
    else if (m == "switch") doc.engine.mode = PipeMode::switch_mode;
    else if (m == "remote_vnf") doc.engine.mode = PipeMode::remote_vnf;
    else detail::schema_error(w + ".mode", "expected 'vnf', 'switch' or 'remote_vnf'");
  }
  if (auto it = j.find("limits"); it != j.end()) {
    auto lw = w + ".limits";
    detail::check_keys(*it, lw, {"max_pipes", "max_entries_per_pipe", "max_pipe_hops", "entry_insertion_latency_us"});
    auto& l = doc.engine.limits;
    detail::read_opt(*it, "max_pipes", l.max_pipes, lw);
    detail::read_opt(*it, "max_entries_per_pipe", l.max_entries_per_pipe, lw);
    detail::read_opt(*it, "max_pipe_hops", l.max_pipe_hops, lw);
    detail::read_opt(*it, "entry_insertion_latency_us", l.entry_insertion_latency_us, lw);
  }
  detail::read_opt(j, "ports", doc.ports, w);
  if (auto it = j.find("wiring"); it != j.end()) {
    doc.wiring.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      auto ww = w + ".wiring[" + std::to_string(i) + "]";
      const auto& r = (*it)[i];
      detail::check_keys(r, ww, {"in", "out"});
      doc.wiring.emplace_back(detail::get_as<std::string>(r.value("in", Json()), ww + ".in"),
                              detail::get_as<std::string>(r.value("out", Json()), ww + ".out"));
    }
  }
  if (auto it = j.find("pipes"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      doc.pipes.push_back(detail::parse_pipe((*it)[i], w + ".pipes[" + std::to_string(i) + "]"));
    }
  }
  if (auto it = j.find("entries"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      auto ew = w + ".entries[" + std::to_string(i) + "]";
      const auto& e = (*it)[i];
      detail::check_keys(e, ew, {"pipe", "match", "actions", "forward"});
      EntryDecl d;
      d.pipe = detail::get_as<std::string>(e.value("pipe", Json()), ew + ".pipe");
      if (e.contains("match")) d.match_values = detail::parse_field_values(e["match"], ew + ".match");
      if (e.contains("actions")) d.action_values = detail::parse_field_values(e["actions"], ew + ".actions");
      if (!e.contains("forward")) detail::schema_error(ew, "missing forward");
      d.forward = detail::parse_forward(e["forward"], ew + ".forward");
      doc.entries.push_back(std::move(d));
    }
  }
  if (auto it = j.find("lb"); it != j.end()) {
    auto lw = w + ".lb";
    detail::check_keys(*it, lw, {"backends", "out_port", "strategy"});
    LbDecl lb;
    lb.out_port = {std::nullopt, std::string(kEgressPort)};
    if (it->contains("out_port")) lb.out_port = detail::parse_port_ref((*it)["out_port"], lw + ".out_port");
    auto strategy = it->value("strategy", std::string("low_bits"));
    if (strategy == "low_bits") lb.strategy = LbStrategy::low_bits;
    else if (strategy == "five_tuple_hash") lb.strategy = LbStrategy::five_tuple_hash;
    else detail::schema_error(lw + ".strategy", "expected 'low_bits' or 'five_tuple_hash'");
    const auto& backends = it->value("backends", Json::array());
    for (std::size_t i = 0; i < backends.size(); ++i) {
      auto bw = lw + ".backends[" + std::to_string(i) + "]";
      detail::check_keys(backends[i], bw, {"mac", "label"});
      Backend b;
      b.mac = MacAddr::from_u64(parse_field_value(backends[i].value("mac", Json()), bw + ".mac"));
      b.label = backends[i].value("label", "backend" + std::to_string(i));
      lb.backends.push_back(std::move(b));
    }
    doc.lb = std::move(lb);
  }
  if (auto it = j.find("traffic"); it != j.end()) doc.traffic = detail::parse_traffic(*it, w + ".traffic");
  return doc;
}

inline PipelineDocument load_pipeline(const std::string& path) { return parse_pipeline(detail::read_json_file(path)); }

struct InstalledPipeline {
  Fabric fabric;
  Engine engine;
};

/// Creates ports, wiring, pipes (in document order), the load balancer and
/// entries. Pipe references must point to pipes declared earlier.
inline InstalledPipeline install(const PipelineDocument& doc, const CapacityModel& model = {}, SimTime now_ns = 0) {
  InstalledPipeline out{Fabric(model), Engine(doc.engine)};
  for (const auto& p : doc.ports) out.fabric.add_port(p);
  for (const auto& [in, o] : doc.wiring) out.fabric.add_wiring(in, o);

  auto port_of = [&](const PortRef& r) { return r.id ? *r.id : out.fabric.port_id(r.name); };
  auto target_of = [&](const ForwardDecl& f) {
    switch (f.kind) {
      case ForwardKind::pipe: {
        auto id = out.engine.find_pipe(f.pipe);
        if (!id) throw FlowError(FlowErrc::unknown_pipe, "unknown pipe '" + f.pipe + "'");
        return ForwardTarget::to_pipe(*id);
      }
      case ForwardKind::port: return ForwardTarget::to_port(port_of(f.port));
      case ForwardKind::drop: return ForwardTarget::drop();
      default: return ForwardTarget::slow_path();
    }
  };

  if (doc.lb) {
    LbConfig cfg{doc.lb->backends, port_of(doc.lb->out_port), doc.lb->strategy};
    build_lb(out.engine, cfg, now_ns);
  }
  for (const auto& d : doc.pipes) {
    auto spec = d.spec;
    if (d.miss) spec.miss_forward = target_of(*d.miss);
    out.engine.create_pipe(std::move(spec));
  }
  for (const auto& e : doc.entries) {
    auto pipe = out.engine.find_pipe(e.pipe);
    if (!pipe) throw FlowError(FlowErrc::unknown_pipe, "entry references unknown pipe '" + e.pipe + "'");
    out.engine.add_entry(*pipe, PipeEntry{e.match_values, e.action_values, target_of(e.forward)}, now_ns);
  }
  if (!out.engine.has_root()) throw FlowError(FlowErrc::no_root, "pipeline has no root pipe");
  return out;
}

}  // namespace xenoflow
