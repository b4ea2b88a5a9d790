#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xenoflow/packet.hpp"
#include "xenoflow/rational.hpp"

namespace xenoflow {

struct CapacityStep {
  std::optional<std::size_t> max_frame_bytes;  // nullopt: no upper bound
  double pps_cap = 0;

  friend bool operator==(const CapacityStep&, const CapacityStep&) = default;
};

// Service-rate and latency calibration of the modeled datapaths. Defaults
// describe a 100G eSwitch capped at 96.7 Mpps (frames <= 64 B) and 92.8 Mpps.
struct CapacityModel {
  std::vector<CapacityStep> pps_cap_table = {{64, 96.7e6}, {std::nullopt, 92.8e6}};
  double line_rate_bps = 100e9;
  std::size_t wire_overhead_bytes = kWireOverhead;
  double slow_path_pps = 100e3;
  double slow_path_bps = 1e9;
  double host_path_pps = 10e6;
  double fastpath_added_latency_us = 5.2;
  double hostpath_added_latency_us = 9.3;
  double base_rtt_us = 102;
  std::size_t queue_depth_packets = 4096;

  void validate() const {
    if (pps_cap_table.empty()) throw std::invalid_argument("capacity table is empty");
    for (std::size_t i = 0; i < pps_cap_table.size(); ++i) {
      const auto& s = pps_cap_table[i];
      if (!(s.pps_cap > 0)) throw std::invalid_argument("capacity caps must be positive");
      if (!s.max_frame_bytes && i + 1 != pps_cap_table.size()) {
        throw std::invalid_argument("only the last capacity row may be unbounded");
      }
      if (i > 0 && s.max_frame_bytes && *s.max_frame_bytes <= *pps_cap_table[i - 1].max_frame_bytes) {
        throw std::invalid_argument("capacity frame thresholds must be strictly increasing");
      }
    }
    if (!(line_rate_bps > 0) || !(slow_path_pps > 0) || !(slow_path_bps > 0) || !(host_path_pps > 0)) {
      throw std::invalid_argument("rates must be positive");
    }
    if (queue_depth_packets == 0) throw std::invalid_argument("queue depth must be positive");
  }

  std::optional<double> table_cap(std::size_t frame_bytes) const {
    for (const auto& s : pps_cap_table) {
      if (!s.max_frame_bytes || frame_bytes <= *s.max_frame_bytes) return s.pps_cap;
    }
    return std::nullopt;
  }
};

enum class ServicePath : std::uint8_t {
  fast,    // eSwitch pipeline
  host,    // host-resident load balancer
  slow,    // off-path cores behind RSS
  direct,  // no load balancer
};

inline const char* to_string(ServicePath p) {
  switch (p) {
    case ServicePath::fast: return "fast";
    case ServicePath::host: return "host";
    case ServicePath::slow: return "slow";
    case ServicePath::direct: return "direct";
  }
  return "?";
}

/// Packets per second a path can serve for a given frame size (FCS excluded).
inline Rational service_rate(const CapacityModel& m, std::size_t frame_bytes, ServicePath path) {
  auto line = [&] {
    return Rational::from_double(m.line_rate_bps) /
           Rational(static_cast<std::int64_t>(8 * (frame_bytes + m.wire_overhead_bytes)));
  };
  switch (path) {
    case ServicePath::fast: {
      auto cap = m.table_cap(frame_bytes);
      return cap ? min(Rational::from_double(*cap), line()) : line();
    }
    case ServicePath::host: return min(Rational::from_double(m.host_path_pps), line());
    case ServicePath::slow:
      return min(Rational::from_double(m.slow_path_pps),
                 Rational::from_double(m.slow_path_bps) / Rational(static_cast<std::int64_t>(8 * frame_bytes)));
    case ServicePath::direct: return line();
  }
  return line();
}

inline double service_rate_pps(const CapacityModel& m, std::size_t frame_bytes, ServicePath path) {
  return service_rate(m, frame_bytes, path).to_double();
}

inline double path_added_latency_us(const CapacityModel& m, ServicePath path) {
  switch (path) {
    case ServicePath::fast: return m.fastpath_added_latency_us;
    case ServicePath::host: return m.hostpath_added_latency_us;
    default: return 0.0;
  }
}

/// Reads a `frame_bytes,pps_cap` calibration table; the last row may use `inf`.
inline std::vector<CapacityStep> parse_calibration_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("calibration CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame_bytes,pps_cap") throw std::invalid_argument("calibration CSV header must be 'frame_bytes,pps_cap'");
  std::vector<CapacityStep> steps;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("calibration CSV line " + std::to_string(lineno) + ": expected two columns");
    }
    std::string frame = line.substr(0, comma);
    std::string pps = line.substr(comma + 1);
    CapacityStep s;
    try {
      if (frame != "inf") {
        std::size_t used = 0;
        auto v = std::stoull(frame, &used);
        if (used != frame.size()) throw std::invalid_argument("trailing characters");
        s.max_frame_bytes = static_cast<std::size_t>(v);
      }
      std::size_t used = 0;
      s.pps_cap = std::stod(pps, &used);
      if (used != pps.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("calibration CSV line " + std::to_string(lineno) + ": malformed number");
    }
    steps.push_back(s);
  }
  CapacityModel probe;
  probe.pps_cap_table = steps;
  probe.validate();
  return steps;
}

inline std::vector<CapacityStep> load_calibration_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration file: " + path);
  return parse_calibration_csv(in);
}

}  // namespace xenoflow
