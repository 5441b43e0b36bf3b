#pragma once

// Constant-rate (Tamaraw-style) padding defense.
//
// Each direction sends on its own fixed schedule of slots k*rho. Real
// packets take the earliest free slot at or after their original time, in
// order; every earlier slot that no real packet claimed carries a dummy;
// the direction is then padded with dummies up to a multiple of L (at
// least L).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "wfp/error.hpp"
#include "wfp/traces.hpp"

namespace wfp {

struct DefenseConfig {
  double rho_out = 0.04;  // seconds per outgoing slot
  double rho_in = 0.012;  // seconds per incoming slot
  int pad_multiple = 100;

  void validate() const {
    if (!(rho_out > 0.0) || !(rho_in > 0.0) || !std::isfinite(rho_out) || !std::isfinite(rho_in))
      throw ConfigError("slot intervals must be positive");
    if (pad_multiple < 1) throw ConfigError("pad multiple must be >= 1");
  }
};

struct DefendedPacket {
  std::int64_t slot = 0;
  Direction direction = Direction::outgoing;
  bool real = false;
  double original_time = 0.0;  // real packets only
};

// Slot-level view of the defended trace, merged in time order with
// outgoing before incoming on ties.
inline std::vector<DefendedPacket> schedule_constant_rate(const RawTrace& trace, const DefenseConfig& config) {
  config.validate();
  std::vector<DefendedPacket> merged;
  std::vector<DefendedPacket> per_dir[2];

  for (const Direction dir : {Direction::outgoing, Direction::incoming}) {
    const double rho = dir == Direction::outgoing ? config.rho_out : config.rho_in;
    auto& out = per_dir[dir == Direction::outgoing ? 0 : 1];
    std::int64_t next_free = 0;
    for (const auto& p : trace.packets()) {
      if (p.direction != dir) continue;
      auto k = static_cast<std::int64_t>(std::ceil(p.timestamp / rho));
      while (static_cast<double>(k) * rho < p.timestamp) ++k;
      while (k > 0 && static_cast<double>(k - 1) * rho >= p.timestamp) --k;
      k = std::max(k, next_free);
      for (; next_free < k; ++next_free) out.push_back({next_free, dir, false, 0.0});
      out.push_back({k, dir, true, p.timestamp});
      next_free = k + 1;
    }
    const std::int64_t L = config.pad_multiple;
    const std::int64_t target = std::max<std::int64_t>(L, (next_free + L - 1) / L * L);
    for (; next_free < target; ++next_free) out.push_back({next_free, dir, false, 0.0});
  }

  const auto time_of = [&](const DefendedPacket& d) {
    return static_cast<double>(d.slot) * (d.direction == Direction::outgoing ? config.rho_out : config.rho_in);
  };
  std::merge(per_dir[0].begin(), per_dir[0].end(), per_dir[1].begin(), per_dir[1].end(), std::back_inserter(merged),
             [&](const DefendedPacket& a, const DefendedPacket& b) { return time_of(a) < time_of(b); });
  return merged;
}

// Slot time rounded to the microsecond grid of the trace file format.
inline double slot_time(std::int64_t slot, double rho) { return std::round(static_cast<double>(slot) * rho * 1e6) / 1e6; }

inline RawTrace simulate_constant_rate(const RawTrace& trace, const DefenseConfig& config) {
  const auto schedule = schedule_constant_rate(trace, config);
  std::vector<Packet> packets;
  packets.reserve(schedule.size());
  for (const auto& d : schedule)
    packets.push_back({slot_time(d.slot, d.direction == Direction::outgoing ? config.rho_out : config.rho_in), d.direction});
  return RawTrace(std::move(packets));
}

struct Overhead {
  double bandwidth = 0.0;  // percent
  double latency = 0.0;    // percent
};

inline Overhead overhead(const RawTrace& original, const RawTrace& defended) {
  const double span = original.duration();
  if (original.size() == 0) throw OverheadError("original trace has no packets");
  if (!(span > 0.0)) throw OverheadError("original trace has zero time span");
  const auto n = static_cast<double>(original.size());
  return {100.0 * (static_cast<double>(defended.size()) - n) / n, 100.0 * (defended.duration() - span) / span};
}

inline nlohmann::json to_json(const DefenseConfig& c) {
  return {{"rho_out", c.rho_out}, {"rho_in", c.rho_in}, {"pad_multiple", c.pad_multiple}};
}

}  // namespace wfp
