#pragma once

// Per-trace model inputs: packet directions, inter-packet delays and seven
// whole-trace cumulative statistics.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "wfp/traces.hpp"

namespace wfp {

inline constexpr std::size_t kSequenceLength = 5000;
inline constexpr std::size_t kMetadataSize = 7;

// ±1 per packet, zero padded at the end.
struct DirectionSequence {
  std::vector<std::int8_t> values;
};

// Seconds since the previous packet; entry 0 is 0, zero padded at the end.
struct TimingSequence {
  std::vector<double> values;
};

struct MetadataVector {
  enum Field : std::size_t {
    total_packets,
    incoming_packets,
    outgoing_packets,
    incoming_ratio,
    outgoing_ratio,
    total_time,
    avg_time_per_packet,
  };
  std::array<double, kMetadataSize> values{};

  double operator[](Field f) const { return values[f]; }
  friend bool operator==(const MetadataVector&, const MetadataVector&) = default;
};

namespace detail {
inline void check_seq_len(std::size_t seq_len) {
  if (seq_len == 0) throw ConfigError("sequence length must be positive");
}
}  // namespace detail

inline DirectionSequence extract_direction(const RawTrace& trace, std::size_t seq_len = kSequenceLength) {
  detail::check_seq_len(seq_len);
  DirectionSequence out{std::vector<std::int8_t>(seq_len, 0)};
  const std::size_t n = std::min(trace.size(), seq_len);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = static_cast<std::int8_t>(to_int(trace[i].direction));
  return out;
}

inline TimingSequence extract_timing(const RawTrace& trace, std::size_t seq_len = kSequenceLength) {
  detail::check_seq_len(seq_len);
  TimingSequence out{std::vector<double>(seq_len, 0.0)};
  const std::size_t n = std::min(trace.size(), seq_len);
  for (std::size_t i = 1; i < n; ++i) out.values[i] = trace[i].timestamp - trace[i - 1].timestamp;
  return out;
}

// Computed over the whole trace, not the truncated prefix.
inline MetadataVector extract_metadata(const RawTrace& trace) {
  std::size_t incoming = 0;
  for (const auto& p : trace.packets()) incoming += p.direction == Direction::incoming;
  const auto total = static_cast<double>(trace.size());
  const auto in = static_cast<double>(incoming);
  const double span = trace.duration();

  MetadataVector m;
  m.values = {total, in, total - in, in / total, (total - in) / total, span, span / total};
  return m;
}

}  // namespace wfp
