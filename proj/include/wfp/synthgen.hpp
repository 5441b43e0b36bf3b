#pragma once

// Synthetic labeled trace corpora. Each site is a profile of burst lengths,
// packet rate and page length; traces alternate outgoing and incoming
// bursts with geometric lengths and exponential gaps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfp/error.hpp"
#include "wfp/traces.hpp"

namespace wfp {

enum class Separability { easy, hard };

inline Separability parse_separability(const std::string& s) {
  if (s == "easy") return Separability::easy;
  if (s == "hard") return Separability::hard;
  throw ConfigError("separability must be 'easy' or 'hard', got '" + s + "'");
}

struct SiteProfile {
  int site_id = 0;
  double mean_burst_out = 2.0;
  double mean_burst_in = 6.0;
  double outgoing_fraction = 0.25;  // expected share of outgoing packets
  double rate = 50.0;               // packets per second
  int trace_length_mean = 1000;
  double jitter = 0.0;              // gaps scaled by (1 + jitter * U(-1, 1))

  void validate() const {
    if (!(mean_burst_out >= 1.0) || !(mean_burst_in >= 1.0)) throw ConfigError("burst means must be >= 1");
    if (!(outgoing_fraction > 0.0 && outgoing_fraction < 1.0)) throw ConfigError("outgoing_fraction must lie in (0, 1)");
    if (!(rate > 0.0) || trace_length_mean < 1) throw ConfigError("rate and trace length must be positive");
    if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("jitter must lie in [0, 1)");
  }

  friend bool operator==(const SiteProfile&, const SiteProfile&) = default;
};

// Incoming burst mean that makes the expected outgoing share equal f.
inline double incoming_burst_mean(double mean_burst_out, double f) { return mean_burst_out * (1.0 - f) / f; }

inline SiteProfile make_profile(int site_id, double burst_out, double f, double rate, int length, double jitter) {
  SiteProfile p{site_id, burst_out, incoming_burst_mean(burst_out, f), f, rate, length, jitter};
  if (p.mean_burst_in < 1.0) {
    p.mean_burst_in = 1.0;
    p.mean_burst_out = f / (1.0 - f);
  }
  p.validate();
  return p;
}

namespace detail {

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline double spaced(double lo, double hi, std::size_t i, std::size_t n, bool log_scale) {
  const double u = n <= 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
  return log_scale ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u;
}

// Broad ranges shared by hard-mode sites and unmonitored pages.
inline SiteProfile random_profile(int site_id, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f = 0.15 + 0.3 * u(rng);
  const double burst = 1.5 + 5.0 * u(rng);
  const double rate = 15.0 * std::pow(20.0, u(rng));
  const int length = static_cast<int>(std::lround(300.0 * std::pow(12.0, u(rng))));
  const double jitter = 0.3 * u(rng);
  return make_profile(site_id, burst, f, rate, length, jitter);
}

}  // namespace detail

// easy: every parameter is spread over a wide range, each along its own
// shuffled ordering, so sites differ in rate, length, burst shape and
// direction mix at once. hard: all sites come from one narrow region.
inline std::vector<SiteProfile> generate_site_profiles(int n_sites, std::uint64_t seed, Separability sep) {
  if (n_sites < 0) throw ConfigError("n_sites must be non-negative");
  std::mt19937_64 rng(detail::derive_seed({seed, 0x51735ULL}));
  const auto n = static_cast<std::size_t>(n_sites);
  std::vector<SiteProfile> out;
  if (sep == Separability::easy) {
    std::vector<std::size_t> perm_len(n), perm_frac(n), perm_burst(n);
    std::iota(perm_len.begin(), perm_len.end(), 0);
    std::iota(perm_frac.begin(), perm_frac.end(), 0);
    std::iota(perm_burst.begin(), perm_burst.end(), 0);
    std::shuffle(perm_len.begin(), perm_len.end(), rng);
    std::shuffle(perm_frac.begin(), perm_frac.end(), rng);
    std::shuffle(perm_burst.begin(), perm_burst.end(), rng);
    std::uniform_real_distribution<double> jit(0.0, 0.2);
    for (std::size_t i = 0; i < n; ++i) {
      const double rate = detail::spaced(10.0, 400.0, i, n, true);
      const int length = static_cast<int>(std::lround(detail::spaced(400.0, 4200.0, perm_len[i], n, true)));
      const double f = detail::spaced(0.12, 0.5, perm_frac[i], n, false);
      const double burst = detail::spaced(1.5, 8.0, perm_burst[i], n, true);
      out.push_back(make_profile(static_cast<int>(i), burst, f, rate, length, jit(rng)));
    }
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = 0.28 + 0.06 * u(rng);
      const double burst = 3.0 + 1.0 * u(rng);
      const double rate = 40.0 + 20.0 * u(rng);
      const int length = static_cast<int>(std::lround(1800.0 + 400.0 * u(rng)));
      out.push_back(make_profile(static_cast<int>(i), burst, f, rate, length, 0.3 * u(rng)));
    }
  }
  return out;
}

inline constexpr double kLengthSpread = 0.1;  // relative std-dev of trace length

// Timestamps are rounded to whole microseconds so traces survive a round trip
// through the text format unchanged.
inline RawTrace generate_trace(const SiteProfile& profile, std::uint64_t seed) {
  profile.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> len_dist(static_cast<double>(profile.trace_length_mean),
                                            kLengthSpread * static_cast<double>(profile.trace_length_mean));
  const auto n = static_cast<std::size_t>(std::max<long>(2, std::lround(len_dist(rng))));
  std::geometric_distribution<int> burst_out(1.0 / profile.mean_burst_out);
  std::geometric_distribution<int> burst_in(1.0 / profile.mean_burst_in);
  std::exponential_distribution<double> gap(profile.rate);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);

  std::vector<Packet> packets;
  packets.reserve(n);
  double t = 0.0;
  Direction dir = Direction::outgoing;
  while (packets.size() < n) {
    const int burst = 1 + (dir == Direction::outgoing ? burst_out(rng) : burst_in(rng));
    for (int k = 0; k < burst && packets.size() < n; ++k) {
      if (!packets.empty()) t += gap(rng) * (1.0 + profile.jitter * noise(rng));
      packets.push_back({std::round(t * 1e6) / 1e6, dir});
    }
    dir = dir == Direction::outgoing ? Direction::incoming : Direction::outgoing;
  }
  return RawTrace(std::move(packets));
}

// Monitored traces come from the given profiles; each unmonitored trace
// comes from its own freshly drawn profile.
inline Corpus generate_corpus(const std::vector<SiteProfile>& profiles, int traces_per_site, int n_unmonitored, std::uint64_t seed) {
  if (traces_per_site < 0 || n_unmonitored < 0) throw ConfigError("trace counts must be non-negative");
  Corpus corpus;
  corpus.n_mon = static_cast<int>(profiles.size());
  for (std::size_t s = 0; s < profiles.size(); ++s) {
    for (int i = 0; i < traces_per_site; ++i) {
      const TraceLabel label{static_cast<int>(s), i};
      corpus.entries.push_back({generate_trace(profiles[s], detail::derive_seed({seed, 1, s, static_cast<std::uint64_t>(i)})), label,
                                corpus_file_name(label, corpus.n_mon)});
    }
  }
  for (int u = 0; u < n_unmonitored; ++u) {
    std::mt19937_64 prng(detail::derive_seed({seed, 2, static_cast<std::uint64_t>(u)}));
    const auto profile = detail::random_profile(-1, prng);
    const TraceLabel label{corpus.n_mon, u};
    corpus.entries.push_back({generate_trace(profile, detail::derive_seed({seed, 3, static_cast<std::uint64_t>(u)})), label,
                              corpus_file_name(label, corpus.n_mon)});
  }
  return corpus;
}

inline nlohmann::json to_json(const std::vector<SiteProfile>& profiles) {
  auto arr = nlohmann::json::array();
  for (const auto& p : profiles)
    arr.push_back({{"site_id", p.site_id},
                   {"mean_burst_out", p.mean_burst_out},
                   {"mean_burst_in", p.mean_burst_in},
                   {"outgoing_fraction", p.outgoing_fraction},
                   {"rate", p.rate},
                   {"trace_length_mean", p.trace_length_mean},
                   {"jitter", p.jitter}});
  return arr;
}

}  // namespace wfp
