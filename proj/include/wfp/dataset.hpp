#pragma once

// Train/validation/test splitting, input standardization and the processed
// dataset archive consumed by training and evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfp/archive.hpp"
#include "wfp/error.hpp"
#include "wfp/features.hpp"
#include "wfp/traces.hpp"

namespace wfp {

inline constexpr std::size_t kMinTracesPerSite = 10;
inline constexpr double kStdFloor = 1e-8;

// How many unmonitored corpus entries the experiment uses for training
// (validation is carved out of this pool) and for testing.
struct UnmonitoredPools {
  std::size_t train = 0;
  std::size_t test = 0;
};

struct DatasetSplit {
  std::vector<std::size_t> train, val, test;
  std::uint64_t seed = 0;

  std::vector<std::size_t> all() const {
    std::vector<std::size_t> out;
    out.reserve(train.size() + val.size() + test.size());
    out.insert(out.end(), train.begin(), train.end());
    out.insert(out.end(), val.begin(), val.end());
    out.insert(out.end(), test.begin(), test.end());
    std::sort(out.begin(), out.end());
    return out;
  }
  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

// Per monitored site, floor(10%) of its traces go to test. floor(5%) of the
// remaining monitored pool, drawn regardless of site, goes to validation.
// Unmonitored entries are drawn into disjoint train and test pools and
// floor(5%) of the train pool goes to validation. Indices are sorted.
inline DatasetSplit split_corpus(std::span<const TraceLabel> labels, int n_mon, std::uint64_t seed,
                                 UnmonitoredPools pools = {}) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> by_site(static_cast<std::size_t>(std::max(n_mon, 0)));
  std::vector<std::size_t> unmonitored;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i].class_id;
    if (c < 0 || c > n_mon) throw SplitError("label " + std::to_string(c) + " outside [0, n_mon]");
    if (c == n_mon) unmonitored.push_back(i);
    else by_site[static_cast<std::size_t>(c)].push_back(i);
  }

  DatasetSplit split;
  split.seed = seed;
  std::vector<std::size_t> remaining;
  for (std::size_t s = 0; s < by_site.size(); ++s) {
    auto& idx = by_site[s];
    if (idx.size() < kMinTracesPerSite)
      throw SplitError("site " + std::to_string(s) + " has " + std::to_string(idx.size()) + " traces, need at least " +
                       std::to_string(kMinTracesPerSite));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_test = idx.size() / 10;
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    remaining.insert(remaining.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(remaining.begin(), remaining.end());
  std::shuffle(remaining.begin(), remaining.end(), rng);
  const std::size_t n_val = remaining.size() * 5 / 100;
  split.val.assign(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(remaining.begin() + static_cast<std::ptrdiff_t>(n_val), remaining.end());

  if (pools.train + pools.test > 0) {
    if (pools.train + pools.test > unmonitored.size())
      throw SplitError("requested " + std::to_string(pools.train + pools.test) + " unmonitored traces, corpus has " +
                       std::to_string(unmonitored.size()));
    std::shuffle(unmonitored.begin(), unmonitored.end(), rng);
    const auto train_end = unmonitored.begin() + static_cast<std::ptrdiff_t>(pools.train);
    const std::size_t n_uval = pools.train * 5 / 100;
    split.val.insert(split.val.end(), unmonitored.begin(), unmonitored.begin() + static_cast<std::ptrdiff_t>(n_uval));
    split.train.insert(split.train.end(), unmonitored.begin() + static_cast<std::ptrdiff_t>(n_uval), train_end);
    split.test.insert(split.test.end(), train_end, train_end + static_cast<std::ptrdiff_t>(pools.test));
  }

  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// Raw (unstandardized) features of selected corpus entries, one row each.
struct FeatureTable {
  std::size_t seq_len = kSequenceLength;
  std::vector<std::int8_t> direction;  // rows x seq_len
  std::vector<double> timing;          // rows x seq_len
  std::vector<double> metadata;        // rows x 7
  std::vector<std::int64_t> lengths;   // min(packets, seq_len)
  std::vector<std::int64_t> labels;
  std::vector<std::int64_t> corpus_index;

  std::size_t rows() const { return labels.size(); }
};

inline FeatureTable extract_features(const Corpus& corpus, std::span<const std::size_t> indices,
                                     std::size_t seq_len = kSequenceLength) {
  FeatureTable t;
  t.seq_len = seq_len;
  t.direction.reserve(indices.size() * seq_len);
  t.timing.reserve(indices.size() * seq_len);
  for (auto i : indices) {
    if (i >= corpus.entries.size()) throw DatasetError("corpus index " + std::to_string(i) + " out of range");
    const auto& e = corpus.entries[i];
    try {
      const auto d = extract_direction(e.trace, seq_len);
      const auto tm = extract_timing(e.trace, seq_len);
      const auto m = extract_metadata(e.trace);
      t.direction.insert(t.direction.end(), d.values.begin(), d.values.end());
      t.timing.insert(t.timing.end(), tm.values.begin(), tm.values.end());
      t.metadata.insert(t.metadata.end(), m.values.begin(), m.values.end());
    } catch (const Error& err) {
      throw DatasetError("entry " + std::to_string(i) + " (" + e.source + "): " + err.what());
    }
    t.lengths.push_back(static_cast<std::int64_t>(std::min(e.trace.size(), seq_len)));
    t.labels.push_back(e.label.class_id);
    t.corpus_index.push_back(static_cast<std::int64_t>(i));
  }
  return t;
}

struct Standardization {
  double timing_mean = 0.0;
  double timing_std = 1.0;
  std::array<double, kMetadataSize> metadata_mean{};
  std::array<double, kMetadataSize> metadata_std{};

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

// Timing statistics pool the unpadded prefix of every training row;
// metadata statistics are per feature. Population standard deviations.
inline Standardization fit_standardization(const FeatureTable& table, std::span<const std::size_t> train_rows) {
  if (train_rows.empty()) throw DatasetError("cannot fit standardization on an empty training set");
  Standardization s;

  double sum = 0.0;
  std::size_t count = 0;
  for (auto r : train_rows) {
    const auto* row = table.timing.data() + r * table.seq_len;
    for (std::int64_t j = 0; j < table.lengths[r]; ++j) sum += row[j];
    count += static_cast<std::size_t>(table.lengths[r]);
  }
  s.timing_mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (auto r : train_rows) {
    const auto* row = table.timing.data() + r * table.seq_len;
    for (std::int64_t j = 0; j < table.lengths[r]; ++j) sq += (row[j] - s.timing_mean) * (row[j] - s.timing_mean);
  }
  s.timing_std = std::max(std::sqrt(sq / static_cast<double>(count)), kStdFloor);

  const auto n = static_cast<double>(train_rows.size());
  for (std::size_t f = 0; f < kMetadataSize; ++f) {
    double m = 0.0;
    for (auto r : train_rows) m += table.metadata[r * kMetadataSize + f];
    m /= n;
    double v = 0.0;
    for (auto r : train_rows) {
      const double d = table.metadata[r * kMetadataSize + f] - m;
      v += d * d;
    }
    s.metadata_mean[f] = m;
    s.metadata_std[f] = std::max(std::sqrt(v / n), kStdFloor);
  }
  return s;
}

struct ProcessedDataset {
  std::vector<std::string> classes;
  int n_mon = 0;
  std::size_t seq_len = kSequenceLength;
  std::uint64_t seed = 0;
  DatasetSplit split;  // row indices into the tensors below
  Standardization standardization;

  std::vector<std::int8_t> direction;  // rows x seq_len, raw ±1/0
  std::vector<float> timing;           // rows x seq_len, standardized
  std::vector<float> metadata;         // rows x 7, standardized
  std::vector<std::int64_t> labels;
  std::vector<std::int64_t> lengths;
  std::vector<std::int64_t> corpus_index;

  std::size_t rows() const { return labels.size(); }
  std::size_t n_classes() const { return classes.size(); }
  bool open_world() const { return classes.size() == static_cast<std::size_t>(n_mon) + 1; }
};

inline std::vector<std::string> class_names(int n_mon, bool open_world) {
  std::vector<std::string> out;
  for (int s = 0; s < n_mon; ++s) out.push_back(std::to_string(s));
  if (open_world) out.push_back("unmonitored");
  return out;
}

// Rows follow ascending corpus index over the union of the split; the
// stored split refers to those rows.
inline ProcessedDataset build_dataset(const FeatureTable& table, int n_mon, bool open_world, const DatasetSplit& corpus_split,
                                      const Standardization& st) {
  ProcessedDataset ds;
  ds.classes = class_names(n_mon, open_world);
  ds.n_mon = n_mon;
  ds.seq_len = table.seq_len;
  ds.seed = corpus_split.seed;
  ds.standardization = st;

  std::map<std::int64_t, std::size_t> row_of;
  for (std::size_t r = 0; r < table.rows(); ++r) row_of[table.corpus_index[r]] = r;
  const auto remap = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out;
    for (auto i : idx) {
      auto it = row_of.find(static_cast<std::int64_t>(i));
      if (it == row_of.end()) throw DatasetError("split index " + std::to_string(i) + " has no extracted row");
      out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  ds.split = {remap(corpus_split.train), remap(corpus_split.val), remap(corpus_split.test), corpus_split.seed};

  for (auto l : table.labels) {
    if (l < 0 || l > n_mon || (l == n_mon && !open_world))
      throw DatasetError("label " + std::to_string(l) + " not valid for this setting");
  }

  ds.direction = table.direction;
  ds.timing.resize(table.timing.size());
  for (std::size_t i = 0; i < table.timing.size(); ++i)
    ds.timing[i] = static_cast<float>((table.timing[i] - st.timing_mean) / st.timing_std);
  ds.metadata.resize(table.metadata.size());
  for (std::size_t i = 0; i < table.metadata.size(); ++i) {
    const std::size_t f = i % kMetadataSize;
    ds.metadata[i] = static_cast<float>((table.metadata[i] - st.metadata_mean[f]) / st.metadata_std[f]);
  }
  ds.labels = table.labels;
  ds.lengths = table.lengths;
  ds.corpus_index = table.corpus_index;
  return ds;
}

inline ProcessedDataset build_dataset(const Corpus& corpus, const DatasetSplit& split, const Standardization& st,
                                      std::size_t seq_len = kSequenceLength) {
  const auto rows = split.all();
  const bool open = std::any_of(rows.begin(), rows.end(),
                                [&](std::size_t i) { return i < corpus.entries.size() && !corpus.is_monitored(corpus.entries[i].label); });
  return build_dataset(extract_features(corpus, rows, seq_len), corpus.n_mon, open, split, st);
}

// Extract, fit on the training rows and standardize. Open-world is
// selected when the split designates unmonitored entries.
inline ProcessedDataset prepare_dataset(const Corpus& corpus, const DatasetSplit& split, std::size_t seq_len = kSequenceLength) {
  const auto rows = split.all();
  const auto table = extract_features(corpus, rows, seq_len);
  std::vector<std::size_t> train_rows;
  for (auto i : split.train) train_rows.push_back(static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), i) - rows.begin()));
  const auto st = fit_standardization(table, train_rows);
  const bool open = std::any_of(rows.begin(), rows.end(), [&](std::size_t i) { return !corpus.is_monitored(corpus.entries[i].label); });
  return build_dataset(table, corpus.n_mon, open, split, st);
}

inline nlohmann::json manifest(const ProcessedDataset& ds) {
  using nlohmann::json;
  return json{
      {"classes", ds.classes},
      {"n_mon", ds.n_mon},
      {"seq_len", ds.seq_len},
      {"splits", {{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}}},
      {"standardization",
       {{"timing_mean", ds.standardization.timing_mean},
        {"timing_std", ds.standardization.timing_std},
        {"metadata_mean", ds.standardization.metadata_mean},
        {"metadata_std", ds.standardization.metadata_std}}},
      {"seed", ds.seed},
  };
}

inline void save_dataset(const ProcessedDataset& ds, const std::filesystem::path& path) {
  const auto n = static_cast<std::int64_t>(ds.rows());
  const auto L = static_cast<std::int64_t>(ds.seq_len);
  Archive a;
  a.arrays["direction"] = make_array<std::int8_t>(ds.direction, {n, L});
  a.arrays["timing"] = make_array<float>(ds.timing, {n, L});
  a.arrays["metadata"] = make_array<float>(ds.metadata, {n, static_cast<std::int64_t>(kMetadataSize)});
  a.arrays["labels"] = make_array<std::int64_t>(ds.labels, {n});
  a.arrays["lengths"] = make_array<std::int64_t>(ds.lengths, {n});
  a.arrays["corpus_index"] = make_array<std::int64_t>(ds.corpus_index, {n});
  a.metadata["manifest"] = manifest(ds).dump();
  write_archive(path, a);
}

inline ProcessedDataset load_dataset(const std::filesystem::path& path) {
  const Archive a = read_archive(path);
  auto it = a.metadata.find("manifest");
  if (it == a.metadata.end()) throw DatasetError(path.string() + ": archive has no manifest");
  ProcessedDataset ds;
  try {
    const auto m = nlohmann::json::parse(it->second);
    ds.classes = m.at("classes").get<std::vector<std::string>>();
    ds.n_mon = m.at("n_mon").get<int>();
    ds.seq_len = m.at("seq_len").get<std::size_t>();
    ds.seed = m.at("seed").get<std::uint64_t>();
    const auto& sp = m.at("splits");
    ds.split = {sp.at("train").get<std::vector<std::size_t>>(), sp.at("val").get<std::vector<std::size_t>>(),
                sp.at("test").get<std::vector<std::size_t>>(), ds.seed};
    const auto& st = m.at("standardization");
    ds.standardization.timing_mean = st.at("timing_mean").get<double>();
    ds.standardization.timing_std = st.at("timing_std").get<double>();
    ds.standardization.metadata_mean = st.at("metadata_mean").get<std::array<double, kMetadataSize>>();
    ds.standardization.metadata_std = st.at("metadata_std").get<std::array<double, kMetadataSize>>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path.string() + ": bad manifest: " + e.what());
  }
  ds.direction = array_values<std::int8_t>(a.at("direction"));
  ds.timing = array_values<float>(a.at("timing"));
  ds.metadata = array_values<float>(a.at("metadata"));
  ds.labels = array_values<std::int64_t>(a.at("labels"));
  ds.lengths = array_values<std::int64_t>(a.at("lengths"));
  ds.corpus_index = array_values<std::int64_t>(a.at("corpus_index"));

  const std::size_t n = ds.labels.size();
  if (ds.direction.size() != n * ds.seq_len || ds.timing.size() != n * ds.seq_len || ds.metadata.size() != n * kMetadataSize ||
      ds.lengths.size() != n || ds.corpus_index.size() != n)
    throw DatasetError(path.string() + ": tensor row counts disagree");
  for (const auto* part : {&ds.split.train, &ds.split.val, &ds.split.test})
    for (auto r : *part)
      if (r >= n) throw DatasetError(path.string() + ": split row out of range");
  return ds;
}

}  // namespace wfp
