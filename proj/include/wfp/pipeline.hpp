#pragma once

// End-to-end commands over the on-disk formats. The CLI is a thin wrapper
// around these functions.

#include <charconv>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfp/dataset.hpp"
#include "wfp/defense.hpp"
#include "wfp/ensemble.hpp"
#include "wfp/metrics.hpp"
#include "wfp/synthgen.hpp"
#include "wfp/training.hpp"

namespace wfp {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { detail::write_file(path, j.dump(2) + "\n"); }

inline fs::path manifest_path(const fs::path& dataset) { return fs::path(dataset.string() + ".manifest.json"); }
inline fs::path history_path(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".history.json"); }
inline fs::path predictions_path(const fs::path& report) { return fs::path(report.string() + ".predictions.csv"); }

struct SynthOptions {
  int sites = 10;
  int traces = 100;
  int unmonitored = 0;
  std::uint64_t seed = 0;
  Separability separability = Separability::easy;
  fs::path out;
};

inline Corpus run_synth(const SynthOptions& o) {
  const auto profiles = generate_site_profiles(o.sites, o.seed, o.separability);
  Corpus corpus = generate_corpus(profiles, o.traces, o.unmonitored, o.seed);
  write_corpus(corpus, o.out);
  write_json(o.out / "profiles.json", to_json(profiles));
  return corpus;
}

struct ExtractOptions {
  fs::path corpus;
  int n_mon = 0;
  std::uint64_t seed = 0;
  UnmonitoredPools unmonitored;
  fs::path out;
};

inline ProcessedDataset make_dataset(const Corpus& corpus, std::uint64_t seed, UnmonitoredPools pools) {
  const auto split = split_corpus(corpus.labels(), corpus.n_mon, seed, pools);
  return prepare_dataset(corpus, split);
}

inline ProcessedDataset run_extract(const ExtractOptions& o) {
  const Corpus corpus = load_corpus(o.corpus, o.n_mon);
  ProcessedDataset ds = make_dataset(corpus, o.seed, o.unmonitored);
  save_dataset(ds, o.out);
  write_json(manifest_path(o.out), manifest(ds));
  return ds;
}

struct TrainOptions {
  fs::path dataset;
  Variant variant = Variant::direction;
  fs::path out;
  ModelConfig model;
  TrainingConfig training;
  std::ostream* log = nullptr;
};

inline Checkpoint train_and_checkpoint(const ProcessedDataset& ds, Variant variant, const ModelConfig& model, const TrainingConfig& training,
                                       std::ostream* log, TrainingHistory* history = nullptr) {
  auto result = train_model(variant, ds, model, training, log);
  if (history) *history = result.history;
  return make_checkpoint(result, variant, ds);
}

inline Checkpoint run_train(const TrainOptions& o) {
  const ProcessedDataset ds = load_dataset(o.dataset);
  TrainingHistory history;
  Checkpoint ckpt = train_and_checkpoint(ds, o.variant, o.model, o.training, o.log, &history);
  save_checkpoint(ckpt, o.out);
  write_json(history_path(o.out), {{"variant", to_string(o.variant)},
                                   {"training_config", o.training},
                                   {"best_epoch", ckpt.epoch},
                                   {"best_val_accuracy", ckpt.val_accuracy},
                                   {"epochs", to_json(history)}});
  return ckpt;
}

// Test-split probabilities of one checkpoint, or the equal-weight mean of two.
inline ProbabilityMatrix test_probabilities(const ProcessedDataset& ds, const Checkpoint* dir, const Checkpoint* time) {
  if (!dir && !time) throw ConfigError("need at least one checkpoint");
  const auto& rows = ds.split.test;
  std::optional<ProbabilityMatrix> p_dir, p_time;
  for (const Checkpoint* c : {dir, time}) {
    if (!c) continue;
    check_class_order(c->classes, ds.classes);
    auto p = predict(c->network(), ds, c->variant, rows);
    (c == dir ? p_dir : p_time) = std::move(p);
  }
  if (p_dir && p_time) return average_softmax(*p_dir, *p_time);
  return p_dir ? *p_dir : *p_time;
}

inline std::vector<int> test_labels(const ProcessedDataset& ds) {
  std::vector<int> out;
  for (auto r : ds.split.test) out.push_back(static_cast<int>(ds.labels[r]));
  return out;
}

struct EvaluateOptions {
  fs::path dataset;
  std::optional<fs::path> dir_ckpt, time_ckpt;
  double threshold = 0.0;
  Setting setting = Setting::closed;
  fs::path report;
  std::optional<fs::path> predictions;
};

inline std::string predictions_csv(const ProcessedDataset& ds, const std::vector<Prediction>& preds, double threshold) {
  std::string out = "trace_index,true_class,p_argmax,argmax_class,predicted_class,threshold\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto r = ds.split.test[i];
    out += std::to_string(ds.corpus_index[r]) + "," + std::to_string(ds.labels[r]) + "," + format_double(preds[i].p_argmax) + "," +
           std::to_string(preds[i].argmax_class) + "," + std::to_string(preds[i].predicted_class) + "," + format_double(threshold) + "\n";
  }
  return out;
}

inline EvaluationReport evaluate_dataset(const ProcessedDataset& ds, const ProbabilityMatrix& probs, Setting setting, double threshold,
                                         std::vector<Prediction>* predictions = nullptr) {
  if (setting == Setting::open && !ds.open_world()) throw ConfigError("open-world evaluation needs an open-world dataset");
  if (setting == Setting::closed && ds.open_world()) throw ConfigError("closed-world evaluation needs a closed-world dataset");
  const std::optional<int> unmon = setting == Setting::open ? std::optional<int>(ds.n_mon) : std::nullopt;
  auto preds = apply_threshold(probs, threshold, unmon);
  const auto labels = test_labels(ds);
  auto report = evaluate_predictions(setting, threshold, predicted_classes(preds), labels, unmon);
  if (predictions) *predictions = std::move(preds);
  return report;
}

inline EvaluationReport run_evaluate(const EvaluateOptions& o) {
  const ProcessedDataset ds = load_dataset(o.dataset);
  std::optional<Checkpoint> dir, time;
  if (o.dir_ckpt) dir = load_checkpoint(*o.dir_ckpt);
  if (o.time_ckpt) time = load_checkpoint(*o.time_ckpt);
  const auto probs = test_probabilities(ds, dir ? &*dir : nullptr, time ? &*time : nullptr);
  std::vector<Prediction> preds;
  const auto report = evaluate_dataset(ds, probs, o.setting, o.threshold, &preds);
  auto j = to_json(report);
  j["models"] = nlohmann::json::array();
  if (dir) j["models"].push_back("direction");
  if (time) j["models"].push_back("time");
  write_json(o.report, j);
  detail::write_file(o.predictions.value_or(predictions_path(o.report)), predictions_csv(ds, preds, o.threshold));
  return report;
}

struct CurveOptions {
  fs::path dataset;
  std::optional<fs::path> dir_ckpt, time_ckpt;
  std::vector<double> thresholds;
  fs::path out;
};

inline std::string curve_csv(const std::vector<EvaluationReport>& curve) {
  std::string out = "threshold,two_tpr,multi_tpr,fpr\n";
  for (const auto& r : curve)
    out += format_double(r.threshold) + "," + format_double(r.open.two_tpr) + "," + format_double(r.open.multi_tpr) + "," +
           format_double(r.open.fpr) + "\n";
  return out;
}

inline std::vector<EvaluationReport> run_curve(const CurveOptions& o) {
  const ProcessedDataset ds = load_dataset(o.dataset);
  if (!ds.open_world()) throw ConfigError("threshold curves need an open-world dataset");
  std::optional<Checkpoint> dir, time;
  if (o.dir_ckpt) dir = load_checkpoint(*o.dir_ckpt);
  if (o.time_ckpt) time = load_checkpoint(*o.time_ckpt);
  const auto probs = test_probabilities(ds, dir ? &*dir : nullptr, time ? &*time : nullptr);
  const auto curve = tpr_fpr_curve(probs, test_labels(ds), o.thresholds);
  detail::write_file(o.out, curve_csv(curve));
  return curve;
}

struct DefendOptions {
  fs::path corpus;
  DefenseConfig config;
  fs::path out;
  fs::path overhead_report;
};

inline nlohmann::json run_defend(const DefendOptions& o) {
  o.config.validate();
  const auto files = list_corpus_files(o.corpus);
  double bw_sum = 0.0, lat_sum = 0.0;
  std::size_t n_lat = 0;
  for (const auto& f : files) {
    const RawTrace original = read_trace_file(o.corpus / f.relative);
    const RawTrace defended = simulate_constant_rate(original, o.config);
    write_trace_file(o.out / f.relative, defended);
    const auto n = static_cast<double>(original.size());
    bw_sum += 100.0 * (static_cast<double>(defended.size()) - n) / n;
    if (original.duration() > 0.0) {
      lat_sum += overhead(original, defended).latency;
      ++n_lat;
    }
  }
  fs::create_directories(o.out);
  nlohmann::json summary{{"config", to_json(o.config)},
                         {"n_traces", files.size()},
                         {"n_traces_with_latency", n_lat},
                         {"mean_bandwidth_overhead_percent", files.empty() ? 0.0 : bw_sum / static_cast<double>(files.size())},
                         {"mean_latency_overhead_percent", n_lat == 0 ? 0.0 : lat_sum / static_cast<double>(n_lat)}};
  write_json(o.overhead_report, summary);
  return summary;
}

}  // namespace wfp
