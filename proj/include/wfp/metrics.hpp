#pragma once

// Closed-world accuracy and open-world Two-TPR / Multi-TPR / FPR.
//
//   two_tpr   = monitored rows predicted as any monitored class / monitored rows
//   multi_tpr = monitored rows predicted as their own class      / monitored rows
//   fpr       = unmonitored rows predicted as a monitored class  / unmonitored rows

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfp/ensemble.hpp"
#include "wfp/error.hpp"

namespace wfp {

enum class Setting { closed, open };

inline std::string to_string(Setting s) { return s == Setting::closed ? "closed" : "open"; }

struct OpenWorldCounts {
  std::size_t n_monitored = 0;
  std::size_t n_unmonitored = 0;
  std::size_t two_class_tp = 0;    // monitored, predicted monitored
  std::size_t multi_class_tp = 0;  // monitored, predicted exactly
  std::size_t false_positives = 0; // unmonitored, predicted monitored
};

struct OpenWorldRates {
  double two_tpr = 0.0;
  double multi_tpr = 0.0;
  double fpr = 0.0;
  OpenWorldCounts counts;
};

struct EvaluationReport {
  Setting setting = Setting::closed;
  double threshold = 0.0;
  double accuracy = 0.0;          // closed
  std::size_t n_correct = 0;      // closed
  std::size_t n_test = 0;         // closed
  OpenWorldRates open;            // open
};

inline void check_lengths(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw MetricError("predictions and labels differ in length");
  if (preds.empty()) throw MetricError("no predictions to score");
}

inline double closed_world_accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_lengths(preds, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

inline OpenWorldRates open_world_metrics(std::span<const int> preds, std::span<const int> labels, int unmonitored_index) {
  check_lengths(preds, labels);
  OpenWorldRates r;
  auto& c = r.counts;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool predicted_monitored = preds[i] != unmonitored_index;
    if (labels[i] == unmonitored_index) {
      ++c.n_unmonitored;
      c.false_positives += predicted_monitored;
    } else {
      ++c.n_monitored;
      c.two_class_tp += predicted_monitored;
      c.multi_class_tp += preds[i] == labels[i];
    }
  }
  if (c.n_monitored == 0 || c.n_unmonitored == 0) throw MetricError("open-world metrics need both monitored and unmonitored rows");
  r.two_tpr = static_cast<double>(c.two_class_tp) / static_cast<double>(c.n_monitored);
  r.multi_tpr = static_cast<double>(c.multi_class_tp) / static_cast<double>(c.n_monitored);
  r.fpr = static_cast<double>(c.false_positives) / static_cast<double>(c.n_unmonitored);
  return r;
}

inline EvaluationReport evaluate_predictions(Setting setting, double threshold, std::span<const int> preds, std::span<const int> labels,
                                             std::optional<int> unmonitored_index) {
  EvaluationReport rep;
  rep.setting = setting;
  rep.threshold = threshold;
  if (setting == Setting::closed) {
    rep.accuracy = closed_world_accuracy(preds, labels);
    rep.n_test = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) rep.n_correct += preds[i] == labels[i];
  } else {
    if (!unmonitored_index) throw MetricError("open-world evaluation needs an unmonitored class");
    rep.open = open_world_metrics(preds, labels, *unmonitored_index);
  }
  return rep;
}

// One open-world report per threshold; the last column is the unmonitored class.
inline std::vector<EvaluationReport> tpr_fpr_curve(const ProbabilityMatrix& probs, std::span<const int> labels,
                                                   std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw RangeError("thresholds must be sorted ascending");
  const int unmon = static_cast<int>(probs.cols()) - 1;
  std::vector<EvaluationReport> out;
  for (double t : thresholds) {
    const auto preds = predicted_classes(apply_threshold(probs, t, unmon));
    out.push_back(evaluate_predictions(Setting::open, t, preds, labels, unmon));
  }
  return out;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j{{"setting", to_string(r.setting)}, {"threshold", r.threshold}};
  if (r.setting == Setting::closed) {
    j["accuracy"] = r.accuracy;
    j["counts"] = {{"n_test", r.n_test}, {"n_correct", r.n_correct}};
  } else {
    const auto& c = r.open.counts;
    j["two_tpr"] = r.open.two_tpr;
    j["multi_tpr"] = r.open.multi_tpr;
    j["fpr"] = r.open.fpr;
    j["counts"] = {{"n_monitored_test", c.n_monitored},
                   {"n_unmonitored_test", c.n_unmonitored},
                   {"two_class_true_positives", c.two_class_tp},
                   {"multi_class_true_positives", c.multi_class_tp},
                   {"false_positives", c.false_positives}};
  }
  return j;
}

}  // namespace wfp
