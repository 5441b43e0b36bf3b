#pragma once

// Post-training combination of the direction and time models, and the
// confidence threshold that reassigns low-confidence monitored predictions
// to the unmonitored class.

#include <optional>
#include <string>
#include <vector>

#include "wfp/error.hpp"
#include "wfp/model.hpp"

namespace wfp {

inline void check_class_order(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a != b) throw EnsembleError("class lists of the combined models differ");
}

// Elementwise mean with equal weights.
inline ProbabilityMatrix average_softmax(const ProbabilityMatrix& p_dir, const ProbabilityMatrix& p_time) {
  if (p_dir.rows() != p_time.rows() || p_dir.cols() != p_time.cols())
    throw EnsembleError("probability matrices differ in shape: " + std::to_string(p_dir.rows()) + "x" + std::to_string(p_dir.cols()) +
                        " vs " + std::to_string(p_time.rows()) + "x" + std::to_string(p_time.cols()));
  return ProbabilityMatrix((p_dir.values() + p_time.values()) * 0.5);
}

struct Prediction {
  int argmax_class = 0;
  double p_argmax = 0.0;
  int predicted_class = 0;
};

// argmax with lowest-index tie-breaking; a monitored argmax whose probability
// is below the threshold becomes unmonitored. Closed-world (no unmonitored
// class) only accepts threshold 0.
inline std::vector<Prediction> apply_threshold(const ProbabilityMatrix& p, double threshold, std::optional<int> unmonitored_index) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw RangeError("threshold must lie in [0, 1]");
  if (!unmonitored_index && threshold != 0.0) throw RangeError("closed-world evaluation requires threshold 0");
  if (unmonitored_index && (*unmonitored_index < 0 || *unmonitored_index >= p.cols()))
    throw RangeError("unmonitored index outside the class range");

  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(p.rows()));
  for (Index r = 0; r < p.rows(); ++r) {
    const auto c = static_cast<int>(p.argmax(r));
    Prediction pr{c, p(r, c), c};
    if (unmonitored_index && c != *unmonitored_index && pr.p_argmax < threshold) pr.predicted_class = *unmonitored_index;
    out.push_back(pr);
  }
  return out;
}

inline std::vector<int> predicted_classes(const std::vector<Prediction>& preds) {
  std::vector<int> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(p.predicted_class);
  return out;
}

}  // namespace wfp
