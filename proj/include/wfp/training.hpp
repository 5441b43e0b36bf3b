#pragma once

// Training of one model variant: Adam, plateau learning-rate decay driven by
// validation accuracy, early stopping, and best-epoch selection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wfp/dataset.hpp"
#include "wfp/error.hpp"
#include "wfp/model.hpp"

namespace wfp {

enum class Variant { direction, time };

inline std::string to_string(Variant v) { return v == Variant::direction ? "direction" : "time"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "direction") return Variant::direction;
  if (s == "time") return Variant::time;
  throw ConfigError("variant must be 'direction' or 'time', got '" + s + "'");
}

struct TrainingConfig {
  double initial_lr = 0.001;
  double decay_factor = std::sqrt(0.1);
  int decay_patience = 5;
  int stop_patience = 10;
  double min_lr = 0.00001;
  int batch_size = 128;
  int max_epochs = 150;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(initial_lr > 0.0) || !(min_lr > 0.0) || min_lr > initial_lr) throw ConfigError("need 0 < min_lr <= initial_lr");
    if (!(decay_factor > 0.0 && decay_factor < 1.0)) throw ConfigError("decay_factor must lie in (0, 1)");
    if (decay_patience < 1 || stop_patience != 2 * decay_patience) throw ConfigError("stop_patience must be 2 x decay_patience");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  }
};

inline void to_json(nlohmann::json& j, const TrainingConfig& c) {
  j = nlohmann::json{{"initial_lr", c.initial_lr}, {"decay_factor", c.decay_factor}, {"decay_patience", c.decay_patience},
                     {"stop_patience", c.stop_patience}, {"min_lr", c.min_lr},          {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs}, {"seed", c.seed}};
}

struct ScheduleState {
  double current_lr = 0.001;
  double best_val_acc = -std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  int epochs_since_decay_trigger = 0;

  static ScheduleState initial(const TrainingConfig& c) { return {c.initial_lr}; }
  friend bool operator==(const ScheduleState&, const ScheduleState&) = default;
};

enum class ScheduleDecision { continue_training, decay, stop };

// Strict improvement resets both counters. The decay counter restarts after
// each decay; the stop counter runs from the last improvement.
inline std::pair<ScheduleState, ScheduleDecision> schedule_step(const ScheduleState& state, double val_acc,
                                                                const TrainingConfig& config) {
  ScheduleState next = state;
  if (val_acc > state.best_val_acc) {
    next.best_val_acc = val_acc;
    next.epochs_since_improvement = 0;
    next.epochs_since_decay_trigger = 0;
    return {next, ScheduleDecision::continue_training};
  }
  ++next.epochs_since_improvement;
  ++next.epochs_since_decay_trigger;
  if (next.epochs_since_improvement >= config.stop_patience) return {next, ScheduleDecision::stop};
  if (next.epochs_since_decay_trigger >= config.decay_patience) {
    next.current_lr = std::max(state.current_lr * config.decay_factor, config.min_lr);
    next.epochs_since_decay_trigger = 0;
    return {next, ScheduleDecision::decay};
  }
  return {next, ScheduleDecision::continue_training};
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;
};

inline nlohmann::json to_json(const TrainingHistory& h) {
  auto arr = nlohmann::json::array();
  for (const auto& e : h.epochs)
    arr.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_acc", e.train_acc}, {"val_acc", e.val_acc}, {"lr", e.lr}});
  return arr;
}

// Adam with the usual defaults (beta1 0.9, beta2 0.999, epsilon 1e-7).
template <class S>
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-7) : beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(std::vector<ParamRef<S>>& params, double lr) {
    if (m_.empty()) {
      for (auto& p : params) {
        m_.push_back(Mat<S>::Zero(p.param->value.rows(), p.param->value.cols()));
        v_.push_back(Mat<S>::Zero(p.param->value.rows(), p.param->value.cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto step = static_cast<S>(lr * std::sqrt(c2) / c1);
    const auto b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
    const auto eps = static_cast<S>(eps_ * std::sqrt(c2));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& g = params[i].param->grad;
      m_[i] = b1 * m_[i] + (S(1) - b1) * g;
      v_[i] = b2 * v_[i] + (S(1) - b2) * g.cwiseProduct(g);
      params[i].param->value.array() -= step * m_[i].array() / (v_[i].array().sqrt() + eps);
    }
  }

 private:
  double beta1_, beta2_, eps_;
  std::vector<Mat<S>> m_, v_;
  long long t_ = 0;
};

struct Batch {
  Mat<float> sequences;
  Mat<float> metadata;
  std::vector<std::int64_t> labels;
};

inline Batch make_batch(const ProcessedDataset& ds, Variant variant, std::span<const std::size_t> rows) {
  const auto B = static_cast<Index>(rows.size());
  const auto L = static_cast<Index>(ds.seq_len);
  Batch b{Mat<float>(B, L), Mat<float>(B, static_cast<Index>(kMetadataSize)), {}};
  for (Index i = 0; i < B; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    if (variant == Variant::direction) {
      const auto* src = ds.direction.data() + r * ds.seq_len;
      for (Index t = 0; t < L; ++t) b.sequences(i, t) = static_cast<float>(src[t]);
    } else {
      b.sequences.row(i) = Eigen::Map<const Eigen::RowVectorXf>(ds.timing.data() + r * ds.seq_len, L);
    }
    b.metadata.row(i) = Eigen::Map<const Eigen::RowVectorXf>(ds.metadata.data() + r * kMetadataSize, static_cast<Index>(kMetadataSize));
    b.labels.push_back(ds.labels[r]);
  }
  return b;
}

// Inference-mode probabilities for the given dataset rows, in row order.
inline ProbabilityMatrix predict(const Network<float>& net, const ProcessedDataset& ds, Variant variant,
                                 std::span<const std::size_t> rows, int batch_size = 128) {
  Mat<double> out(static_cast<Index>(rows.size()), net.config().n_classes);
  for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = rows.subspan(start, std::min<std::size_t>(static_cast<std::size_t>(batch_size), rows.size() - start));
    const Batch b = make_batch(ds, variant, chunk);
    out.middleRows(static_cast<Index>(start), static_cast<Index>(chunk.size())) = net.forward(b.sequences, b.metadata).values();
  }
  return ProbabilityMatrix(std::move(out));
}

inline double argmax_accuracy(const ProbabilityMatrix& p, const ProcessedDataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) correct += p.argmax(static_cast<Index>(i)) == ds.labels[rows[i]];
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

struct TrainingResult {
  Network<float> network;  // parameters of the best validation epoch
  TrainingHistory history;
  double best_val_acc = 0.0;
  int best_epoch = 0;  // 0 means the initialized parameters
};

// Model config for a dataset: class count and sequence length follow the data.
inline ModelConfig fit_config_to(ModelConfig config, const ProcessedDataset& ds) {
  config.n_classes = static_cast<int>(ds.n_classes());
  config.seq_len = static_cast<int>(ds.seq_len);
  return config;
}

inline TrainingResult train_model(Variant variant, const ProcessedDataset& ds, const ModelConfig& model_config,
                                  const TrainingConfig& config, std::ostream* log = nullptr) {
  config.validate();
  const ModelConfig mc = fit_config_to(model_config, ds);
  if (ds.split.train.empty() || ds.split.val.empty()) throw DatasetError("training needs non-empty train and validation partitions");

  std::mt19937_64 rng(config.seed);
  Network<float> net(mc, rng());
  std::mt19937_64 dropout_rng(rng());
  std::mt19937_64 shuffle_rng(rng());
  Adam<float> adam;
  auto params = net.parameters();

  const auto& val = ds.split.val;
  TrainingResult result{net, {}, 0.0, 0};
  if (config.max_epochs == 0) {
    result.best_val_acc = argmax_accuracy(predict(net, ds, variant, val, config.batch_size), ds, val);
    return result;
  }

  auto best_state = net.state();
  ScheduleState schedule = ScheduleState::initial(config);
  std::vector<std::size_t> order = ds.split.train;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batch_index) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(bs, order.size() - start));
      const Batch b = make_batch(ds, variant, rows);
      const float loss = net.train_step(b.sequences, b.metadata, b.labels, dropout_rng);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, batch_index);
      adam.step(params, schedule.current_lr);
      loss_sum += static_cast<double>(loss) * static_cast<double>(rows.size());
      correct += net.last_batch_correct();
    }
    const double val_acc = argmax_accuracy(predict(net, ds, variant, val, config.batch_size), ds, val);
    const EpochRecord record{epoch, loss_sum / static_cast<double>(order.size()),
                             static_cast<double>(correct) / static_cast<double>(order.size()), val_acc, schedule.current_lr};
    result.history.epochs.push_back(record);
    if (val_acc > result.best_val_acc || result.best_epoch == 0) {
      result.best_val_acc = val_acc;
      result.best_epoch = epoch;
      best_state = net.state();
    }

    const auto [next, decision] = schedule_step(schedule, val_acc, config);
    schedule = next;
    if (log) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *log << "[" << to_string(variant) << "] epoch " << epoch << " loss " << record.train_loss << " train_acc " << record.train_acc
           << " val_acc " << val_acc << " lr " << record.lr << " (" << secs << " s)"
           << (decision == ScheduleDecision::decay ? " decay" : decision == ScheduleDecision::stop ? " stop" : "") << '\n';
    }
    if (decision == ScheduleDecision::stop) break;
  }
  result.network.load_state(best_state);
  return result;
}

// Checkpoint: archive of float32 weights with a JSON header.
struct Checkpoint {
  ModelConfig config;
  Variant variant = Variant::direction;
  double val_accuracy = 0.0;
  int epoch = 0;
  std::vector<std::string> classes;
  std::map<std::string, Mat<float>> state;

  Network<float> network() const {
    Network<float> net(config);
    net.load_state(state);
    return net;
  }
};

inline nlohmann::json checkpoint_header(const Checkpoint& c) {
  return {{"config", c.config}, {"variant", to_string(c.variant)}, {"val_accuracy", c.val_accuracy}, {"epoch", c.epoch}, {"classes", c.classes}};
}

inline Checkpoint make_checkpoint(const TrainingResult& r, Variant variant, const ProcessedDataset& ds) {
  return {r.network.config(), variant, r.best_val_acc, r.best_epoch, ds.classes, r.network.state()};
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  Archive a;
  for (const auto& [name, m] : c.state)
    a.arrays[name] = make_array<float>(std::span<const float>(m.data(), static_cast<std::size_t>(m.size())), {m.rows(), m.cols()});
  a.metadata["header"] = checkpoint_header(c).dump();
  write_archive(path, a);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Archive a = read_archive(path);
  auto it = a.metadata.find("header");
  if (it == a.metadata.end()) throw IoError(path.string() + ": archive has no checkpoint header");
  Checkpoint c;
  try {
    const auto h = nlohmann::json::parse(it->second);
    c.config = h.at("config").get<ModelConfig>();
    c.variant = parse_variant(h.at("variant").get<std::string>());
    c.val_accuracy = h.at("val_accuracy").get<double>();
    c.epoch = h.at("epoch").get<int>();
    c.classes = h.at("classes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad checkpoint header: " + e.what());
  }
  c.config.validate();
  for (const auto& [name, arr] : a.arrays) {
    if (arr.shape.size() != 2) throw ShapeError(path.string() + ": weight '" + name + "' is not 2-D");
    const auto v = array_values<float>(arr);
    c.state.emplace(name, Eigen::Map<const Mat<float>>(v.data(), arr.shape[0], arr.shape[1]));
  }
  c.network();  // validates shapes against the config
  return c;
}

}  // namespace wfp
