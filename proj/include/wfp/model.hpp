#pragma once

// Dilated causal 1-D ResNet-18 with a metadata fusion branch.
//
//   sequence [B x L] -> stem conv (k7, /2) -> BN -> ReLU -> causal max-pool (3, /2)
//                    -> 4 stages x 2 basic blocks (k3, dilations 1,2,4,8,1,2,...)
//                    -> global average pool                       -> [B x w4]
//   metadata [B x 7] -> dense -> ReLU                                -> [B x m]
//   concat -> dense -> ReLU -> dropout -> dense -> softmax         -> [B x classes]

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfp/error.hpp"
#include "wfp/features.hpp"
#include "wfp/nn.hpp"

namespace wfp {

inline constexpr int kStages = 4;
inline constexpr int kBlocksPerStage = 2;
inline constexpr int kStageConvs = kStages * kBlocksPerStage * 2;

struct ModelConfig {
  int seq_len = static_cast<int>(kSequenceLength);
  int stem_kernel = 7;
  int stem_filters = 64;
  int stem_stride = 2;
  int stem_dilation = 1;
  int pool_window = 3;
  int pool_stride = 2;
  std::array<int, kStages> stage_widths{64, 128, 256, 512};
  int blocks_per_stage = kBlocksPerStage;
  int kernel_size = 3;
  std::vector<int> dilation_schedule = default_dilations();
  int metadata_units = 32;
  int combined_units = 1024;
  double dropout = 0.5;
  int n_classes = 2;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;

  static std::vector<int> default_dilations() {
    std::vector<int> d;
    for (int i = 0; i < kStageConvs; ++i) d.push_back(1 << (i % 4));
    return d;
  }

  void validate() const {
    const auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (seq_len < 1) fail("seq_len must be positive");
    if (stem_kernel < 1 || stem_filters < 1 || stem_stride < 1 || stem_dilation < 1) fail("invalid stem");
    if (pool_window < 1 || pool_stride < 1) fail("invalid pooling");
    for (int w : stage_widths)
      if (w < 1) fail("stage widths must be positive");
    if (blocks_per_stage != kBlocksPerStage) fail("exactly 2 residual blocks per stage");
    if (kernel_size < 1) fail("kernel_size must be positive");
    if (dilation_schedule.size() != static_cast<std::size_t>(kStageConvs)) fail("dilation schedule must have 16 entries");
    for (int d : dilation_schedule)
      if (d < 1) fail("dilations must be >= 1");
    if (metadata_units < 1 || combined_units < 1) fail("dense widths must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
    if (n_classes < 2) fail("need at least 2 classes");
    if (!(bn_momentum >= 0.0 && bn_momentum < 1.0) || !(bn_epsilon > 0.0)) fail("invalid batch-norm settings");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"seq_len", c.seq_len},
                     {"stem", {{"kernel", c.stem_kernel}, {"filters", c.stem_filters}, {"stride", c.stem_stride}, {"dilation", c.stem_dilation}}},
                     {"pool", {{"window", c.pool_window}, {"stride", c.pool_stride}}},
                     {"stage_widths", c.stage_widths},
                     {"blocks_per_stage", c.blocks_per_stage},
                     {"kernel_size", c.kernel_size},
                     {"dilation_schedule", c.dilation_schedule},
                     {"metadata_units", c.metadata_units},
                     {"combined_units", c.combined_units},
                     {"dropout", c.dropout},
                     {"n_classes", c.n_classes},
                     {"bn_momentum", c.bn_momentum},
                     {"bn_epsilon", c.bn_epsilon}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.seq_len = j.at("seq_len").get<int>();
  c.stem_kernel = j.at("stem").at("kernel").get<int>();
  c.stem_filters = j.at("stem").at("filters").get<int>();
  c.stem_stride = j.at("stem").at("stride").get<int>();
  c.stem_dilation = j.at("stem").at("dilation").get<int>();
  c.pool_window = j.at("pool").at("window").get<int>();
  c.pool_stride = j.at("pool").at("stride").get<int>();
  c.stage_widths = j.at("stage_widths").get<std::array<int, kStages>>();
  c.blocks_per_stage = j.at("blocks_per_stage").get<int>();
  c.kernel_size = j.at("kernel_size").get<int>();
  c.dilation_schedule = j.at("dilation_schedule").get<std::vector<int>>();
  c.metadata_units = j.at("metadata_units").get<int>();
  c.combined_units = j.at("combined_units").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.n_classes = j.at("n_classes").get<int>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_epsilon = j.at("bn_epsilon").get<double>();
}

// One causal layer on a path through the trunk. A max-pool window counts as
// a kernel with dilation 1.
struct CausalLayer {
  int kernel = 1;
  int dilation = 1;
  int stride = 1;
};

// Number of input positions one output position can see:
// 1 + sum of (k - 1) * d * (product of the strides of earlier layers).
inline std::int64_t receptive_field(std::span<const CausalLayer> path) {
  std::int64_t rf = 1, jump = 1;
  for (const auto& l : path) {
    rf += static_cast<std::int64_t>(l.kernel - 1) * l.dilation * jump;
    jump *= l.stride;
  }
  return rf;
}

// Longest path through the trunk: stem, pool, then both convolutions of
// every block (the projection shortcut is always shorter).
inline std::vector<CausalLayer> trunk_path(const ModelConfig& c) {
  std::vector<CausalLayer> path{{c.stem_kernel, c.stem_dilation, c.stem_stride}, {c.pool_window, 1, c.pool_stride}};
  std::size_t i = 0;
  for (int s = 0; s < kStages; ++s)
    for (int b = 0; b < kBlocksPerStage; ++b) {
      path.push_back({c.kernel_size, c.dilation_schedule[i++], (s > 0 && b == 0) ? 2 : 1});
      path.push_back({c.kernel_size, c.dilation_schedule[i++], 1});
    }
  return path;
}

inline std::int64_t receptive_field(const ModelConfig& c) { return receptive_field(trunk_path(c)); }

// Row-stochastic class probabilities, one row per trace.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  explicit ProbabilityMatrix(Mat<double> values) : values_(std::move(values)) {}

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  double operator()(Index r, Index c) const { return values_(r, c); }
  const Mat<double>& values() const { return values_; }

  // Lowest index wins ties.
  Index argmax(Index r) const {
    Index best = 0;
    for (Index c = 1; c < cols(); ++c)
      if (values_(r, c) > values_(r, best)) best = c;
    return best;
  }

  bool is_row_stochastic(double tol = 1e-5) const {
    for (Index r = 0; r < rows(); ++r) {
      if ((values_.row(r).array() < 0.0).any() || !values_.row(r).allFinite()) return false;
      if (std::abs(values_.row(r).sum() - 1.0) > tol) return false;
    }
    return true;
  }

 private:
  Mat<double> values_;
};

template <class S>
class BasicBlock {
 public:
  struct Cache {
    Activation<S> x, r1, out;
    typename BatchNorm<S>::Cache bn1, bn2, bnp;
  };

  BasicBlock() = default;
  BasicBlock(Index in, Index out, int kernel, int d1, int d2, int stride, double mom, double eps)
      : conv1_(in, out, kernel, d1, stride), bn1_(out, mom, eps), conv2_(out, out, kernel, d2, 1), bn2_(out, mom, eps) {
    if (stride != 1 || in != out) {
      proj_.emplace(in, out, 1, 1, stride);
      proj_bn_.emplace(out, mom, eps);
    }
  }

  void init(std::mt19937_64& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    if (proj_) proj_->init(rng);
  }

  bool has_projection() const { return proj_.has_value(); }
  const Conv1d<S>& conv1() const { return conv1_; }
  const Conv1d<S>& conv2() const { return conv2_; }

  Activation<S> forward_infer(const Activation<S>& x) const {
    auto h = bn1_.forward_infer(conv1_.forward(x));
    relu_inplace(h.data);
    auto y = bn2_.forward_infer(conv2_.forward(h));
    if (proj_) y.data += proj_bn_->forward_infer(proj_->forward(x)).data;
    else y.data += x.data;
    relu_inplace(y.data);
    return y;
  }

  Activation<S> forward_train(const Activation<S>& x, Cache& cache) {
    cache.x = x;
    cache.r1 = bn1_.forward_train(conv1_.forward(x), cache.bn1);
    relu_inplace(cache.r1.data);
    auto y = bn2_.forward_train(conv2_.forward(cache.r1), cache.bn2);
    if (proj_) y.data += proj_bn_->forward_train(proj_->forward(x), cache.bnp).data;
    else y.data += x.data;
    relu_inplace(y.data);
    cache.out = y;
    return y;
  }

  Activation<S> backward(const Cache& cache, Activation<S> dy) {
    relu_backward_inplace(cache.out.data, dy.data);
    auto dh = conv2_.backward(cache.r1, bn2_.backward(cache.bn2, dy));
    relu_backward_inplace(cache.r1.data, dh.data);
    auto dx = conv1_.backward(cache.x, bn1_.backward(cache.bn1, dh));
    if (proj_) dx.data += proj_->backward(cache.x, proj_bn_->backward(cache.bnp, dy)).data;
    else dx.data += dy.data;
    return dx;
  }

  void collect(std::vector<ParamRef<S>>& out, const std::string& p) {
    conv1_.collect(out, p + ".conv1");
    bn1_.collect(out, p + ".bn1");
    conv2_.collect(out, p + ".conv2");
    bn2_.collect(out, p + ".bn2");
    if (proj_) {
      proj_->collect(out, p + ".proj.conv");
      proj_bn_->collect(out, p + ".proj.bn");
    }
  }
  void collect_buffers(std::vector<BufferRef<S>>& out, const std::string& p) {
    bn1_.collect_buffers(out, p + ".bn1");
    bn2_.collect_buffers(out, p + ".bn2");
    if (proj_bn_) proj_bn_->collect_buffers(out, p + ".proj.bn");
  }

 private:
  Conv1d<S> conv1_;
  BatchNorm<S> bn1_;
  Conv1d<S> conv2_;
  BatchNorm<S> bn2_;
  std::optional<Conv1d<S>> proj_;
  std::optional<BatchNorm<S>> proj_bn_;
};

// Learned weights and batch-norm statistics of one network, with the
// forward and backward passes. Inference is const and may run
// concurrently; training steps need exclusive access.
template <class S>
class Network {
 public:
  explicit Network(const ModelConfig& config, std::uint64_t seed = 0) : config_(config) {
    config_.validate();
    const auto& c = config_;
    stem_ = Conv1d<S>(1, c.stem_filters, c.stem_kernel, c.stem_dilation, c.stem_stride);
    stem_bn_ = BatchNorm<S>(c.stem_filters, c.bn_momentum, c.bn_epsilon);
    pool_ = MaxPool1d<S>(c.pool_window, c.pool_stride);
    Index in = c.stem_filters;
    int conv_index = 0;
    for (int s = 0; s < kStages; ++s) {
      for (int b = 0; b < kBlocksPerStage; ++b) {
        const int stride = (s > 0 && b == 0) ? 2 : 1;
        const int d1 = c.dilation_schedule[static_cast<std::size_t>(conv_index++)];
        const int d2 = c.dilation_schedule[static_cast<std::size_t>(conv_index++)];
        blocks_.emplace_back(in, c.stage_widths[static_cast<std::size_t>(s)], c.kernel_size, d1, d2, stride, c.bn_momentum, c.bn_epsilon);
        in = c.stage_widths[static_cast<std::size_t>(s)];
      }
    }
    meta_ = Dense<S>(static_cast<Index>(kMetadataSize), c.metadata_units);
    combined_ = Dense<S>(in + c.metadata_units, c.combined_units);
    output_ = Dense<S>(c.combined_units, c.n_classes);

    std::mt19937_64 rng(seed);
    stem_.init(rng);
    for (auto& b : blocks_) b.init(rng);
    meta_.init(rng);
    combined_.init(rng);
    output_.init(rng);
  }

  const ModelConfig& config() const { return config_; }
  const std::vector<BasicBlock<S>>& blocks() const { return blocks_; }

  // The 16 stage convolutions in network order (conv1, conv2 per block;
  // stem and projections excluded).
  std::vector<const Conv1d<S>*> stage_convolutions() const {
    std::vector<const Conv1d<S>*> out;
    for (const auto& b : blocks_) {
      out.push_back(&b.conv1());
      out.push_back(&b.conv2());
    }
    return out;
  }

  // Total time stride of the trunk: trunk output o depends on input times <= o * trunk_stride().
  Index trunk_stride() const {
    Index s = static_cast<Index>(config_.stem_stride) * config_.pool_stride;
    for (std::size_t i = 1; i < static_cast<std::size_t>(kStages); ++i) s *= 2;
    return s;
  }

  // Stage-4 activations before global pooling, inference mode.
  Activation<S> trunk(const Mat<S>& sequences) const {
    check_inputs(sequences, nullptr);
    auto h = stem_bn_.forward_infer(stem_.forward(as_activation(sequences)));
    relu_inplace(h.data);
    h = pool_.forward(h, nullptr);
    for (const auto& b : blocks_) h = b.forward_infer(h);
    return h;
  }

  ProbabilityMatrix forward(const Mat<S>& sequences, const Mat<S>& metadata) const {
    check_inputs(sequences, &metadata);
    const Mat<S> features = global_average_pool(trunk(sequences));
    Mat<S> meta_hidden = meta_.forward(metadata);
    relu_inplace(meta_hidden);
    Mat<S> concat(features.rows(), features.cols() + meta_hidden.cols());
    concat << features, meta_hidden;
    Mat<S> hidden = combined_.forward(concat);
    relu_inplace(hidden);
    return ProbabilityMatrix(softmax_rows(output_.forward(hidden)).template cast<double>());
  }

  // Training-mode forward and backward for one batch. Gradients are
  // overwritten; batch-norm running statistics are updated. Returns the
  // mean cross-entropy loss.
  S train_step(const Mat<S>& sequences, const Mat<S>& metadata, std::span<const std::int64_t> labels, std::mt19937_64& dropout_rng) {
    check_inputs(sequences, &metadata);
    if (static_cast<Index>(labels.size()) != sequences.rows()) throw ShapeError("label count does not match batch");
    for (auto l : labels)
      if (l < 0 || l >= config_.n_classes) throw ShapeError("label outside [0, n_classes)");
    zero_grad();

    const auto logits = train_head(train_trunk(sequences), metadata, dropout_rng);
    const Mat<S> probs = softmax_rows(logits);

    const Index B = sequences.rows();
    S loss(0);
    Mat<S> dlogits = probs;
    last_correct_ = 0;
    for (Index r = 0; r < B; ++r) {
      const auto y = static_cast<Index>(labels[static_cast<std::size_t>(r)]);
      Index pred = 0;
      probs.row(r).maxCoeff(&pred);
      last_correct_ += pred == y;
      const S m = logits.row(r).maxCoeff();
      const S lse = m + std::log((logits.row(r).array() - m).exp().sum());
      loss += lse - logits(r, y);
      dlogits(r, y) -= S(1);
    }
    dlogits /= static_cast<S>(B);
    loss /= static_cast<S>(B);

    backward(dlogits);
    return loss;
  }

  // Training-mode correct predictions of the most recent train_step.
  std::size_t last_batch_correct() const { return last_correct_; }

  std::vector<ParamRef<S>> parameters() {
    std::vector<ParamRef<S>> out;
    stem_.collect(out, "stem.conv");
    stem_bn_.collect(out, "stem.bn");
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(out, block_name(i));
    meta_.collect(out, "metadata.dense");
    combined_.collect(out, "combined.dense");
    output_.collect(out, "output.dense");
    return out;
  }

  std::vector<BufferRef<S>> buffers() {
    std::vector<BufferRef<S>> out;
    stem_bn_.collect_buffers(out, "stem.bn");
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect_buffers(out, block_name(i));
    return out;
  }

  // Weights and running statistics keyed by layer name.
  std::map<std::string, Mat<S>> state() const {
    auto self = const_cast<Network*>(this);
    std::map<std::string, Mat<S>> out;
    for (auto& p : self->parameters()) out.emplace(p.name, p.param->value);
    for (auto& b : self->buffers()) out.emplace(b.name, *b.value);
    return out;
  }

  void load_state(const std::map<std::string, Mat<S>>& st) {
    const auto assign = [&](const std::string& name, Mat<S>& dst) {
      auto it = st.find(name);
      if (it == st.end()) throw ShapeError("missing weight '" + name + "'");
      if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) throw ShapeError("shape mismatch for '" + name + "'");
      if (!it->second.allFinite()) throw ShapeError("non-finite values in '" + name + "'");
      dst = it->second;
    };
    std::size_t expected = 0;
    for (auto& p : parameters()) assign(p.name, p.param->value), ++expected;
    for (auto& b : buffers()) assign(b.name, *b.value), ++expected;
    if (st.size() != expected) throw ShapeError("checkpoint has unexpected weights");
  }

  void zero_grad() {
    for (auto& p : parameters()) p.param->grad.setZero();
  }

 private:
  struct Cache {
    Activation<S> input, stem_out;
    typename BatchNorm<S>::Cache stem_bn;
    typename MaxPool1d<S>::Cache pool;
    std::vector<typename BasicBlock<S>::Cache> blocks;
    Index trunk_length = 0;
    Mat<S> metadata, meta_hidden, concat, combined_hidden, dropout_mask;
  };

  static std::string block_name(std::size_t i) {
    return "stage" + std::to_string(i / kBlocksPerStage + 1) + ".block" + std::to_string(i % kBlocksPerStage);
  }

  void check_inputs(const Mat<S>& sequences, const Mat<S>* metadata) const {
    if (sequences.cols() != config_.seq_len)
      throw ShapeError("sequence length " + std::to_string(sequences.cols()) + " != " + std::to_string(config_.seq_len));
    if (sequences.rows() < 1) throw ShapeError("empty batch");
    if (metadata && (metadata->rows() != sequences.rows() || metadata->cols() != static_cast<Index>(kMetadataSize)))
      throw ShapeError("metadata batch must be [B x 7] matching the sequence batch");
  }

  static Activation<S> as_activation(const Mat<S>& sequences) {
    Activation<S> x(1, sequences.rows(), sequences.cols());
    x.data = Eigen::Map<const Mat<S>>(sequences.data(), 1, sequences.size());
    return x;
  }

  Activation<S> train_trunk(const Mat<S>& sequences) {
    cache_.input = as_activation(sequences);
    cache_.stem_out = stem_bn_.forward_train(stem_.forward(cache_.input), cache_.stem_bn);
    relu_inplace(cache_.stem_out.data);
    auto h = pool_.forward(cache_.stem_out, &cache_.pool);
    cache_.blocks.resize(blocks_.size());
    for (std::size_t i = 0; i < blocks_.size(); ++i) h = blocks_[i].forward_train(h, cache_.blocks[i]);
    cache_.trunk_length = h.length;
    return h;
  }

  Mat<S> train_head(const Activation<S>& trunk_out, const Mat<S>& metadata, std::mt19937_64& rng) {
    const Mat<S> features = global_average_pool(trunk_out);
    cache_.metadata = metadata;
    cache_.meta_hidden = meta_.forward(metadata);
    relu_inplace(cache_.meta_hidden);
    cache_.concat.resize(features.rows(), features.cols() + cache_.meta_hidden.cols());
    cache_.concat << features, cache_.meta_hidden;
    cache_.combined_hidden = combined_.forward(cache_.concat);
    relu_inplace(cache_.combined_hidden);
    cache_.dropout_mask.setConstant(cache_.combined_hidden.rows(), cache_.combined_hidden.cols(), S(1));
    if (config_.dropout > 0.0) {
      const S scale = S(1) / static_cast<S>(1.0 - config_.dropout);
      std::bernoulli_distribution keep(1.0 - config_.dropout);
      for (Index i = 0; i < cache_.dropout_mask.size(); ++i) cache_.dropout_mask.data()[i] = keep(rng) ? scale : S(0);
    }
    const Mat<S> dropped = cache_.combined_hidden.array() * cache_.dropout_mask.array();
    return output_.forward(dropped);
  }

  void backward(const Mat<S>& dlogits) {
    Mat<S> dropped = cache_.combined_hidden.array() * cache_.dropout_mask.array();
    Mat<S> dh = output_.backward(dropped, dlogits);
    dh.array() *= cache_.dropout_mask.array();
    relu_backward_inplace(cache_.combined_hidden, dh);
    const Mat<S> dconcat = combined_.backward(cache_.concat, dh);
    const Index n_feat = dconcat.cols() - cache_.meta_hidden.cols();
    Mat<S> dmeta = dconcat.rightCols(cache_.meta_hidden.cols());
    relu_backward_inplace(cache_.meta_hidden, dmeta);
    meta_.backward(cache_.metadata, dmeta);

    auto d = global_average_pool_backward<S>(dconcat.leftCols(n_feat), cache_.trunk_length);
    for (std::size_t i = blocks_.size(); i-- > 0;) d = blocks_[i].backward(cache_.blocks[i], std::move(d));
    d = pool_.backward(cache_.pool, d);
    relu_backward_inplace(cache_.stem_out.data, d.data);
    stem_.backward(cache_.input, stem_bn_.backward(cache_.stem_bn, d));
  }

  ModelConfig config_;
  Conv1d<S> stem_;
  BatchNorm<S> stem_bn_;
  MaxPool1d<S> pool_;
  std::vector<BasicBlock<S>> blocks_;
  Dense<S> meta_, combined_, output_;
  Cache cache_;
  std::size_t last_correct_ = 0;
};

}  // namespace wfp
