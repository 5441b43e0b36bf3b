#pragma once

// Layer building blocks for causal 1-D convolutional networks. Every layer
// has an explicit forward and backward; parameter gradients accumulate into
// the layer's grad members.
//
// Activations are stored channel-major: a (channels x batch*length)
// row-major matrix, so row c holds channel c of every sample back to back.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wfp/error.hpp"

namespace wfp {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Direct-sum causal dilated convolution of a single channel:
// out[t] = sum_j w[j] * in[t - j*d], inputs before t=0 read as zero.
template <class S>
std::vector<S> causal_conv(std::span<const S> input, std::span<const S> weights, int dilation) {
  if (dilation < 1) throw ConfigError("dilation must be >= 1");
  if (weights.empty()) throw ConfigError("kernel must have at least one tap");
  std::vector<S> out(input.size(), S(0));
  for (std::size_t t = 0; t < input.size(); ++t) {
    S acc(0);
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const auto lag = j * static_cast<std::size_t>(dilation);
      if (lag > t) break;
      acc += weights[j] * input[t - lag];
    }
    out[t] = acc;
  }
  return out;
}

template <class S>
struct Activation {
  Index channels = 0, batch = 0, length = 0;
  Mat<S> data;

  Activation() = default;
  Activation(Index c, Index b, Index l) : channels(c), batch(b), length(l), data(c, b * l) {}

  S* row(Index c, Index b) { return data.data() + c * data.cols() + b * length; }
  const S* row(Index c, Index b) const { return data.data() + c * data.cols() + b * length; }
};

// Trainable tensor with its gradient.
template <class S>
struct Param {
  Mat<S> value, grad;

  void resize(Index r, Index c) {
    value.setZero(r, c);
    grad.setZero(r, c);
  }
};

template <class S>
struct ParamRef {
  std::string name;
  Param<S>* param;
};

template <class S>
struct BufferRef {
  std::string name;
  Mat<S>* value;
};

template <class S>
void he_normal(Mat<S>& w, Index fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<S>(dist(rng));
}

// Causal convolution over many channels with dilation and stride. Output
// index o sits at input time o*stride and reads only times <= o*stride.
template <class S>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Index in_ch, Index out_ch, int kernel, int dilation, int stride)
      : in_(in_ch), out_(out_ch), kernel_(kernel), dilation_(dilation), stride_(stride) {
    weight.resize(out_ch, in_ch * kernel);
  }

  void init(std::mt19937_64& rng) { he_normal(weight.value, in_ * kernel_, rng); }

  Index out_length(Index in_length) const { return (in_length + stride_ - 1) / stride_; }
  int dilation() const { return dilation_; }
  int stride() const { return stride_; }
  int kernel() const { return kernel_; }

  Activation<S> forward(const Activation<S>& x) const {
    Mat<S> col;
    im2col(x, col);
    Activation<S> y(out_, x.batch, out_length(x.length));
    y.data.noalias() = weight.value * col;
    return y;
  }

  // x is the forward input. Returns dL/dx.
  Activation<S> backward(const Activation<S>& x, const Activation<S>& dy) {
    Mat<S> col;
    im2col(x, col);
    weight.grad.noalias() += dy.data * col.transpose();
    const Mat<S> wt = weight.value.transpose();
    Mat<S> dcol(wt.rows(), dy.data.cols());
    dcol.noalias() = wt * dy.data;
    Activation<S> dx(x.channels, x.batch, x.length);
    dx.data.setZero();
    col2im(dcol, dx);
    return dx;
  }

  void collect(std::vector<ParamRef<S>>& out, const std::string& prefix) { out.push_back({prefix + ".weight", &weight}); }

  Param<S> weight;  // out x (in * kernel); column ci*kernel + j is tap j of channel ci

 private:
  void im2col(const Activation<S>& x, Mat<S>& col) const {
    const Index t_out = out_length(x.length);
    col.resize(in_ * kernel_, x.batch * t_out);
    for (Index c = 0; c < in_; ++c) {
      for (int j = 0; j < kernel_; ++j) {
        const Index lag = static_cast<Index>(j) * dilation_;
        S* dst_row = col.data() + (c * kernel_ + j) * col.cols();
        for (Index b = 0; b < x.batch; ++b) {
          const S* src = x.row(c, b);
          S* dst = dst_row + b * t_out;
          if (stride_ == 1) {
            const Index zeros = std::min(lag, t_out);
            std::fill(dst, dst + zeros, S(0));
            std::copy(src, src + (t_out - zeros), dst + zeros);
          } else {
            const Index first = std::min((lag + stride_ - 1) / stride_, t_out);
            std::fill(dst, dst + first, S(0));
            for (Index o = first; o < t_out; ++o) dst[o] = src[o * stride_ - lag];
          }
        }
      }
    }
  }

  void col2im(const Mat<S>& dcol, Activation<S>& dx) const {
    const Index t_out = out_length(dx.length);
    for (Index c = 0; c < in_; ++c) {
      for (int j = 0; j < kernel_; ++j) {
        const Index lag = static_cast<Index>(j) * dilation_;
        const S* src_row = dcol.data() + (c * kernel_ + j) * dcol.cols();
        for (Index b = 0; b < dx.batch; ++b) {
          const S* src = src_row + b * t_out;
          S* dst = dx.row(c, b) - lag;
          const Index first = std::min((lag + stride_ - 1) / stride_, t_out);
          if (stride_ == 1) {
            for (Index o = first; o < t_out; ++o) dst[o] += src[o];
          } else {
            for (Index o = first; o < t_out; ++o) dst[o * stride_] += src[o];
          }
        }
      }
    }
  }

  Index in_ = 0, out_ = 0;
  int kernel_ = 1, dilation_ = 1, stride_ = 1;
};

// Per-channel normalization over (batch, time). Training mode uses batch
// statistics and updates the running averages; inference uses the running
// averages.
template <class S>
class BatchNorm {
 public:
  struct Cache {
    Mat<S> xhat;
    Vec<S> inv_std;
  };

  BatchNorm() = default;
  BatchNorm(Index channels, double momentum, double epsilon) : momentum_(momentum), epsilon_(epsilon) {
    gamma.resize(channels, 1);
    beta.resize(channels, 1);
    gamma.value.setOnes();
    running_mean.setZero(channels, 1);
    running_var.setOnes(channels, 1);
  }

  Activation<S> forward_train(const Activation<S>& x, Cache& cache) {
    const Index C = x.channels;
    const auto n = static_cast<S>(x.data.cols());
    Activation<S> y(C, x.batch, x.length);
    cache.xhat.resize(C, x.data.cols());
    cache.inv_std.resize(C);
    for (Index c = 0; c < C; ++c) {
      const auto xr = x.data.row(c);
      const S mean = xr.sum() / n;
      const S var = (xr.array() - mean).square().sum() / n;
      const S inv = S(1) / std::sqrt(var + static_cast<S>(epsilon_));
      cache.inv_std(c) = inv;
      cache.xhat.row(c) = (xr.array() - mean) * inv;
      y.data.row(c) = cache.xhat.row(c).array() * gamma.value(c, 0) + beta.value(c, 0);
      const S unbiased = n > 1 ? var * n / (n - 1) : var;
      running_mean(c, 0) = static_cast<S>(momentum_) * running_mean(c, 0) + static_cast<S>(1 - momentum_) * mean;
      running_var(c, 0) = static_cast<S>(momentum_) * running_var(c, 0) + static_cast<S>(1 - momentum_) * unbiased;
    }
    return y;
  }

  Activation<S> forward_infer(const Activation<S>& x) const {
    Activation<S> y(x.channels, x.batch, x.length);
    for (Index c = 0; c < x.channels; ++c) {
      const S scale = gamma.value(c, 0) / std::sqrt(running_var(c, 0) + static_cast<S>(epsilon_));
      const S shift = beta.value(c, 0) - running_mean(c, 0) * scale;
      y.data.row(c) = x.data.row(c).array() * scale + shift;
    }
    return y;
  }

  Activation<S> backward(const Cache& cache, const Activation<S>& dy) {
    Activation<S> dx(dy.channels, dy.batch, dy.length);
    const auto n = static_cast<S>(dy.data.cols());
    for (Index c = 0; c < dy.channels; ++c) {
      const auto g = dy.data.row(c).array();
      const auto xh = cache.xhat.row(c).array();
      const S sum_g = g.sum();
      const S sum_gx = (g * xh).sum();
      gamma.grad(c, 0) += sum_gx;
      beta.grad(c, 0) += sum_g;
      const S k = gamma.value(c, 0) * cache.inv_std(c);
      dx.data.row(c) = k * (g - sum_g / n - xh * (sum_gx / n));
    }
    return dx;
  }

  void collect(std::vector<ParamRef<S>>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma});
    out.push_back({prefix + ".beta", &beta});
  }
  void collect_buffers(std::vector<BufferRef<S>>& out, const std::string& prefix) {
    out.push_back({prefix + ".running_mean", &running_mean});
    out.push_back({prefix + ".running_var", &running_var});
  }

  Param<S> gamma, beta;
  Mat<S> running_mean, running_var;

 private:
  double momentum_ = 0.9;
  double epsilon_ = 1e-5;
};

template <class S>
void relu_inplace(Mat<S>& m) {
  m = m.cwiseMax(S(0));
}

// dy is masked where the forward output y was not positive.
template <class S>
void relu_backward_inplace(const Mat<S>& y, Mat<S>& dy) {
  dy = (y.array() > S(0)).select(dy, S(0));
}

// Causal max-pool: output o covers input times o*stride - (window-1) .. o*stride.
template <class S>
class MaxPool1d {
 public:
  struct Cache {
    std::vector<Index> argmax;  // flat input column per output element
    Index in_length = 0;
  };

  MaxPool1d() = default;
  MaxPool1d(int window, int stride) : window_(window), stride_(stride) {}

  Index out_length(Index in_length) const { return (in_length + stride_ - 1) / stride_; }

  Activation<S> forward(const Activation<S>& x, Cache* cache) const {
    const Index t_out = out_length(x.length);
    Activation<S> y(x.channels, x.batch, t_out);
    if (cache) {
      cache->argmax.resize(static_cast<std::size_t>(y.data.size()));
      cache->in_length = x.length;
    }
    for (Index c = 0; c < x.channels; ++c) {
      for (Index b = 0; b < x.batch; ++b) {
        const S* src = x.row(c, b);
        S* dst = y.row(c, b);
        for (Index o = 0; o < t_out; ++o) {
          const Index end = o * stride_;
          Index best = end;
          for (Index t = end - 1; t >= std::max<Index>(0, end - window_ + 1); --t)
            if (src[t] > src[best]) best = t;
          dst[o] = src[best];
          if (cache) cache->argmax[static_cast<std::size_t>((c * x.batch + b) * t_out + o)] = best;
        }
      }
    }
    return y;
  }

  Activation<S> backward(const Cache& cache, const Activation<S>& dy) const {
    Activation<S> dx(dy.channels, dy.batch, cache.in_length);
    dx.data.setZero();
    for (Index c = 0; c < dy.channels; ++c)
      for (Index b = 0; b < dy.batch; ++b) {
        const S* g = dy.row(c, b);
        S* dst = dx.row(c, b);
        for (Index o = 0; o < dy.length; ++o) dst[cache.argmax[static_cast<std::size_t>((c * dy.batch + b) * dy.length + o)]] += g[o];
      }
    return dx;
  }

 private:
  int window_ = 3, stride_ = 2;
};

// Mean over time: (C x B*T) activation -> (B x C) features.
template <class S>
Mat<S> global_average_pool(const Activation<S>& x) {
  Mat<S> f(x.batch, x.channels);
  for (Index c = 0; c < x.channels; ++c)
    for (Index b = 0; b < x.batch; ++b) {
      const S* r = x.row(c, b);
      S acc(0);
      for (Index t = 0; t < x.length; ++t) acc += r[t];
      f(b, c) = acc / static_cast<S>(x.length);
    }
  return f;
}

template <class S>
Activation<S> global_average_pool_backward(const Mat<S>& df, Index length) {
  Activation<S> dx(df.cols(), df.rows(), length);
  for (Index c = 0; c < dx.channels; ++c)
    for (Index b = 0; b < dx.batch; ++b) {
      const S g = df(b, c) / static_cast<S>(length);
      std::fill(dx.row(c, b), dx.row(c, b) + length, g);
    }
  return dx;
}

// Fully connected layer on (batch x features) matrices.
template <class S>
class Dense {
 public:
  Dense() = default;
  Dense(Index in, Index out) {
    weight.resize(out, in);
    bias.resize(1, out);
  }

  void init(std::mt19937_64& rng) { he_normal(weight.value, weight.value.cols(), rng); }

  Mat<S> forward(const Mat<S>& x) const {
    Mat<S> y(x.rows(), weight.value.rows());
    y.noalias() = x * weight.value.transpose();
    y.rowwise() += bias.value.row(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& x, const Mat<S>& dy) {
    weight.grad.noalias() += dy.transpose() * x;
    bias.grad.row(0) += dy.colwise().sum();
    Mat<S> dx(dy.rows(), weight.value.cols());
    dx.noalias() = dy * weight.value;
    return dx;
  }

  void collect(std::vector<ParamRef<S>>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
  }

  Param<S> weight, bias;
};

// Row-wise softmax, max-shifted.
template <class S>
Mat<S> softmax_rows(const Mat<S>& logits) {
  Mat<S> p(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const S m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

}  // namespace wfp
