// Copyright 2026 The Synchrony Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Synchrony regressor: a bank of independent LSTMs that all read every
// channel of every participant, followed by a dense head with ReLU output.
//
// All parameters live in one flat buffer so that optimizers, gradient
// checks and serialization can treat the model as a single vector. The
// layout is, for n = 0 .. n_lstms-1 in order,
//
//   W_n  (4H x I, column-major)   input weights, gates stacked i, f, g, o
//   R_n  (4H x H, column-major)   recurrent weights
//   b_n  (4H)                     biases
//
// followed by the head weights (n_lstms*H, LSTM-major) and the head bias.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "synchrony/error.hpp"
#include "synchrony/lstm.hpp"
#include "synchrony/parallel.hpp"
#include "synchrony/random.hpp"
#include "synchrony/signal.hpp"

namespace synchrony {

struct ModelShape {
  std::size_t n_lstms = 6;
  std::size_t input_size = 2;
  std::size_t hidden_size = 32;
  /// Trailing frames of each window fed to the LSTMs.
  std::size_t lookback = 30;
  CellActivation activation = CellActivation::kTanh;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

class ParameterLayout {
 public:
  explicit ParameterLayout(const ModelShape& s)
      : inputs_(s.input_size), hidden_(s.hidden_size), lstms_(s.n_lstms) {}

  std::size_t cell_size() const { return 4 * hidden_ * (inputs_ + hidden_ + 1); }
  std::size_t input_weights(std::size_t n) const { return n * cell_size(); }
  std::size_t recurrent_weights(std::size_t n) const { return input_weights(n) + 4 * hidden_ * inputs_; }
  std::size_t bias(std::size_t n) const { return recurrent_weights(n) + 4 * hidden_ * hidden_; }
  std::size_t head_weights() const { return lstms_ * cell_size(); }
  std::size_t head_bias() const { return head_weights() + lstms_ * hidden_; }
  std::size_t size() const { return head_bias() + 1; }

 private:
  std::size_t inputs_;
  std::size_t hidden_;
  std::size_t lstms_;
};

class SynchronyModel {
 public:
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;

  /// All-zero parameters.
  explicit SynchronyModel(const ModelShape& shape) : shape_(shape) {
    detail::require(shape.n_lstms > 0 && shape.input_size > 0 && shape.hidden_size > 0 && shape.lookback > 0,
                    "model dimensions must be positive");
    params_.assign(ParameterLayout(shape).size(), 0.0);
  }

  SynchronyModel(const ModelShape& shape, std::vector<double> params) : SynchronyModel(shape) {
    detail::require(params.size() == params_.size(), "parameter count does not match model shape");
    params_ = std::move(params);
  }

  /// Xavier-uniform weights, forget-gate bias `forget_bias`, all other biases 0.
  static SynchronyModel xavier(const ModelShape& shape, std::uint64_t seed, double forget_bias = 1.0) {
    SynchronyModel m(shape);
    Rng rng(seed);
    const auto h = static_cast<double>(shape.hidden_size);
    const auto in = static_cast<double>(shape.input_size);
    auto fill = [&rng](auto&& block, double fan_in, double fan_out) {
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index j = 0; j < block.cols(); ++j)
        for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = limit * dist(rng);
    };
    for (std::size_t n = 0; n < shape.n_lstms; ++n) {
      fill(m.input_weights(n), in, h);
      fill(m.recurrent_weights(n), h, h);
      m.bias(n).segment(shape.hidden_size, shape.hidden_size).setConstant(forget_bias);
    }
    auto head = m.head_weights();
    fill(head, static_cast<double>(shape.n_lstms) * h, 1.0);
    return m;
  }

  const ModelShape& shape() const noexcept { return shape_; }
  ParameterLayout layout() const { return ParameterLayout(shape_); }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  ConstMatrixMap input_weights(std::size_t n) const {
    return {params_.data() + layout().input_weights(n), rows4(), cols(shape_.input_size)};
  }
  MatrixMap input_weights(std::size_t n) {
    return {params_.data() + layout().input_weights(n), rows4(), cols(shape_.input_size)};
  }
  ConstMatrixMap recurrent_weights(std::size_t n) const {
    return {params_.data() + layout().recurrent_weights(n), rows4(), cols(shape_.hidden_size)};
  }
  MatrixMap recurrent_weights(std::size_t n) {
    return {params_.data() + layout().recurrent_weights(n), rows4(), cols(shape_.hidden_size)};
  }
  ConstVectorMap bias(std::size_t n) const { return {params_.data() + layout().bias(n), rows4()}; }
  VectorMap bias(std::size_t n) { return {params_.data() + layout().bias(n), rows4()}; }
  /// 1 x (n_lstms*H) row.
  ConstMatrixMap head_weights() const {
    return {params_.data() + layout().head_weights(), 1, cols(shape_.n_lstms * shape_.hidden_size)};
  }
  MatrixMap head_weights() {
    return {params_.data() + layout().head_weights(), 1, cols(shape_.n_lstms * shape_.hidden_size)};
  }
  double head_bias() const { return params_[layout().head_bias()]; }
  double& head_bias() { return params_[layout().head_bias()]; }

  /// Owning copy of one LSTM's parameters.
  LstmCellParams cell(std::size_t n) const {
    LstmCellParams p;
    p.input_weights = input_weights(n);
    p.recurrent_weights = recurrent_weights(n);
    p.bias = bias(n);
    return p;
  }

  friend bool operator==(const SynchronyModel&, const SynchronyModel&) = default;

 private:
  Eigen::Index rows4() const { return static_cast<Eigen::Index>(4 * shape_.hidden_size); }
  static Eigen::Index cols(std::size_t n) { return static_cast<Eigen::Index>(n); }

  ModelShape shape_;
  std::vector<double> params_;
};

/// Per-frame inputs of a batch: entry t is an (I x B) matrix holding frame t
/// of the lookback horizon for every window in the batch.
using BatchInputs = std::vector<Eigen::MatrixXd>;

/// Flattens participants x channels of the trailing `lookback` frames of each
/// window into per-timestep input matrices. Row k*C + c holds channel c of
/// participant k.
inline BatchInputs gather_inputs(std::span<const Window> windows, const ModelShape& shape) {
  detail::require(!windows.empty(), "empty batch");
  const auto width = static_cast<Eigen::Index>(shape.input_size);
  const auto batch = static_cast<Eigen::Index>(windows.size());
  BatchInputs inputs(shape.lookback, Eigen::MatrixXd(width, batch));
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Window& w = windows[static_cast<std::size_t>(b)];
    if (w.frame_width() != shape.input_size) throw Error("dimension mismatch: window has a different channel count than the model");
    if (w.length() < shape.lookback) throw Error("dimension mismatch: window shorter than lookback");
    const std::size_t offset = w.length() - shape.lookback;
    const std::size_t channels = w.n_channels();
    for (std::size_t k = 0; k < w.n_participants(); ++k) {
      for (std::size_t c = 0; c < channels; ++c) {
        const auto values = w.parent().channel(k, c).values().subspan(w.start_frame() + offset, shape.lookback);
        const auto row = static_cast<Eigen::Index>(k * channels + c);
        for (std::size_t t = 0; t < shape.lookback; ++t) inputs[t](row, b) = values[t];
      }
    }
  }
  return inputs;
}

namespace detail {

/// Activations of one LSTM over the horizon, kept for backpropagation.
struct LstmTrace {
  std::vector<Eigen::MatrixXd> gates;     // per t, 4H x B, activated
  std::vector<Eigen::MatrixXd> cells;     // per t, c_t
  std::vector<Eigen::MatrixXd> squashed;  // per t, squash(c_t)
  std::vector<Eigen::MatrixXd> hidden;    // per t, h_t
};

inline void run_lstm(const SynchronyModel& model, std::size_t n, const BatchInputs& inputs,
                     LstmTrace* trace, Eigen::MatrixXd& final_hidden) {
  const auto& s = model.shape();
  const auto hidden = static_cast<Eigen::Index>(s.hidden_size);
  const Eigen::Index batch = inputs.front().cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd gates;
  Eigen::MatrixXd squashed;
  const auto w_in = model.input_weights(n);
  const auto w_rec = model.recurrent_weights(n);
  const auto bias = model.bias(n);
  if (trace != nullptr) {
    trace->gates.resize(inputs.size());
    trace->cells.resize(inputs.size());
    trace->squashed.resize(inputs.size());
    trace->hidden.resize(inputs.size());
  }
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    cell_forward(w_in, w_rec, bias, inputs[t], s.activation, h, c, gates, squashed);
    if (trace != nullptr) {
      trace->gates[t] = gates;
      trace->cells[t] = c;
      trace->squashed[t] = squashed;
      trace->hidden[t] = h;
    }
  }
  final_hidden = std::move(h);
}

/// Pre-activation head output z (1 x B) for the concatenated final states.
inline Eigen::RowVectorXd head_preactivation(const SynchronyModel& model,
                                             const std::vector<Eigen::MatrixXd>& finals) {
  const auto hidden = static_cast<Eigen::Index>(model.shape().hidden_size);
  const auto head = model.head_weights();
  Eigen::RowVectorXd z = Eigen::RowVectorXd::Constant(finals.front().cols(), model.head_bias());
  for (std::size_t n = 0; n < finals.size(); ++n) {
    z.noalias() += head.middleCols(static_cast<Eigen::Index>(n) * hidden, hidden) * finals[n];
  }
  return z;
}

inline void check_finite(const Eigen::RowVectorXd& v) {
  if (!v.allFinite()) throw Error("numerical overflow");
}

}  // namespace detail

/// Forward pass over prepared inputs. Each column is one window; LSTM state
/// starts at zero for every window.
inline Eigen::RowVectorXd forward_batch(const SynchronyModel& model, const BatchInputs& inputs) {
  detail::require(inputs.size() == model.shape().lookback, "dimension mismatch: input horizon differs from lookback");
  const std::size_t lstms = model.shape().n_lstms;
  std::vector<Eigen::MatrixXd> finals(lstms);
  parallel_for(lstms, [&](std::size_t n) { detail::run_lstm(model, n, inputs, nullptr, finals[n]); });
  Eigen::RowVectorXd z = detail::head_preactivation(model, finals);
  detail::check_finite(z);
  return z.cwiseMax(0.0);
}

/// Predictions for many windows, evaluated in fixed-size chunks.
inline std::vector<double> predict_windows(const SynchronyModel& model, std::span<const Window> windows,
                                           std::size_t chunk = 256) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (std::size_t begin = 0; begin < windows.size(); begin += chunk) {
    const auto part = windows.subspan(begin, std::min(chunk, windows.size() - begin));
    const auto preds = forward_batch(model, gather_inputs(part, model.shape()));
    out.insert(out.end(), preds.data(), preds.data() + preds.size());
  }
  return out;
}

/// Scalar synchrony prediction for one window; always >= 0.
inline double model_forward(const SynchronyModel& model, const Window& window) {
  return forward_batch(model, gather_inputs(std::span(&window, 1), model.shape()))(0);
}

inline double mse_loss(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.empty()) throw Error("mse of empty input");
  detail::require(predictions.size() == labels.size(), "mse inputs differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - labels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as SynchronyModel::parameters()
};

/// Mean-squared-error loss over the batch and its exact gradient with respect
/// to every parameter, by backpropagation through time over the lookback.
inline LossAndGradient backward(const SynchronyModel& model, const BatchInputs& inputs,
                                std::span<const double> labels) {
  const auto& s = model.shape();
  detail::require(!inputs.empty() && inputs.front().cols() > 0, "empty batch");
  detail::require(inputs.size() == s.lookback, "dimension mismatch: input horizon differs from lookback");
  const Eigen::Index batch = inputs.front().cols();
  detail::require(labels.size() == static_cast<std::size_t>(batch), "label count differs from batch size");
  const auto hidden = static_cast<Eigen::Index>(s.hidden_size);
  const ParameterLayout layout(s);

  std::vector<detail::LstmTrace> traces(s.n_lstms);
  std::vector<Eigen::MatrixXd> finals(s.n_lstms);
  parallel_for(s.n_lstms, [&](std::size_t n) { detail::run_lstm(model, n, inputs, &traces[n], finals[n]); });
  const Eigen::RowVectorXd z = detail::head_preactivation(model, finals);
  detail::check_finite(z);

  LossAndGradient result;
  result.gradient.assign(layout.size(), 0.0);
  auto& grad = result.gradient;

  Eigen::RowVectorXd dz(batch);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double pred = z(b) > 0.0 ? z(b) : 0.0;
    const double diff = pred - labels[static_cast<std::size_t>(b)];
    loss += diff * diff;
    dz(b) = z(b) > 0.0 ? 2.0 * diff / static_cast<double>(batch) : 0.0;
  }
  result.loss = loss / static_cast<double>(batch);
  if (!std::isfinite(result.loss)) throw Error("numerical overflow");

  grad[layout.head_bias()] = dz.sum();
  const auto head = model.head_weights();
  for (std::size_t n = 0; n < s.n_lstms; ++n) {
    Eigen::Map<Eigen::RowVectorXd> dhead(grad.data() + layout.head_weights() + n * s.hidden_size, hidden);
    dhead.noalias() = dz * finals[n].transpose();
  }

  parallel_for(s.n_lstms, [&](std::size_t n) {
    const auto& tr = traces[n];
    const auto w_in = model.input_weights(n);
    const auto w_rec = model.recurrent_weights(n);
    Eigen::Map<Eigen::MatrixXd> d_in(grad.data() + layout.input_weights(n), 4 * hidden,
                                     static_cast<Eigen::Index>(s.input_size));
    Eigen::Map<Eigen::MatrixXd> d_rec(grad.data() + layout.recurrent_weights(n), 4 * hidden, hidden);
    Eigen::Map<Eigen::VectorXd> d_bias(grad.data() + layout.bias(n), 4 * hidden);

    Eigen::MatrixXd dh = head.middleCols(static_cast<Eigen::Index>(n) * hidden, hidden).transpose() * dz;
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(hidden, batch);
    Eigen::MatrixXd da(4 * hidden, batch);
    const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(hidden, batch);
    for (std::size_t t = inputs.size(); t-- > 0;) {
      const auto& gates = tr.gates[t];
      const auto i = gates.topRows(hidden);
      const auto f = gates.middleRows(hidden, hidden);
      const auto g = gates.middleRows(2 * hidden, hidden);
      const auto o = gates.bottomRows(hidden);
      const auto& sq = tr.squashed[t];
      const Eigen::MatrixXd& c_prev = t > 0 ? tr.cells[t - 1] : zeros;
      const Eigen::MatrixXd& h_prev = t > 0 ? tr.hidden[t - 1] : zeros;

      const Eigen::MatrixXd sq_grad = sq.unaryExpr([&](double y) { return detail::squash_grad_from_output(y, s.activation); });
      dc.array() += dh.array() * o.array() * sq_grad.array();
      const Eigen::MatrixXd g_grad = g.unaryExpr([&](double y) { return detail::squash_grad_from_output(y, s.activation); });

      da.topRows(hidden).array() = dc.array() * g.array() * i.array() * (1.0 - i.array());
      da.middleRows(hidden, hidden).array() = dc.array() * c_prev.array() * f.array() * (1.0 - f.array());
      da.middleRows(2 * hidden, hidden).array() = dc.array() * i.array() * g_grad.array();
      da.bottomRows(hidden).array() = dh.array() * sq.array() * o.array() * (1.0 - o.array());

      d_in.noalias() += da * inputs[t].transpose();
      d_rec.noalias() += da * h_prev.transpose();
      d_bias.noalias() += da.rowwise().sum();

      dh.noalias() = w_rec.transpose() * da;
      dc = dc.cwiseProduct(f);
    }
  });
  for (double v : grad) {
    if (!std::isfinite(v)) throw Error("numerical overflow");
  }
  return result;
}

/// Convenience overload taking labelled windows.
inline LossAndGradient backward(const SynchronyModel& model, std::span<const Window> batch) {
  std::vector<double> labels;
  labels.reserve(batch.size());
  for (const auto& w : batch) labels.push_back(w.label());
  return backward(model, gather_inputs(batch, model.shape()), labels);
}

}  // namespace synchrony
