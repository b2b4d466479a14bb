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

// LSTM cell. Gate rows are stacked in the order input, forget, cell
// candidate, output; every weight block therefore has 4*hidden rows.

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <utility>

#include "synchrony/error.hpp"

namespace synchrony {

enum class Gate : int { kInput = 0, kForget = 1, kCandidate = 2, kOutput = 3 };

/// Nonlinearity used for the cell candidate and the cell output squashing.
/// kTanh is the standard LSTM; kRelu replaces both tanh's with ReLU.
enum class CellActivation { kTanh, kRelu };

inline std::string to_string(CellActivation a) { return a == CellActivation::kTanh ? "tanh" : "relu"; }

inline CellActivation cell_activation_from_string(const std::string& s) {
  if (s == "tanh") return CellActivation::kTanh;
  if (s == "relu") return CellActivation::kRelu;
  throw Error("unknown cell activation '" + s + "'");
}

struct LstmCellParams {
  Eigen::MatrixXd input_weights;      // 4H x I
  Eigen::MatrixXd recurrent_weights;  // 4H x H
  Eigen::VectorXd bias;               // 4H

  LstmCellParams() = default;
  LstmCellParams(std::size_t input_size, std::size_t hidden_size)
      : input_weights(Eigen::MatrixXd::Zero(4 * hidden_size, input_size)),
        recurrent_weights(Eigen::MatrixXd::Zero(4 * hidden_size, hidden_size)),
        bias(Eigen::VectorXd::Zero(4 * hidden_size)) {}

  std::size_t hidden_size() const { return static_cast<std::size_t>(bias.size() / 4); }
  std::size_t input_size() const { return static_cast<std::size_t>(input_weights.cols()); }

  auto gate_bias(Gate g) { return bias.segment(static_cast<int>(g) * hidden_size(), hidden_size()); }
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double squash(double x, CellActivation a) { return a == CellActivation::kTanh ? std::tanh(x) : (x > 0 ? x : 0.0); }

/// Derivative of squash expressed through its output y = squash(x).
inline double squash_grad_from_output(double y, CellActivation a) {
  return a == CellActivation::kTanh ? 1.0 - y * y : (y > 0 ? 1.0 : 0.0);
}

/// One batched LSTM step. Columns of x, h, c are independent batch entries.
/// On return `gates` holds the activated gate values (4H x B) and `h`, `c`
/// are advanced in place; `squashed_cell` receives squash(c_t).
inline void cell_forward(const Eigen::Ref<const Eigen::MatrixXd>& w_in,
                         const Eigen::Ref<const Eigen::MatrixXd>& w_rec,
                         const Eigen::Ref<const Eigen::VectorXd>& bias,
                         const Eigen::Ref<const Eigen::MatrixXd>& x, CellActivation act,
                         Eigen::MatrixXd& h, Eigen::MatrixXd& c, Eigen::MatrixXd& gates,
                         Eigen::MatrixXd& squashed_cell) {
  const Eigen::Index hidden = w_rec.cols();
  gates.noalias() = w_in * x;
  gates.noalias() += w_rec * h;
  gates.colwise() += bias;
  auto i = gates.topRows(hidden);
  auto f = gates.middleRows(hidden, hidden);
  auto g = gates.middleRows(2 * hidden, hidden);
  auto o = gates.bottomRows(hidden);
  i = i.unaryExpr(&sigmoid);
  f = f.unaryExpr(&sigmoid);
  g = g.unaryExpr([act](double v) { return squash(v, act); });
  o = o.unaryExpr(&sigmoid);
  c = f.cwiseProduct(c) + i.cwiseProduct(g);
  squashed_cell = c.unaryExpr([act](double v) { return squash(v, act); });
  h = o.cwiseProduct(squashed_cell);
}

}  // namespace detail

/// Advances one LSTM cell by a single time step and returns (h_t, c_t).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> cell_step(const LstmCellParams& params,
                                                             const Eigen::VectorXd& x,
                                                             const Eigen::VectorXd& h_prev,
                                                             const Eigen::VectorXd& c_prev,
                                                             CellActivation act = CellActivation::kTanh) {
  const auto hidden = params.recurrent_weights.cols();
  if (params.input_weights.rows() != 4 * hidden || params.recurrent_weights.rows() != 4 * hidden ||
      params.bias.size() != 4 * hidden) {
    throw Error("dimension mismatch: inconsistent LSTM parameter shapes");
  }
  if (x.size() != params.input_weights.cols()) throw Error("dimension mismatch: input size");
  if (h_prev.size() != hidden || c_prev.size() != hidden) throw Error("dimension mismatch: state size");
  Eigen::MatrixXd h = h_prev;
  Eigen::MatrixXd c = c_prev;
  Eigen::MatrixXd gates;
  Eigen::MatrixXd squashed;
  detail::cell_forward(params.input_weights, params.recurrent_weights, params.bias, x, act, h, c, gates,
                       squashed);
  return {h.col(0), c.col(0)};
}

}  // namespace synchrony
