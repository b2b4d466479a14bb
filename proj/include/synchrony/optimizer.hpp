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

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "synchrony/error.hpp"
#include "synchrony/model.hpp"

namespace synchrony {

enum class OptimizerKind { kAdam, kSgd };

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw Error("unknown optimizer '" + s + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global-norm clipping threshold; <= 0 disables clipping.
  double clip_norm = 5.0;
};

inline double global_norm(std::span<const double> g) {
  double sum = 0.0;
  for (double v : g) sum += v * v;
  return std::sqrt(sum);
}

/// Rescales g in place so its L2 norm is at most `threshold`. Returns the
/// norm before clipping.
inline double clip_by_global_norm(std::span<double> g, double threshold) {
  const double norm = global_norm(g);
  if (threshold > 0.0 && norm > threshold) {
    const double scale = threshold / norm;
    for (double& v : g) v *= scale;
  }
  return norm;
}

/// Stateful first-order optimizer over a flat parameter vector.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  const OptimizerConfig& config() const noexcept { return config_; }
  std::size_t steps() const noexcept { return steps_; }

  /// Clips `gradient` (in place) and applies one update to `params`.
  void step(std::span<double> params, std::span<double> gradient) {
    detail::require(params.size() == gradient.size(), "gradient and parameter shapes differ");
    clip_by_global_norm(gradient, config_.clip_norm);
    ++steps_;
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config_.learning_rate * gradient[i];
      return;
    }
    if (first_.size() != params.size()) {
      first_.assign(params.size(), 0.0);
      second_.assign(params.size(), 0.0);
    }
    const double t = static_cast<double>(steps_);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = gradient[i];
      first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * g;
      second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = first_[i] / correction1;
      const double v_hat = second_[i] / correction2;
      params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }

  void step(SynchronyModel& model, std::vector<double>& gradient) { step(model.parameters(), gradient); }

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<double> first_;
  std::vector<double> second_;
};

}  // namespace synchrony
