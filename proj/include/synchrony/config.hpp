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

// JSON form of ExperimentConfig. Reading is a merge: keys present in the
// document override the current values and unknown keys are rejected.
//
//   {"window_length": 100, "stride": 1, "train_fraction": 0.8,
//    "n_folds": 5, "fold_mode": "balanced", "fold_test_groups": 8,
//    "seed": 0, "aggregation": "mean", "percent_error": "absolute",
//    "train": {"epochs": 50, "batch_size": 64, "seed": 0,
//              "hidden_size": 32, "n_lstms": 6, "lookback": 30,
//              "activation": "tanh", "forget_bias": 1.0,
//              "windows_per_epoch": 0,
//              "optimizer": {"kind": "adam", "learning_rate": 0.001,
//                            "beta1": 0.9, "beta2": 0.999,
//                            "epsilon": 1e-8, "clip_norm": 5.0}}}

#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "synchrony/error.hpp"
#include "synchrony/harness.hpp"

namespace synchrony {

inline std::string to_string(PercentErrorMode m) { return m == PercentErrorMode::kAbsolute ? "absolute" : "signed"; }

inline PercentErrorMode percent_error_mode_from_string(const std::string& s) {
  if (s == "absolute") return PercentErrorMode::kAbsolute;
  if (s == "signed") return PercentErrorMode::kSigned;
  throw Error("unknown percent error mode '" + s + "'");
}

inline nlohmann::json to_json(const OptimizerConfig& c) {
  return {{"kind", to_string(c.kind)}, {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},          {"epsilon", c.epsilon},             {"clip_norm", c.clip_norm}};
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"optimizer", to_json(c.optimizer)},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"hidden_size", c.hidden_size},
          {"n_lstms", c.n_lstms},
          {"lookback", c.lookback},
          {"activation", to_string(c.activation)},
          {"forget_bias", c.forget_bias},
          {"windows_per_epoch", c.windows_per_epoch}};
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"window_length", c.window_length},
          {"stride", c.stride},
          {"train_fraction", c.train_fraction},
          {"n_folds", c.n_folds},
          {"fold_mode", to_string(c.fold_mode)},
          {"fold_test_groups", c.fold_test_groups},
          {"train", to_json(c.train)},
          {"seed", c.seed},
          {"aggregation", to_string(c.aggregation)},
          {"percent_error", to_string(c.percent_error)}};
}

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error("config section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw Error("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void merge_value(const nlohmann::json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline void merge_json(const nlohmann::json& j, OptimizerConfig& c) {
  detail::check_keys(j, {"kind", "learning_rate", "beta1", "beta2", "epsilon", "clip_norm"}, "train.optimizer.");
  if (j.contains("kind")) c.kind = optimizer_kind_from_string(j.at("kind").get<std::string>());
  detail::merge_value(j, "learning_rate", c.learning_rate);
  detail::merge_value(j, "beta1", c.beta1);
  detail::merge_value(j, "beta2", c.beta2);
  detail::merge_value(j, "epsilon", c.epsilon);
  detail::merge_value(j, "clip_norm", c.clip_norm);
}

inline void merge_json(const nlohmann::json& j, TrainConfig& c) {
  detail::check_keys(j,
                     {"optimizer", "epochs", "batch_size", "seed", "hidden_size", "n_lstms", "lookback", "activation",
                      "forget_bias", "windows_per_epoch"},
                     "train.");
  if (j.contains("optimizer")) merge_json(j.at("optimizer"), c.optimizer);
  detail::merge_value(j, "epochs", c.epochs);
  detail::merge_value(j, "batch_size", c.batch_size);
  detail::merge_value(j, "seed", c.seed);
  detail::merge_value(j, "hidden_size", c.hidden_size);
  detail::merge_value(j, "n_lstms", c.n_lstms);
  detail::merge_value(j, "lookback", c.lookback);
  if (j.contains("activation")) c.activation = cell_activation_from_string(j.at("activation").get<std::string>());
  detail::merge_value(j, "forget_bias", c.forget_bias);
  detail::merge_value(j, "windows_per_epoch", c.windows_per_epoch);
}

inline void merge_json(const nlohmann::json& j, ExperimentConfig& c) {
  detail::check_keys(j,
                     {"window_length", "stride", "train_fraction", "n_folds", "fold_mode", "fold_test_groups", "train",
                      "seed", "aggregation", "percent_error"},
                     "");
  detail::merge_value(j, "window_length", c.window_length);
  detail::merge_value(j, "stride", c.stride);
  detail::merge_value(j, "train_fraction", c.train_fraction);
  detail::merge_value(j, "n_folds", c.n_folds);
  if (j.contains("fold_mode")) c.fold_mode = fold_mode_from_string(j.at("fold_mode").get<std::string>());
  detail::merge_value(j, "fold_test_groups", c.fold_test_groups);
  if (j.contains("train")) merge_json(j.at("train"), c.train);
  detail::merge_value(j, "seed", c.seed);
  if (j.contains("aggregation")) c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
  if (j.contains("percent_error")) c.percent_error = percent_error_mode_from_string(j.at("percent_error").get<std::string>());
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  merge_json(j, base);
  return base;
}

}  // namespace synchrony
