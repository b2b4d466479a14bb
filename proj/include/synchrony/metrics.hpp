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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "synchrony/error.hpp"

namespace synchrony {

enum class PercentErrorMode {
  kAbsolute,  // spread of |(Y - Yhat)/Y| about its mean
  kSigned,    // spread of (Y - Yhat)/Y about its own mean
};

namespace detail {

inline void check_pairs(std::span<const double> y, std::span<const double> y_hat, std::size_t min_size) {
  require(y.size() == y_hat.size(), "ground truth and predictions differ in length");
  require(y.size() >= min_size, min_size > 1 ? "need at least two observations" : "empty input");
}

inline std::vector<double> percent_errors(std::span<const double> y, std::span<const double> y_hat, bool absolute) {
  check_pairs(y, y_hat, 1);
  std::vector<double> e(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw Error("percent error undefined at zero ground truth");
    const double r = (y[i] - y_hat[i]) / y[i];
    e[i] = absolute ? std::abs(r) : r;
  }
  return e;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// mu_e = (1/N) sum |(Y_i - Yhat_i) / Y_i|
inline double mean_abs_percent_error(std::span<const double> y, std::span<const double> y_hat) {
  return detail::mean(detail::percent_errors(y, y_hat, true));
}

/// Population standard deviation of the percent errors about their mean.
inline double std_percent_error(std::span<const double> y, std::span<const double> y_hat,
                                PercentErrorMode mode = PercentErrorMode::kAbsolute) {
  const auto e = detail::percent_errors(y, y_hat, mode == PercentErrorMode::kAbsolute);
  const double m = detail::mean(e);
  double ss = 0.0;
  for (double v : e) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(e.size()));
}

/// 1 - SS_res / SS_tot. Negative for predictors worse than the mean.
inline double r_squared(std::span<const double> y, std::span<const double> y_hat) {
  detail::check_pairs(y, y_hat, 2);
  const double mu = detail::mean(y);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mu) * (y[i] - mu);
  }
  if (ss_tot == 0.0) throw Error("undefined total variance: ground truth is constant");
  return 1.0 - ss_res / ss_tot;
}

struct GroupPrediction {
  std::string group_id;
  double truth;
  double predicted;

  friend bool operator==(const GroupPrediction&, const GroupPrediction&) = default;
};

struct EvalReport {
  double mu_e = 0.0;
  double sigma_e = 0.0;
  double r_squared = 0.0;
  std::vector<GroupPrediction> per_group;
  std::size_t n = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline EvalReport build_report(std::vector<GroupPrediction> per_group,
                               PercentErrorMode mode = PercentErrorMode::kAbsolute) {
  std::vector<double> y;
  std::vector<double> y_hat;
  for (const auto& p : per_group) {
    y.push_back(p.truth);
    y_hat.push_back(p.predicted);
  }
  detail::check_pairs(y, y_hat, 2);
  EvalReport r;
  r.mu_e = mean_abs_percent_error(y, y_hat);
  r.sigma_e = std_percent_error(y, y_hat, mode);
  r.r_squared = r_squared(y, y_hat);
  r.n = per_group.size();
  r.per_group = std::move(per_group);
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& p : r.per_group) {
    groups.push_back({{"group_id", p.group_id}, {"y", p.truth}, {"y_hat", p.predicted}});
  }
  return {{"mu_e", r.mu_e}, {"sigma_e", r.sigma_e}, {"r_squared", r.r_squared}, {"n", r.n}, {"per_group", groups}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.mu_e = j.at("mu_e").get<double>();
  r.sigma_e = j.at("sigma_e").get<double>();
  r.r_squared = j.at("r_squared").get<double>();
  r.n = j.at("n").get<std::size_t>();
  for (const auto& g : j.at("per_group")) {
    r.per_group.push_back({g.at("group_id").get<std::string>(), g.at("y").get<double>(), g.at("y_hat").get<double>()});
  }
  return r;
}

/// Aligned text table with the columns Data | R^2 | mean abs % error |
/// std % error, one row per named report.
inline std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t name_width = 4;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %10s  %16s  %16s\n", static_cast<int>(name_width), "Data", "R^2",
                "Mean Abs % Err", "Std % Err");
  out << line;
  out << std::string(name_width + 2 + 10 + 2 + 16 + 2 + 16, '-') << '\n';
  for (const auto& [name, r] : rows) {
    std::snprintf(line, sizeof line, "%-*s  %10.5f  %16.5f  %16.5f\n", static_cast<int>(name_width), name.c_str(),
                  r.r_squared, r.mu_e, r.sigma_e);
    out << line;
  }
  return out.str();
}

}  // namespace synchrony
