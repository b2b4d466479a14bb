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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails, except those listed with
// --known-unattainable (which still print FAIL).
//
//   synchrony_acceptance [--paper-scale] [--only 1,3] [--out DIR]
//                        [--known-unattainable 1]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synchrony/synchrony.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace synchrony;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  /// Serialized result used by the determinism criterion.
  std::string fingerprint;
};

struct Options {
  bool paper_scale = false;
  fs::path out = "acceptance_out";
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// 1. Covariance recovery

struct RecoveryScale {
  std::size_t train_pairs, test_pairs, len;
  double mu_e_threshold, runtime_limit_s;
  ExperimentConfig config;
};

RecoveryScale desk_scale() {
  RecoveryScale s{30, 20, 500, 0.05, 30 * 60, {}};
  auto& c = s.config;
  c.window_length = 100;
  c.stride = 1;
  c.train_fraction = 0.8;
  c.seed = 101;
  c.train.n_lstms = 6;
  c.train.hidden_size = 16;
  c.train.lookback = 30;
  c.train.epochs = 20;
  c.train.batch_size = 64;
  c.train.windows_per_epoch = 4000;
  c.train.optimizer.learning_rate = 2e-3;
  return s;
}

RecoveryScale paper_scale() {
  RecoveryScale s{100, 100, 1000, 0.02, 4 * 3600, {}};
  auto& c = s.config;
  c.window_length = 100;
  c.stride = 1;
  c.train_fraction = 0.8;
  c.seed = 101;
  c.train.n_lstms = 6;
  c.train.hidden_size = 32;
  c.train.lookback = 100;
  c.train.epochs = 30;
  c.train.batch_size = 64;
  c.train.windows_per_epoch = 8000;
  c.train.optimizer.learning_rate = 1e-3;
  return s;
}

std::vector<SampleRef> pair_samples(std::size_t n, std::size_t len, std::uint64_t seed, const std::string& prefix) {
  std::vector<SampleRef> out;
  const auto pairs = gen_dataset(n, len, {0.1, 0.9}, seed);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back(std::make_shared<const InteractionSample>(
        pair_sample(pairs[i].pair, pairs[i].label, prefix + std::to_string(i))));
  }
  return out;
}

/// Mean |err|/rho of an efficient unbiased estimator of the correlation of a
/// white unit-variance pair, sd (1 - rho^2)/sqrt(T), averaged over
/// rho ~ U[0.1, 0.9].
double cramer_rao_mape(std::size_t len) {
  const int steps = 8000;
  double sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double rho = 0.1 + 0.8 * (i + 0.5) / steps;
    sum += std::sqrt(2.0 / std::numbers::pi) * (1.0 - rho * rho) / (rho * std::sqrt(static_cast<double>(len)));
  }
  return sum / steps;
}

double pearson(const TimeSeries& x, const TimeSeries& y) {
  return cross_cov(x, y, 0) / std::sqrt(cross_cov(x, x, 0) * cross_cov(y, y, 0));
}

Outcome covariance_recovery(const Options& opt) {
  const auto scale = opt.paper_scale ? paper_scale() : desk_scale();
  const auto start = std::chrono::steady_clock::now();
  const auto train = pair_samples(scale.train_pairs, scale.len, 11, "train");
  const auto test = pair_samples(scale.test_pairs, scale.len, 12, "test");
  const auto windows = build_windowed_dataset(train, scale.config.window_length, scale.config.stride);
  const auto result = train_experiment(windows, scale.config);
  const auto report = evaluate_samples(result.model, test, scale.config);
  const double elapsed = seconds_since(start);

  std::vector<double> truth, oracle;
  for (const auto& s : test) {
    truth.push_back(s->label());
    oracle.push_back(pearson(s->channel(0, 0), s->channel(1, 0)));
  }
  const double oracle_mape = mean_abs_percent_error(truth, oracle);
  const double bound = cramer_rao_mape(scale.len);

  Outcome o;
  o.pass = report.mu_e <= scale.mu_e_threshold && elapsed <= scale.runtime_limit_s;
  o.detail = std::string(opt.paper_scale ? "paper scale" : "desk scale") + ": mu_e=" + fmt("%.4f", report.mu_e) +
             " (threshold " + fmt("%.2f", scale.mu_e_threshold) + "), R^2=" + fmt("%.3f", report.r_squared) +
             ", best epoch " + std::to_string(result.best_epoch) + ", " + fmt("%.0f", elapsed) +
             " s; reference: unbiased-estimator Cramer-Rao MAPE " + fmt("%.4f", bound) + " at len " + std::to_string(scale.len) +
             ", sample-correlation oracle on the same test pairs " + fmt("%.4f", oracle_mape);
  o.fingerprint = to_json(report).dump();
  write_text(opt.out / (opt.paper_scale ? "c1_paper_report.json" : "c1_desk_report.json"), to_json(report).dump(2));
  return o;
}

// ---------------------------------------------------------------------------
// 2. Generator fidelity

Outcome generator_fidelity(const Options&) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t pairs = 5000, len = 1000;
  bool ok = true;
  std::ostringstream detail, print;
  print.precision(17);
  for (double phi : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    std::vector<TimeSeries> xs, ys;
    xs.reserve(pairs);
    ys.reserve(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
      auto p = scalar_pair_gen({1.0, 1.0, phi, len}, derive_seed(2024, static_cast<std::uint64_t>(phi * 1000) + 7 * i));
      xs.push_back(std::move(p.x));
      ys.push_back(std::move(p.y));
    }
    const auto est = ensemble_cross_cov(xs, ys, 0);
    const double z = (est.mean - phi) / est.standard_error;
    ok = ok && std::abs(z) <= 3.0;
    detail << " phi=" << phi << ": " << fmt("%.5f", est.mean) << " (z=" << fmt("%+.2f", z) << ")";
    print << est.mean << ' ' << est.standard_error << ';';
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed <= 120.0;
  return {ok, "5000 pairs x len 1000 per value," + detail.str() + ", " + fmt("%.1f", elapsed) + " s", print.str()};
}

// ---------------------------------------------------------------------------
// 3. Gradient correctness

Outcome gradient_correctness(const Options&) {
  const auto start = std::chrono::steady_clock::now();
  const ModelShape shape{.n_lstms = 2, .input_size = 2, .hidden_size = 3, .lookback = 5};
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t m = 0; m < 20; ++m) {
    auto model = SynchronyModel::xavier(shape, derive_seed(77, m));
    model.head_bias() = 2.0;  // keeps the head away from the ReLU kink
    std::vector<Window> windows;
    std::vector<double> labels;
    for (std::size_t b = 0; b < 4; ++b) {
      const auto s = testing::random_sample(8, 2, 1, derive_seed(derive_seed(78, m), b), 0.2 + 0.2 * b);
      windows.emplace_back(s, 0, 8);
      labels.push_back(s->label());
    }
    const auto inputs = gather_inputs(windows, shape);
    const auto analytic = backward(model, inputs, labels);
    const auto numeric = testing::numeric_gradient(model, inputs, labels, 1e-5);
    worst = std::max(worst, testing::max_relative_error(analytic.gradient, numeric));
    checked += analytic.gradient.size();
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-4 && elapsed <= 60.0,
          "20 models, " + std::to_string(checked) + " parameters, max relative error " + fmt("%.2e", worst) + ", " +
              fmt("%.2f", elapsed) + " s",
          {}};
}

// ---------------------------------------------------------------------------
// 4. Metric oracles

Outcome metric_oracles(const Options&) {
  using V = std::vector<double>;
  struct Case {
    const char* name;
    double got, want;
  };
  const std::vector<Case> cases{
      {"mape identity", mean_abs_percent_error(V{1, 2, 3}, V{1, 2, 3}), 0.0},
      {"mape [2]/[1]", mean_abs_percent_error(V{2}, V{1}), 0.5},
      {"mape [4,2]/[3,3]", mean_abs_percent_error(V{4, 2}, V{3, 3}), 0.375},
      {"std identity", std_percent_error(V{1, 2, 3}, V{1, 2, 3}), 0.0},
      {"std [4,2]/[3,3]", std_percent_error(V{4, 2}, V{3, 3}), 0.125},
      {"std equal errors", std_percent_error(V{1, 2, 4}, V{0.5, 1, 2}), 0.0},
      {"r2 identity", r_squared(V{1, 2, 3}, V{1, 2, 3}), 1.0},
      {"r2 mean predictor", r_squared(V{1, 2, 6}, V{3, 3, 3}), 0.0},
      {"r2 [1,2,3]/[1,2,4]", r_squared(V{1, 2, 3}, V{1, 2, 4}), 0.5},
  };
  bool ok = true;
  std::string failures;
  for (const auto& c : cases) {
    if (std::abs(c.got - c.want) > 1e-12) {
      ok = false;
      failures += std::string(" ") + c.name;
    }
  }
  auto throws = [](auto&& f) {
    try {
      f();
    } catch (const Error&) {
      return true;
    }
    return false;
  };
  ok = ok && throws([] { mean_abs_percent_error(V{0, 1}, V{1, 1}); });
  ok = ok && throws([] { r_squared(V{2, 2}, V{1, 3}); });
  const auto perfect = build_report({{"a", 1, 1}, {"b", 2, 2}});
  ok = ok && perfect.mu_e == 0.0 && perfect.sigma_e == 0.0 && perfect.r_squared == 1.0;
  return {ok, std::to_string(cases.size()) + " examples to 1e-12 plus error cases" + failures, {}};
}

// ---------------------------------------------------------------------------
// 5. Permutation-baseline separation

ExperimentConfig separation_config() {
  ExperimentConfig c;
  c.window_length = 30;
  c.stride = 1;
  c.n_folds = 5;
  c.seed = 5;
  c.train.n_lstms = 10;
  c.train.hidden_size = 16;
  c.train.lookback = 30;
  c.train.epochs = 10;
  c.train.batch_size = 64;
  c.train.windows_per_epoch = 2000;
  c.train.optimizer.learning_rate = 2e-3;
  return c;
}

Outcome baseline_separation(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  GroupSpec spec;
  spec.members = 3;
  spec.channels = 3;
  spec.len = 400;
  spec.coupling_range = {0.1, 0.9};
  const auto samples = share(gen_group_dataset(30, spec, 11));
  const auto config = separation_config();
  const auto cv = kfold_cv(samples, config);
  const auto base = permutation_baseline(samples, cv.folds, config, 9);
  const double elapsed = seconds_since(start);
  write_text(opt.out / "c5_true_report.json", to_json(cv.report).dump(2));
  write_text(opt.out / "c5_baseline_report.json", to_json(base).dump(2));
  write_text(opt.out / "c5_table.txt", format_table({{"True Groups", cv.report}, {"Randomized", base}}));
  Outcome o;
  o.pass = cv.report.r_squared >= 0.8 && base.r_squared <= 0.3 && cv.report.mu_e < base.mu_e && elapsed <= 7200.0;
  o.detail = "true R^2=" + fmt("%.3f", cv.report.r_squared) + " mu_e=" + fmt("%.3f", cv.report.mu_e) +
             "; chimeric R^2=" + fmt("%.3f", base.r_squared) + " mu_e=" + fmt("%.3f", base.mu_e) + ", " +
             fmt("%.0f", elapsed) + " s";
  o.fingerprint = to_json(cv.report).dump() + to_json(base).dump();
  return o;
}

// ---------------------------------------------------------------------------
// 6. LSTM-count sweep

Outcome lstm_sweep(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto train = pair_samples(30, 500, 11, "train");
  auto config = desk_scale().config;
  config.train.epochs = 5;
  config.train.windows_per_epoch = 2000;
  const auto windows = build_windowed_dataset(train, config.window_length, config.stride);
  std::vector<std::size_t> counts{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto points = sweep_lstm_count(windows, counts, config);
  const auto csv = sweep_csv(points);
  write_text(opt.out / "c6_sweep.csv", csv);
  const double elapsed = seconds_since(start);

  const auto rows = std::count(csv.begin(), csv.end(), '\n') - 1;
  double best = points.front().val_error, worst = best;
  std::vector<double> gaps;
  for (const auto& p : points) {
    best = std::min(best, p.val_error);
    worst = std::max(worst, p.val_error);
    gaps.push_back(p.val_error - p.train_error);
  }
  std::sort(gaps.begin(), gaps.end());
  const double median_gap = gaps[gaps.size() / 2];
  const bool small_difference = worst - best <= 3.0 * best;
  Outcome o;
  o.pass = rows == 9;
  o.detail = std::to_string(rows) + "-row CSV, best val MSE " + fmt("%.5f", best) + ", spread " +
             fmt("%.5f", worst - best) + (small_difference ? " (<= 3x best: claim holds)" : " (> 3x best: CLAIM FLAGGED)") +
             ", median(val - train) " + fmt("%+.5f", median_gap) + ", " + fmt("%.0f", elapsed) + " s";
  o.fingerprint = csv;
  return o;
}

// ---------------------------------------------------------------------------
// 7. Annotation aggregation

std::vector<AnnotationSet> matrix(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& rows) {
  std::vector<AnnotationSet> sets;
  for (std::size_t g = 0; g < rows.size(); ++g) {
    AnnotationSet s{"g" + std::to_string(g), {}};
    for (std::size_t l = 0; l < ids.size(); ++l) s.scores[ids[l]] = rows[g][l];
    sets.push_back(s);
  }
  return sets;
}

/// Independent leave-one-out oracle: total population variance of each
/// group's scores with labeler `skip` removed.
double loo_oracle(const std::vector<std::vector<double>>& rows, std::size_t skip) {
  double total = 0.0;
  for (const auto& row : rows) {
    double n = 0, s = 0, ss = 0;
    for (std::size_t l = 0; l < row.size(); ++l) {
      if (l == skip) continue;
      n += 1;
      s += row[l];
      ss += row[l] * row[l];
    }
    total += ss / n - (s / n) * (s / n);
  }
  return total;
}

Outcome annotation_aggregation(const Options&) {
  std::vector<std::string> failures;
  {
    const auto r = aggregate_annotations(matrix({"L1", "L2", "L3"}, {{4, 4, 4}, {2, 2, 2}}));
    if (r.removed_labeler != "L1" || r.labels[0].second != 4.0 || r.labels[1].second != 2.0 || !r.flagged.empty()) {
      failures.push_back("unanimous");
    }
  }
  {
    const std::vector<std::vector<double>> rows{{1, 1, 5, 1}, {1, 1, 5, 1}, {1, 1, 5, 1}};
    const std::vector<std::string> ids{"A", "B", "C", "D"};
    const auto r = aggregate_annotations(matrix(ids, rows));
    std::size_t oracle_choice = 0;
    for (std::size_t l = 1; l < ids.size(); ++l)
      if (loo_oracle(rows, l) < loo_oracle(rows, oracle_choice)) oracle_choice = l;
    bool labels_ok = true;
    for (const auto& [g, v] : r.labels) labels_ok = labels_ok && v == 1.0;
    bool variances_ok = true;
    for (std::size_t l = 0; l < ids.size(); ++l)
      variances_ok = variances_ok && std::abs(r.leave_one_out_variance.at(ids[l]) - loo_oracle(rows, l)) < 1e-12;
    if (r.removed_labeler != "C" || ids[oracle_choice] != "C" || !labels_ok || !variances_ok) failures.push_back("outlier");
  }
  {
    const auto r = aggregate_annotations(matrix({"A", "B", "C"}, {{3, 3, 3}, {1, 2, 3}, {5, 4, 5}}), 0.0);
    if (r.flagged != std::vector<std::string>{"g1", "g2"}) failures.push_back("threshold 0");
  }
  {
    auto sets = matrix({"A", "B", "C"}, {{3, 3, 3}});
    sets[0].scores.erase("C");
    sets.push_back({"g9", {{"A", 1}, {"B", 1}, {"C", 1}}});
    try {
      aggregate_annotations(sets);
      failures.push_back("incomplete matrix accepted");
    } catch (const Error&) {
    }
  }
  std::string detail = "unanimous, outlier-removal (leave-one-out oracle), threshold-0 and incomplete-matrix cases";
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail, {}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synchrony acceptance suite"};
  Options opt;
  std::string only, known;
  app.add_flag("--paper-scale", opt.paper_scale, "Run criterion 1 at paper scale (hours)");
  app.add_option("--out", opt.out, "Directory for acceptance artifacts");
  app.add_option("--only", only, "Comma-separated criteria to run");
  app.add_option("--known-unattainable", known, "Comma-separated criteria whose failure is documented");
  CLI11_PARSE(app, argc, argv);

  auto parse_set = [](const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.insert(std::stoi(item));
    }
    return out;
  };
  const auto selected = parse_set(only);
  const auto expected_failures = parse_set(known);
  fs::create_directories(opt.out);

  using Criterion = std::function<Outcome(const Options&)>;
  const std::vector<std::pair<std::string, Criterion>> criteria{
      {"synthetic covariance recovery", covariance_recovery},
      {"generator statistical fidelity", generator_fidelity},
      {"gradient correctness", gradient_correctness},
      {"metric oracles", metric_oracles},
      {"permutation-baseline separation", baseline_separation},
      {"LSTM-count sweep", lstm_sweep},
      {"annotation aggregation", annotation_aggregation},
  };
  auto wanted = [&](int id) { return selected.empty() || selected.contains(id); };

  std::map<int, Outcome> outcomes;
  std::set<int> failed;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << name << "): " << o.detail;
    if (!o.pass && expected_failures.contains(id)) std::cout << " [documented as unattainable]";
    std::cout << std::endl;
    if (!o.pass) failed.insert(id);
  };

  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted(id)) continue;
    outcomes[id] = criteria[i].second(opt);
    report(id, criteria[i].first, outcomes[id]);
  }

  if (wanted(8)) {
    std::string detail;
    bool ok = true;
    for (int id : {1, 2, 5, 6}) {
      if (!outcomes.contains(id)) {
        outcomes[id] = criteria[static_cast<std::size_t>(id - 1)].second(opt);
      }
      const auto again = criteria[static_cast<std::size_t>(id - 1)].second(opt);
      const bool same = again.fingerprint == outcomes[id].fingerprint && !again.fingerprint.empty();
      ok = ok && same;
      detail += " c" + std::to_string(id) + (same ? " identical" : " DIFFERS");
    }
    report(8, "determinism", {ok, "re-run with identical seeds:" + detail, {}});
  }

  const bool as_expected = std::includes(expected_failures.begin(), expected_failures.end(), failed.begin(), failed.end());
  std::cout << (failed.empty() ? "all criteria passed" : std::to_string(failed.size()) + " criterion/criteria failed");
  if (!failed.empty() && as_expected) std::cout << " (all failures are documented as unattainable)";
  std::cout << std::endl;
  return as_expected ? 0 : 1;
}
