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

// Experiment orchestration. Every split in this file is made at the group
// level: all windows cut from one group land on the same side.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synchrony/error.hpp"
#include "synchrony/metrics.hpp"
#include "synchrony/model.hpp"
#include "synchrony/optimizer.hpp"
#include "synchrony/random.hpp"
#include "synchrony/signal.hpp"

namespace synchrony {

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::size_t hidden_size = 32;
  std::size_t n_lstms = 6;
  std::size_t lookback = 30;
  CellActivation activation = CellActivation::kTanh;
  double forget_bias = 1.0;
  /// Training windows drawn per epoch (without replacement); 0 uses all.
  std::size_t windows_per_epoch = 0;
};

enum class Aggregation { kMean, kMedian };

inline std::string to_string(Aggregation a) { return a == Aggregation::kMean ? "mean" : "median"; }

inline Aggregation aggregation_from_string(const std::string& s) {
  if (s == "mean") return Aggregation::kMean;
  if (s == "median") return Aggregation::kMedian;
  throw Error("unknown aggregation rule '" + s + "'");
}

enum class FoldMode {
  kBalanced,   // near-equal partition of all groups into n_folds parts
  kFixedTest,  // every fold tests on `fold_test_groups` consecutive groups of a shuffled order (wrapping)
};

inline std::string to_string(FoldMode m) { return m == FoldMode::kBalanced ? "balanced" : "fixed-test"; }

inline FoldMode fold_mode_from_string(const std::string& s) {
  if (s == "balanced") return FoldMode::kBalanced;
  if (s == "fixed-test") return FoldMode::kFixedTest;
  throw Error("unknown fold mode '" + s + "'");
}

struct ExperimentConfig {
  std::size_t window_length = 100;
  std::size_t stride = 1;
  double train_fraction = 0.8;
  std::size_t n_folds = 5;
  FoldMode fold_mode = FoldMode::kBalanced;
  std::size_t fold_test_groups = 8;
  TrainConfig train;
  std::uint64_t seed = 0;
  Aggregation aggregation = Aggregation::kMean;
  PercentErrorMode percent_error = PercentErrorMode::kAbsolute;
};

inline void validate(const ExperimentConfig& c) {
  detail::require(c.window_length > 0 && c.stride > 0, "window length and stride must be positive");
  detail::require(c.train_fraction > 0.0 && c.train_fraction < 1.0, "train_fraction must lie in (0, 1)");
  detail::require(c.n_folds >= 2, "n_folds must be >= 2");
  detail::require(c.train.lookback > 0 && c.train.lookback <= c.window_length, "lookback must be in [1, window_length]");
  detail::require(c.train.batch_size > 0 && c.train.hidden_size > 0 && c.train.n_lstms > 0,
                  "batch size, hidden size and LSTM count must be positive");
  detail::require(c.train.optimizer.learning_rate > 0.0, "learning rate must be positive");
}

// ---------------------------------------------------------------------------
// Datasets and splits

inline std::vector<SampleRef> share(std::vector<InteractionSample> samples) {
  std::vector<SampleRef> out;
  out.reserve(samples.size());
  for (auto& s : samples) out.push_back(std::make_shared<const InteractionSample>(std::move(s)));
  return out;
}

/// All windows of all samples, in sample order. Windows keep their group.
inline std::vector<Window> build_windowed_dataset(std::span<const SampleRef> samples, std::size_t window_length,
                                                  std::size_t stride) {
  std::vector<Window> out;
  if (samples.empty()) return out;
  const std::size_t k = samples.front()->n_participants();
  const std::size_t c = samples.front()->n_channels();
  for (const auto& s : samples) {
    if (s->n_participants() != k || s->n_channels() != c) throw Error("samples differ in participant or channel count");
    auto w = extract_windows(s, window_length, stride);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

/// Distinct group ids in order of first appearance.
inline std::vector<std::string> group_ids(std::span<const Window> windows) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& w : windows) {
    if (seen.insert(w.group_id()).second) ids.push_back(w.group_id());
  }
  return ids;
}

inline std::vector<std::string> group_ids(std::span<const SampleRef> samples) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& s : samples) {
    if (seen.insert(s->group_id()).second) ids.push_back(s->group_id());
  }
  return ids;
}

struct GroupSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};

/// Seeded shuffle of the groups; the first round(f*G) (clamped to [1, G-1])
/// train, the rest validate.
inline GroupSplit split_groups(std::vector<std::string> ids, double train_fraction, std::uint64_t seed) {
  if (ids.size() < 2) throw Error("need at least 2 groups to split");
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto g = static_cast<double>(ids.size());
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * g));
  n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
  GroupSplit split;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  return split;
}

inline std::vector<Window> select_groups(std::span<const Window> windows, const std::vector<std::string>& ids) {
  const std::set<std::string> keep(ids.begin(), ids.end());
  std::vector<Window> out;
  for (const auto& w : windows) {
    if (keep.contains(w.group_id())) out.push_back(w);
  }
  return out;
}

inline std::vector<SampleRef> select_groups(std::span<const SampleRef> samples, const std::vector<std::string>& ids) {
  const std::set<std::string> keep(ids.begin(), ids.end());
  std::vector<SampleRef> out;
  for (const auto& s : samples) {
    if (keep.contains(s->group_id())) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch;
  /// Epoch 0 is the untrained model evaluated on all training windows; later
  /// epochs report the mean minibatch loss seen during the epoch.
  double train_mse;
  double val_mse;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  SynchronyModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  GroupSplit split;
};

inline ModelShape model_shape(const TrainConfig& c, std::size_t input_size) {
  return {c.n_lstms, input_size, c.hidden_size, c.lookback, c.activation};
}

inline double evaluate_mse(const SynchronyModel& model, std::span<const Window> windows) {
  const auto preds = predict_windows(model, windows);
  std::vector<double> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) labels.push_back(w.label());
  return mse_loss(preds, labels);
}

/// Minibatch training on `train`, early-stopping selection on `validation`.
/// Returns the parameters of the epoch with the lowest validation MSE.
inline TrainResult train_on(std::span<const Window> train, std::span<const Window> validation,
                            const TrainConfig& config) {
  detail::require(!train.empty() && !validation.empty(), "training and validation sets must be non-empty");
  const ModelShape shape = model_shape(config, train.front().frame_width());
  SynchronyModel model = SynchronyModel::xavier(shape, derive_seed(config.seed, 0), config.forget_bias);
  Optimizer optimizer(config.optimizer);

  TrainResult result{model, {}, 0, {}};
  double best = evaluate_mse(model, validation);
  result.history.push_back({0, evaluate_mse(model, train), best});

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t per_epoch =
      config.windows_per_epoch == 0 ? train.size() : std::min(config.windows_per_epoch, train.size());
  std::vector<Window> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < per_epoch; begin += config.batch_size) {
      const std::size_t end = std::min(per_epoch, begin + config.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train[order[i]]);
      auto lg = backward(model, batch);
      optimizer.step(model, lg.gradient);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      seen += batch.size();
    }
    const double val = evaluate_mse(model, validation);
    result.history.push_back({epoch, loss_sum / static_cast<double>(seen), val});
    if (val < best) {
      best = val;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

/// Group-level train/validation split followed by train_on.
inline TrainResult train_experiment(std::span<const Window> dataset, const ExperimentConfig& config) {
  validate(config);
  if (dataset.empty()) throw Error("empty dataset");
  auto ids = group_ids(dataset);
  if (ids.size() < 2) throw Error("need at least 2 groups to train");
  GroupSplit split = split_groups(ids, config.train_fraction, derive_seed(config.seed, 1));
  const auto train = select_groups(dataset, split.train);
  const auto validation = select_groups(dataset, split.validation);
  TrainConfig tc = config.train;
  tc.seed = derive_seed(config.seed, 2);
  auto result = train_on(train, validation, tc);
  result.split = std::move(split);
  return result;
}

// ---------------------------------------------------------------------------
// Signal-level prediction

inline double aggregate(std::vector<double> values, Aggregation rule) {
  detail::require(!values.empty(), "nothing to aggregate");
  if (rule == Aggregation::kMean) {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Predictor over windows; the default is the trained model.
using WindowPredictor = std::function<std::vector<double>(std::span<const Window>)>;

inline WindowPredictor model_predictor(const SynchronyModel& model) {
  return [&model](std::span<const Window> w) { return predict_windows(model, w); };
}

inline double predict_sample(const WindowPredictor& predictor, const SampleRef& sample, std::size_t window_length,
                             std::size_t stride, Aggregation rule) {
  const auto windows = extract_windows(sample, window_length, stride);
  return aggregate(predictor(windows), rule);
}

inline double predict_sample(const SynchronyModel& model, const SampleRef& sample, std::size_t window_length,
                             std::size_t stride, Aggregation rule) {
  return predict_sample(model_predictor(model), sample, window_length, stride, rule);
}

inline std::vector<GroupPrediction> predict_groups(const WindowPredictor& predictor, std::span<const SampleRef> samples,
                                                   const ExperimentConfig& config) {
  std::vector<GroupPrediction> out;
  for (const auto& s : samples) {
    out.push_back({s->group_id(), s->label(),
                   predict_sample(predictor, s, config.window_length, config.stride, config.aggregation)});
  }
  return out;
}

inline EvalReport evaluate_samples(const SynchronyModel& model, std::span<const SampleRef> samples,
                                   const ExperimentConfig& config) {
  return build_report(predict_groups(model_predictor(model), samples, config), config.percent_error);
}

// ---------------------------------------------------------------------------
// Cross-validation

/// Test-group sets for each fold over the seeded shuffle of `ids`.
inline std::vector<std::vector<std::string>> assign_folds(std::vector<std::string> ids, const ExperimentConfig& config) {
  if (config.n_folds < 2) throw Error("n_folds must be >= 2");
  if (config.n_folds > ids.size()) throw Error("n_folds exceeds the number of groups");
  Rng rng(derive_seed(config.seed, 3));
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::vector<std::string>> folds(config.n_folds);
  if (config.fold_mode == FoldMode::kBalanced) {
    const std::size_t base = ids.size() / config.n_folds;
    const std::size_t extra = ids.size() % config.n_folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < config.n_folds; ++f) {
      const std::size_t size = base + (f < extra ? 1 : 0);
      folds[f].assign(ids.begin() + static_cast<std::ptrdiff_t>(pos), ids.begin() + static_cast<std::ptrdiff_t>(pos + size));
      pos += size;
    }
  } else {
    detail::require(config.fold_test_groups >= 1 && config.fold_test_groups < ids.size(),
                    "fold_test_groups must be in [1, groups - 1]");
    for (std::size_t f = 0; f < config.n_folds; ++f) {
      for (std::size_t j = 0; j < config.fold_test_groups; ++j) {
        folds[f].push_back(ids[(f * config.fold_test_groups + j) % ids.size()]);
      }
    }
  }
  return folds;
}

struct FoldResult {
  std::size_t fold;
  std::shared_ptr<const SynchronyModel> model;
  std::vector<std::string> train_groups;
  std::vector<std::string> test_groups;
  std::vector<GroupPrediction> predictions;
  std::vector<EpochRecord> history;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  EvalReport report;
};

/// Trains one model per fold from scratch. `trainer` defaults to
/// train_experiment; tests may inject their own.
using FoldTrainer = std::function<TrainResult(std::span<const Window>, const ExperimentConfig&)>;
using PredictorFactory = std::function<WindowPredictor(const SynchronyModel&)>;

inline CrossValidation kfold_cv(std::span<const SampleRef> samples, const ExperimentConfig& config,
                                const FoldTrainer& trainer = train_experiment,
                                const PredictorFactory& make_predictor = model_predictor) {
  validate(config);
  const auto ids = group_ids(samples);
  const auto fold_tests = assign_folds(ids, config);
  CrossValidation cv;
  std::vector<GroupPrediction> pooled;
  for (std::size_t f = 0; f < fold_tests.size(); ++f) {
    const std::set<std::string> test(fold_tests[f].begin(), fold_tests[f].end());
    std::vector<std::string> train_ids;
    for (const auto& id : ids) {
      if (!test.contains(id)) train_ids.push_back(id);
    }
    const auto train_samples = select_groups(samples, train_ids);
    const auto test_samples = select_groups(samples, fold_tests[f]);
    const auto windows = build_windowed_dataset(train_samples, config.window_length, config.stride);
    ExperimentConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, 100 + f);
    auto trained = trainer(windows, fold_config);
    auto model = std::make_shared<const SynchronyModel>(std::move(trained.model));
    FoldResult fr{f, model, train_ids, fold_tests[f],
                  predict_groups(make_predictor(*model), test_samples, config), std::move(trained.history)};
    pooled.insert(pooled.end(), fr.predictions.begin(), fr.predictions.end());
    cv.folds.push_back(std::move(fr));
  }
  cv.report = build_report(std::move(pooled), config.percent_error);
  return cv;
}

// ---------------------------------------------------------------------------
// Permutation baseline

struct Chimera {
  InteractionSample sample;
  std::string source_group;
  std::size_t kept_member;
  /// (group id, member index) supplying each replaced position, in
  /// participant order, skipping the kept member.
  std::vector<std::pair<std::string, std::size_t>> donors;
};

/// Keeps one uniformly chosen member of `source` and fills every other
/// position with a uniformly chosen member of a distinct donor group. The
/// chimera carries the source group's label.
inline Chimera make_chimera(std::span<const SampleRef> samples, std::size_t source, Rng& rng) {
  const auto& src = *samples[source];
  const std::size_t k = src.n_participants();
  if (samples.size() < k) throw Error("permutation baseline needs at least as many groups as members per group");
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i != source && samples[i]->group_id() != src.group_id()) others.push_back(i);
  }
  if (others.size() < k - 1) throw Error("not enough distinct donor groups");
  const std::size_t kept = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
  // Partial Fisher-Yates: the first k-1 entries become the donors.
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, others.size() - 1)(rng);
    std::swap(others[i], others[j]);
  }
  Chimera chimera{src, src.group_id(), kept, {}};
  std::vector<ChannelSet> participants;
  std::size_t next_donor = 0;
  for (std::size_t p = 0; p < k; ++p) {
    if (p == kept) {
      participants.push_back(src.participants()[p]);
      continue;
    }
    const auto& donor = *samples[others[next_donor++]];
    if (donor.n_channels() != src.n_channels() || donor.length() != src.length()) {
      throw Error("donor group '" + donor.group_id() + "' has incompatible dimensions");
    }
    const std::size_t member = std::uniform_int_distribution<std::size_t>(0, donor.n_participants() - 1)(rng);
    participants.push_back(donor.participants()[member]);
    chimera.donors.emplace_back(donor.group_id(), member);
  }
  chimera.sample = InteractionSample(std::move(participants), src.label(), "chimera:" + src.group_id());
  return chimera;
}

/// Scores each fold's model on chimeras of that fold's test groups against
/// the original groups' labels.
inline EvalReport permutation_baseline(std::span<const SampleRef> samples, const std::vector<FoldResult>& folds,
                                       const ExperimentConfig& config, std::uint64_t seed) {
  if (group_ids(samples).size() < 3) throw Error("permutation baseline needs at least 3 groups");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < samples.size(); ++i) index.emplace(samples[i]->group_id(), i);
  std::vector<GroupPrediction> pooled;
  for (const auto& fold : folds) {
    detail::require(fold.model != nullptr, "fold has no trained model");
    for (std::size_t j = 0; j < fold.test_groups.size(); ++j) {
      const auto it = index.find(fold.test_groups[j]);
      if (it == index.end()) throw Error("unknown test group '" + fold.test_groups[j] + "'");
      Rng rng(derive_seed(derive_seed(seed, fold.fold), j));
      auto chimera = make_chimera(samples, it->second, rng);
      const auto ref = std::make_shared<const InteractionSample>(std::move(chimera.sample));
      const double y_hat = predict_sample(*fold.model, ref, config.window_length, config.stride, config.aggregation);
      pooled.push_back({ref->group_id(), samples[it->second]->label(), y_hat});
    }
  }
  return build_report(std::move(pooled), config.percent_error);
}

// ---------------------------------------------------------------------------
// LSTM-count sweep

struct SweepPoint {
  std::size_t count;
  double train_error;
  double val_error;

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

/// One experiment per LSTM count on the same group split; records the lowest
/// training and validation MSE reached over the trained epochs.
inline std::vector<SweepPoint> sweep_lstm_count(std::span<const Window> dataset, const std::vector<std::size_t>& counts,
                                                const ExperimentConfig& config) {
  if (counts.empty()) throw Error("sweep needs at least one LSTM count");
  std::vector<SweepPoint> out;
  for (std::size_t count : counts) {
    detail::require(count > 0, "LSTM count must be positive");
    ExperimentConfig c = config;
    c.train.n_lstms = count;
    const auto result = train_experiment(dataset, c);
    double best_train = std::numeric_limits<double>::infinity();
    double best_val = std::numeric_limits<double>::infinity();
    for (const auto& r : result.history) {
      if (r.epoch == 0 && result.history.size() > 1) continue;
      best_train = std::min(best_train, r.train_mse);
      best_val = std::min(best_val, r.val_mse);
    }
    out.push_back({count, best_train, best_val});
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "count,train_error,val_error\n";
  char line[128];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", p.count, p.train_error, p.val_error);
    out += line;
  }
  return out;
}

}  // namespace synchrony
