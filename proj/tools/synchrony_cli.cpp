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

// synchrony: command-line driver for data generation, training, evaluation,
// cross-validation, the permutation baseline, the LSTM-count sweep, AU
// ingestion and annotation aggregation.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid arguments or spec.
// Every command writes into --out DIR and finishes with DIR/run_manifest.json.
// On failure, everything the command wrote is removed again.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synchrony/synchrony.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw synchrony::Error("cannot read '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError(std::string(flag) + " expects LO:HI");
  try {
    std::size_t used = 0;
    const double lo = std::stod(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("lo");
    const std::string hi_text = text.substr(colon + 1);
    const double hi = std::stod(hi_text, &used);
    if (used != hi_text.size()) throw std::invalid_argument("hi");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw UsageError(std::string(flag) + " expects numeric LO:HI, got '" + text + "'");
  }
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  try {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      const auto lo = std::stoul(text.substr(0, colon));
      const auto hi = std::stoul(text.substr(colon + 1));
      if (lo == 0 || hi < lo) throw UsageError("--counts range must satisfy 1 <= LO <= HI");
      for (auto c = lo; c <= hi; ++c) out.push_back(c);
      return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto c = std::stoul(item);
      if (c == 0) throw UsageError("LSTM counts must be positive");
      out.push_back(c);
    }
  } catch (const std::logic_error&) {
    throw UsageError("--counts expects LO:HI or a comma-separated list, got '" + text + "'");
  }
  if (out.empty()) throw UsageError("--counts is empty");
  return out;
}

/// Files written by a command; removed again if the command fails.
class OutputSet {
 public:
  void open(const fs::path& dir) {
    dir_ = dir;
    created_dir_ = !fs::exists(dir);
    fs::create_directories(dir);
  }

  fs::path file(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<fs::path>& files() const { return files_; }

  void rollback() noexcept {
    std::error_code ec;
    if (dir_.empty()) return;
    if (created_dir_) {
      fs::remove_all(dir_, ec);
      return;
    }
    for (const auto& f : files_) fs::remove(f, ec);
  }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  std::vector<fs::path> files_;
};

/// Shared state of one command invocation.
struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::string started_at = utc_now();
  json config = json::object();
  json inputs = json::array();
  json extra = json::object();
  OutputSet out;

  void add_input(const fs::path& p) { inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }

  void add_dataset_inputs(const fs::path& dir) {
    const auto manifest = synchrony::read_json(dir / "manifest.json");
    add_input(dir / "manifest.json");
    if (manifest.contains("pairs")) {
      for (const auto& p : manifest.at("pairs")) add_input(dir / p.at("file").get<std::string>());
    }
    if (manifest.contains("groups")) {
      for (const auto& g : manifest.at("groups"))
        for (const auto& f : g.at("participants")) add_input(dir / f.get<std::string>());
    }
  }

  /// Validates every output, then writes the run manifest.
  void finish() {
    json outputs = json::array();
    for (const auto& f : out.files()) {
      if (!fs::is_regular_file(f) || fs::file_size(f) == 0) throw synchrony::Error("output '" + f.string() + "' missing");
      if (f.extension() == ".json") (void)synchrony::read_json(f);
      outputs.push_back({{"path", f.string()}, {"sha256", sha256_file(f)}});
    }
    json manifest = {{"tool", "synchrony"},
                     {"version", kToolVersion},
                     {"command", command},
                     {"argv", argv},
                     {"config", config},
                     {"threads", synchrony::max_threads()},
                     {"inputs", inputs},
                     {"outputs", outputs},
                     {"started_at", started_at},
                     {"finished_at", utc_now()}};
    if (config.contains("seed")) manifest["seed"] = config.at("seed");
    for (const auto& [k, v] : extra.items()) manifest[k] = v;
    const auto path = out.file("run_manifest.json");
    synchrony::write_text(path, manifest.dump(2) + "\n");
    (void)synchrony::read_json(path);
  }
};

/// Config file contents: either a bare config object or a run manifest, in
/// which case its "config" member is used.
json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  json doc;
  try {
    doc = synchrony::read_json(path);
  } catch (const synchrony::Error& e) {
    throw UsageError(e.what());
  }
  if (doc.is_object() && doc.contains("tool") && doc.contains("config")) return doc.at("config");
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  return doc;
}

/// Removes `key` from `doc` and returns it, if present.
std::optional<json> take(json& doc, const std::string& key) {
  if (!doc.contains(key)) return std::nullopt;
  json v = doc.at(key);
  doc.erase(key);
  return v;
}

// ---------------------------------------------------------------------------
// Experiment flags shared by train / evaluate / kfold / baseline / sweep

struct ExperimentFlags {
  std::optional<std::size_t> window, stride, folds, fold_test_groups, epochs, batch, hidden, lstms, lookback,
      windows_per_epoch;
  std::optional<double> train_fraction, lr, clip, forget_bias;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> fold_mode, aggregation, optimizer, activation, percent_error;

  void attach(CLI::App* app) {
    app->add_option("--window", window, "Window length in frames");
    app->add_option("--stride", stride, "Window stride in frames");
    app->add_option("--train-fraction", train_fraction, "Fraction of groups used for training");
    app->add_option("--folds", folds, "Number of cross-validation folds");
    app->add_option("--fold-mode", fold_mode, "balanced | fixed-test");
    app->add_option("--fold-test-groups", fold_test_groups, "Test groups per fold in fixed-test mode");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--batch", batch, "Minibatch size");
    app->add_option("--hidden", hidden, "LSTM hidden size");
    app->add_option("--lstms", lstms, "Number of parallel LSTM networks");
    app->add_option("--lookback", lookback, "Trailing frames of each window fed to the LSTMs");
    app->add_option("--windows-per-epoch", windows_per_epoch, "Training windows drawn per epoch (0 = all)");
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--clip", clip, "Global gradient-norm clip (<= 0 disables)");
    app->add_option("--forget-bias", forget_bias, "Initial forget-gate bias");
    app->add_option("--optimizer", optimizer, "adam | sgd");
    app->add_option("--activation", activation, "Cell activation: tanh | relu");
    app->add_option("--aggregation", aggregation, "Window-to-signal aggregation: mean | median");
    app->add_option("--percent-error", percent_error, "Spread of percent errors: absolute | signed");
    app->add_option("--seed", seed, "Master seed");
  }

  json overrides() const {
    json j = json::object();
    json train = json::object();
    json opt = json::object();
    if (window) j["window_length"] = *window;
    if (stride) j["stride"] = *stride;
    if (train_fraction) j["train_fraction"] = *train_fraction;
    if (folds) j["n_folds"] = *folds;
    if (fold_mode) j["fold_mode"] = *fold_mode;
    if (fold_test_groups) j["fold_test_groups"] = *fold_test_groups;
    if (seed) j["seed"] = *seed;
    if (aggregation) j["aggregation"] = *aggregation;
    if (percent_error) j["percent_error"] = *percent_error;
    if (epochs) train["epochs"] = *epochs;
    if (batch) train["batch_size"] = *batch;
    if (hidden) train["hidden_size"] = *hidden;
    if (lstms) train["n_lstms"] = *lstms;
    if (lookback) train["lookback"] = *lookback;
    if (windows_per_epoch) train["windows_per_epoch"] = *windows_per_epoch;
    if (activation) train["activation"] = *activation;
    if (forget_bias) train["forget_bias"] = *forget_bias;
    if (optimizer) opt["kind"] = *optimizer;
    if (lr) opt["learning_rate"] = *lr;
    if (clip) opt["clip_norm"] = *clip;
    if (!opt.empty()) train["optimizer"] = opt;
    if (!train.empty()) j["train"] = train;
    return j;
  }
};

/// Defaults, then the config file, then flags. Invalid values are usage errors.
synchrony::ExperimentConfig resolve_experiment(const json& file_config, const ExperimentFlags& flags) {
  try {
    auto c = synchrony::experiment_config_from_json(file_config);
    synchrony::merge_json(flags.overrides(), c);
    synchrony::validate(c);
    return c;
  } catch (const synchrony::Error& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

std::vector<synchrony::SampleRef> load_samples(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("dataset directory '" + dir.string() + "' does not exist");
  return synchrony::share(synchrony::load_dataset(dir));
}

std::string predictions_csv(const std::vector<synchrony::GroupPrediction>& preds) {
  std::string s = "group_id,y,y_hat\n";
  for (const auto& p : preds) {
    s += p.group_id + "," + synchrony::csv::format_number(p.truth) + "," + synchrony::csv::format_number(p.predicted) +
         "\n";
  }
  return s;
}

std::string history_csv(const std::vector<synchrony::EpochRecord>& history) {
  std::string s = "epoch,train_mse,val_mse\n";
  for (const auto& h : history) {
    s += std::to_string(h.epoch) + "," + synchrony::csv::format_number(h.train_mse) + "," +
         synchrony::csv::format_number(h.val_mse) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Commands

struct DatagenFlags {
  std::optional<std::size_t> pairs, groups, len, members, channels;
  std::optional<std::string> preset, phi_range, coupling_range;
  std::optional<std::uint64_t> seed;
  bool paper_magnitude = false;
};

void cmd_datagen(Run& run, const json& file_config, const DatagenFlags& f) {
  json c = {{"mode", "pairs"},   {"n", 100},          {"len", 1000},        {"phi_range", {0.1, 0.9}},
            {"seed", 0},         {"inverse", "real"}, {"preset", "stationary"}, {"members", 3},
            {"channels", 1},     {"coupling_range", {0.1, 0.9}}};
  synchrony::detail::check_keys(file_config, {"mode", "n", "len", "phi_range", "seed", "inverse", "preset", "members",
                                              "channels", "coupling_range"},
                                "");
  c.update(file_config);
  const int modes = (f.pairs ? 1 : 0) + (f.groups ? 1 : 0) + (f.preset ? 1 : 0);
  if (modes > 1) throw UsageError("choose one of --pairs, --groups, --preset");
  if (f.pairs) c["mode"] = "pairs", c["n"] = *f.pairs;
  if (f.groups) c["mode"] = "groups", c["n"] = *f.groups;
  if (f.preset) c["mode"] = "preset", c["preset"] = *f.preset;
  if (f.len) c["len"] = *f.len;
  if (f.seed) c["seed"] = *f.seed;
  if (f.members) c["members"] = *f.members;
  if (f.channels) c["channels"] = *f.channels;
  if (f.phi_range) {
    const auto [lo, hi] = parse_range(*f.phi_range, "--phi-range");
    c["phi_range"] = {lo, hi};
  }
  if (f.coupling_range) {
    const auto [lo, hi] = parse_range(*f.coupling_range, "--coupling-range");
    c["coupling_range"] = {lo, hi};
  }
  if (f.paper_magnitude) c["inverse"] = "magnitude";
  if (c.value("mode", "") == "preset" && !f.len && !file_config.contains("len")) c["len"] = 100;
  run.config = c;

  const auto mode = c.at("mode").get<std::string>();
  const auto len = c.at("len").get<std::size_t>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  const auto inverse_name = c.at("inverse").get<std::string>();
  if (inverse_name != "real" && inverse_name != "magnitude") throw UsageError("inverse must be real or magnitude");
  const auto inverse = inverse_name == "real" ? synchrony::InverseMode::kRealPart : synchrony::InverseMode::kMagnitude;
  if (len < 2) throw UsageError("--len must be at least 2");

  json manifest = {{"version", synchrony::kDatasetVersion}, {"frame_rate_hz", synchrony::kDefaultFrameRateHz}};
  if (mode == "pairs" || mode == "preset") {
    std::vector<synchrony::LabeledPair> pairs;
    if (mode == "pairs") {
      const auto range = c.at("phi_range").get<std::pair<double, double>>();
      if (!(range.first <= range.second) || range.first < -1.0 || range.second > 1.0) {
        throw UsageError("invalid --phi-range: need -1 <= LO <= HI <= 1");
      }
      const auto n = c.at("n").get<std::size_t>();
      if (n == 0) throw UsageError("--pairs must be positive");
      pairs = synchrony::gen_dataset(n, len, range, seed, inverse);
    } else {
      synchrony::PresetKind kind;
      try {
        kind = synchrony::preset_kind_from_string(c.at("preset").get<std::string>());
      } catch (const synchrony::Error& e) {
        throw UsageError(e.what());
      }
      if (kind == synchrony::PresetKind::kShifted && len < 3) throw UsageError("--len too short for the shifted preset");
      auto spec = synchrony::preset_spec(kind, len);
      spec.inverse = inverse;
      auto pair = synchrony::spectral_pair_gen(spec, seed);
      pairs.push_back({pair, pair.phi12, seed});
    }
    manifest["kind"] = "pairs";
    manifest["pairs"] = json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "pair_%04zu.csv", i);
      synchrony::write_channels_csv(run.out.file(name), {"x", "y"}, {&pairs[i].pair.x, &pairs[i].pair.y});
      manifest["pairs"].push_back({{"file", name}, {"label", pairs[i].label}, {"seed", pairs[i].seed}});
    }
    std::cout << "wrote " << pairs.size() << " pair(s) to " << run.out.dir().string() << "\n";
  } else if (mode == "groups") {
    synchrony::GroupSpec spec;
    spec.members = c.at("members").get<std::size_t>();
    spec.channels = c.at("channels").get<std::size_t>();
    spec.len = len;
    spec.coupling_range = c.at("coupling_range").get<std::pair<double, double>>();
    if (!(spec.coupling_range.first <= spec.coupling_range.second) || spec.coupling_range.first < 0.0 ||
        spec.coupling_range.second > 1.0) {
      throw UsageError("invalid --coupling-range: need 0 <= LO <= HI <= 1");
    }
    if (spec.members < 2 || spec.channels < 1) throw UsageError("need --members >= 2 and --channels >= 1");
    const auto n = c.at("n").get<std::size_t>();
    if (n == 0) throw UsageError("--groups must be positive");
    const auto samples = synchrony::gen_group_dataset(n, spec, seed);
    manifest["kind"] = "groups";
    manifest["groups"] = json::array();
    const auto names = synchrony::default_channel_names(spec.channels);
    for (const auto& s : samples) {
      for (std::size_t k = 0; k < s.n_participants(); ++k) run.out.file(s.group_id() + "_p" + std::to_string(k) + ".csv");
      manifest["groups"].push_back(synchrony::write_group(run.out.dir(), s, names, s.group_id()));
    }
    std::cout << "wrote " << samples.size() << " group(s) to " << run.out.dir().string() << "\n";
  } else {
    throw UsageError("unknown datagen mode '" + mode + "'");
  }
  synchrony::write_text(run.out.file("manifest.json"), manifest.dump(2) + "\n");
}

void cmd_train(Run& run, const json& file_config, const ExperimentFlags& flags, const fs::path& data,
               const std::string& dtype) {
  if (dtype != "f64" && dtype != "f32") throw UsageError("--dtype must be f64 or f32");
  const auto config = resolve_experiment(file_config, flags);
  run.config = synchrony::to_json(config);
  run.add_dataset_inputs(data);
  const auto samples = load_samples(data);
  const auto windows = synchrony::build_windowed_dataset(samples, config.window_length, config.stride);
  const auto result = synchrony::train_experiment(windows, config);
  synchrony::save_model(result.model, run.out.file("model.json"),
                        dtype == "f32" ? synchrony::StorageType::kFloat32 : synchrony::StorageType::kFloat64);
  synchrony::write_text(run.out.file("history.csv"), history_csv(result.history));
  run.extra["split"] = {{"train", result.split.train}, {"validation", result.split.validation}};
  run.extra["best_epoch"] = result.best_epoch;
  std::cout << "best epoch " << result.best_epoch << ", validation MSE "
            << result.history[result.best_epoch].val_mse << "\n";
}

void write_report(Run& run, const std::string& stem, const synchrony::EvalReport& report) {
  synchrony::write_text(run.out.file(stem + ".json"), synchrony::to_json(report).dump(2) + "\n");
  synchrony::write_text(run.out.file(stem + "_predictions.csv"), predictions_csv(report.per_group));
}

void cmd_evaluate(Run& run, const json& file_config, const ExperimentFlags& flags, const fs::path& data,
                  const fs::path& model_path) {
  run.add_input(model_path);
  const auto model = synchrony::load_model(model_path);
  // The architecture comes from the model file, not from flags.
  ExperimentFlags effective = flags;
  effective.lookback = model.shape().lookback;
  effective.lstms = model.shape().n_lstms;
  effective.hidden = model.shape().hidden_size;
  effective.activation = synchrony::to_string(model.shape().activation);
  const auto config = resolve_experiment(file_config, effective);
  run.config = synchrony::to_json(config);
  run.add_dataset_inputs(data);
  const auto samples = load_samples(data);
  const auto report = synchrony::evaluate_samples(model, samples, config);
  write_report(run, "report", report);
  const auto table = synchrony::format_table({{"Evaluation", report}});
  synchrony::write_text(run.out.file("table.txt"), table);
  std::cout << table;
}

json folds_json(const synchrony::CrossValidation& cv) {
  json folds = json::array();
  for (const auto& f : cv.folds) {
    folds.push_back({{"fold", f.fold}, {"train_groups", f.train_groups}, {"test_groups", f.test_groups}});
  }
  return folds;
}

void cmd_kfold(Run& run, const json& file_config, const ExperimentFlags& flags, const fs::path& data,
               bool save_models) {
  const auto config = resolve_experiment(file_config, flags);
  run.config = synchrony::to_json(config);
  run.add_dataset_inputs(data);
  const auto samples = load_samples(data);
  const auto cv = synchrony::kfold_cv(samples, config);
  write_report(run, "report", cv.report);
  run.extra["folds"] = folds_json(cv);
  if (save_models) {
    for (const auto& f : cv.folds) synchrony::save_model(*f.model, run.out.file("fold_" + std::to_string(f.fold) + ".json"));
  }
  const auto table = synchrony::format_table({{"True Groups", cv.report}});
  synchrony::write_text(run.out.file("table.txt"), table);
  std::cout << table;
}

void cmd_baseline(Run& run, json file_config, const ExperimentFlags& flags, const fs::path& data,
                  std::optional<std::uint64_t> baseline_seed) {
  const auto file_seed = take(file_config, "baseline_seed");
  const auto config = resolve_experiment(file_config, flags);
  std::uint64_t seed = synchrony::derive_seed(config.seed, 7);
  if (file_seed) seed = file_seed->get<std::uint64_t>();
  if (baseline_seed) seed = *baseline_seed;
  run.config = synchrony::to_json(config);
  run.config["baseline_seed"] = seed;
  run.add_dataset_inputs(data);
  const auto samples = load_samples(data);
  if (synchrony::group_ids(std::span<const synchrony::SampleRef>(samples)).size() < 3) {
    throw UsageError("the permutation baseline needs at least 3 groups");
  }
  const auto cv = synchrony::kfold_cv(samples, config);
  const auto baseline = synchrony::permutation_baseline(samples, cv.folds, config, seed);
  write_report(run, "true_report", cv.report);
  write_report(run, "baseline_report", baseline);
  run.extra["folds"] = folds_json(cv);
  const auto table = synchrony::format_table({{"True Groups", cv.report}, {"Randomized", baseline}});
  synchrony::write_text(run.out.file("table.txt"), table);
  std::cout << table;
}

void cmd_sweep(Run& run, json file_config, const ExperimentFlags& flags, const fs::path& data,
               const std::optional<std::string>& counts_flag) {
  const auto file_counts = take(file_config, "counts");
  const auto config = resolve_experiment(file_config, flags);
  std::vector<std::size_t> counts{1, 2, 3, 4, 5, 6, 7, 8, 9};
  if (file_counts) counts = file_counts->get<std::vector<std::size_t>>();
  if (counts_flag) counts = parse_counts(*counts_flag);
  run.config = synchrony::to_json(config);
  run.config["counts"] = counts;
  run.add_dataset_inputs(data);
  const auto samples = load_samples(data);
  const auto windows = synchrony::build_windowed_dataset(samples, config.window_length, config.stride);
  const auto points = synchrony::sweep_lstm_count(windows, counts, config);
  const auto csv = synchrony::sweep_csv(points);
  synchrony::write_text(run.out.file("sweep.csv"), csv);
  double best = points.front().val_error, worst = best;
  for (const auto& p : points) {
    best = std::min(best, p.val_error);
    worst = std::max(worst, p.val_error);
  }
  run.extra["spread"] = {{"best_val_error", best}, {"worst_val_error", worst}, {"ratio", worst / best}};
  std::cout << csv << "validation error spread: worst/best = " << worst / best << "\n";
}

synchrony::VarianceMode variance_mode(const std::string& s) {
  if (s == "summed") return synchrony::VarianceMode::kSummed;
  if (s == "pooled") return synchrony::VarianceMode::kPooled;
  throw UsageError("--variance must be summed or pooled");
}

json annotation_json(const synchrony::AnnotationResult& r) {
  json labels = json::array();
  for (const auto& [g, v] : r.labels) labels.push_back({{"group_id", g}, {"label", v}});
  return {{"removed_labeler", r.removed_labeler},
          {"flagged", r.flagged},
          {"labels", labels},
          {"leave_one_out_variance", r.leave_one_out_variance}};
}

void cmd_annotate(Run& run, const json& file_config, const fs::path& scores, std::optional<double> threshold,
                  const std::optional<std::string>& variance) {
  synchrony::detail::check_keys(file_config, {"threshold", "variance"}, "");
  json c = {{"threshold", 1.0}, {"variance", "summed"}};
  c.update(file_config);
  if (threshold) c["threshold"] = *threshold;
  if (variance) c["variance"] = *variance;
  run.config = c;
  const auto mode = variance_mode(c.at("variance").get<std::string>());
  run.add_input(scores);
  const auto sets = synchrony::load_annotations(scores);
  const auto result = synchrony::aggregate_annotations(sets, c.at("threshold").get<double>(), mode);
  std::string labels = "group_id,label\n";
  for (const auto& [g, v] : result.labels) labels += g + "," + synchrony::csv::format_number(v) + "\n";
  synchrony::write_text(run.out.file("labels.csv"), labels);
  synchrony::write_text(run.out.file("annotation.json"), annotation_json(result).dump(2) + "\n");
  std::cout << "removed labeler " << result.removed_labeler << "; " << result.flagged.size()
            << " group(s) flagged for re-annotation\n";
}

std::map<std::string, double> read_labels(const fs::path& path) {
  const auto table = synchrony::csv::read_table(path);
  if (table.header != std::vector<std::string>{"group_id", "label"}) {
    throw synchrony::CsvError(1, "labels file must have header group_id,label");
  }
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out[table.rows[r][0]] = synchrony::csv::parse_number(table.rows[r][1], table.lines[r], "label");
  }
  return out;
}

void cmd_ingest(Run& run, const json& file_config, const fs::path& groups_manifest,
                const std::optional<std::string>& labels_path, const std::optional<std::string>& annotations_path,
                std::optional<std::size_t> top_k, std::optional<bool> normalize, std::optional<double> threshold,
                const std::optional<std::string>& variance) {
  synchrony::detail::check_keys(file_config, {"top_k", "normalize", "threshold", "variance", "frame_rate_hz"}, "");
  json c = {{"top_k", 3}, {"normalize", true}, {"threshold", 1.0}, {"variance", "summed"},
            {"frame_rate_hz", synchrony::kDefaultFrameRateHz}};
  c.update(file_config);
  if (top_k) c["top_k"] = *top_k;
  if (normalize) c["normalize"] = *normalize;
  if (threshold) c["threshold"] = *threshold;
  if (variance) c["variance"] = *variance;
  run.config = c;
  if (labels_path.has_value() == annotations_path.has_value()) {
    throw UsageError("give exactly one of --labels and --annotations");
  }
  const auto k = c.at("top_k").get<std::size_t>();
  if (k == 0) throw UsageError("--top-k must be positive");

  run.add_input(groups_manifest);
  const auto recordings = synchrony::load_au_manifest(groups_manifest, c.at("frame_rate_hz").get<double>());
  std::map<std::string, double> labels;
  json annotation = nullptr;
  if (labels_path) {
    run.add_input(*labels_path);
    labels = read_labels(*labels_path);
  } else {
    run.add_input(*annotations_path);
    const auto result = synchrony::aggregate_annotations(synchrony::load_annotations(*annotations_path),
                                                         c.at("threshold").get<double>(),
                                                         variance_mode(c.at("variance").get<std::string>()));
    for (const auto& [g, v] : result.labels) labels[g] = v;
    annotation = annotation_json(result);
  }

  std::map<std::string, std::vector<synchrony::AuRecording>> by_group;
  std::vector<std::string> order;
  for (const auto& r : recordings) {
    if (!by_group.contains(r.group_id)) order.push_back(r.group_id);
    by_group[r.group_id].push_back(r);
  }
  json manifest = {{"kind", "groups"},
                   {"version", synchrony::kDatasetVersion},
                   {"frame_rate_hz", c.at("frame_rate_hz")},
                   {"groups", json::array()}};
  json selected = json::object();
  for (const auto& g : order) {
    const auto it = labels.find(g);
    if (it == labels.end()) throw synchrony::Error("no label for group '" + g + "'");
    const auto& group = by_group.at(g);
    const auto aus = synchrony::select_top_aus(group, k);
    selected[g] = aus;
    const auto sample = synchrony::group_sample(group, aus, it->second, c.at("normalize").get<bool>());
    for (std::size_t p = 0; p < sample.n_participants(); ++p) run.out.file(g + "_p" + std::to_string(p) + ".csv");
    manifest["groups"].push_back(synchrony::write_group(run.out.dir(), sample, aus, g));
  }
  synchrony::write_text(run.out.file("manifest.json"), manifest.dump(2) + "\n");
  synchrony::write_text(run.out.file("selected_aus.json"), selected.dump(2) + "\n");
  if (!annotation.is_null()) synchrony::write_text(run.out.file("annotation.json"), annotation.dump(2) + "\n");
  std::cout << "ingested " << order.size() << " group(s) into " << run.out.dir().string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synchrony: group synchrony estimation from multichannel time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  std::optional<unsigned> threads;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON config file or a previous run_manifest.json")->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "Maximum worker threads (0 = hardware concurrency)");

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out_dir, "Output directory")->required(); };

  DatagenFlags gen;
  auto* datagen = app.add_subcommand("datagen", "Generate synthetic pairs, preset pairs or latent-driver groups");
  datagen->add_option("--pairs", gen.pairs, "Number of labeled pairs");
  datagen->add_option("--groups", gen.groups, "Number of latent-driver groups");
  datagen->add_option("--preset", gen.preset, "stationary | shifted | trended");
  datagen->add_option("--len", gen.len, "Series length");
  datagen->add_option("--phi-range", gen.phi_range, "Label range LO:HI for --pairs");
  datagen->add_option("--coupling-range", gen.coupling_range, "Coupling range LO:HI for --groups");
  datagen->add_option("--members", gen.members, "Members per group");
  datagen->add_option("--channels", gen.channels, "Channels per member");
  datagen->add_option("--seed", gen.seed, "Master seed");
  datagen->add_flag("--paper-magnitude", gen.paper_magnitude, "Use |ifft| instead of the real part");
  add_out(datagen);

  std::string data_dir, model_path, dtype = "f64";
  std::optional<std::string> counts, labels, annotations, scores_variance;
  std::optional<std::uint64_t> baseline_seed;
  std::optional<std::size_t> top_k;
  std::optional<double> threshold;
  bool save_models = false;
  std::optional<bool> normalize;
  std::string scores_path, groups_manifest;

  ExperimentFlags train_flags, eval_flags, kfold_flags, baseline_flags, sweep_flags;
  auto* train = app.add_subcommand("train", "Train one model with a group-disjoint validation split");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--dtype", dtype, "Model file storage: f64 | f32");
  train_flags.attach(train);
  add_out(train);

  auto* evaluate = app.add_subcommand("evaluate", "Score a trained model on a dataset");
  evaluate->add_option("--data", data_dir, "Dataset directory")->required();
  evaluate->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  eval_flags.attach(evaluate);
  add_out(evaluate);

  auto* kfold = app.add_subcommand("kfold", "Group k-fold cross-validation");
  kfold->add_option("--data", data_dir, "Dataset directory")->required();
  kfold->add_flag("--save-models", save_models, "Write each fold's model");
  kfold_flags.attach(kfold);
  add_out(kfold);

  auto* baseline = app.add_subcommand("baseline", "Cross-validation plus the permutation baseline");
  baseline->add_option("--data", data_dir, "Dataset directory")->required();
  baseline->add_option("--baseline-seed", baseline_seed, "Seed for chimera construction");
  baseline_flags.attach(baseline);
  add_out(baseline);

  auto* sweep = app.add_subcommand("sweep", "Lowest train/validation error per LSTM count");
  sweep->add_option("--data", data_dir, "Dataset directory")->required();
  sweep->add_option("--counts", counts, "LO:HI or comma-separated list (default 1:9)");
  sweep_flags.attach(sweep);
  add_out(sweep);

  auto* ingest = app.add_subcommand("ingest", "Build a groups dataset from AU CSVs");
  ingest->add_option("--manifest", groups_manifest, "Group manifest JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--labels", labels, "CSV group_id,label")->check(CLI::ExistingFile);
  ingest->add_option("--annotations", annotations, "CSV group_id,labeler_id,score")->check(CLI::ExistingFile);
  ingest->add_option("--top-k", top_k, "AUs kept per group");
  ingest->add_option("--normalize", normalize, "Z-score each channel (true/false)");
  ingest->add_option("--threshold", threshold, "Variance above which a group is flagged");
  ingest->add_option("--variance", scores_variance, "summed | pooled");
  add_out(ingest);

  auto* annotate = app.add_subcommand("annotate", "Aggregate multi-labeler synchrony scores");
  annotate->add_option("--scores", scores_path, "CSV group_id,labeler_id,score")->required()->check(CLI::ExistingFile);
  annotate->add_option("--threshold", threshold, "Variance above which a group is flagged");
  annotate->add_option("--variance", scores_variance, "summed | pooled");
  add_out(annotate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
  try {
    if (threads) synchrony::set_max_threads(*threads);
    const json file_config = load_config_file(config_path);
    run.out.open(out_dir);
    if (run.command == "datagen") {
      cmd_datagen(run, file_config, gen);
    } else if (run.command == "train") {
      cmd_train(run, file_config, train_flags, data_dir, dtype);
    } else if (run.command == "evaluate") {
      cmd_evaluate(run, file_config, eval_flags, data_dir, model_path);
    } else if (run.command == "kfold") {
      cmd_kfold(run, file_config, kfold_flags, data_dir, save_models);
    } else if (run.command == "baseline") {
      cmd_baseline(run, file_config, baseline_flags, data_dir, baseline_seed);
    } else if (run.command == "sweep") {
      cmd_sweep(run, file_config, sweep_flags, data_dir, counts);
    } else if (run.command == "ingest") {
      cmd_ingest(run, file_config, groups_manifest, labels, annotations, top_k, normalize, threshold,
                 scores_variance);
    } else if (run.command == "annotate") {
      cmd_annotate(run, file_config, scores_path, threshold, scores_variance);
    }
    run.finish();
    return 0;
  } catch (const UsageError& e) {
    run.out.rollback();
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    run.out.rollback();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
