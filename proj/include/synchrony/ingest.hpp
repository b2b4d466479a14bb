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

// Facial action unit recordings and multi-annotator synchrony labels.
//
// AU CSV: header `frame,AU01,AU02,...`, one row per frame with contiguous
// integer frame indices, one participant per file.
// Group manifest: JSON object mapping group_id to an ordered list of AU CSV
// paths (relative to the manifest); list order is participant order.
// Annotation CSV: rows `group_id,labeler_id,score` with an optional header.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "synchrony/csv.hpp"
#include "synchrony/error.hpp"
#include "synchrony/signal.hpp"

namespace synchrony {

struct AuRecording {
  std::string participant_id;
  std::string group_id;
  /// Channel name -> intensity trace; all traces share length and rate.
  std::map<std::string, TimeSeries> au_channels;
  /// Channel names in file column order.
  std::vector<std::string> channel_order;

  std::size_t length() const { return au_channels.empty() ? 0 : au_channels.begin()->second.size(); }
};

/// Loads one participant's AU file. The participant id defaults to the file
/// stem.
inline AuRecording load_au_csv(const std::filesystem::path& path, std::string group_id = {},
                               double frame_rate_hz = kDefaultFrameRateHz) {
  const auto table = csv::read_table(path);
  if (table.header.empty() || table.header.front() != "frame") {
    throw CsvError(1, "missing columns: first column must be 'frame' in '" + path.string() + "'");
  }
  if (table.header.size() < 2) throw CsvError(1, "missing columns: no AU columns in '" + path.string() + "'");
  if (table.rows.empty()) throw CsvError(0, "empty file: no data rows in '" + path.string() + "'");
  std::set<std::string> names;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    if (table.header[c].empty() || !names.insert(table.header[c]).second) {
      throw CsvError(1, "duplicate or empty column name '" + table.header[c] + "'");
    }
  }
  std::vector<std::vector<double>> columns(table.header.size() - 1);
  long long previous = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.lines[r];
    long long frame = 0;
    const auto [ptr, ec] = std::from_chars(row[0].data(), row[0].data() + row[0].size(), frame);
    if (ec != std::errc() || ptr != row[0].data() + row[0].size()) {
      throw CsvError(line, "invalid frame index '" + row[0] + "' at row " + std::to_string(line));
    }
    if (r > 0 && frame != previous + 1) throw CsvError(line, "non-contiguous frames at row " + std::to_string(line));
    previous = frame;
    for (std::size_t c = 1; c < row.size(); ++c) {
      columns[c - 1].push_back(csv::parse_number(row[c], line, table.header[c]));
    }
  }
  AuRecording rec{path.stem().string(), std::move(group_id), {}, {}};
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    rec.au_channels.emplace(table.header[c], TimeSeries(std::move(columns[c - 1]), frame_rate_hz));
    rec.channel_order.push_back(table.header[c]);
  }
  return rec;
}

/// Loads every participant named in a group manifest, grouped in manifest
/// order (groups sorted by id, participants in listed order).
inline std::vector<AuRecording> load_au_manifest(const std::filesystem::path& manifest,
                                                 double frame_rate_hz = kDefaultFrameRateHz) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open group manifest '" + manifest.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed group manifest: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw Error("group manifest must map group ids to participant file lists");
  std::vector<AuRecording> out;
  const auto base = manifest.parent_path();
  for (const auto& [group, files] : doc.items()) {
    if (!files.is_array() || files.empty()) throw Error("group '" + group + "' must list participant files");
    for (const auto& f : files) out.push_back(load_au_csv(base / f.get<std::string>(), group, frame_rate_hz));
  }
  return out;
}

/// Mean absolute deviation about the mean, (1/T) sum |x_t - mean(x)|.
inline double mean_average_deviation(const TimeSeries& series) {
  const auto v = series.values();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double dev = 0.0;
  for (double x : v) dev += std::abs(x - mean);
  return dev / static_cast<double>(v.size());
}

/// The k AUs with the highest mean MAD across the group's participants,
/// highest first; ties go to the lexicographically smaller identifier. The
/// same identifiers apply to every participant of the group.
inline std::vector<std::string> select_top_aus(const std::vector<AuRecording>& group, std::size_t k = 3) {
  detail::require(!group.empty(), "no recordings to select from");
  std::set<std::string> shared;
  for (const auto& [name, _] : group.front().au_channels) shared.insert(name);
  for (const auto& rec : group) {
    std::set<std::string> names;
    for (const auto& [name, _] : rec.au_channels) names.insert(name);
    detail::require(names == shared, "recordings of a group must share the same AU channel set");
  }
  if (shared.size() < k) {
    throw Error("fewer than " + std::to_string(k) + " shared AUs (" + std::to_string(shared.size()) + ")");
  }
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& name : shared) {
    double sum = 0.0;
    for (const auto& rec : group) sum += mean_average_deviation(rec.au_channels.at(name));
    scored.emplace_back(sum / static_cast<double>(group.size()), name);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
  return out;
}

/// Builds a model-ready sample from one group's recordings using the given
/// channels in the given order. Optionally z-scores every channel.
inline InteractionSample group_sample(const std::vector<AuRecording>& group, const std::vector<std::string>& channels,
                                      double label, bool normalize) {
  detail::require(!group.empty(), "empty group");
  std::vector<ChannelSet> participants;
  for (const auto& rec : group) {
    ChannelSet set;
    for (const auto& name : channels) {
      const auto it = rec.au_channels.find(name);
      if (it == rec.au_channels.end()) throw Error("participant '" + rec.participant_id + "' lacks channel " + name);
      set.push_back(normalize ? zscore_normalize(it->second) : it->second);
    }
    participants.push_back(std::move(set));
  }
  return InteractionSample(std::move(participants), label, group.front().group_id);
}

// ---------------------------------------------------------------------------
// Annotations

inline constexpr double kMinScore = 1.0;
inline constexpr double kMaxScore = 5.0;
inline constexpr double kVarianceTieTolerance = 1e-12;

struct AnnotationSet {
  std::string group_id;
  std::map<std::string, double> scores;  // labeler id -> score
};

enum class VarianceMode {
  kSummed,  // sum over groups of each group's population variance
  kPooled,  // population variance of all remaining scores pooled together
};

struct AnnotationResult {
  /// Group id -> mean of the remaining labelers' scores, in input order.
  std::vector<std::pair<std::string, double>> labels;
  /// Groups whose remaining-score variance exceeds the threshold.
  std::vector<std::string> flagged;
  std::string removed_labeler;
  /// Labeler id -> total variance of the scores when that labeler is left out.
  std::map<std::string, double> leave_one_out_variance;
};

namespace detail {

inline double population_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

inline std::vector<double> scores_without(const AnnotationSet& set, const std::string& excluded) {
  std::vector<double> out;
  for (const auto& [labeler, score] : set.scores) {
    if (labeler != excluded) out.push_back(score);
  }
  return out;
}

}  // namespace detail

/// Leave-one-labeler-out aggregation: the labeler whose exclusion leaves the
/// smallest total variance is dropped (ties, up to a relative 1e-12, go to
/// the smallest labeler id), labels are the mean of the remaining scores, and
/// groups whose remaining variance exceeds `variance_threshold` are flagged
/// for re-annotation.
inline AnnotationResult aggregate_annotations(const std::vector<AnnotationSet>& sets, double variance_threshold = 1.0,
                                              VarianceMode mode = VarianceMode::kSummed) {
  detail::require(!sets.empty(), "no annotations");
  std::set<std::string> labelers;
  for (const auto& [id, _] : sets.front().scores) labelers.insert(id);
  if (labelers.size() < 3) throw Error("need at least 3 labelers");
  std::set<std::string> seen_groups;
  for (const auto& s : sets) {
    if (!seen_groups.insert(s.group_id).second) throw Error("duplicate annotations for group '" + s.group_id + "'");
    std::set<std::string> ids;
    for (const auto& [id, score] : s.scores) {
      ids.insert(id);
      if (!(score >= kMinScore && score <= kMaxScore)) {
        throw Error("score outside [1, 5] for group '" + s.group_id + "', labeler '" + id + "'");
      }
    }
    if (ids != labelers) throw Error("incomplete score matrix: group '" + s.group_id + "' is not scored by every labeler");
  }

  AnnotationResult result;
  double best = 0.0;
  for (const auto& l : labelers) {  // ascending id order, so ties keep the smallest id
    double total = 0.0;
    if (mode == VarianceMode::kSummed) {
      for (const auto& s : sets) total += detail::population_variance(detail::scores_without(s, l));
    } else {
      std::vector<double> pooled;
      for (const auto& s : sets) {
        const auto v = detail::scores_without(s, l);
        pooled.insert(pooled.end(), v.begin(), v.end());
      }
      total = detail::population_variance(pooled);
    }
    result.leave_one_out_variance[l] = total;
    // Totals equal up to rounding count as ties.
    if (result.removed_labeler.empty() || total < best - kVarianceTieTolerance * std::max(1.0, std::abs(best))) {
      best = total;
      result.removed_labeler = l;
    }
  }
  for (const auto& s : sets) {
    const auto remaining = detail::scores_without(s, result.removed_labeler);
    double mean = 0.0;
    for (double x : remaining) mean += x;
    mean /= static_cast<double>(remaining.size());
    result.labels.emplace_back(s.group_id, mean);
    if (detail::population_variance(remaining) > variance_threshold) result.flagged.push_back(s.group_id);
  }
  return result;
}

/// Reads `group_id,labeler_id,score` rows (header optional) into one
/// AnnotationSet per group, in order of first appearance.
inline std::vector<AnnotationSet> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(0, "cannot open '" + path.string() + "'");
  std::vector<AnnotationSet> sets;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 3) throw CsvError(row, "missing columns at row " + std::to_string(row));
    if (row == 1 && fields[0] == "group_id") continue;
    const double score = csv::parse_number(fields[2], row, "score");
    auto [it, inserted] = index.emplace(fields[0], sets.size());
    if (inserted) sets.push_back({fields[0], {}});
    if (!sets[it->second].scores.emplace(fields[1], score).second) {
      throw CsvError(row, "duplicate score for group '" + fields[0] + "', labeler '" + fields[1] + "' at row " +
                              std::to_string(row));
    }
  }
  if (sets.empty()) throw CsvError(0, "empty file: no annotations in '" + path.string() + "'");
  return sets;
}

}  // namespace synchrony
