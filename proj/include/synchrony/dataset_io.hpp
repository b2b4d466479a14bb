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

// On-disk datasets. A dataset is a directory holding `manifest.json` and the
// CSV files it references.
//
//   kind "pairs":  {"kind": "pairs", "version": 1, "frame_rate_hz": 30,
//                   "pairs": [{"file": "pair_0000.csv", "label": 0.42,
//                              "seed": 123}, ...], ...}
//                  Each pair file has header `frame,x,y`.
//   kind "groups": {"kind": "groups", "version": 1, "frame_rate_hz": 30,
//                   "groups": [{"group_id": "g0", "label": 3.2,
//                               "participants": ["g0_p0.csv", ...]}, ...]}
//                  Participant files follow the AU CSV schema; every
//                  non-frame column is a channel, in header order.
//
// Frame indices written by this library start at 1.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "synchrony/csv.hpp"
#include "synchrony/error.hpp"
#include "synchrony/ingest.hpp"
#include "synchrony/signal.hpp"

namespace synchrony {

inline constexpr int kDatasetVersion = 1;

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

/// Writes named columns of equal length with a leading 1-based frame column.
inline void write_channels_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                               const std::vector<const TimeSeries*>& columns) {
  detail::require(names.size() == columns.size() && !columns.empty(), "column names and data differ");
  std::string text = "frame";
  for (const auto& n : names) text += "," + n;
  text += '\n';
  const std::size_t len = columns.front()->size();
  for (std::size_t t = 0; t < len; ++t) {
    text += std::to_string(t + 1);
    for (const auto* c : columns) {
      text += ',';
      text += csv::format_number((*c)[t]);
    }
    text += '\n';
  }
  write_text(path, text);
}

/// Reads every non-frame column of a frame-indexed CSV, in header order.
inline std::pair<std::vector<std::string>, ChannelSet> read_channels_csv(const std::filesystem::path& path,
                                                                        double frame_rate_hz) {
  const auto rec = load_au_csv(path, {}, frame_rate_hz);
  ChannelSet set;
  for (const auto& n : rec.channel_order) set.push_back(rec.au_channels.at(n));
  return {rec.channel_order, set};
}

/// Writes one sample as participant CSVs `<prefix>_p<k>.csv` and returns the
/// manifest entry for it.
inline nlohmann::json write_group(const std::filesystem::path& dir, const InteractionSample& sample,
                                  const std::vector<std::string>& channel_names, const std::string& prefix) {
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t k = 0; k < sample.n_participants(); ++k) {
    const std::string name = prefix + "_p" + std::to_string(k) + ".csv";
    std::vector<const TimeSeries*> cols;
    for (const auto& s : sample.participants()[k]) cols.push_back(&s);
    write_channels_csv(dir / name, channel_names, cols);
    files.push_back(name);
  }
  return {{"group_id", sample.group_id()}, {"label", sample.label()}, {"participants", files}};
}

inline std::vector<std::string> default_channel_names(std::size_t channels) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < channels; ++c) names.push_back("ch" + std::to_string(c));
  return names;
}

/// Loads a "pairs" or "groups" dataset directory into samples.
inline std::vector<InteractionSample> load_dataset(const std::filesystem::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  try {
    const auto kind = manifest.at("kind").get<std::string>();
    if (manifest.at("version").get<int>() != kDatasetVersion) throw Error("unsupported dataset version");
    const double rate = manifest.value("frame_rate_hz", kDefaultFrameRateHz);
    std::vector<InteractionSample> out;
    if (kind == "pairs") {
      std::size_t i = 0;
      for (const auto& p : manifest.at("pairs")) {
        auto [names, set] = read_channels_csv(dir / p.at("file").get<std::string>(), rate);
        if (names != std::vector<std::string>{"x", "y"}) throw Error("pair files must have columns frame,x,y");
        const std::string id = p.value("group_id", "pair" + std::to_string(i));
        out.emplace_back(std::vector<ChannelSet>{{set[0]}, {set[1]}}, p.at("label").get<double>(), id);
        ++i;
      }
    } else if (kind == "groups") {
      for (const auto& g : manifest.at("groups")) {
        std::vector<ChannelSet> participants;
        std::vector<std::string> first_names;
        for (const auto& f : g.at("participants")) {
          auto [names, set] = read_channels_csv(dir / f.get<std::string>(), rate);
          if (participants.empty()) first_names = names;
          if (names != first_names) throw Error("participants of a group must share channel names");
          participants.push_back(std::move(set));
        }
        out.emplace_back(std::move(participants), g.at("label").get<double>(), g.at("group_id").get<std::string>());
      }
    } else {
      throw Error("unknown dataset kind '" + kind + "'");
    }
    if (out.empty()) throw Error("dataset '" + dir.string() + "' is empty");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed dataset manifest: " + std::string(e.what()));
  }
}

}  // namespace synchrony
