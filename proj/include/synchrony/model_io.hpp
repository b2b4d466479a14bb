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

// Model files are UTF-8 JSON documents:
//
//   {
//     "format": "synchrony-model",
//     "version": 1,
//     "shape": {"n_lstms": N, "input_size": I, "hidden_size": H,
//               "lookback": L, "cell_activation": "tanh" | "relu"},
//     "dtype": "f64" | "f32",
//     "parameter_count": P,
//     "parameters": [P numbers in the flat layout of SynchronyModel]
//   }
//
// f64 files round-trip bit-exactly (numbers are written in shortest
// round-trip form). f32 files store every parameter rounded to float.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "synchrony/error.hpp"
#include "synchrony/model.hpp"

namespace synchrony {

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormatName = "synchrony-model";

enum class StorageType { kFloat64, kFloat32 };

inline nlohmann::json model_to_json(const SynchronyModel& model, StorageType storage = StorageType::kFloat64) {
  const auto& s = model.shape();
  nlohmann::json params = nlohmann::json::array();
  for (double v : model.parameters()) {
    if (storage == StorageType::kFloat32) {
      params.push_back(static_cast<float>(v));
    } else {
      params.push_back(v);
    }
  }
  return {
      {"format", kModelFormatName},
      {"version", kModelFormatVersion},
      {"shape",
       {{"n_lstms", s.n_lstms},
        {"input_size", s.input_size},
        {"hidden_size", s.hidden_size},
        {"lookback", s.lookback},
        {"cell_activation", to_string(s.activation)}}},
      {"dtype", storage == StorageType::kFloat32 ? "f32" : "f64"},
      {"parameter_count", model.parameter_count()},
      {"parameters", std::move(params)},
  };
}

inline SynchronyModel model_from_json(const nlohmann::json& doc) {
  using Kind = ModelFormatError::Kind;
  try {
    if (!doc.is_object() || doc.value("format", "") != kModelFormatName) {
      throw ModelFormatError(Kind::kMalformed, "not a synchrony model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError(Kind::kVersionMismatch, "unsupported model format version " + std::to_string(version) +
                                                         " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const auto& js = doc.at("shape");
    ModelShape shape;
    shape.n_lstms = js.at("n_lstms").get<std::size_t>();
    shape.input_size = js.at("input_size").get<std::size_t>();
    shape.hidden_size = js.at("hidden_size").get<std::size_t>();
    shape.lookback = js.at("lookback").get<std::size_t>();
    shape.activation = cell_activation_from_string(js.at("cell_activation").get<std::string>());
    if (shape.n_lstms == 0 || shape.input_size == 0 || shape.hidden_size == 0 || shape.lookback == 0) {
      throw ModelFormatError(Kind::kDimensionCorruption, "dimension corruption: zero dimension in header");
    }
    const auto dtype = doc.at("dtype").get<std::string>();
    if (dtype != "f64" && dtype != "f32") throw ModelFormatError(Kind::kMalformed, "unknown dtype '" + dtype + "'");
    const auto& payload = doc.at("parameters");
    const std::size_t expected = ParameterLayout(shape).size();
    if (!payload.is_array() || payload.size() != expected ||
        doc.at("parameter_count").get<std::size_t>() != expected) {
      throw ModelFormatError(Kind::kDimensionCorruption,
                             "dimension corruption: header implies " + std::to_string(expected) +
                                 " parameters, payload has " + std::to_string(payload.size()));
    }
    std::vector<double> params;
    params.reserve(expected);
    for (const auto& v : payload) {
      if (!v.is_number()) throw ModelFormatError(Kind::kMalformed, "non-numeric parameter");
      params.push_back(dtype == "f32" ? static_cast<double>(v.get<float>()) : v.get<double>());
    }
    return SynchronyModel(shape, std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(Kind::kMalformed, std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const SynchronyModel& model, const std::filesystem::path& path,
                       StorageType storage = StorageType::kFloat64) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << model_to_json(model, storage).dump() << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline SynchronyModel load_model(const std::filesystem::path& path) {
  using Kind = ModelFormatError::Kind;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const bool at_end = e.byte >= text.size();
    throw ModelFormatError(at_end ? Kind::kTruncated : Kind::kMalformed,
                           std::string(at_end ? "truncated model file: " : "malformed model file: ") + e.what());
  }
  return model_from_json(doc);
}

}  // namespace synchrony
