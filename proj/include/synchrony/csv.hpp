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

// Minimal CSV support for the numeric and annotation files used here. Fields
// are comma separated, unquoted; surrounding whitespace is ignored.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "synchrony/error.hpp"

namespace synchrony::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Parses a finite double; throws CsvError tagged with `row` otherwise.
inline double parse_number(std::string_view field, std::size_t row, std::string_view column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw CsvError(row, "invalid number '" + std::string(field) + "' in column " + std::string(column) + " at row " +
                            std::to_string(row));
  }
  if (!std::isfinite(value)) {
    throw CsvError(row, "non-finite value in column " + std::string(column) + " at row " + std::to_string(row));
  }
  return value;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based file line of each data row.
  std::vector<std::size_t> lines;
};

/// Reads a file with a header line. Blank lines are skipped; every data row
/// must have as many fields as the header.
inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(0, "cannot open '" + path.string() + "'");
  Table table;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw CsvError(row, "missing columns at row " + std::to_string(row) + " (expected " +
                              std::to_string(table.header.size()) + ", found " + std::to_string(fields.size()) + ")");
    }
    table.rows.push_back(std::move(fields));
    table.lines.push_back(row);
  }
  if (table.header.empty()) throw CsvError(0, "empty file '" + path.string() + "'");
  return table;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace synchrony::csv
