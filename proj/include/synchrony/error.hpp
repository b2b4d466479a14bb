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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synchrony {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a model file cannot be decoded.
class ModelFormatError : public Error {
 public:
  enum class Kind { kMalformed, kTruncated, kVersionMismatch, kDimensionCorruption };

  ModelFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Raised by the CSV readers. `row` is 1-based and counts the header line
/// as row 1; 0 means the error is not tied to a row.
class CsvError : public Error {
 public:
  CsvError(std::size_t row, const std::string& what) : Error(what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace detail
}  // namespace synchrony
