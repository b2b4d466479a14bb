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

// Core signal types: uniformly sampled series, multi-participant samples and
// the sliding windows cut from them.

#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synchrony/error.hpp"

namespace synchrony {

inline constexpr double kDefaultFrameRateHz = 30.0;

/// A non-empty, finite, uniformly sampled real sequence.
class TimeSeries {
 public:
  explicit TimeSeries(std::vector<double> values, double frame_rate_hz = kDefaultFrameRateHz)
      : values_(std::move(values)), frame_rate_hz_(frame_rate_hz) {
    detail::require(!values_.empty(), "time series must be non-empty");
    detail::require(frame_rate_hz_ > 0.0 && std::isfinite(frame_rate_hz_),
                    "frame rate must be positive");
    for (double v : values_) detail::require(std::isfinite(v), "time series contains non-finite value");
  }

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  double frame_rate_hz() const noexcept { return frame_rate_hz_; }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<double> values_;
  double frame_rate_hz_;
};

/// The C channels recorded for one participant.
using ChannelSet = std::vector<TimeSeries>;

/// K participants x C channels of equal-length series plus a synchrony label.
class InteractionSample {
 public:
  InteractionSample(std::vector<ChannelSet> participants, double label, std::string group_id)
      : participants_(std::move(participants)), label_(label), group_id_(std::move(group_id)) {
    detail::require(participants_.size() >= 2, "sample needs at least two participants");
    detail::require(!participants_.front().empty(), "sample needs at least one channel");
    detail::require(std::isfinite(label_), "sample label must be finite");
    const std::size_t channels = participants_.front().size();
    const std::size_t length = participants_.front().front().size();
    const double rate = participants_.front().front().frame_rate_hz();
    for (const auto& set : participants_) {
      detail::require(set.size() == channels, "participants have differing channel counts");
      for (const auto& series : set) {
        detail::require(series.size() == length, "channel lengths differ within sample");
        detail::require(series.frame_rate_hz() == rate, "channel frame rates differ within sample");
      }
    }
  }

  const std::vector<ChannelSet>& participants() const noexcept { return participants_; }
  const TimeSeries& channel(std::size_t participant, std::size_t c) const {
    return participants_[participant][c];
  }
  std::size_t n_participants() const noexcept { return participants_.size(); }
  std::size_t n_channels() const noexcept { return participants_.front().size(); }
  /// K*C, the width of one frame once participants are flattened.
  std::size_t frame_width() const noexcept { return n_participants() * n_channels(); }
  std::size_t length() const noexcept { return participants_.front().front().size(); }
  double frame_rate_hz() const noexcept { return participants_.front().front().frame_rate_hz(); }
  double label() const noexcept { return label_; }
  const std::string& group_id() const noexcept { return group_id_; }

  friend bool operator==(const InteractionSample&, const InteractionSample&) = default;

 private:
  std::vector<ChannelSet> participants_;
  double label_;
  std::string group_id_;
};

using SampleRef = std::shared_ptr<const InteractionSample>;

/// A view of `length` consecutive frames of a parent sample. The window keeps
/// its parent alive and never copies signal data.
class Window {
 public:
  Window(SampleRef parent, std::size_t start_frame, std::size_t length)
      : parent_(std::move(parent)), start_(start_frame), length_(length) {
    detail::require(parent_ != nullptr, "window needs a parent sample");
    detail::require(length_ > 0 && start_ + length_ <= parent_->length(), "window exceeds signal");
  }

  std::size_t start_frame() const noexcept { return start_; }
  std::size_t length() const noexcept { return length_; }
  double label() const noexcept { return parent_->label(); }
  const std::string& group_id() const noexcept { return parent_->group_id(); }
  const InteractionSample& parent() const noexcept { return *parent_; }
  const SampleRef& parent_ref() const noexcept { return parent_; }
  std::size_t n_participants() const noexcept { return parent_->n_participants(); }
  std::size_t n_channels() const noexcept { return parent_->n_channels(); }
  std::size_t frame_width() const noexcept { return parent_->frame_width(); }

  /// Value of channel c of participant k at window-relative frame j.
  double at(std::size_t k, std::size_t c, std::size_t j) const {
    return parent_->channel(k, c)[start_ + j];
  }

 private:
  SampleRef parent_;
  std::size_t start_;
  std::size_t length_;
};

/// Number of windows extract_windows produces for a signal of length T.
constexpr std::size_t window_count(std::size_t length, std::size_t window_length, std::size_t stride) {
  return window_length > length || stride == 0 ? 0 : (length - window_length) / stride + 1;
}

/// Cuts every window of `window_length` frames whose start is a multiple of
/// `stride`, in increasing start order.
inline std::vector<Window> extract_windows(const SampleRef& sample, std::size_t window_length,
                                           std::size_t stride) {
  detail::require(sample != nullptr, "null sample");
  detail::require(stride > 0, "stride must be positive");
  detail::require(window_length > 0, "window length must be positive");
  if (window_length > sample->length()) throw Error("window exceeds signal");
  const std::size_t n = window_count(sample->length(), window_length, stride);
  std::vector<Window> windows;
  windows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) windows.emplace_back(sample, i * stride, window_length);
  return windows;
}

/// Population z-score. A constant series maps to all zeros.
inline TimeSeries zscore_normalize(const TimeSeries& series) {
  const auto v = series.values();
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(v.size(), 0.0);
  if (sd > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  }
  return TimeSeries(std::move(out), series.frame_rate_hz());
}

/// Applies zscore_normalize to every channel of every participant.
inline InteractionSample normalize_channels(const InteractionSample& sample) {
  std::vector<ChannelSet> participants;
  participants.reserve(sample.n_participants());
  for (const auto& set : sample.participants()) {
    ChannelSet normalized;
    normalized.reserve(set.size());
    for (const auto& series : set) normalized.push_back(zscore_normalize(series));
    participants.push_back(std::move(normalized));
  }
  return InteractionSample(std::move(participants), sample.label(), sample.group_id());
}

}  // namespace synchrony
