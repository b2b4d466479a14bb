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

// Coupled Gaussian pair generation in the frequency domain.
//
// DFT convention: the forward transform is unnormalized,
//   S[q] = sum_t c[t] exp(-2 pi i q t / n),
// and the inverse carries the 1/n factor. Covariance sequences are read
// circularly: entry t is the covariance at lag t (mod n), so a valid
// autocovariance satisfies c[t] == c[n - t] and has a real, non-negative
// spectrum.
//
// With white unit drivers u, v and U = DFT(u), V = DFT(v), the generator
// forms per frequency bin
//
//   cos(a) = S_xy / sqrt(S_xx S_yy)
//   X = sqrt(S_xx) (cos(a) U + sin(a) V)
//   Y = sqrt(S_yy) U
//
// so that E[X conj(Y)] = n S_xy and the inverse transforms x, y realize the
// prescribed auto- and cross-covariances.

#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "synchrony/error.hpp"
#include "synchrony/random.hpp"
#include "synchrony/signal.hpp"

namespace synchrony {

/// Pointwise post-processing applied to a generated series; t is the
/// 1-based frame index.
using TrendFunction = std::function<double(std::size_t t, double x)>;

inline TrendFunction identity_trend() {
  return [](std::size_t, double x) { return x; };
}

/// How the complex inverse transform is turned into a real series.
enum class InverseMode {
  kRealPart,   // keeps Gaussianity and the prescribed covariances
  kMagnitude,  // |ifft(.)|, the literal published procedure
};

struct CouplingSpec {
  std::size_t len = 0;
  std::vector<double> cxx;
  std::vector<double> cyy;
  std::vector<double> cxy;
  TrendFunction f1 = identity_trend();
  TrendFunction f2 = identity_trend();
  std::size_t delay = 0;
  InverseMode inverse = InverseMode::kRealPart;
};

struct ScalarCovSpec {
  double phi11 = 1.0;
  double phi22 = 1.0;
  double phi12 = 0.0;
  std::size_t len = 0;
};

struct GeneratedPair {
  TimeSeries x;
  TimeSeries y;
  /// Prescribed lag-0 cross-covariance of the generating process.
  double phi12;
};

namespace detail {

inline constexpr double kSpectralTolerance = 1e-9;

using ComplexVector = std::vector<std::complex<double>>;

inline ComplexVector forward_dft(const std::vector<double>& v) {
  Eigen::FFT<double> fft;
  ComplexVector out;
  fft.fwd(out, v);
  return out;
}

inline ComplexVector inverse_dft(const ComplexVector& v) {
  Eigen::FFT<double> fft;
  ComplexVector out;
  fft.inv(out, v);
  return out;
}

/// Real spectrum of a covariance sequence; rejects non-real or negative
/// spectra beyond the tolerance and clamps small negatives to 0.
inline std::vector<double> power_spectrum(const std::vector<double>& cov, const char* name) {
  const auto s = forward_dft(cov);
  double scale = 1.0;
  for (const auto& v : s) scale = std::max(scale, std::abs(v));
  std::vector<double> out(s.size());
  for (std::size_t q = 0; q < s.size(); ++q) {
    if (std::abs(s[q].imag()) > kSpectralTolerance * scale) {
      throw Error(std::string("invalid spectrum: ") + name + " is not circularly symmetric");
    }
    double re = s[q].real();
    if (re < -kSpectralTolerance) throw Error(std::string("invalid spectrum: ") + name + " has negative spectral density");
    out[q] = std::max(re, 0.0);
  }
  return out;
}

/// cos(alpha) per bin, with the coherence bound enforced.
inline std::vector<double> coherence(const std::vector<double>& sxx, const std::vector<double>& syy,
                                     const std::vector<double>& cxy) {
  const auto sxy = forward_dft(cxy);
  double scale = 1.0;
  for (const auto& v : sxy) scale = std::max(scale, std::abs(v));
  std::vector<double> out(sxy.size());
  for (std::size_t q = 0; q < sxy.size(); ++q) {
    if (std::abs(sxy[q].imag()) > kSpectralTolerance * scale) {
      throw Error("invalid cross-spectrum: cross-covariance is not circularly symmetric");
    }
    const double bound = std::sqrt(sxx[q] * syy[q]);
    const double re = sxy[q].real();
    if (std::abs(re) > bound + kSpectralTolerance * scale) {
      throw Error("invalid cross-spectrum: |S_xy| exceeds sqrt(S_xx S_yy) at bin " + std::to_string(q));
    }
    out[q] = bound > 0.0 ? std::clamp(re / bound, -1.0, 1.0) : 0.0;
  }
  return out;
}

inline std::vector<double> to_real(const ComplexVector& v, InverseMode mode) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = mode == InverseMode::kRealPart ? v[i].real() : std::abs(v[i]);
  return out;
}

}  // namespace detail

/// Checks the spec invariants without generating anything.
inline void validate(const CouplingSpec& spec) {
  detail::require(spec.len >= 2, "coupling spec needs len >= 2");
  detail::require(spec.delay < spec.len, "delay must be smaller than len");
  detail::require(spec.cxx.size() == spec.len && spec.cyy.size() == spec.len && spec.cxy.size() == spec.len,
                  "covariance sequences must have length len");
  const auto sxx = detail::power_spectrum(spec.cxx, "C_xx");
  const auto syy = detail::power_spectrum(spec.cyy, "C_yy");
  detail::coherence(sxx, syy, spec.cxy);
}

/// Generates one coupled pair from auto- and cross-covariance sequences.
/// Deterministic in (spec, seed). Outputs have length len - delay: x drops
/// its first `delay` samples and y its last `delay`, then the trends f1 and
/// f2 are applied pointwise.
inline GeneratedPair spectral_pair_gen(const CouplingSpec& spec, std::uint64_t seed) {
  detail::require(spec.len >= 2, "coupling spec needs len >= 2");
  if (spec.delay >= spec.len) throw Error("delay must be smaller than len");
  detail::require(spec.cxx.size() == spec.len && spec.cyy.size() == spec.len && spec.cxy.size() == spec.len,
                  "covariance sequences must have length len");
  const auto sxx = detail::power_spectrum(spec.cxx, "C_xx");
  const auto syy = detail::power_spectrum(spec.cyy, "C_yy");
  const auto cos_alpha = detail::coherence(sxx, syy, spec.cxy);

  Rng rng(seed);
  const auto u = sample_gaussian(rng, spec.len);
  const auto v = sample_gaussian(rng, spec.len);
  const auto U = detail::forward_dft(u);
  const auto V = detail::forward_dft(v);

  detail::ComplexVector X(spec.len);
  detail::ComplexVector Y(spec.len);
  for (std::size_t q = 0; q < spec.len; ++q) {
    const double ca = cos_alpha[q];
    const double sa = std::sqrt(std::max(0.0, 1.0 - ca * ca));
    const double ax = std::sqrt(sxx[q]);
    X[q] = ax * ca * U[q] + ax * sa * V[q];
    Y[q] = std::sqrt(syy[q]) * U[q];
  }
  const auto xs = detail::to_real(detail::inverse_dft(X), spec.inverse);
  const auto ys = detail::to_real(detail::inverse_dft(Y), spec.inverse);

  const std::size_t out_len = spec.len - spec.delay;
  std::vector<double> x(out_len);
  std::vector<double> y(out_len);
  for (std::size_t t = 0; t < out_len; ++t) {
    x[t] = spec.f1(t + 1, xs[t + spec.delay]);
    y[t] = spec.f2(t + 1, ys[t]);
  }
  return {TimeSeries(std::move(x)), TimeSeries(std::move(y)), spec.cxy.front()};
}

inline void validate(const ScalarCovSpec& spec) {
  detail::require(spec.len >= 2, "scalar spec needs len >= 2");
  detail::require(spec.phi11 > 0.0 && spec.phi22 > 0.0, "invalid covariance matrix: variances must be positive");
  detail::require(std::abs(spec.phi12) <= std::sqrt(spec.phi11 * spec.phi22) * (1.0 + 1e-12),
                  "invalid covariance matrix: |phi12| exceeds sqrt(phi11 phi22)");
}

/// Flat-spectrum coupling: white in time, per-step covariance
/// [[phi11, phi12], [phi12, phi22]].
inline CouplingSpec white_coupling(const ScalarCovSpec& spec) {
  validate(spec);
  CouplingSpec c;
  c.len = spec.len;
  c.cxx.assign(spec.len, 0.0);
  c.cyy.assign(spec.len, 0.0);
  c.cxy.assign(spec.len, 0.0);
  c.cxx[0] = spec.phi11;
  c.cyy[0] = spec.phi22;
  // Clamp the boundary case so rounding cannot push the coherence past 1.
  const double bound = std::sqrt(spec.phi11 * spec.phi22);
  c.cxy[0] = std::clamp(spec.phi12, -bound, bound);
  return c;
}

/// Pair with a white bivariate Gaussian joint law, via the spectral route.
inline GeneratedPair scalar_pair_gen(const ScalarCovSpec& spec, std::uint64_t seed,
                                     InverseMode inverse = InverseMode::kRealPart) {
  auto coupling = white_coupling(spec);
  coupling.inverse = inverse;
  auto pair = spectral_pair_gen(coupling, seed);
  pair.phi12 = spec.phi12;
  return pair;
}

/// Same law as scalar_pair_gen by direct Cholesky mixing in the time domain:
/// x = sqrt(phi11) u, y = (phi12/sqrt(phi11)) u + sqrt(phi22 - phi12^2/phi11) v.
inline GeneratedPair cholesky_pair_gen(const ScalarCovSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  const auto u = sample_gaussian(rng, spec.len);
  const auto v = sample_gaussian(rng, spec.len);
  const double a = std::sqrt(spec.phi11);
  const double b = spec.phi12 / a;
  const double c = std::sqrt(std::max(0.0, spec.phi22 - b * b));
  std::vector<double> x(spec.len);
  std::vector<double> y(spec.len);
  for (std::size_t t = 0; t < spec.len; ++t) {
    x[t] = a * u[t];
    y[t] = b * u[t] + c * v[t];
  }
  return {TimeSeries(std::move(x)), TimeSeries(std::move(y)), spec.phi12};
}

struct LabeledPair {
  GeneratedPair pair;
  double label;
  std::uint64_t seed;
};

/// n_pairs unit-variance pairs with phi12 ~ Uniform[lo, hi]; pair i uses the
/// stream derive_seed(seed, i) for both its label and its drivers.
inline std::vector<LabeledPair> gen_dataset(std::size_t n_pairs, std::size_t len, std::pair<double, double> phi12_range,
                                            std::uint64_t seed, InverseMode inverse = InverseMode::kRealPart) {
  const auto [lo, hi] = phi12_range;
  if (!(lo <= hi)) throw Error("empty phi12 range");
  detail::require(n_pairs >= 1, "n_pairs must be >= 1");
  detail::require(lo >= -1.0 && hi <= 1.0, "phi12 range must lie within [-1, 1] for unit variances");
  std::vector<LabeledPair> out;
  out.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const std::uint64_t pair_seed = derive_seed(seed, i);
    Rng label_rng(derive_seed(pair_seed, 0));
    const double phi12 = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(label_rng);
    ScalarCovSpec spec{1.0, 1.0, phi12, len};
    out.push_back({scalar_pair_gen(spec, derive_seed(pair_seed, 1), inverse), phi12, pair_seed});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preset pairs

enum class PresetKind { kStationary, kShifted, kTrended };

inline PresetKind preset_kind_from_string(const std::string& s) {
  if (s == "stationary") return PresetKind::kStationary;
  if (s == "shifted") return PresetKind::kShifted;
  if (s == "trended") return PresetKind::kTrended;
  throw Error("unknown preset kind '" + s + "'");
}

inline std::string to_string(PresetKind k) {
  switch (k) {
    case PresetKind::kStationary: return "stationary";
    case PresetKind::kShifted: return "shifted";
    case PresetKind::kTrended: return "trended";
  }
  return "?";
}

struct PresetConstants {
  /// Correlation length (frames) of the squared-exponential autocovariance.
  double correlation_length = 3.0;
  /// Coherence between x and y at every frequency.
  double coherence = 0.9;
  /// Angular frequency of the quasi-periodic term added to x (rad/frame).
  double omega = 2.0 * std::numbers::pi / 25.0;
  /// Slope of the linear trend added to y (units/frame).
  double slope = 0.05;
};

/// Smooth stationary coupling: circular squared-exponential autocovariance
/// for both channels and a constant coherence.
inline CouplingSpec smooth_coupling(std::size_t len, const PresetConstants& k = {}) {
  CouplingSpec c;
  c.len = len;
  c.cxx.resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    const double lag = static_cast<double>(std::min(t, len - t));
    c.cxx[t] = std::exp(-0.5 * lag * lag / (k.correlation_length * k.correlation_length));
  }
  c.cyy = c.cxx;
  c.cxy = c.cxx;
  for (double& v : c.cxy) v *= k.coherence;
  return c;
}

inline CouplingSpec preset_spec(PresetKind kind, std::size_t len, const PresetConstants& k = {}) {
  CouplingSpec c = smooth_coupling(len, k);
  switch (kind) {
    case PresetKind::kStationary:
      break;
    case PresetKind::kShifted:
      c.delay = 1;
      break;
    case PresetKind::kTrended: {
      const double omega = k.omega;
      const double slope = k.slope;
      c.f1 = [omega](std::size_t t, double x) { return x + std::sin(omega * static_cast<double>(t)); };
      c.f2 = [slope](std::size_t t, double x) { return x + slope * static_cast<double>(t); };
      break;
    }
  }
  return c;
}

inline GeneratedPair preset_pairs(PresetKind kind, std::uint64_t seed, std::size_t len = 100) {
  return spectral_pair_gen(preset_spec(kind, len), seed);
}

// ---------------------------------------------------------------------------
// Cross-covariance estimation

/// Mean-removed cross-covariance estimate of one pair,
///   (1/(T-|lag|)) sum_t (x[t+lag] - mean x)(y[t] - mean y).
inline double cross_cov(const TimeSeries& x, const TimeSeries& y, long lag) {
  detail::require(x.size() == y.size(), "mismatched lengths");
  const std::size_t n = x.size();
  const std::size_t abs_lag = static_cast<std::size_t>(lag < 0 ? -lag : lag);
  detail::require(abs_lag < n, "lag exceeds series length");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mx += x[t];
    my += y[t];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t t = 0; t + abs_lag < n; ++t) {
    const std::size_t tx = lag >= 0 ? t + abs_lag : t;
    const std::size_t ty = lag >= 0 ? t : t + abs_lag;
    sum += (x[tx] - mx) * (y[ty] - my);
  }
  return sum / static_cast<double>(n - abs_lag);
}

struct EnsembleEstimate {
  double mean;
  /// Monte-Carlo standard error of the mean (sample std / sqrt(M)).
  double standard_error;
};

inline EnsembleEstimate ensemble_cross_cov(const std::vector<TimeSeries>& xs, const std::vector<TimeSeries>& ys,
                                           long lag) {
  if (xs.size() != ys.size()) throw Error("mismatched lengths: ensembles differ in size");
  detail::require(!xs.empty(), "empty ensemble");
  std::vector<double> est(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != xs.front().size()) throw Error("mismatched lengths within ensemble");
    est[i] = cross_cov(xs[i], ys[i], lag);
  }
  const double m = static_cast<double>(est.size());
  double mean = 0.0;
  for (double e : est) mean += e;
  mean /= m;
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean);
  const double se = est.size() > 1 ? std::sqrt(var / (m - 1.0) / m) : 0.0;
  return {mean, se};
}

/// Ensemble-averaged lagged cross-covariance.
inline double empirical_cross_cov(const std::vector<TimeSeries>& xs, const std::vector<TimeSeries>& ys, long lag) {
  return ensemble_cross_cov(xs, ys, lag).mean;
}

// ---------------------------------------------------------------------------
// Latent-driver groups

struct GroupSpec {
  std::size_t members = 3;
  std::size_t channels = 1;
  std::size_t len = 600;
  /// Coupling strength range; the label is the shared-driver variance share.
  std::pair<double, double> coupling_range{0.1, 0.9};
};

/// Groups whose members mix a common latent driver with private noise,
///   m_k = sqrt(rho) z + sqrt(1 - rho) e_k  (per channel),
/// so every member pair has per-step covariance rho, which is the label.
inline std::vector<InteractionSample> gen_group_dataset(std::size_t n_groups, const GroupSpec& spec,
                                                        std::uint64_t seed) {
  const auto [lo, hi] = spec.coupling_range;
  if (!(lo <= hi)) throw Error("empty coupling range");
  detail::require(lo >= 0.0 && hi <= 1.0, "coupling range must lie within [0, 1]");
  detail::require(spec.members >= 2 && spec.channels >= 1 && spec.len >= 2, "invalid group spec");
  std::vector<InteractionSample> out;
  out.reserve(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    Rng rng(derive_seed(seed, g));
    const double rho = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    std::vector<std::vector<double>> drivers;
    for (std::size_t c = 0; c < spec.channels; ++c) drivers.push_back(sample_gaussian(rng, spec.len));
    std::vector<ChannelSet> participants;
    for (std::size_t k = 0; k < spec.members; ++k) {
      ChannelSet set;
      for (std::size_t c = 0; c < spec.channels; ++c) {
        auto noise = sample_gaussian(rng, spec.len);
        for (std::size_t t = 0; t < spec.len; ++t) {
          noise[t] = std::sqrt(rho) * drivers[c][t] + std::sqrt(1.0 - rho) * noise[t];
        }
        set.emplace_back(std::move(noise));
      }
      participants.push_back(std::move(set));
    }
    out.emplace_back(std::move(participants), rho, "g" + std::to_string(g));
  }
  return out;
}

/// Wraps a generated pair as a two-participant, single-channel sample.
inline InteractionSample pair_sample(const GeneratedPair& pair, double label, std::string group_id) {
  return InteractionSample({ChannelSet{pair.x}, ChannelSet{pair.y}}, label, std::move(group_id));
}

}  // namespace synchrony
