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

#include "synchrony/datagen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace synchrony {
namespace {

struct Ensemble {
  std::vector<TimeSeries> xs;
  std::vector<TimeSeries> ys;
};

template <typename Gen>
Ensemble ensemble(std::size_t m, Gen&& gen) {
  Ensemble e;
  for (std::size_t i = 0; i < m; ++i) {
    auto p = gen(derive_seed(12345, i));
    e.xs.push_back(std::move(p.x));
    e.ys.push_back(std::move(p.y));
  }
  return e;
}

/// Expected value of the mean-removed lag-0 estimator for a circularly
/// stationary process: C(0) - (1/T) sum_tau C(tau).
double expected_lag0_estimate(const std::vector<double>& cxy) {
  const double total = std::accumulate(cxy.begin(), cxy.end(), 0.0);
  return cxy.front() - total / static_cast<double>(cxy.size());
}

TEST(SpectralPairGen, ZeroCrossCovarianceRecovered) {
  auto spec = smooth_coupling(256);
  std::fill(spec.cxy.begin(), spec.cxy.end(), 0.0);
  const auto e = ensemble(5000, [&](std::uint64_t s) { return spectral_pair_gen(spec, s); });
  const auto est = ensemble_cross_cov(e.xs, e.ys, 0);
  EXPECT_LE(std::abs(est.mean), 3.0 * est.standard_error) << est.mean << " se " << est.standard_error;
}

TEST(SpectralPairGen, ColoredSpecRecoversPrescribedCovariance) {
  const auto spec = smooth_coupling(256);
  const auto e = ensemble(5000, [&](std::uint64_t s) { return spectral_pair_gen(spec, s); });
  const auto est = ensemble_cross_cov(e.xs, e.ys, 0);
  const double expected = expected_lag0_estimate(spec.cxy);
  EXPECT_LE(std::abs(est.mean - expected), 3.0 * est.standard_error)
      << "mean " << est.mean << " expected " << expected << " se " << est.standard_error;
  const auto auto_x = ensemble_cross_cov(e.xs, e.xs, 0);
  EXPECT_LE(std::abs(auto_x.mean - expected_lag0_estimate(spec.cxx)), 3.0 * auto_x.standard_error);
}

TEST(SpectralPairGen, NoTrimmingWithoutDelay) {
  const auto p = spectral_pair_gen(smooth_coupling(100), 1);
  EXPECT_EQ(p.x.size(), 100u);
  EXPECT_EQ(p.y.size(), 100u);
}

TEST(SpectralPairGen, PerfectCoherenceSharesOneDriver) {
  auto spec = smooth_coupling(128);
  spec.cyy = spec.cxx;
  spec.cxy = spec.cxx;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = spectral_pair_gen(spec, seed);
    for (std::size_t t = 0; t < p.x.size(); ++t) EXPECT_NEAR(p.x[t], p.y[t], 1e-12);
  }
}

TEST(SpectralPairGen, DelayTrimsLeadingXAndTrailingY) {
  const auto base = smooth_coupling(120);
  for (std::size_t d : {1u, 5u, 37u}) {
    auto delayed = base;
    delayed.delay = d;
    const auto p0 = spectral_pair_gen(base, 99);
    const auto pd = spectral_pair_gen(delayed, 99);
    ASSERT_EQ(pd.x.size(), 120 - d);
    for (std::size_t t = 0; t < pd.x.size(); ++t) {
      EXPECT_EQ(pd.x[t], p0.x[t + d]);
      EXPECT_EQ(pd.y[t], p0.y[t]);
    }
  }
}

TEST(SpectralPairGen, DeterministicInSeed) {
  const auto spec = smooth_coupling(64);
  EXPECT_EQ(spectral_pair_gen(spec, 5).x, spectral_pair_gen(spec, 5).x);
  EXPECT_EQ(spectral_pair_gen(spec, 5).y, spectral_pair_gen(spec, 5).y);
  EXPECT_NE(spectral_pair_gen(spec, 5).x, spectral_pair_gen(spec, 6).x);
}

TEST(SpectralPairGen, RejectsInvalidSpecs) {
  auto spec = smooth_coupling(64);
  auto too_coherent = spec;
  for (auto& v : too_coherent.cxy) v *= 2.0;
  try {
    spectral_pair_gen(too_coherent, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("invalid cross-spectrum"), std::string::npos);
  }
  auto delayed = spec;
  delayed.delay = 64;
  EXPECT_THROW(spectral_pair_gen(delayed, 0), Error);

  auto negative = spec;
  std::fill(negative.cxx.begin(), negative.cxx.end(), 0.0);
  negative.cxx[0] = 1.0;
  negative.cxx[1] = 1.0;
  negative.cxx[63] = 1.0;  // spectrum 1 + 2 cos(w) dips to -1
  std::fill(negative.cxy.begin(), negative.cxy.end(), 0.0);
  EXPECT_THROW(spectral_pair_gen(negative, 0), Error);

  auto asymmetric = spec;
  std::fill(asymmetric.cxy.begin(), asymmetric.cxy.end(), 0.0);
  asymmetric.cxy[1] = 0.3;
  EXPECT_THROW(spectral_pair_gen(asymmetric, 0), Error);
}

TEST(SpectralPairGen, TinyNegativeSpectraAreClamped) {
  auto spec = smooth_coupling(64);
  spec.cxx[0] -= 1e-12;  // pushes some bins a hair below zero at most
  EXPECT_NO_THROW(validate(spec));
}

TEST(SpectralPairGen, MagnitudeModeIsNonNegative) {
  auto spec = smooth_coupling(100);
  spec.inverse = InverseMode::kMagnitude;
  const auto p = spectral_pair_gen(spec, 3);
  for (std::size_t t = 0; t < p.x.size(); ++t) {
    EXPECT_GE(p.x[t], 0.0);
    EXPECT_GE(p.y[t], 0.0);
  }
  auto real = spec;
  real.inverse = InverseMode::kRealPart;
  const auto q = spectral_pair_gen(real, 3);
  for (std::size_t t = 0; t < p.x.size(); ++t) EXPECT_NEAR(p.x[t], std::abs(q.x[t]), 1e-12);
}

TEST(ScalarPairGen, IdentityCovarianceIsIndependent) {
  const std::size_t n = 100000;
  const auto p = scalar_pair_gen({1.0, 1.0, 0.0, n}, 17);
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  EXPECT_LT(std::abs(cross_cov(p.x, p.y, 0)), bound);
  EXPECT_NEAR(cross_cov(p.x, p.x, 0), 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(cross_cov(p.y, p.y, 0), 1.0, 3.0 * std::sqrt(2.0 / n));
}

TEST(ScalarPairGen, PerfectCorrelationGivesIdenticalSeries) {
  const auto p = scalar_pair_gen({1.0, 1.0, 1.0, 500}, 2);
  EXPECT_EQ(p.x, p.y);
}

TEST(ScalarPairGen, RecoversModerateCovariance) {
  const auto p = scalar_pair_gen({1.0, 1.0, 0.6, 100000}, 23);
  const double c = cross_cov(p.x, p.y, 0);
  EXPECT_GE(c, 0.59);
  EXPECT_LE(c, 0.61);
}

TEST(ScalarPairGen, RejectsInvalidMatrix) {
  EXPECT_THROW(scalar_pair_gen({1.0, 1.0, 1.5, 10}, 0), Error);
  EXPECT_THROW(scalar_pair_gen({0.0, 1.0, 0.0, 10}, 0), Error);
}

TEST(ScalarPairGen, SpectralAndCholeskyRoutesAgree) {
  const ScalarCovSpec spec{2.0, 0.5, 0.3, 200};
  const auto a = ensemble(3000, [&](std::uint64_t s) { return scalar_pair_gen(spec, s); });
  const auto b = ensemble(3000, [&](std::uint64_t s) { return cholesky_pair_gen(spec, derive_seed(s, 7)); });
  for (auto [lhs, rhs] : {std::pair{&a.xs, &a.ys}, std::pair{&a.xs, &a.xs}, std::pair{&a.ys, &a.ys}}) {
    const auto ea = ensemble_cross_cov(*lhs, *rhs, 0);
    const auto& bl = lhs == &a.xs ? b.xs : b.ys;
    const auto& br = rhs == &a.xs ? b.xs : b.ys;
    const auto eb = ensemble_cross_cov(bl, br, 0);
    const double se = std::hypot(ea.standard_error, eb.standard_error);
    EXPECT_LE(std::abs(ea.mean - eb.mean), 3.0 * se) << ea.mean << " vs " << eb.mean;
  }
}

TEST(GenDataset, PaperScaleShapeAndRange) {
  const auto d = gen_dataset(100, 1000, {0.1, 0.9}, 7);
  ASSERT_EQ(d.size(), 100u);
  for (const auto& p : d) {
    EXPECT_GE(p.label, 0.1);
    EXPECT_LE(p.label, 0.9);
    EXPECT_EQ(p.pair.x.size(), 1000u);
    EXPECT_EQ(p.pair.phi12, p.label);
  }
}

TEST(GenDataset, SingletonAndDeterminism) {
  EXPECT_EQ(gen_dataset(1, 50, {0.1, 0.9}, 1).size(), 1u);
  const auto a = gen_dataset(5, 64, {0.1, 0.9}, 42);
  const auto b = gen_dataset(5, 64, {0.1, 0.9}, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(a[i].pair.x, b[i].pair.x);
    EXPECT_EQ(a[i].pair.y, b[i].pair.y);
  }
}

TEST(GenDataset, PairsDoNotDependOnCount) {
  const auto small = gen_dataset(3, 64, {0.1, 0.9}, 42);
  const auto large = gen_dataset(8, 64, {0.1, 0.9}, 42);
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i].pair.x, large[i].pair.x);
}

TEST(GenDataset, RejectsEmptyRange) {
  EXPECT_THROW(gen_dataset(10, 64, {0.9, 0.1}, 0), Error);
  EXPECT_THROW(gen_dataset(10, 64, {0.1, 1.5}, 0), Error);
}

TEST(EmpiricalCrossCov, SelfCovarianceIsMeanVariance) {
  const auto e = ensemble(20, [](std::uint64_t s) { return scalar_pair_gen({1.0, 1.0, 0.2, 50}, s); });
  double mean_var = 0.0;
  for (const auto& x : e.xs) {
    const auto v = x.values();
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double t : v) ss += (t - m) * (t - m);
    mean_var += ss / static_cast<double>(v.size());
  }
  mean_var /= static_cast<double>(e.xs.size());
  EXPECT_NEAR(empirical_cross_cov(e.xs, e.xs, 0), mean_var, 1e-12);
}

TEST(EmpiricalCrossCov, IndependentWhiteNoiseIsSmall) {
  const auto p = cholesky_pair_gen({1.0, 1.0, 0.0, 100000}, 5);
  EXPECT_LT(std::abs(empirical_cross_cov({p.x}, {p.y}, 0)), 3.0 / std::sqrt(1e5));
}

TEST(EmpiricalCrossCov, AlternatingAntiPhase) {
  EXPECT_DOUBLE_EQ(empirical_cross_cov({TimeSeries({1, -1, 1, -1})}, {TimeSeries({-1, 1, -1, 1})}, 0), -1.0);
}

TEST(EmpiricalCrossCov, LagAlignsShiftedCopies) {
  // y[t] = x[t + 2], so cov(x[t + lag], y[t]) peaks at lag = 2.
  const auto p = cholesky_pair_gen({1.0, 1.0, 0.0, 5002}, 8);
  std::vector<double> x(p.x.values().begin(), p.x.values().begin() + 5000);
  std::vector<double> y(p.x.values().begin() + 2, p.x.values().begin() + 5002);
  const TimeSeries xs(x);
  const TimeSeries ys(y);
  EXPECT_GT(cross_cov(xs, ys, 2), 0.9);
  EXPECT_LT(std::abs(cross_cov(xs, ys, 0)), 0.1);
  EXPECT_LT(std::abs(cross_cov(xs, ys, -2)), 0.1);
}

TEST(EmpiricalCrossCov, MismatchedLengthsThrow) {
  EXPECT_THROW(empirical_cross_cov({TimeSeries({1, 2})}, {TimeSeries({1, 2, 3})}, 0), Error);
  EXPECT_THROW(empirical_cross_cov({TimeSeries({1, 2})}, {}, 0), Error);
}

TEST(PresetPairs, Lengths) {
  const auto shifted = preset_pairs(PresetKind::kShifted, 1, 100);
  EXPECT_EQ(shifted.x.size(), 99u);
  EXPECT_EQ(shifted.y.size(), 99u);
  const auto stationary = preset_pairs(PresetKind::kStationary, 1, 100);
  EXPECT_EQ(stationary.x.size(), 100u);
  EXPECT_EQ(stationary.y.size(), 100u);
  EXPECT_THROW(preset_kind_from_string("sideways"), Error);
}

TEST(PresetPairs, TrendedMatchesStationaryAfterRemovingTrends) {
  const PresetConstants k;
  std::vector<TimeSeries> tx, ty, sx, sy;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto t = preset_pairs(PresetKind::kTrended, seed, 100);
    const auto s = preset_pairs(PresetKind::kStationary, seed + 100000, 100);
    std::vector<double> x(100), y(100);
    for (std::size_t i = 0; i < 100; ++i) {
      x[i] = t.x[i] - std::sin(k.omega * static_cast<double>(i + 1));
      y[i] = t.y[i] - k.slope * static_cast<double>(i + 1);
    }
    tx.emplace_back(std::move(x));
    ty.emplace_back(std::move(y));
    sx.push_back(s.x);
    sy.push_back(s.y);
  }
  const auto a = ensemble_cross_cov(tx, ty, 0);
  const auto b = ensemble_cross_cov(sx, sy, 0);
  EXPECT_LE(std::abs(a.mean - b.mean), 3.0 * std::hypot(a.standard_error, b.standard_error));
}

TEST(GroupDataset, MembersShareDriverCovariance) {
  GroupSpec spec;
  spec.len = 4000;
  spec.coupling_range = {0.7, 0.7};
  const auto groups = gen_group_dataset(3, spec, 1);
  ASSERT_EQ(groups.size(), 3u);
  for (const auto& g : groups) {
    EXPECT_EQ(g.n_participants(), 3u);
    EXPECT_DOUBLE_EQ(g.label(), 0.7);
    EXPECT_NEAR(cross_cov(g.channel(0, 0), g.channel(1, 0), 0), 0.7, 0.06);
    EXPECT_NEAR(cross_cov(g.channel(1, 0), g.channel(2, 0), 0), 0.7, 0.06);
  }
}

}  // namespace
}  // namespace synchrony
