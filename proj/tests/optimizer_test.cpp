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

#include "synchrony/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace synchrony {
namespace {

TEST(Clip, RescalesAboveThreshold) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_by_global_norm(g, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(g[0], 0.6);
  EXPECT_DOUBLE_EQ(g[1], 0.8);
}

TEST(Clip, LeavesSmallGradientsAlone) {
  std::vector<double> g{3.0, 4.0};
  clip_by_global_norm(g, 10.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  clip_by_global_norm(g, 0.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
}

TEST(Optimizer, ZeroGradientLeavesParameters) {
  for (auto kind : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    Optimizer opt({.kind = kind});
    std::vector<double> p{0.25, -1.0}, g{0.0, 0.0};
    opt.step(p, g);
    EXPECT_EQ(p, (std::vector<double>{0.25, -1.0}));
  }
}

TEST(Sgd, ScalarExample) {
  Optimizer opt({.kind = OptimizerKind::kSgd, .learning_rate = 0.1});
  std::vector<double> p{0.0}, g{1.0};
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(p[0], -0.1);
}

TEST(Clip, NormTenToOne) {
  std::vector<double> g{6.0, 8.0};
  clip_by_global_norm(g, 1.0);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-15);
}

TEST(Sgd, PlainStep) {
  Optimizer opt({.kind = OptimizerKind::kSgd, .learning_rate = 0.1, .clip_norm = 0.0});
  std::vector<double> p{1.0, -2.0}, g{0.5, -1.0};
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(p[0], 0.95);
  EXPECT_DOUBLE_EQ(p[1], -1.9);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Optimizer opt({.kind = OptimizerKind::kAdam, .learning_rate = 0.01, .clip_norm = 0.0});
  std::vector<double> p{0.0, 0.0, 0.0}, g{2.0, -0.001, 0.0};
  opt.step(p, g);
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-6);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Adam, MatchesReferenceRecurrence) {
  const OptimizerConfig cfg{.kind = OptimizerKind::kAdam, .learning_rate = 0.05, .clip_norm = 0.0};
  Optimizer opt(cfg);
  std::vector<double> p{1.5};
  double m = 0.0, v = 0.0, ref = 1.5;
  for (int t = 1; t <= 20; ++t) {
    std::vector<double> g{2.0 * p[0]};
    const double gr = 2.0 * ref;
    m = cfg.beta1 * m + (1 - cfg.beta1) * gr;
    v = cfg.beta2 * v + (1 - cfg.beta2) * gr * gr;
    ref -= cfg.learning_rate * (m / (1 - std::pow(cfg.beta1, t))) /
           (std::sqrt(v / (1 - std::pow(cfg.beta2, t))) + cfg.epsilon);
    opt.step(p, g);
    EXPECT_NEAR(p[0], ref, 1e-14);
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  Optimizer opt({.kind = OptimizerKind::kAdam, .learning_rate = 0.05});
  std::vector<double> p{3.0, -2.0};
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> g{2.0 * (p[0] - 1.0), 8.0 * (p[1] + 0.5)};
    opt.step(p, g);
  }
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], -0.5, 1e-3);
}

TEST(Optimizer, ClipsBeforeUpdating) {
  Optimizer opt({.kind = OptimizerKind::kSgd, .learning_rate = 1.0, .clip_norm = 1.0});
  std::vector<double> p{0.0, 0.0}, g{30.0, 40.0};
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(p[0], -0.6);
  EXPECT_DOUBLE_EQ(p[1], -0.8);
  std::vector<double> short_grad{1.0};
  EXPECT_THROW(opt.step(p, short_grad), Error);
}

TEST(OptimizerKind, StringRoundTrip) {
  EXPECT_EQ(optimizer_kind_from_string("sgd"), OptimizerKind::kSgd);
  EXPECT_EQ(to_string(OptimizerKind::kAdam), "adam");
  EXPECT_THROW(optimizer_kind_from_string("rmsprop"), Error);
}

}  // namespace
}  // namespace synchrony
