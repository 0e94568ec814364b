// Copyright 2026 The Stew Authors.
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

#include "stew/optim.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "test_util.hpp"

namespace stew {
namespace {

using testing::MatD;
using testing::random_mat;

Parameters<double> random_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Parameters<double> p;
  p["encoder/a"] = random_mat(3, 4, rng);
  p["encoder/b"] = random_mat(1, 4, rng);
  p["decoder/c"] = random_mat(2, 2, rng);
  return p;
}

TEST(Schedule, PeakAtWarmupAndInverseSqrtAfter) {
  for (const auto& name : schedule_preset_names()) {
    const auto s = schedule_preset(name);
    const auto w = static_cast<std::uint64_t>(s.warmup_steps);
    EXPECT_DOUBLE_EQ(lr_at(s, w), s.peak_lr) << name;
    EXPECT_DOUBLE_EQ(lr_at(s, 4 * w), s.peak_lr / 2) << name;
    EXPECT_DOUBLE_EQ(lr_at(s, 100 * w), s.peak_lr / 10) << name;
    EXPECT_DOUBLE_EQ(lr_at(s, w / 2), s.peak_lr / 2) << name;
    EXPECT_DOUBLE_EQ(lr_at(s, 1), s.peak_lr / s.warmup_steps) << name;
  }
}

TEST(Schedule, RisesThenFalls) {
  const ScheduleConfig s{1e-3, 50};
  for (std::uint64_t t = 1; t < 50; ++t) EXPECT_LT(lr_at(s, t), lr_at(s, t + 1)) << t;
  for (std::uint64_t t = 50; t < 500; ++t) EXPECT_GT(lr_at(s, t), lr_at(s, t + 1)) << t;
}

TEST(Schedule, Presets) {
  EXPECT_EQ(schedule_preset("stew-100m"), (ScheduleConfig{2e-3, 10000}));
  EXPECT_EQ(schedule_preset("chime-ft-100m"), (ScheduleConfig{1e-4, 2000}));
  EXPECT_EQ(schedule_preset("1b-encoder"), (ScheduleConfig{3e-4, 5000}));
  EXPECT_EQ(schedule_preset("1b-decoder"), (ScheduleConfig{1e-3, 1500}));
  EXPECT_EQ(schedule_preset("chime-ft-1b"), (ScheduleConfig{2.5e-4, 8000}));
  expect_errc([] { schedule_preset("nope"); }, Errc::kInvalidArgument);
  expect_errc([] { lr_at(ScheduleConfig{}, 0); }, Errc::kInvalidArgument, "1-based");
  expect_errc([] { validate(ScheduleConfig{0.0, 10}); }, Errc::kInvalidArgument);
  expect_errc([] { validate(ScheduleConfig{1e-3, 0}); }, Errc::kInvalidArgument);
}

TEST(Schedule, LongestPrefixWins) {
  OptimConfig c;
  c.groups["encoder/"] = {1.0, 1};
  c.groups["encoder/block0/"] = {2.0, 1};
  EXPECT_EQ(schedule_for(c, "encoder/block0/x").peak_lr, 2.0);
  EXPECT_EQ(schedule_for(c, "encoder/block1/x").peak_lr, 1.0);
  EXPECT_EQ(schedule_for(c, "decoder/x"), c.schedule);
}

// Scalar reference Adam, one parameter at a time.
struct RefAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double w, double g, double lr, double b1, double b2, double eps) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

TEST(Adam, MatchesScalarReferenceOverManySteps) {
  OptimConfig cfg;
  cfg.schedule = {1e-2, 5};
  auto params = random_params(1);
  auto state = init_adam(params);
  std::map<std::string, std::vector<RefAdam>> ref;
  auto expected = params;
  for (const auto& [n, w] : params) ref[n].resize(static_cast<std::size_t>(w.size()));
  std::mt19937_64 rng(2);
  for (std::uint64_t t = 1; t <= 20; ++t) {
    Parameters<double> grads;
    for (const auto& [n, w] : params) grads[n] = random_mat(w.rows(), w.cols(), rng);
    for (auto& [n, w] : expected) {
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        w.data()[i] = ref[n][i].step(w.data()[i], grads[n].data()[i], lr_at(cfg.schedule, t), cfg.beta1, cfg.beta2,
                                     cfg.epsilon);
      }
    }
    adam_step(params, state, grads, cfg);
  }
  EXPECT_EQ(state.step, 20u);
  for (const auto& [n, w] : params) EXPECT_LE((w - expected[n]).cwiseAbs().maxCoeff(), 1e-14) << n;
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  OptimConfig cfg;
  cfg.schedule = {1e-3, 1};
  auto params = random_params(3);
  const auto before = params;
  auto state = init_adam(params);
  Parameters<double> grads;
  std::mt19937_64 rng(4);
  for (const auto& [n, w] : params) grads[n] = random_mat(w.rows(), w.cols(), rng);
  adam_step(params, state, grads, cfg);
  for (const auto& [n, w] : params) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double g = grads[n].data()[i];
      EXPECT_NEAR(w.data()[i] - before.at(n).data()[i], -1e-3 * g / (std::abs(g) + cfg.epsilon), 1e-15);
      EXPECT_NEAR(std::abs(w.data()[i] - before.at(n).data()[i]), 1e-3, 1e-3 * 1e-6);
    }
  }
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  OptimConfig cfg;
  auto params = random_params(5);
  const auto before = params;
  auto state = init_adam(params);
  Parameters<double> zero;
  for (const auto& [n, w] : params) zero[n] = MatD::Zero(w.rows(), w.cols());
  for (int i = 0; i < 5; ++i) adam_step(params, state, zero, cfg);
  EXPECT_EQ(params, before);
}

TEST(Adam, L2AddsTwiceWeightTimesLambda) {
  // With L2 the optimizer must behave exactly as if handed grad + 2*lambda*w.
  OptimConfig with_l2, without;
  with_l2.l2_weight = 1e-6;
  auto a = random_params(6), b = a;
  auto sa = init_adam(a), sb = init_adam(b);
  std::mt19937_64 rng(7);
  for (int step = 0; step < 3; ++step) {
    Parameters<double> grads, augmented;
    for (const auto& [n, w] : a) {
      grads[n] = random_mat(w.rows(), w.cols(), rng, 1e-5);
      augmented[n] = grads[n] + 2e-6 * b.at(n);
    }
    adam_step(a, sa, grads, with_l2);
    adam_step(b, sb, augmented, without);
  }
  for (const auto& [n, w] : a) EXPECT_EQ(w, b.at(n)) << n;
  EXPECT_DOUBLE_EQ(l2_penalty(Parameters<double>{{"x", MatD::Constant(2, 2, 3.0)}}, 1e-6), 36e-6);
}

TEST(Adam, GroupSchedulesScaleTheirOwnParameters) {
  OptimConfig cfg;
  cfg.schedule = {1e-4, 1};
  cfg.groups["encoder/"] = {1e-3, 1};
  auto params = random_params(8);
  const auto before = params;
  auto state = init_adam(params);
  Parameters<double> grads;
  for (const auto& [n, w] : params) grads[n] = MatD::Ones(w.rows(), w.cols());
  adam_step(params, state, grads, cfg);
  EXPECT_NEAR((before.at("encoder/a") - params.at("encoder/a")).maxCoeff(), 1e-3, 1e-11);
  EXPECT_NEAR((before.at("decoder/c") - params.at("decoder/c")).maxCoeff(), 1e-4, 1e-12);
}

TEST(Adam, NonFiniteGradientLeavesEverythingUntouched) {
  OptimConfig cfg;
  auto params = random_params(9);
  auto state = init_adam(params);
  Parameters<double> grads;
  for (const auto& [n, w] : params) grads[n] = MatD::Ones(w.rows(), w.cols());
  adam_step(params, state, grads, cfg);
  const auto p_before = params;
  const auto s_before = state;
  grads["encoder/b"](0, 2) = std::numeric_limits<double>::quiet_NaN();
  expect_errc([&] { adam_step(params, state, grads, cfg); }, Errc::kNonFinite, "encoder/b");
  EXPECT_EQ(params, p_before);
  EXPECT_EQ(state.step, s_before.step);
  EXPECT_EQ(state.m, s_before.m);
  EXPECT_EQ(state.v, s_before.v);
  grads.erase("encoder/b");
  expect_errc([&] { adam_step(params, state, grads, cfg); }, Errc::kShapeMismatch, "encoder/b");
}

TEST(Adam, GlobalNormClip) {
  OptimConfig clipped, scaled;
  clipped.grad_clip = 1.0;
  auto a = random_params(10), b = a;
  auto sa = init_adam(a), sb = init_adam(b);
  std::mt19937_64 rng(11);
  Parameters<double> grads;
  for (const auto& [n, w] : a) grads[n] = random_mat(w.rows(), w.cols(), rng, 10.0);
  const double norm = global_grad_norm(grads);
  ASSERT_GT(norm, 1.0);
  auto unit = grads;
  for (auto& [n, g] : unit) g /= norm;
  adam_step(a, sa, grads, clipped);
  adam_step(b, sb, unit, scaled);
  for (const auto& [n, w] : a) EXPECT_LE((w - b.at(n)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Optim, Validation) {
  OptimConfig c;
  EXPECT_NO_THROW(validate(c));
  c.beta2 = 1.0;
  expect_errc([&] { validate(c); }, Errc::kInvalidArgument, "betas");
  c = {};
  c.ema_decay = 1.0;
  expect_errc([&] { validate(c); }, Errc::kInvalidArgument, "ema");
  c = {};
  c.groups["x/"] = {-1.0, 10};
  expect_errc([&] { validate(c); }, Errc::kInvalidArgument);
}

TEST(Ema, OneStepMovesOneTenThousandth) {
  Parameters<double> shadow{{"w", MatD::Zero(1, 1)}}, params{{"w", MatD::Ones(1, 1)}};
  ema_update(shadow, params, 0.9999);
  EXPECT_NEAR(shadow.at("w")(0, 0), 1e-4, 1e-16);
}

TEST(Ema, ClosedFormOverThousandSteps) {
  // s_k = d^k s_0 + (1 - d) * sum_i d^(k - i) p_i
  const double d = 0.9999;
  std::mt19937_64 rng(12);
  Parameters<double> shadow{{"w", random_mat(3, 3, rng)}};
  const MatD s0 = shadow.at("w");
  MatD acc = MatD::Zero(3, 3);
  const int k = 1000;
  for (int i = 1; i <= k; ++i) {
    Parameters<double> p{{"w", random_mat(3, 3, rng)}};
    ema_update(shadow, p, d);
    acc += std::pow(d, k - i) * p.at("w");
  }
  const MatD expected = std::pow(d, k) * s0 + (1 - d) * acc;
  EXPECT_LE((shadow.at("w") - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ema, ShapeMismatch) {
  Parameters<double> shadow{{"w", MatD::Zero(1, 2)}}, params{{"w", MatD::Ones(2, 1)}};
  expect_errc([&] { ema_update(shadow, params, 0.5); }, Errc::kShapeMismatch);
}

}  // namespace
}  // namespace stew
