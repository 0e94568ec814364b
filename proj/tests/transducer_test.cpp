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

#include "stew/transducer.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "stew/decode.hpp"
#include "test_util.hpp"

namespace stew {
namespace {

using testing::MatD;
using testing::random_mat;

struct Instance {
  MatD logits;
  int frames;
  std::vector<int> labels;
};

Instance random_instance(std::mt19937_64& rng, int max_t, int max_u, int max_v, double scale = 1.0) {
  const int t = std::uniform_int_distribution<int>(1, max_t)(rng);
  const int u = std::uniform_int_distribution<int>(0, max_u)(rng);
  const int v = std::uniform_int_distribution<int>(2, max_v)(rng);
  Instance in{random_mat(t * (u + 1), v, rng, scale), t, {}};
  for (int i = 0; i < u; ++i) in.labels.push_back(std::uniform_int_distribution<int>(1, v - 1)(rng));
  return in;
}

TEST(RnntLoss, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto in = random_instance(rng, 5, 4, 6, i % 5 == 0 ? 8.0 : 1.0);
    const double fast = rnnt_loss(in.logits, in.frames, in.labels).nll;
    const double slow = rnnt_loss_bruteforce(in.logits, in.frames, in.labels);
    EXPECT_NEAR(fast, slow, 1e-9 * std::max(1.0, std::abs(slow))) << "instance " << i;
  }
}

TEST(RnntLoss, UniformLogitsGiveClosedForm) {
  // Every alignment has probability V^-(T+U).
  for (int t : {1, 2, 5}) {
    for (int u : {0, 1, 3}) {
      const int v = 4;
      std::vector<int> labels(static_cast<std::size_t>(u), 1);
      const MatD z = MatD::Zero(t * (u + 1), v);
      const double expected = -(std::log(static_cast<double>(rnnt_path_count(t, u))) - (t + u) * std::log(v));
      EXPECT_NEAR(rnnt_loss(z, t, labels).nll, expected, 1e-12);
    }
  }
}

TEST(RnntLoss, PathCount) {
  EXPECT_EQ(rnnt_path_count(1, 0), 1u);
  EXPECT_EQ(rnnt_path_count(1, 5), 1u);
  EXPECT_EQ(rnnt_path_count(3, 2), 6u);   // C(4, 2)
  EXPECT_EQ(rnnt_path_count(4, 3), 20u);  // C(6, 3)
  EXPECT_EQ(rnnt_path_count(10, 10), 92378u);
}

TEST(RnntLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 30; ++i) {
    const auto in = random_instance(rng, 4, 3, 5, 2.0);
    const auto r = rnnt_loss(in.logits, in.frames, in.labels);
    MatD numeric(in.logits.rows(), in.logits.cols());
    MatD probe = in.logits;
    for (Eigen::Index k = 0; k < probe.size(); ++k) {
      const double orig = probe.data()[k];
      probe.data()[k] = orig + 1e-6;
      const double up = rnnt_loss(probe, in.frames, in.labels).nll;
      probe.data()[k] = orig - 1e-6;
      const double down = rnnt_loss(probe, in.frames, in.labels).nll;
      probe.data()[k] = orig;
      numeric.data()[k] = (up - down) / 2e-6;
    }
    EXPECT_LE((r.grad - numeric).norm() / std::max(numeric.norm(), 1e-4), 1e-6) << i;
  }
}

TEST(RnntLoss, GradientRowsSumToZero) {
  // Flow conservation: posterior mass entering a node leaves along its arcs.
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto in = random_instance(rng, 6, 5, 7, 3.0);
    const auto r = rnnt_loss(in.logits, in.frames, in.labels);
    for (Eigen::Index row = 0; row < r.grad.rows(); ++row) EXPECT_NEAR(r.grad.row(row).sum(), 0.0, 1e-12);
  }
}

TEST(RnntLoss, NonNegativeAndFiniteForExtremeLogits) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto in = random_instance(rng, 30, 10, 8, 200.0);
    const auto r = rnnt_loss(in.logits, in.frames, in.labels);
    EXPECT_TRUE(std::isfinite(r.nll));
    EXPECT_GE(r.nll, 0.0);
    EXPECT_TRUE(r.grad.allFinite());
  }
}

TEST(RnntLoss, FloatAgreesWithDouble) {
  std::mt19937_64 rng(5);
  const auto in = random_instance(rng, 20, 6, 10);
  const Mat<float> lf = in.logits.cast<float>();
  const auto rf = rnnt_loss(lf, in.frames, in.labels);
  const auto rd = rnnt_loss(MatD(lf.cast<double>()), in.frames, in.labels);
  EXPECT_NEAR(rf.nll, rd.nll, 1e-4 * rd.nll);
}

TEST(RnntLoss, GraphNodeIsNonNegativeInFloat) {
  // A near-certain alignment: the recursion must not round below zero.
  const int t = 40;
  Mat<float> z = Mat<float>::Zero(t, 3);
  z.col(0).setConstant(60.0f);
  Graph<float> g;
  Var l = g.owned_leaf(z);
  Var loss = rnnt_loss_node(g, l, t, {});
  EXPECT_GE(g.value(loss)(0, 0), 0.0f);
  g.backward(loss);
  EXPECT_TRUE(g.grad(l).allFinite());
}

TEST(RnntLoss, Errors) {
  const MatD z = MatD::Zero(6, 4);
  expect_errc([&] { rnnt_loss(z, 3, std::vector<int>{0}); }, Errc::kInvalidArgument, "blank");
  expect_errc([&] { rnnt_loss(z, 3, std::vector<int>{4}); }, Errc::kInvalidArgument, "vocabulary");
  expect_errc([&] { rnnt_loss(z, 2, std::vector<int>{1}); }, Errc::kShapeMismatch, "rows");
  expect_errc([&] { rnnt_loss(MatD(0, 4), 0, std::vector<int>{}); }, Errc::kInvalidArgument, "frame");
  MatD bad = z;
  bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
  expect_errc([&] { rnnt_loss(bad, 3, std::vector<int>{1}); }, Errc::kNonFinite);
  bad(2, 1) = std::numeric_limits<double>::infinity();
  expect_errc([&] { rnnt_loss(bad, 3, std::vector<int>{1}); }, Errc::kNonFinite);
  const MatD big = MatD::Zero(8 * 6, 3);
  expect_errc([&] { rnnt_loss_bruteforce(big, 8, std::vector<int>{1, 1, 1, 1, 1}); }, Errc::kSizeGuard);
  EXPECT_NO_THROW(rnnt_loss(big, 8, std::vector<int>{1, 1, 1, 1, 1}));
  LogitLattice<double> lat{z, 3, 1};
  expect_errc([&] { rnnt_loss(lat, std::vector<int>{1, 2}); }, Errc::kShapeMismatch);
}

class GreedyDecodeTest : public ::testing::Test {
 protected:
  ModelConfig cfg = testing::tiny_model_config();
  ConformerTransducer<double> model{cfg};
  Parameters<double> params = [&] {
    auto p = init_params<double>(cfg, 21);
    // Sharpen the joint so labels win often enough to exercise emission.
    p.at("decoder/joint/out/weight") *= 6.0;
    p.at("decoder/joint/out/bias")(0, kBlank) = -1.0;
    return p;
  }();

  static FeatureMatrix features(int frames, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, 1.0f);
    FeatureMatrix f;
    f.frames = frames;
    f.channels = 6;
    for (int i = 0; i < frames * 6; ++i) f.values.push_back(n(rng));
    return f;
  }

  // Oracle: walk the full joint lattice for the hypothesis, always taking
  // the argmax arc, and recompute the tokens and score.
  void check_against_lattice(const FeatureMatrix& f, int cap) {
    const Hypothesis hyp = greedy_decode(model, params, f, cap);
    const auto enc = encoder_forward(cfg, {f}, params, Mode::kEval, nullptr);
    const auto lat = transducer_logits(cfg, enc, {hyp.tokens}, params);
    const MatD lp = detail::log_softmax_rows(lat[0].values);
    const int U = static_cast<int>(hyp.tokens.size());
    std::vector<int> walked;
    double score = 0;
    int u = 0;
    for (int t = 0; t < lat[0].frames; ++t) {
      for (int s = 0; s < cap; ++s) {
        Eigen::Index best = 0;
        lp.row(t * (U + 1) + u).maxCoeff(&best);
        score += lp(t * (U + 1) + u, best);
        if (best == kBlank) break;
        walked.push_back(static_cast<int>(best));
        ASSERT_LT(u, U) << "walk emitted more tokens than the decoder";
        ++u;
      }
    }
    EXPECT_EQ(walked, hyp.tokens);
    EXPECT_NEAR(score, hyp.score, 1e-9);
  }
};

TEST_F(GreedyDecodeTest, AgreesWithFullLatticeWalk) {
  std::size_t emitted = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = features(12 + static_cast<int>(seed), seed);
    check_against_lattice(f, kMaxSymbolsPerFrame);
    emitted += greedy_decode(model, params, f).tokens.size();
  }
  EXPECT_GT(emitted, 0u);
}

TEST_F(GreedyDecodeTest, SymbolCapBoundsOutputLength) {
  auto& bias = params.at("decoder/joint/out/bias");
  bias(0, kBlank) = -50.0;  // blank never wins
  const auto f = features(9, 3);
  const int frames = encoder_length(9, cfg.subsample_factor);
  for (int cap : {1, 2, 3}) {
    EXPECT_EQ(greedy_decode(model, params, f, cap).tokens.size(), static_cast<std::size_t>(frames * cap));
    check_against_lattice(f, cap);
  }
}

TEST_F(GreedyDecodeTest, EmptyInputAndDeterminism) {
  EXPECT_TRUE(greedy_decode(model, params, FeatureMatrix{{}, 0, 6}).tokens.empty());
  const auto f = features(20, 8);
  const auto a = greedy_decode(model, params, f), b = greedy_decode(model, params, f);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.score, b.score);
  EXPECT_LE(a.score, 0.0);
}

TEST(Tokens, ToText) {
  const std::vector<std::string> vocab = {kBlankToken, "a", "bc"};
  EXPECT_EQ(tokens_to_text(vocab, {2, 1, 2}), "bc a bc");
  EXPECT_EQ(tokens_to_text(vocab, {}), "");
}

}  // namespace
}  // namespace stew
