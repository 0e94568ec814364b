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

#include "stew/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "test_util.hpp"

namespace stew {
namespace {

template <typename T>
Checkpoint<T> sample_checkpoint(bool with_ema) {
  Checkpoint<T> ck;
  ck.config = testing::tiny_model_config();
  ck.config.input_shift = -7.123456789012345;
  ck.config.input_scale = 0.3141592653589793;
  ck.params = init_params<T>(ck.config, 5);
  ck.adam = init_adam(ck.params);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (auto* group : {&ck.adam.m, &ck.adam.v}) {
    for (auto& [name, m] : *group) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(std::abs(n(rng)));
    }
  }
  ck.step = 4000;
  ck.adam.step = 4000;
  if (with_ema) {
    ck.ema = ck.params;
    for (auto& [name, m] : *ck.ema) m.array() += T(0.125);
  }
  return ck;
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

template <typename T>
void expect_same(const Checkpoint<T>& a, const Checkpoint<T>& b) {
  EXPECT_EQ(a.step, b.step);
  EXPECT_EQ(a.adam.step, b.adam.step);
  EXPECT_TRUE(a.config.same_architecture(b.config));
  EXPECT_EQ(a.config.vocab, b.config.vocab);
  EXPECT_EQ(a.config.input_shift, b.config.input_shift);
  EXPECT_EQ(a.config.input_scale, b.config.input_scale);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.adam.m, b.adam.m);
  EXPECT_EQ(a.adam.v, b.adam.v);
  EXPECT_EQ(a.ema.has_value(), b.ema.has_value());
  if (a.ema && b.ema) {
    EXPECT_EQ(*a.ema, *b.ema);
  }
}

TEST(Checkpoint, BitExactRoundTripFloatAndDouble) {
  TempDir dir;
  for (bool ema : {false, true}) {
    const auto f = sample_checkpoint<float>(ema);
    save_checkpoint(dir / "f.ckpt", f);
    expect_same(f, load_checkpoint<float>(dir / "f.ckpt"));
    const auto d = sample_checkpoint<double>(ema);
    save_checkpoint(dir / "d.ckpt", d);
    expect_same(d, load_checkpoint<double>(dir / "d.ckpt"));
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "d.ckpt.tmp"));
}

TEST(Checkpoint, SavingTwiceGivesIdenticalBytes) {
  TempDir dir;
  const auto ck = sample_checkpoint<float>(true);
  save_checkpoint(dir / "a.ckpt", ck);
  save_checkpoint(dir / "b.ckpt", load_checkpoint<float>(dir / "a.ckpt"));
  EXPECT_EQ(read_bytes(dir / "a.ckpt"), read_bytes(dir / "b.ckpt"));
}

TEST(Checkpoint, StepSurvivesAndDrivesTheSchedule) {
  TempDir dir;
  auto ck = sample_checkpoint<double>(false);
  save_checkpoint(dir / "c.ckpt", ck);
  const auto back = load_checkpoint<double>(dir / "c.ckpt");
  ASSERT_EQ(back.adam.step, 4000u);
  // The next update must use the step-4001 rate and bias correction.
  OptimConfig cfg;
  cfg.schedule = {1e-3, 100};
  Parameters<double> grads;
  for (const auto& [n, w] : ck.params) grads[n] = Mat<double>::Ones(w.rows(), w.cols());
  auto p1 = ck.params, p2 = back.params;
  auto s1 = ck.adam, s2 = back.adam;
  adam_step(p1, s1, grads, cfg);
  adam_step(p2, s2, grads, cfg);
  EXPECT_EQ(s2.step, 4001u);
  EXPECT_EQ(p1, p2);
}

TEST(Checkpoint, FloatFileLoadsAsDouble) {
  TempDir dir;
  const auto f = sample_checkpoint<float>(false);
  save_checkpoint(dir / "f.ckpt", f);
  const auto d = load_checkpoint<double>(dir / "f.ckpt");
  for (const auto& [n, m] : f.params) EXPECT_EQ(Mat<double>(m.cast<double>()), d.params.at(n));
}

TEST(Checkpoint, RejectsIncompatibleConfig) {
  TempDir dir;
  const auto ck = sample_checkpoint<float>(false);
  save_checkpoint(dir / "c.ckpt", ck);
  auto other = ck.config;
  other.vocab.push_back("d");
  expect_errc([&] { load_checkpoint<float>(dir / "c.ckpt", other); }, Errc::kConfigMismatch, "vocab size");
  other = ck.config;
  other.vocab[2] = "z";
  expect_errc([&] { load_checkpoint<float>(dir / "c.ckpt", other); }, Errc::kConfigMismatch, "vocab tokens");
  other = ck.config;
  other.encoder_dim = 16;
  expect_errc([&] { load_checkpoint<float>(dir / "c.ckpt", other); }, Errc::kConfigMismatch, "architecture");
  other = ck.config;
  other.dropout = 0.4;  // regularization may differ
  EXPECT_NO_THROW(load_checkpoint<float>(dir / "c.ckpt", other));
}

TEST(Checkpoint, EveryTruncationIsDetected) {
  TempDir dir;
  save_checkpoint(dir / "c.ckpt", sample_checkpoint<float>(true));
  const auto bytes = read_bytes(dir / "c.ckpt");
  std::mt19937_64 rng(3);
  std::vector<std::size_t> cuts = {0, 4, 8, 12, 20, bytes.size() - 4, bytes.size() - 1};
  for (int i = 0; i < 40; ++i) cuts.push_back(std::uniform_int_distribution<std::size_t>(0, bytes.size() - 1)(rng));
  for (std::size_t cut : cuts) {
    write_bytes(dir / "t.ckpt", std::vector<char>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut)));
    try {
      load_checkpoint<float>(dir / "t.ckpt");
      ADD_FAILURE() << "cut at " << cut << " loaded";
    } catch (const Error& e) {
      // Cuts inside the config text surface as a parse error; all others as truncation.
      EXPECT_TRUE(e.code() == Errc::kTruncatedFile || e.code() == Errc::kParse) << cut << ": " << e.what();
    }
  }
}

TEST(Checkpoint, HeaderErrors) {
  TempDir dir;
  expect_errc([&] { load_checkpoint<float>(dir / "missing.ckpt"); }, Errc::kMissingFile);
  save_checkpoint(dir / "c.ckpt", sample_checkpoint<float>(false));
  auto bytes = read_bytes(dir / "c.ckpt");
  auto bad = bytes;
  bad[0] = 'X';
  write_bytes(dir / "b.ckpt", bad);
  expect_errc([&] { load_checkpoint<float>(dir / "b.ckpt"); }, Errc::kMalformedHeader);
  bad = bytes;
  bad[8] = 9;
  write_bytes(dir / "b.ckpt", bad);
  expect_errc([&] { load_checkpoint<float>(dir / "b.ckpt"); }, Errc::kUnsupportedEncoding, "version");
  bad = bytes;
  bad[bad.size() - 1] = '?';
  write_bytes(dir / "b.ckpt", bad);
  expect_errc([&] { load_checkpoint<float>(dir / "b.ckpt"); }, Errc::kTruncatedFile, "end marker");
}

}  // namespace
}  // namespace stew
