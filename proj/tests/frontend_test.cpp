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

#include "stew/frontend.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace stew {
namespace {

AudioSegment tone(double hz, std::size_t n, double amp = 0.5) {
  AudioSegment s;
  s.sample_rate = 16000;
  for (std::size_t i = 0; i < n; ++i) {
    s.samples.push_back(static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / 16000)));
  }
  return s;
}

AudioSegment noise(std::size_t n, std::uint64_t seed) {
  AudioSegment s;
  s.sample_rate = 16000;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-0.4f, 0.4f);
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(u(rng));
  return s;
}

TEST(LogMel, EightyChannelsByDefault) {
  EXPECT_EQ(log_mel(noise(4000, 1)).channels, 80);
}

TEST(LogMel, FrameCountFormula) {
  EXPECT_EQ(log_mel(noise(16000, 1)).frames, 98);  // floor((16000 - 400) / 160) + 1
  EXPECT_EQ(log_mel(noise(399, 1)).frames, 0);
  EXPECT_EQ(log_mel(noise(400, 1)).frames, 1);
  EXPECT_EQ(log_mel(noise(559, 1)).frames, 1);
  EXPECT_EQ(log_mel(noise(560, 1)).frames, 2);
  for (std::size_t n : {0ul, 1ul, 401ul, 12345ul, 48000ul}) {
    const int expected = n < 400 ? 0 : static_cast<int>((n - 400) / 160) + 1;
    EXPECT_EQ(log_mel(noise(n, 2)).frames, expected) << n;
  }
}

TEST(LogMel, SilenceSitsOnTheFloor) {
  AudioSegment s;
  s.sample_rate = 16000;
  s.samples.assign(16000, 0.0f);
  const auto f = log_mel(s);
  ASSERT_EQ(f.frames, 98);
  for (float v : f.values) EXPECT_EQ(v, static_cast<float>(std::log(1e-10)));
}

TEST(LogMel, ValuesNeverBelowLogFloor) {
  const auto f = log_mel(noise(8000, 3));
  for (float v : f.values) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, static_cast<float>(std::log(1e-10)));
  }
}

TEST(LogMel, DoublingAmplitudeAddsLogFour) {
  AudioSegment a = noise(8000, 4);
  AudioSegment b = a;
  for (float& v : b.samples) v *= 2.0f;
  const auto fa = log_mel(a), fb = log_mel(b);
  const float floor = static_cast<float>(std::log(1e-10));
  for (std::size_t i = 0; i < fa.values.size(); ++i) {
    if (fa.values[i] <= floor + 1.0f) continue;
    EXPECT_NEAR(fb.values[i] - fa.values[i], std::log(4.0), 1e-4);
  }
}

TEST(LogMel, ToneAtChannelCenterPeaksInThatChannel) {
  const FrontendConfig cfg;
  const MelFilterbank bank(cfg, 16000);
  // Low channels are only a few FFT bins wide and the Hann main lobe leaks
  // a tone into neighbours; check channels whose triangle spans >= 4 bins.
  int checked = 0;
  for (int c = 0; c < bank.channels(); ++c) {
    const double width_hz = (c + 1 < bank.channels() ? bank.center_hz(c + 1) : cfg.mel_high_hz) -
                            (c > 0 ? bank.center_hz(c - 1) : cfg.mel_low_hz);
    if (width_hz < 4.0 * 16000 / cfg.fft_size) continue;
    const auto f = log_mel(tone(bank.center_hz(c), 4000), cfg);
    for (int t = 0; t < f.frames; ++t) {
      int best = 0;
      for (int k = 1; k < f.channels; ++k) {
        if (f.at(t, k) > f.at(t, best)) best = k;
      }
      EXPECT_EQ(best, c) << "frame " << t << " tone " << bank.center_hz(c);
    }
    ++checked;
  }
  EXPECT_GE(checked, 40);
}

TEST(LogMel, Deterministic) {
  const auto s = noise(5000, 9);
  EXPECT_EQ(log_mel(s).values, log_mel(s).values);
}

TEST(LogMel, MatchesDirectComputation) {
  // Independent oracle: direct DFT of one Hann-windowed frame.
  const FrontendConfig cfg;
  const auto s = noise(400, 5);
  const auto f = log_mel(s, cfg);
  ASSERT_EQ(f.frames, 1);
  const MelFilterbank bank(cfg, 16000);
  std::vector<double> power(257);
  for (int k = 0; k <= 256; ++k) {
    std::complex<double> acc = 0;
    for (int i = 0; i < 400; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / 399);
      acc += w * s.samples[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / 512);
    }
    power[k] = std::norm(acc);
  }
  for (int c = 0; c < 80; ++c) {
    double e = 0;
    for (int k = 0; k <= 256; ++k) e += bank.weight(c, k) * power[k];
    EXPECT_NEAR(f.at(0, c), std::log(std::max(e, 1e-10)), 1e-4);
  }
}

TEST(LogMel, Errors) {
  AudioSegment s = noise(1000, 1);
  s.sample_rate = 8000;
  expect_errc([&] { log_mel(s); }, Errc::kWrongSampleRate);
  FrontendConfig cfg;
  cfg.mel_high_hz = 9000;
  expect_errc([&] { log_mel(noise(1000, 1), cfg); }, Errc::kInvalidArgument, "Nyquist");
  cfg = {};
  cfg.frame_shift_ms = 30;
  expect_errc([&] { log_mel(noise(1000, 1), cfg); }, Errc::kInvalidArgument);
}

TEST(MelFilterbank, HtkScale) {
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-9);
  for (double hz : {0.0, 125.0, 1000.0, 7600.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
}

TEST(MelFilterbank, CentersIncreaseWithinBand) {
  const FrontendConfig cfg;
  const MelFilterbank bank(cfg, 16000);
  for (int c = 0; c < bank.channels(); ++c) {
    EXPECT_GT(bank.center_hz(c), cfg.mel_low_hz);
    EXPECT_LT(bank.center_hz(c), cfg.mel_high_hz);
    if (c) {
      EXPECT_GT(bank.center_hz(c), bank.center_hz(c - 1));
    }
  }
}

TEST(FeatureDump, RoundTrip) {
  TempDir dir;
  const auto f = log_mel(noise(3000, 6));
  write_features(dir / "f.feat", f);
  const auto g = read_features(dir / "f.feat");
  EXPECT_EQ(g.frames, f.frames);
  EXPECT_EQ(g.channels, f.channels);
  EXPECT_EQ(g.frame_shift_ms, f.frame_shift_ms);
  EXPECT_EQ(g.values, f.values);
  expect_errc([&] { read_features(dir / "missing.feat"); }, Errc::kMissingFile);
}

}  // namespace
}  // namespace stew
