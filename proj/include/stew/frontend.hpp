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

// Log-mel filterbank features. Frames lie fully inside the signal (no
// padding); each frame is Hann-windowed, transformed to a power spectrum and
// integrated with triangular weights on the HTK mel scale.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "stew/audio.hpp"
#include "stew/error.hpp"

namespace stew {

struct FrontendConfig {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int fft_size = 512;
  int mel_channels = 80;
  double mel_low_hz = 125.0;
  double mel_high_hz = 7600.0;
  double log_floor = 1e-10;
};

struct FeatureMatrix {
  std::vector<float> values;  // frames x channels, row-major
  int frames = 0;
  int channels = 0;
  double frame_shift_ms = 10.0;

  float& at(int frame, int channel) { return values[static_cast<std::size_t>(frame) * channels + channel]; }
  float at(int frame, int channel) const {
    return values[static_cast<std::size_t>(frame) * channels + channel];
  }
  bool empty() const { return frames == 0; }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline int frame_count(std::size_t n_samples, int frame_len, int shift) {
  if (n_samples < static_cast<std::size_t>(frame_len)) return 0;
  return static_cast<int>((n_samples - frame_len) / shift) + 1;
}

namespace detail {

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace detail

// Triangular mel weights, one row per channel over fft_size/2+1 bins. The
// triangles are linear in mel and peak at 1 on each channel's center.
class MelFilterbank {
 public:
  MelFilterbank(const FrontendConfig& cfg, int sample_rate)
      : channels_(cfg.mel_channels), bins_(cfg.fft_size / 2 + 1) {
    const double mel_lo = hz_to_mel(cfg.mel_low_hz);
    const double mel_hi = hz_to_mel(cfg.mel_high_hz);
    const double step = (mel_hi - mel_lo) / (channels_ + 1);
    centers_hz_.resize(channels_);
    weights_.assign(static_cast<std::size_t>(channels_) * bins_, 0.0);
    for (int c = 0; c < channels_; ++c) {
      const double left = mel_lo + step * c;
      const double center = left + step;
      const double right = center + step;
      centers_hz_[c] = mel_to_hz(center);
      for (int k = 0; k < bins_; ++k) {
        const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / cfg.fft_size);
        double w = 0.0;
        if (mel > left && mel <= center) {
          w = (mel - left) / (center - left);
        } else if (mel > center && mel < right) {
          w = (right - mel) / (right - center);
        }
        weights_[static_cast<std::size_t>(c) * bins_ + k] = w;
      }
    }
  }

  int channels() const { return channels_; }
  int bins() const { return bins_; }
  double center_hz(int channel) const { return centers_hz_[channel]; }
  double weight(int channel, int bin) const {
    return weights_[static_cast<std::size_t>(channel) * bins_ + bin];
  }

 private:
  int channels_;
  int bins_;
  std::vector<double> centers_hz_;
  std::vector<double> weights_;
};

inline void validate_frontend(const FrontendConfig& cfg, int sample_rate) {
  require(cfg.mel_channels >= 1, Errc::kInvalidArgument, "mel_channels must be >= 1");
  require(cfg.frame_shift_ms > 0 && cfg.frame_shift_ms <= cfg.frame_length_ms,
          Errc::kInvalidArgument, "need 0 < frame_shift <= frame_length");
  require(cfg.mel_low_hz < cfg.mel_high_hz, Errc::kInvalidArgument, "mel_low must be below mel_high");
  require(cfg.mel_high_hz <= sample_rate / 2.0, Errc::kInvalidArgument,
          "mel_high " + std::to_string(cfg.mel_high_hz) + " Hz exceeds Nyquist");
  require(cfg.fft_size > 0 && (cfg.fft_size & (cfg.fft_size - 1)) == 0, Errc::kInvalidArgument,
          "fft_size must be a power of two");
  require(cfg.log_floor > 0, Errc::kInvalidArgument, "log_floor must be positive");
}

inline FeatureMatrix log_mel(const AudioSegment& segment, const FrontendConfig& cfg = {}) {
  require(segment.sample_rate == kModelSampleRate, Errc::kWrongSampleRate,
          "log_mel expects 16000 Hz input, got " + std::to_string(segment.sample_rate) +
              " (resample first)");
  validate_frontend(cfg, segment.sample_rate);

  const int sr = segment.sample_rate;
  const int frame_len = static_cast<int>(std::lround(cfg.frame_length_ms * sr / 1000.0));
  const int shift = static_cast<int>(std::lround(cfg.frame_shift_ms * sr / 1000.0));
  require(frame_len <= cfg.fft_size, Errc::kInvalidArgument, "frame longer than fft_size");

  FeatureMatrix out;
  out.channels = cfg.mel_channels;
  out.frame_shift_ms = cfg.frame_shift_ms;
  out.frames = frame_count(segment.samples.size(), frame_len, shift);
  out.values.resize(static_cast<std::size_t>(out.frames) * out.channels);
  if (out.frames == 0) return out;

  const MelFilterbank bank(cfg, sr);
  std::vector<double> window(frame_len);
  for (int i = 0; i < frame_len; ++i) {
    window[i] = frame_len > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (frame_len - 1)) : 1.0;
  }

  std::vector<std::complex<double>> buf(cfg.fft_size);
  std::vector<double> power(bank.bins());
  const double log_floor = std::log(cfg.log_floor);
  for (int f = 0; f < out.frames; ++f) {
    const float* frame = segment.samples.data() + static_cast<std::size_t>(f) * shift;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0));
    for (int i = 0; i < frame_len; ++i) buf[i] = frame[i] * window[i];
    detail::fft(buf);
    for (int k = 0; k < bank.bins(); ++k) power[k] = std::norm(buf[k]);
    for (int c = 0; c < bank.channels(); ++c) {
      double energy = 0.0;
      for (int k = 0; k < bank.bins(); ++k) energy += bank.weight(c, k) * power[k];
      out.at(f, c) = static_cast<float>(energy > cfg.log_floor ? std::log(energy) : log_floor);
    }
  }
  return out;
}

// Feature dump: uint32 frames, uint32 channels, float32 shift (ms), then
// frames*channels float32 values, row-major, little-endian.
inline void write_features(const std::filesystem::path& path, const FeatureMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::kIo, "cannot write " + path.string());
  std::string buf;
  detail::put_u32(buf, static_cast<std::uint32_t>(m.frames));
  detail::put_u32(buf, static_cast<std::uint32_t>(m.channels));
  auto put_float = [&](float v) {
    std::uint32_t raw;
    std::memcpy(&raw, &v, sizeof raw);
    detail::put_u32(buf, raw);
  };
  put_float(static_cast<float>(m.frame_shift_ms));
  for (float v : m.values) put_float(v);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kMissingFile, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12) fail(Errc::kTruncatedFile, "feature header: " + path.string());
  auto get_float = [&](std::size_t off) {
    const std::uint32_t raw = detail::read_u32(bytes.data() + off);
    float v;
    std::memcpy(&v, &raw, sizeof v);
    return v;
  };
  FeatureMatrix m;
  m.frames = static_cast<int>(detail::read_u32(bytes.data()));
  m.channels = static_cast<int>(detail::read_u32(bytes.data() + 4));
  m.frame_shift_ms = get_float(8);
  const std::size_t n = static_cast<std::size_t>(m.frames) * m.channels;
  if (bytes.size() < 12 + 4 * n) fail(Errc::kTruncatedFile, "feature payload: " + path.string());
  m.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.values[i] = get_float(12 + 4 * i);
  return m;
}

}  // namespace stew
