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

// Audio ingestion: RIFF/WAV read and write, band-limited rate conversion and
// a deterministic tone-pattern speech substitute for desk-scale corpora.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "stew/error.hpp"
#include "stew/rng.hpp"

namespace stew {

inline constexpr int kModelSampleRate = 16000;

struct AudioSegment {
  std::vector<float> samples;
  int sample_rate = kModelSampleRate;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

namespace detail {

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace detail

// Reads a little-endian RIFF/WAVE file holding 16-bit PCM or 32-bit float
// samples. Channels are averaged to mono; integer PCM is divided by 2^15.
inline AudioSegment load_wav(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kMissingFile, "cannot open " + where);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(Errc::kMalformedHeader, "not a RIFF/WAVE file: " + where);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a data chunk whose declared size overruns a truncated file.
      if (std::memcmp(chunk, "data", 4) != 0) {
        fail(Errc::kMalformedHeader, "chunk overruns file: " + where);
      }
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail(Errc::kMalformedHeader, "short fmt chunk: " + where);
      const unsigned char* f = bytes.data() + body;
      format = detail::read_u16(f);
      channels = detail::read_u16(f + 2);
      rate = detail::read_u32(f + 4);
      bits = detail::read_u16(f + 14);
      if (format == detail::kFormatExtensible) {
        if (size < 40) fail(Errc::kMalformedHeader, "short extensible fmt: " + where);
        format = detail::read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
      break;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) fail(Errc::kMalformedHeader, "missing fmt chunk: " + where);
  if (data == nullptr) fail(Errc::kMalformedHeader, "missing data chunk: " + where);
  if (channels == 0 || rate == 0) {
    fail(Errc::kMalformedHeader, "zero channels or sample rate: " + where);
  }
  const bool pcm16 = format == detail::kFormatPcm && bits == 16;
  const bool float32 = format == detail::kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    fail(Errc::kUnsupportedEncoding,
         "format " + std::to_string(format) + " with " + std::to_string(bits) +
             " bits per sample: " + where);
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_size / frame_bytes;

  AudioSegment seg;
  seg.sample_rate = static_cast<int>(rate);
  seg.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* frame = data + i * frame_bytes;
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* s = frame + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::read_u16(s)) / 32768.0;
      } else {
        const std::uint32_t raw = detail::read_u32(s);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        acc += v;
      }
    }
    seg.samples[i] = static_cast<float>(acc / channels);
  }
  return seg;
}

inline void write_wav(const std::filesystem::path& path, const AudioSegment& seg,
                      WavEncoding encoding = WavEncoding::kPcm16) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(seg.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, pcm ? detail::kFormatPcm : detail::kFormatFloat);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(seg.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(seg.sample_rate) * (bits / 8));
  detail::put_u16(out, bits / 8);
  detail::put_u16(out, bits);
  out += "data";
  detail::put_u32(out, data_bytes);
  for (float x : seg.samples) {
    if (pcm) {
      const long v = std::lround(static_cast<double>(x) * 32768.0);
      detail::put_u16(out, static_cast<std::uint16_t>(
                               static_cast<std::int16_t>(std::clamp(v, -32768L, 32767L))));
    } else {
      std::uint32_t raw;
      std::memcpy(&raw, &x, sizeof raw);
      detail::put_u32(out, raw);
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) fail(Errc::kIo, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) fail(Errc::kIo, "short write to " + path.string());
}

// round(n * target / source) with halves rounded up, in exact integer math.
inline std::size_t resampled_length(std::size_t n, int source_rate, int target_rate) {
  const auto num = static_cast<unsigned __int128>(n) * static_cast<unsigned>(target_rate);
  return static_cast<std::size_t>((num * 2 + static_cast<unsigned>(source_rate)) /
                                  (2u * static_cast<unsigned>(source_rate)));
}

struct ResamplerConfig {
  int zero_crossings = 32;  // per side, 64 in total
  double kaiser_beta = 8.6;
  double cutoff = 0.95;     // fraction of the lower Nyquist rate
};

namespace detail {

inline double kaiser(double x, double beta) {
  // x in [-1, 1]
  const double r = 1.0 - x * x;
  if (r <= 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(r)) / std::cyl_bessel_i(0.0, beta);
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Polyphase windowed-sinc sample-rate conversion. The rational ratio L/M is
// reduced by gcd; each of the L output phases owns a precomputed tap set
// unless L is large, in which case taps are evaluated on the fly.
inline AudioSegment resample(const AudioSegment& in, int target_rate,
                             const ResamplerConfig& cfg = {}) {
  require(target_rate > 0, Errc::kInvalidArgument,
          "target rate must be positive, got " + std::to_string(target_rate));
  require(in.sample_rate > 0, Errc::kInvalidArgument, "source rate must be positive");
  if (target_rate == in.sample_rate) return in;

  const int g = std::gcd(in.sample_rate, target_rate);
  const long up = target_rate / g;       // L
  const long down = in.sample_rate / g;  // M
  const double fc = cfg.cutoff * std::min(1.0, static_cast<double>(up) / down);
  const double half_width = cfg.zero_crossings / fc;  // in input samples
  const long reach = static_cast<long>(std::ceil(half_width));
  const long taps = 2 * reach;

  auto tap = [&](double offset) {
    if (std::abs(offset) >= half_width) return 0.0;
    return fc * detail::sinc(fc * offset) * detail::kaiser(offset / half_width, cfg.kaiser_beta);
  };

  const bool tabulate = up <= 4096;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (long phase = 0; phase < up; ++phase) {
      const double frac = static_cast<double>(phase) / up;
      for (long k = 0; k < taps; ++k) {
        table[phase * taps + k] = tap(static_cast<double>(k - reach + 1) - frac);
      }
    }
  }

  AudioSegment out;
  out.sample_rate = target_rate;
  const std::size_t n_out = resampled_length(in.samples.size(), in.sample_rate, target_rate);
  out.samples.resize(n_out);
  const long n_in = static_cast<long>(in.samples.size());
  for (std::size_t j = 0; j < n_out; ++j) {
    const long long pos = static_cast<long long>(j) * down;
    const long base = static_cast<long>(pos / up);
    const long phase = static_cast<long>(pos % up);
    const double frac = static_cast<double>(phase) / up;
    double acc = 0.0;
    for (long k = 0; k < taps; ++k) {
      const long idx = base - reach + 1 + k;
      if (idx < 0 || idx >= n_in) continue;
      const double w = tabulate ? table[phase * taps + k]
                                : tap(static_cast<double>(k - reach + 1) - frac);
      acc += w * in.samples[idx];
    }
    out.samples[j] = static_cast<float>(acc);
  }
  return out;
}

// Recipe for synthetic "speech": every vocabulary word is a fixed two-part
// pattern (a steady tone followed by a glide to a second tone). Domains differ
// by pitch, speaking rate, noise and sample rate.
struct SynthRecipe {
  std::vector<std::string> vocabulary;
  int sample_rate = kModelSampleRate;
  double word_ms = 160.0;
  double gap_ms = 40.0;
  double jitter = 0.1;          // relative timing jitter
  double pitch_shift = 1.0;     // multiplies every pattern frequency
  double amplitude = 0.3;
  double snr_db = 30.0;
  bool add_noise = true;
  double lead_ms = 30.0;        // silence before the first and after the last word
};

struct SynthComponents {
  std::vector<double> clean;
  std::vector<double> noise;
  int sample_rate = kModelSampleRate;
  std::string transcript;
};

inline std::pair<double, double> word_pattern(const SynthRecipe& recipe, std::size_t index) {
  static constexpr double kBase[] = {450.0, 700.0, 1000.0, 1400.0, 1900.0, 2500.0};
  constexpr std::size_t kBases = std::size(kBase);
  // Ordered pairs of distinct bases, 30 in total.
  const std::size_t a = index / (kBases - 1);
  std::size_t b = index % (kBases - 1);
  if (b >= a) ++b;
  return {kBase[a % kBases] * recipe.pitch_shift, kBase[b] * recipe.pitch_shift};
}

inline std::size_t max_vocabulary_size() { return 30; }

inline SynthComponents synth_components(const SynthRecipe& recipe,
                                        const std::vector<std::string>& words,
                                        std::uint64_t seed) {
  require(!recipe.vocabulary.empty(), Errc::kEmptyVocabulary, "synthesis recipe has no words");
  require(recipe.vocabulary.size() <= max_vocabulary_size(), Errc::kInvalidArgument,
          "at most " + std::to_string(max_vocabulary_size()) + " distinct word patterns");
  require(recipe.sample_rate > 0, Errc::kInvalidArgument, "sample rate must be positive");

  std::vector<std::size_t> ids;
  ids.reserve(words.size());
  for (const auto& w : words) {
    auto it = std::find(recipe.vocabulary.begin(), recipe.vocabulary.end(), w);
    if (it == recipe.vocabulary.end()) fail(Errc::kUnknownWord, "word not in vocabulary: " + w);
    ids.push_back(static_cast<std::size_t>(it - recipe.vocabulary.begin()));
  }

  SynthComponents out;
  out.sample_rate = recipe.sample_rate;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.transcript += ' ';
    out.transcript += words[i];
  }
  if (words.empty()) return out;

  const double nyquist = recipe.sample_rate / 2.0;
  Rng rng = make_rng(seed, "synth");
  std::uniform_real_distribution<double> jitter(1.0 - recipe.jitter, 1.0 + recipe.jitter);
  const double rate = recipe.sample_rate;
  auto ms_to_samples = [&](double ms) {
    return static_cast<std::size_t>(std::lround(ms * rate / 1000.0));
  };

  out.clean.assign(ms_to_samples(recipe.lead_ms), 0.0);
  for (std::size_t w = 0; w < ids.size(); ++w) {
    const auto [f1, f2] = word_pattern(recipe, ids[w]);
    require(std::max(f1, f2) < 0.9 * nyquist, Errc::kInvalidArgument,
            "word pattern above Nyquist for rate " + std::to_string(recipe.sample_rate));
    const std::size_t n = std::max<std::size_t>(2, ms_to_samples(recipe.word_ms * jitter(rng)));
    const std::size_t half = n / 2;
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = i < half ? f1 : f1 + (f2 - f1) * static_cast<double>(i - half) / (n - half);
      phase += 2.0 * std::numbers::pi * f / rate;
      const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
      out.clean.push_back(recipe.amplitude * env * std::sin(phase));
    }
    const double gap = w + 1 < ids.size() ? recipe.gap_ms * jitter(rng) : recipe.lead_ms;
    out.clean.resize(out.clean.size() + ms_to_samples(gap), 0.0);
  }

  out.noise.assign(out.clean.size(), 0.0);
  if (recipe.add_noise) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    double noise_power = 0.0, signal_power = 0.0;
    for (std::size_t i = 0; i < out.noise.size(); ++i) {
      out.noise[i] = gauss(rng);
      noise_power += out.noise[i] * out.noise[i];
      signal_power += out.clean[i] * out.clean[i];
    }
    const double target = signal_power / std::pow(10.0, recipe.snr_db / 10.0);
    const double scale = noise_power > 0 ? std::sqrt(target / noise_power) : 0.0;
    for (double& x : out.noise) x *= scale;
  }
  return out;
}

inline std::pair<AudioSegment, std::string> synth_utterance(const SynthRecipe& recipe,
                                                            const std::vector<std::string>& words,
                                                            std::uint64_t seed) {
  SynthComponents parts = synth_components(recipe, words, seed);
  AudioSegment seg;
  seg.sample_rate = parts.sample_rate;
  seg.samples.resize(parts.clean.size());
  for (std::size_t i = 0; i < parts.clean.size(); ++i) {
    seg.samples[i] = static_cast<float>(std::clamp(parts.clean[i] + parts.noise[i], -1.0, 1.0));
  }
  return {std::move(seg), std::move(parts.transcript)};
}

}  // namespace stew
