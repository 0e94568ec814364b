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

// Checkpoint container, all integers little-endian:
//
//   "STEWCKPT" | u32 version | u32 text_len | config text (sectioned key-value)
//   u64 step | u32 record_count
//   record*: u32 name_len | name | u8 dtype (1 = f32, 2 = f64) | u8 rank |
//            u64 dim[rank] | payload (row-major)
//   "END!"
//
// Record names are prefixed "param/", "adam_m/", "adam_v/" or "ema/".

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "stew/config.hpp"
#include "stew/error.hpp"
#include "stew/model.hpp"
#include "stew/optim.hpp"

namespace stew {

template <typename T>
struct Checkpoint {
  ModelConfig config;
  Parameters<T> params;
  AdamState<T> adam;
  std::optional<Parameters<T>> ema;
  std::uint64_t step = 0;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'S', 'T', 'E', 'W', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <typename I>
  void le(I v) {
    for (std::size_t i = 0; i < sizeof(I); ++i) {
      out_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }
  }
  void str(const std::string& s) {
    le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string where) : data_(std::move(data)), where_(std::move(where)) {}

  const char* take(std::size_t n) {
    if (pos_ + n > data_.size()) fail(Errc::kTruncatedFile, "checkpoint ends early: " + where_);
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename I>
  I le() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(sizeof(I)));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(I); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<I>(v);
  }
  std::string str() {
    const auto n = le<std::uint32_t>();
    const char* p = take(n);
    return std::string(p, n);
  }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
  std::string where_;
};

template <typename F>
void put_float(ByteWriter& w, F v) {
  if constexpr (sizeof(F) == 4) {
    std::uint32_t raw;
    std::memcpy(&raw, &v, 4);
    w.le(raw);
  } else {
    std::uint64_t raw;
    std::memcpy(&raw, &v, 8);
    w.le(raw);
  }
}

template <typename T>
void put_tensor(ByteWriter& w, const std::string& name, const Mat<T>& m) {
  w.str(name);
  w.le<std::uint8_t>(sizeof(T) == 4 ? 1 : 2);
  w.le<std::uint8_t>(2);
  w.le<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
  w.le<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put_float(w, m.data()[i]);
}

template <typename T>
Mat<T> get_tensor_payload(ByteReader& r, std::uint8_t dtype, std::uint64_t rows, std::uint64_t cols) {
  Mat<T> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (dtype == 1) {
      const auto raw = r.le<std::uint32_t>();
      float v;
      std::memcpy(&v, &raw, 4);
      m.data()[i] = static_cast<T>(v);
    } else {
      const auto raw = r.le<std::uint64_t>();
      double v;
      std::memcpy(&v, &raw, 8);
      m.data()[i] = static_cast<T>(v);
    }
  }
  return m;
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ck) {
  KeyValueFile text;
  write_model_config(text, ck.config);
  text.set("checkpoint", "dtype", std::string(sizeof(T) == 4 ? "f32" : "f64"));
  text.set("checkpoint", "has_ema", ck.ema.has_value());

  detail::ByteWriter w;
  w.raw(detail::kCheckpointMagic, 8);
  w.le<std::uint32_t>(detail::kCheckpointVersion);
  w.str(text.dump());
  w.le<std::uint64_t>(ck.step);
  std::uint32_t count = static_cast<std::uint32_t>(ck.params.size() + ck.adam.m.size() + ck.adam.v.size() +
                                                   (ck.ema ? ck.ema->size() : 0));
  w.le<std::uint32_t>(count);
  for (const auto& [name, m] : ck.params) detail::put_tensor(w, "param/" + name, m);
  for (const auto& [name, m] : ck.adam.m) detail::put_tensor(w, "adam_m/" + name, m);
  for (const auto& [name, m] : ck.adam.v) detail::put_tensor(w, "adam_v/" + name, m);
  if (ck.ema) {
    for (const auto& [name, m] : *ck.ema) detail::put_tensor(w, "ema/" + name, m);
  }
  w.raw("END!", 4);

  // Write-then-rename so a crash never leaves a half-written checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(Errc::kIo, "cannot write checkpoint " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) fail(Errc::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Raises kConfigMismatch naming the first incompatible field.
inline void check_compatible(const ModelConfig& expected, const ModelConfig& found) {
  if (expected.vocab.size() != found.vocab.size()) {
    fail(Errc::kConfigMismatch, "vocab size " + std::to_string(found.vocab.size()) +
                                    " in checkpoint, expected " + std::to_string(expected.vocab.size()));
  }
  if (expected.vocab != found.vocab) fail(Errc::kConfigMismatch, "vocab tokens differ from checkpoint");
  if (!expected.same_architecture(found)) {
    fail(Errc::kConfigMismatch, "model architecture differs from checkpoint");
  }
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path,
                              const std::optional<ModelConfig>& expected = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kMissingFile, "cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(std::move(bytes), path.string());

  if (std::memcmp(r.take(8), detail::kCheckpointMagic, 8) != 0) {
    fail(Errc::kMalformedHeader, "not a checkpoint: " + path.string());
  }
  const auto version = r.le<std::uint32_t>();
  require(version == detail::kCheckpointVersion, Errc::kUnsupportedEncoding,
          "checkpoint version " + std::to_string(version));
  const KeyValueFile text = KeyValueFile::parse(r.str(), path.string());

  Checkpoint<T> ck;
  ck.config = read_model_config(text, "model", std::nullopt, false);
  validate(ck.config);
  if (expected) check_compatible(*expected, ck.config);
  ck.step = r.le<std::uint64_t>();
  ck.adam.step = ck.step;
  const bool has_ema = text.get("checkpoint", "has_ema", false);
  if (has_ema) ck.ema.emplace();

  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const auto dtype = r.le<std::uint8_t>();
    const auto rank = r.le<std::uint8_t>();
    require(dtype == 1 || dtype == 2, Errc::kUnsupportedEncoding, "tensor dtype in " + name);
    require(rank == 2, Errc::kUnsupportedEncoding, "tensor rank in " + name);
    const auto rows = r.le<std::uint64_t>();
    const auto cols = r.le<std::uint64_t>();
    Mat<T> m = detail::get_tensor_payload<T>(r, dtype, rows, cols);
    const auto slash = name.find('/');
    require(slash != std::string::npos, Errc::kMalformedHeader, "record name " + name);
    const std::string kind = name.substr(0, slash), key = name.substr(slash + 1);
    if (kind == "param") {
      ck.params.emplace(key, std::move(m));
    } else if (kind == "adam_m") {
      ck.adam.m.emplace(key, std::move(m));
    } else if (kind == "adam_v") {
      ck.adam.v.emplace(key, std::move(m));
    } else if (kind == "ema" && ck.ema) {
      ck.ema->emplace(key, std::move(m));
    } else {
      fail(Errc::kMalformedHeader, "unknown record " + name);
    }
  }
  if (std::memcmp(r.take(4), "END!", 4) != 0) fail(Errc::kTruncatedFile, "missing end marker: " + path.string());

  check_params(ck.config, ck.params);
  if (ck.adam.m.empty() && ck.adam.v.empty()) {
    ck.adam = init_adam(ck.params);
    ck.adam.step = ck.step;
  } else {
    check_params(ck.config, ck.adam.m);
    check_params(ck.config, ck.adam.v);
  }
  if (ck.ema) check_params(ck.config, *ck.ema);
  return ck;
}

}  // namespace stew
