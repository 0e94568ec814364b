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

// Manifests, multi-domain mixing and shuffled batching. Domain tags travel
// with every entry but nothing in this file reads them to decide order.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "stew/error.hpp"
#include "stew/rng.hpp"

namespace stew {

struct ManifestEntry {
  std::string utt_id;
  std::string domain;
  std::string audio;
  std::string transcript;
  double duration = 0.0;

  bool operator==(const ManifestEntry&) const = default;
};

using Manifest = std::vector<ManifestEntry>;

inline void validate_manifest(const Manifest& m, const std::string& where = "manifest") {
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& e = m[i];
    require(!e.utt_id.empty(), Errc::kParse, where + ": empty utt_id at record " + std::to_string(i));
    require(e.duration > 0.0, Errc::kInvalidArgument,
            where + ": non-positive duration for " + e.utt_id);
    auto [it, inserted] = seen.emplace(e.utt_id, i);
    require(inserted, Errc::kDuplicateId, where + ": duplicate utt_id " + e.utt_id);
  }
}

inline Manifest parse_manifest(std::istream& in, const std::string& where = "manifest") {
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(Errc::kParse, where + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      ManifestEntry e;
      e.utt_id = j.at("utt_id").get<std::string>();
      e.domain = j.at("domain").get<std::string>();
      e.audio = j.at("audio").get<std::string>();
      e.transcript = j.at("transcript").get<std::string>();
      e.duration = j.at("duration").get<double>();
      m.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::kParse, where + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_manifest(m, where);
  return m;
}

// Reads a manifest; relative audio paths are resolved against the
// manifest's own directory.
inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kMissingFile, "cannot open manifest " + path.string());
  Manifest m = parse_manifest(in, path.string());
  const auto base = path.parent_path();
  for (auto& e : m) {
    std::filesystem::path audio(e.audio);
    if (audio.is_relative() && !base.empty()) e.audio = (base / audio).lexically_normal().string();
  }
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) fail(Errc::kIo, "cannot write manifest " + path.string());
  for (const auto& e : m) {
    nlohmann::ordered_json j;
    j["utt_id"] = e.utt_id;
    j["domain"] = e.domain;
    j["audio"] = e.audio;
    j["transcript"] = e.transcript;
    j["duration"] = e.duration;
    out << j.dump() << '\n';
  }
}

// Plain concatenation: every entry of every input, once, in input order.
inline Manifest mix_manifests(std::span<const Manifest> manifests, bool prefix_domain = false) {
  Manifest out;
  std::unordered_map<std::string, std::string> owner;  // utt_id -> domain
  for (const auto& m : manifests) {
    for (ManifestEntry e : m) {
      if (prefix_domain) e.utt_id = e.domain + "/" + e.utt_id;
      auto [it, inserted] = owner.emplace(e.utt_id, e.domain);
      if (!inserted) {
        fail(Errc::kDuplicateId, "utt_id " + e.utt_id + " appears in domain '" + it->second +
                                     "' and domain '" + e.domain + "'");
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

inline std::map<std::string, std::size_t> domain_counts(const Manifest& m) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : m) ++counts[e.domain];
  return counts;
}

struct BatchConfig {
  int batch_size = 16;
  int max_frames = 3000;
  std::uint64_t seed = 0;
  bool drop_last = false;
};

// Batches of manifest indices. Epoch e is a uniform permutation drawn from
// (seed, e); any global batch index can be recomputed without replaying the
// stream, which is what makes resumption exact.
class BatchStream {
 public:
  BatchStream(std::size_t manifest_size, const BatchConfig& cfg) : size_(manifest_size), cfg_(cfg) {
    require(size_ > 0, Errc::kInvalidArgument, "cannot batch an empty manifest");
    require(cfg_.batch_size >= 1, Errc::kInvalidArgument, "batch_size must be >= 1");
    const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
    per_epoch_ = cfg_.drop_last ? size_ / bs : (size_ + bs - 1) / bs;
    require(per_epoch_ > 0, Errc::kInvalidArgument,
            "drop_last with batch_size larger than the manifest yields no batches");
  }

  std::size_t batches_per_epoch() const { return per_epoch_; }

  std::vector<std::size_t> permutation(std::uint64_t epoch) const {
    std::vector<std::size_t> order(size_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(cfg_.seed, "shuffle", epoch);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

  std::vector<std::vector<std::size_t>> epoch_batches(std::uint64_t epoch) const {
    const auto order = permutation(epoch);
    std::vector<std::vector<std::size_t>> batches;
    const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t b = 0; b < per_epoch_; ++b) {
      const std::size_t lo = b * bs;
      const std::size_t hi = std::min(size_, lo + bs);
      batches.emplace_back(order.begin() + lo, order.begin() + hi);
    }
    return batches;
  }

  // Batch number `index` counted from the start of epoch 0.
  std::vector<std::size_t> batch_at(std::uint64_t index) {
    const std::uint64_t epoch = index / per_epoch_;
    if (!cached_ || cached_epoch_ != epoch) {
      cache_ = epoch_batches(epoch);
      cached_epoch_ = epoch;
      cached_ = true;
    }
    return cache_[index % per_epoch_];
  }

  std::uint64_t epoch_of(std::uint64_t index) const { return index / per_epoch_; }

 private:
  std::size_t size_;
  BatchConfig cfg_;
  std::size_t per_epoch_ = 0;
  bool cached_ = false;
  std::uint64_t cached_epoch_ = 0;
  std::vector<std::vector<std::size_t>> cache_;
};

inline BatchStream shuffle_and_batch(const Manifest& manifest, const BatchConfig& cfg) {
  return BatchStream(manifest.size(), cfg);
}

}  // namespace stew
