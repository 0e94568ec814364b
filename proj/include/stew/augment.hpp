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

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stew/error.hpp"
#include "stew/frontend.hpp"
#include "stew/rng.hpp"

namespace stew {

struct SpecAugmentPolicy {
  int freq_masks = 0;
  int freq_width = 0;          // F: each frequency mask spans Uniform{0..F} channels
  int time_masks = 0;
  double time_ratio = 0.0;     // pS: per-mask time width bounded by floor(pS * frames)
  std::optional<int> fixed_time_width;  // T: additionally caps the per-mask width
  float mask_value = 0.0f;
};

inline void validate(const SpecAugmentPolicy& p) {
  require(p.freq_masks >= 0 && p.time_masks >= 0, Errc::kInvalidArgument,
          "mask counts must be non-negative");
  require(p.freq_width >= 0, Errc::kInvalidArgument, "F must be non-negative");
  require(p.time_ratio >= 0.0 && p.time_ratio <= 1.0, Errc::kInvalidArgument,
          "pS must lie in [0, 1]");
  require(!p.fixed_time_width || *p.fixed_time_width >= 0, Errc::kInvalidArgument,
          "T must be non-negative");
}

// Named policies. Absent T means the width is bounded by the ratio alone.
inline SpecAugmentPolicy spec_augment_preset(const std::string& name) {
  SpecAugmentPolicy p;
  if (name == "none") return p;
  if (name == "stew-train") {
    p.freq_masks = 2;
    p.freq_width = 27;
    p.time_masks = 10;
    p.time_ratio = 0.05;
    return p;
  }
  if (name == "chime-ft-100m" || name == "chime-baseline-100m") {
    p.time_masks = 2;
    p.fixed_time_width = 80;
    p.time_ratio = 0.25;
    return p;
  }
  if (name == "chime-ft-1b") {
    p.freq_masks = 3;
    p.freq_width = 10;
    p.time_masks = 8;
    p.fixed_time_width = 96;
    p.time_ratio = 0.08;
    return p;
  }
  fail(Errc::kInvalidArgument, "unknown SpecAugment preset: " + name);
}

inline int max_time_mask_width(const SpecAugmentPolicy& p, int frames) {
  int w = static_cast<int>(std::floor(p.time_ratio * frames));
  if (p.fixed_time_width) w = std::min(w, *p.fixed_time_width);
  return std::clamp(w, 0, frames);
}

struct AppliedMask {
  enum class Axis { kFrequency, kTime } axis;
  int start;
  int width;
};

struct AugmentResult {
  FeatureMatrix features;
  std::vector<AppliedMask> masks;
};

inline AugmentResult spec_augment_with_masks(const FeatureMatrix& features,
                                             const SpecAugmentPolicy& policy, Rng& rng) {
  validate(policy);
  AugmentResult r{features, {}};
  FeatureMatrix& out = r.features;
  if (out.frames == 0 || out.channels == 0) return r;

  using Dist = std::uniform_int_distribution<int>;
  for (int m = 0; m < policy.freq_masks; ++m) {
    const int f = Dist(0, std::min(policy.freq_width, out.channels))(rng);
    const int start = Dist(0, out.channels - f)(rng);
    for (int t = 0; t < out.frames; ++t) {
      for (int c = start; c < start + f; ++c) out.at(t, c) = policy.mask_value;
    }
    r.masks.push_back({AppliedMask::Axis::kFrequency, start, f});
  }
  const int max_width = max_time_mask_width(policy, out.frames);
  for (int m = 0; m < policy.time_masks; ++m) {
    const int w = Dist(0, max_width)(rng);
    const int start = Dist(0, out.frames - w)(rng);
    for (int t = start; t < start + w; ++t) {
      for (int c = 0; c < out.channels; ++c) out.at(t, c) = policy.mask_value;
    }
    r.masks.push_back({AppliedMask::Axis::kTime, start, w});
  }
  return r;
}

inline FeatureMatrix spec_augment(const FeatureMatrix& features, const SpecAugmentPolicy& policy,
                                  Rng& rng) {
  return spec_augment_with_masks(features, policy, rng).features;
}

}  // namespace stew
