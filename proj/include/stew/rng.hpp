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

#include <cstdint>
#include <random>
#include <string_view>
#include <type_traits>

namespace stew {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

// Folds any number of integer or string components into one 64-bit seed.
// Used to give every (seed, epoch, utterance) or (seed, step, site) its own
// independent stream regardless of processing order.
template <typename First, typename... Rest>
std::uint64_t mix_seed(std::uint64_t seed, First first, Rest... rest) {
  std::uint64_t component;
  if constexpr (std::is_convertible_v<First, std::string_view>) {
    component = fnv1a(std::string_view(first));
  } else {
    component = static_cast<std::uint64_t>(first);
  }
  return mix_seed(splitmix64(seed ^ splitmix64(component)), rest...);
}

template <typename... Parts>
Rng make_rng(std::uint64_t seed, Parts... parts) {
  return Rng(mix_seed(seed, parts...));
}

}  // namespace stew
