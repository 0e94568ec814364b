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

// Transducer negative log-likelihood over a (T x (U+1)) lattice of joint
// network logits. At node (t, u) a blank moves to (t+1, u) and the label
// y[u] moves to (t, u+1); every alignment ends with a blank out of
// (T-1, U).
//
// Lattice layout: row t * (U + 1) + u of a (T * (U + 1)) x V matrix holds
// the raw logits of node (t, u). Blank is vocabulary index 0.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stew/autodiff.hpp"
#include "stew/error.hpp"

namespace stew {

inline constexpr int kBlank = 0;

template <typename T>
struct LogitLattice {
  Mat<T> values;  // (frames * (labels + 1)) x vocab
  int frames = 0;
  int labels = 0;

  int vocab() const { return static_cast<int>(values.cols()); }
  auto node(int t, int u) const { return values.row(static_cast<Eigen::Index>(t) * (labels + 1) + u); }
};

struct Hypothesis {
  std::vector<int> tokens;
  double score = 0.0;
};

template <typename T>
struct RnntResult {
  T nll = 0;
  Mat<T> grad;  // d nll / d logits, same shape as the lattice
};

namespace detail {

// Absorbing stand-in for log(0): sums with it stay hugely negative and
// exp() of anything near it underflows to exactly 0.
template <typename T>
constexpr T log_zero() {
  return T(-1e30);
}

template <typename T>
T log_add(T a, T b) {
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

template <typename T>
Mat<T> log_softmax_rows(const Mat<T>& x) {
  Mat<T> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const T m = x.row(i).maxCoeff();
    const T lse = m + std::log((x.row(i).array() - m).exp().sum());
    out.row(i) = x.row(i).array() - lse;
  }
  return out;
}

template <typename T>
void check_lattice(const Mat<T>& logits, int frames, std::span<const int> labels) {
  require(frames >= 1, Errc::kInvalidArgument, "transducer lattice needs at least one frame");
  const auto rows = static_cast<Eigen::Index>(frames) * (static_cast<Eigen::Index>(labels.size()) + 1);
  require(logits.rows() == rows, Errc::kShapeMismatch,
          "lattice has " + std::to_string(logits.rows()) + " rows, expected " + std::to_string(rows));
  require(logits.cols() >= 1, Errc::kShapeMismatch, "empty vocabulary axis");
  for (int y : labels) {
    require(y != kBlank, Errc::kInvalidArgument, "label sequence contains blank");
    require(y > 0 && y < logits.cols(), Errc::kInvalidArgument, "label outside vocabulary");
  }
  if (!logits.allFinite()) fail(Errc::kNonFinite, "lattice contains NaN or Inf");
}

}  // namespace detail

// Forward-backward in log space; the gradient is taken with respect to the
// raw logits, with the softmax folded in:
//   d nll / d z_k(t,u) = gamma(t,u) * p_k(t,u) - occupancy of the k-arc out of (t,u)
template <typename T>
RnntResult<T> rnnt_loss(const Mat<T>& logits, int frames, std::span<const int> labels) {
  detail::check_lattice(logits, frames, labels);
  const int U = static_cast<int>(labels.size());
  const int U1 = U + 1;
  const Mat<T> lp = detail::log_softmax_rows(logits);
  auto row = [U1](int t, int u) { return static_cast<Eigen::Index>(t) * U1 + u; };
  auto lp_blank = [&](int t, int u) { return lp(row(t, u), kBlank); };
  auto lp_label = [&](int t, int u) { return lp(row(t, u), labels[u]); };
  const T zero = detail::log_zero<T>();

  Mat<T> alpha(frames, U1);
  for (int t = 0; t < frames; ++t) {
    for (int u = 0; u < U1; ++u) {
      if (t == 0 && u == 0) {
        alpha(0, 0) = 0;
        continue;
      }
      T a = zero;
      if (t > 0) a = alpha(t - 1, u) + lp_blank(t - 1, u);
      if (u > 0) a = detail::log_add(a, alpha(t, u - 1) + lp_label(t, u - 1));
      alpha(t, u) = a;
    }
  }

  Mat<T> beta(frames, U1);
  for (int t = frames - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == frames - 1 && u == U) {
        beta(t, u) = lp_blank(t, u);
        continue;
      }
      T b = zero;
      if (t + 1 < frames) b = beta(t + 1, u) + lp_blank(t, u);
      if (u < U) b = detail::log_add(b, beta(t, u + 1) + lp_label(t, u));
      beta(t, u) = b;
    }
  }

  const T log_p = alpha(frames - 1, U) + lp_blank(frames - 1, U);
  RnntResult<T> r;
  r.nll = -log_p;
  r.grad.resize(logits.rows(), logits.cols());
  for (int t = 0; t < frames; ++t) {
    for (int u = 0; u < U1; ++u) {
      const Eigen::Index i = row(t, u);
      const T occupancy = std::exp(alpha(t, u) + beta(t, u) - log_p);
      r.grad.row(i) = occupancy * lp.row(i).array().exp();
      T blank_next = zero;
      if (t + 1 < frames) {
        blank_next = beta(t + 1, u);
      } else if (u == U) {
        blank_next = 0;
      }
      r.grad(i, kBlank) -= std::exp(alpha(t, u) + lp_blank(t, u) + blank_next - log_p);
      if (u < U) {
        r.grad(i, labels[u]) -= std::exp(alpha(t, u) + lp_label(t, u) + beta(t, u + 1) - log_p);
      }
    }
  }
  return r;
}

template <typename T>
RnntResult<T> rnnt_loss(const LogitLattice<T>& lattice, std::span<const int> labels) {
  require(static_cast<int>(labels.size()) == lattice.labels, Errc::kShapeMismatch,
          "label count does not match lattice");
  return rnnt_loss(lattice.values, lattice.frames, labels);
}

// Number of distinct alignments through a T x (U+1) lattice.
inline std::uint64_t rnnt_path_count(int frames, int labels) {
  // C(frames - 1 + labels, labels)
  std::uint64_t c = 1;
  for (int i = 1; i <= labels; ++i) c = c * static_cast<std::uint64_t>(frames - 1 + i) / i;
  return c;
}

inline constexpr int kBruteForceMaxSize = 12;

// Reference implementation: enumerates every alignment explicitly.
template <typename T>
T rnnt_loss_bruteforce(const Mat<T>& logits, int frames, std::span<const int> labels) {
  detail::check_lattice(logits, frames, labels);
  const int U = static_cast<int>(labels.size());
  require(frames + U <= kBruteForceMaxSize, Errc::kSizeGuard,
          "brute-force enumeration limited to T + U <= " + std::to_string(kBruteForceMaxSize));
  const Mat<T> lp = detail::log_softmax_rows(logits);
  const int U1 = U + 1;

  T total = detail::log_zero<T>();
  std::uint64_t paths = 0;
  // Each path is a bit pattern over T-1+U moves: 1 = label, 0 = blank.
  const int moves = frames - 1 + U;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << moves); ++mask) {
    if (std::popcount(mask) != U) continue;
    int t = 0, u = 0;
    T score = 0;
    for (int m = 0; m < moves; ++m) {
      const Eigen::Index node = static_cast<Eigen::Index>(t) * U1 + u;
      if (mask & (std::uint64_t{1} << m)) {
        score += lp(node, labels[u]);
        ++u;
      } else {
        score += lp(node, kBlank);
        ++t;
      }
    }
    score += lp(static_cast<Eigen::Index>(t) * U1 + u, kBlank);
    total = paths == 0 ? score : detail::log_add(total, score);
    ++paths;
  }
  return -total;
}

// Graph node wrapping rnnt_loss; the upstream gradient scales the analytic one.
// The recursion always runs in double so float models get a non-negative,
// well-rounded loss.
template <typename T>
Var rnnt_loss_node(Graph<T>& g, Var logits, int frames, std::vector<int> labels) {
  RnntResult<double> r = rnnt_loss(Mat<double>(g.value(logits).template cast<double>()), frames, labels);
  Mat<T> out(1, 1);
  out(0, 0) = static_cast<T>(r.nll);
  return g.make(std::move(out), g.needs_grad(logits),
                [logits, grad = Mat<T>(r.grad.template cast<T>())](Graph<T>& g, const Mat<T>& gout) {
                  g.grad(logits) += gout(0, 0) * grad;
                });
}

}  // namespace stew
