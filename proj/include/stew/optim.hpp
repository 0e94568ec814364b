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

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stew/autodiff.hpp"
#include "stew/error.hpp"
#include "stew/model.hpp"

namespace stew {

struct ScheduleConfig {
  double peak_lr = 2e-3;
  double warmup_steps = 10000;

  bool operator==(const ScheduleConfig&) const = default;
};

inline void validate(const ScheduleConfig& s) {
  require(s.peak_lr > 0.0, Errc::kInvalidArgument, "peak_lr must be positive");
  require(s.warmup_steps >= 1.0, Errc::kInvalidArgument, "warmup_steps must be >= 1");
}

inline ScheduleConfig schedule_preset(const std::string& name) {
  if (name == "stew-100m") return {2e-3, 10000};
  if (name == "chime-ft-100m") return {1e-4, 2000};
  if (name == "1b-encoder") return {3e-4, 5000};
  if (name == "1b-decoder") return {1e-3, 1500};
  if (name == "chime-ft-1b") return {2.5e-4, 8000};
  fail(Errc::kInvalidArgument, "unknown schedule preset: " + name);
}

inline std::vector<std::string> schedule_preset_names() {
  return {"stew-100m", "chime-ft-100m", "1b-encoder", "1b-decoder", "chime-ft-1b"};
}

// Transformer schedule, rescaled so the rate equals peak_lr at step == warmup:
// linear warm-up, then inverse square-root decay.
inline double lr_at(const ScheduleConfig& s, std::uint64_t step) {
  require(step >= 1, Errc::kInvalidArgument, "schedule steps are 1-based");
  const double t = static_cast<double>(step);
  return s.peak_lr * std::min(t / s.warmup_steps, std::sqrt(s.warmup_steps / t));
}

struct OptimConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double l2_weight = 0.0;
  std::optional<double> ema_decay = 0.9999;
  ScheduleConfig schedule;
  // Parameter-path prefix -> schedule; the longest matching prefix wins and
  // unmatched parameters use `schedule`.
  std::map<std::string, ScheduleConfig> groups;
  std::optional<double> grad_clip;  // global-norm clip, off unless set
};

inline void validate(const OptimConfig& c) {
  require(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0, Errc::kInvalidArgument,
          "Adam betas must lie in [0, 1)");
  require(c.epsilon > 0.0, Errc::kInvalidArgument, "epsilon must be positive");
  require(c.l2_weight >= 0.0, Errc::kInvalidArgument, "l2_weight must be >= 0");
  require(!c.ema_decay || (*c.ema_decay >= 0.0 && *c.ema_decay < 1.0), Errc::kInvalidArgument,
          "ema_decay must lie in [0, 1)");
  require(!c.grad_clip || *c.grad_clip > 0.0, Errc::kInvalidArgument, "grad_clip must be positive");
  validate(c.schedule);
  for (const auto& [prefix, s] : c.groups) validate(s);
}

inline const ScheduleConfig& schedule_for(const OptimConfig& c, const std::string& name) {
  const ScheduleConfig* best = &c.schedule;
  std::size_t best_len = 0;
  for (const auto& [prefix, s] : c.groups) {
    if (name.compare(0, prefix.size(), prefix) == 0 && prefix.size() >= best_len) {
      best = &s;
      best_len = prefix.size();
    }
  }
  return *best;
}

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  Parameters<T> m;
  Parameters<T> v;
};

template <typename T>
AdamState<T> init_adam(const Parameters<T>& params) {
  AdamState<T> s;
  for (const auto& [name, w] : params) {
    s.m.emplace(name, Mat<T>::Zero(w.rows(), w.cols()));
    s.v.emplace(name, Mat<T>::Zero(w.rows(), w.cols()));
  }
  return s;
}

template <typename T>
double global_grad_norm(const Parameters<T>& grads) {
  double sq = 0.0;
  for (const auto& [name, gr] : grads) sq += gr.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

// One bias-corrected Adam update. The effective gradient is
// grad + 2 * l2_weight * weight. Non-finite gradients reject the whole step
// before anything is modified.
template <typename T>
void adam_step(Parameters<T>& params, AdamState<T>& state, const Parameters<T>& grads,
               const OptimConfig& cfg) {
  for (const auto& [name, w] : params) {
    auto it = grads.find(name);
    require(it != grads.end(), Errc::kShapeMismatch, "no gradient for " + name);
    require(it->second.rows() == w.rows() && it->second.cols() == w.cols(), Errc::kShapeMismatch,
            "gradient shape mismatch for " + name);
    if (!it->second.allFinite()) {
      fail(Errc::kNonFinite, "non-finite gradient for " + name + " at step " +
                                 std::to_string(state.step + 1));
    }
  }
  double clip_scale = 1.0;
  if (cfg.grad_clip) {
    const double norm = global_grad_norm(grads);
    if (norm > *cfg.grad_clip) clip_scale = *cfg.grad_clip / norm;
  }

  const std::uint64_t t = ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (auto& [name, w] : params) {
    const double lr = lr_at(schedule_for(cfg, name), t);
    Mat<T> g = grads.at(name);
    if (clip_scale != 1.0) g *= static_cast<T>(clip_scale);
    if (cfg.l2_weight != 0.0) g += static_cast<T>(2.0 * cfg.l2_weight) * w;
    Mat<T>& m = state.m.at(name);
    Mat<T>& v = state.v.at(name);
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(cfg.epsilon);
    w.array() -= step_size * m.array() / ((v.array() * inv_bc2).sqrt() + eps);
  }
}

template <typename T>
void ema_update(Parameters<T>& shadow, const Parameters<T>& params, double decay) {
  const T d = static_cast<T>(decay);
  const T rest = static_cast<T>(1.0 - decay);
  for (auto& [name, s] : shadow) {
    const Mat<T>& p = params.at(name);
    require(p.rows() == s.rows() && p.cols() == s.cols(), Errc::kShapeMismatch,
            "EMA shape mismatch for " + name);
    s = d * s + rest * p;
  }
}

template <typename T>
double l2_penalty(const Parameters<T>& params, double l2_weight) {
  double sq = 0.0;
  for (const auto& [name, w] : params) sq += w.template cast<double>().squaredNorm();
  return l2_weight * sq;
}

}  // namespace stew
