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

#include <string>
#include <vector>

#include "stew/model.hpp"
#include "stew/transducer.hpp"

namespace stew {

inline constexpr int kMaxSymbolsPerFrame = 10;

// Frame-synchronous greedy search. At each encoder frame the argmax token is
// emitted until blank wins (advance to the next frame) or the per-frame
// symbol cap is hit. The score sums the log-probabilities of every chosen
// token, blanks included.
template <typename T>
Hypothesis greedy_decode(const ConformerTransducer<T>& model, const Parameters<T>& params,
                         const FeatureMatrix& features, int max_symbols_per_frame = kMaxSymbolsPerFrame) {
  Hypothesis hyp;
  if (features.frames == 0) return hyp;
  Graph<T> g(false);
  auto p = model.bind(g, params);
  const Mat<T> input = features_to_input<T>(features, model.config());
  Var enc = model.encode(g, p, g.constant(input), Mode::kEval, nullptr);
  Var proj = model.enc_proj(g, p, enc);
  PredState state = model.initial_state(g);
  Var pred = model.pred_step(g, p, kBlank, state);

  const Eigen::Index frames = g.value(proj).rows();
  for (Eigen::Index t = 0; t < frames; ++t) {
    Var row = ad::slice_rows(g, proj, t, 1);
    for (int s = 0; s < max_symbols_per_frame; ++s) {
      const Mat<T> lp = detail::log_softmax_rows(g.value(model.joint_single(g, p, row, pred)));
      Eigen::Index best = 0;
      lp.row(0).maxCoeff(&best);
      hyp.score += static_cast<double>(lp(0, best));
      if (best == kBlank) break;
      hyp.tokens.push_back(static_cast<int>(best));
      pred = model.pred_step(g, p, static_cast<int>(best), state);
    }
  }
  return hyp;
}

inline std::string tokens_to_text(const std::vector<std::string>& vocab, const std::vector<int>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += vocab.at(static_cast<std::size_t>(tokens[i]));
  }
  return out;
}

}  // namespace stew
