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

// Conformer-Transducer: convolutional subsampling, Conformer blocks
// (half-step FFN, self-attention, convolution module, half-step FFN, final
// norm), an LSTM prediction network and an additive tanh joint network.

#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stew/autodiff.hpp"
#include "stew/config.hpp"
#include "stew/error.hpp"
#include "stew/frontend.hpp"
#include "stew/rng.hpp"
#include "stew/transducer.hpp"

namespace stew {

inline constexpr const char* kBlankToken = "<blank>";

struct ModelConfig {
  std::string preset = "toy";
  int input_dim = 80;
  int encoder_layers = 2;
  int encoder_dim = 64;
  int attention_heads = 4;
  int conv_kernel = 7;
  int subsample_factor = 4;
  int ff_expansion = 4;
  int pred_layers = 1;
  int pred_dim = 64;
  int joint_dim = 64;
  int max_labels = 256;
  std::vector<std::string> vocab{kBlankToken};
  double dropout = 0.1;
  double weight_noise_sigma = 0.0;
  double l2_weight = 1e-6;
  // Global feature normalization applied before the encoder: (x - shift) * scale.
  double input_shift = 0.0;
  double input_scale = 1.0;

  int vocab_size() const { return static_cast<int>(vocab.size()); }

  // Architecture and vocabulary, i.e. everything that fixes parameter shapes
  // and token meaning. Regularization knobs are excluded.
  bool same_architecture(const ModelConfig& o) const {
    return input_dim == o.input_dim && encoder_layers == o.encoder_layers &&
           encoder_dim == o.encoder_dim && attention_heads == o.attention_heads &&
           conv_kernel == o.conv_kernel && subsample_factor == o.subsample_factor &&
           ff_expansion == o.ff_expansion && pred_layers == o.pred_layers &&
           pred_dim == o.pred_dim && joint_dim == o.joint_dim;
  }
};

inline void validate(const ModelConfig& c) {
  require(c.vocab.size() >= 2, Errc::kInvalidArgument, "vocab needs blank plus at least one token");
  require(c.vocab[0] == kBlankToken, Errc::kInvalidArgument, "vocab[0] must be the blank token");
  for (std::size_t i = 1; i < c.vocab.size(); ++i) {
    require(c.vocab[i] != kBlankToken, Errc::kInvalidArgument, "blank token appears more than once");
  }
  require(c.subsample_factor >= 1 && (c.subsample_factor & (c.subsample_factor - 1)) == 0,
          Errc::kInvalidArgument, "subsample_factor must be a power of two");
  require(c.dropout >= 0.0 && c.dropout < 1.0, Errc::kInvalidArgument, "dropout must lie in [0, 1)");
  require(c.weight_noise_sigma >= 0.0, Errc::kInvalidArgument, "weight noise sigma must be >= 0");
  require(c.l2_weight >= 0.0, Errc::kInvalidArgument, "l2_weight must be >= 0");
  require(c.encoder_layers >= 0 && c.encoder_dim >= 1 && c.pred_dim >= 1 && c.joint_dim >= 1 &&
              c.pred_layers >= 1 && c.input_dim >= 1 && c.conv_kernel >= 1 && c.ff_expansion >= 1,
          Errc::kInvalidArgument, "model dimensions must be positive");
  require(c.attention_heads >= 1 && c.encoder_dim % c.attention_heads == 0, Errc::kInvalidArgument,
          "encoder_dim must be divisible by attention_heads");
  require(c.input_scale > 0.0, Errc::kInvalidArgument, "input_scale must be positive");
}

// Dimensions of the named configurations. "conformer-100m" is Conformer L;
// "conformer-1b" is Conformer XXL. The large presets exist for reference
// and are never trained at desk scale.
inline ModelConfig model_preset(const std::string& name) {
  ModelConfig c;
  c.preset = name;
  if (name == "toy") return c;
  if (name == "conformer-100m") {
    c.encoder_layers = 17;
    c.encoder_dim = 512;
    c.attention_heads = 8;
    c.conv_kernel = 32;
    c.pred_layers = 1;
    c.pred_dim = 640;
    c.joint_dim = 640;
    return c;
  }
  if (name == "conformer-1b") {
    c.encoder_layers = 42;
    c.encoder_dim = 1024;
    c.attention_heads = 8;
    c.conv_kernel = 5;
    c.pred_layers = 2;
    c.pred_dim = 640;
    c.joint_dim = 640;
    return c;
  }
  fail(Errc::kInvalidArgument, "unknown model preset: " + name);
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

inline void write_model_config(KeyValueFile& f, const ModelConfig& c, const std::string& section = "model") {
  f.set(section, "preset", c.preset);
  f.set(section, "input_dim", c.input_dim);
  f.set(section, "encoder_layers", c.encoder_layers);
  f.set(section, "encoder_dim", c.encoder_dim);
  f.set(section, "attention_heads", c.attention_heads);
  f.set(section, "conv_kernel", c.conv_kernel);
  f.set(section, "subsample_factor", c.subsample_factor);
  f.set(section, "ff_expansion", c.ff_expansion);
  f.set(section, "pred_layers", c.pred_layers);
  f.set(section, "pred_dim", c.pred_dim);
  f.set(section, "joint_dim", c.joint_dim);
  f.set(section, "max_labels", c.max_labels);
  f.set(section, "vocab", join_words(c.vocab));
  f.set(section, "dropout", c.dropout);
  f.set(section, "weight_noise_sigma", c.weight_noise_sigma);
  f.set(section, "l2_weight", c.l2_weight);
  f.set(section, "input_shift", c.input_shift);
  f.set(section, "input_scale", c.input_scale);
}

// Reads [section]; a "preset" key seeds the defaults and every other key
// overrides. Missing keys keep the values in `base`. Fully written sections
// (checkpoints) pass seed_from_preset = false and keep the name as a label.
inline ModelConfig read_model_config(const KeyValueFile& f, const std::string& section = "model",
                                     std::optional<ModelConfig> base = std::nullopt,
                                     bool seed_from_preset = true) {
  ModelConfig c = base.value_or(ModelConfig{});
  if (!seed_from_preset) {
    if (auto preset = f.find(section, "preset")) c.preset = *preset;
  } else if (auto preset = f.find(section, "preset")) {
    ModelConfig p = model_preset(*preset);
    if (base) {
      p.vocab = base->vocab;
      p.input_shift = base->input_shift;
      p.input_scale = base->input_scale;
    }
    c = p;
  }
  c.input_dim = f.get(section, "input_dim", c.input_dim);
  c.encoder_layers = f.get(section, "encoder_layers", c.encoder_layers);
  c.encoder_dim = f.get(section, "encoder_dim", c.encoder_dim);
  c.attention_heads = f.get(section, "attention_heads", c.attention_heads);
  c.conv_kernel = f.get(section, "conv_kernel", c.conv_kernel);
  c.subsample_factor = f.get(section, "subsample_factor", c.subsample_factor);
  c.ff_expansion = f.get(section, "ff_expansion", c.ff_expansion);
  c.pred_layers = f.get(section, "pred_layers", c.pred_layers);
  c.pred_dim = f.get(section, "pred_dim", c.pred_dim);
  c.joint_dim = f.get(section, "joint_dim", c.joint_dim);
  c.max_labels = f.get(section, "max_labels", c.max_labels);
  if (auto v = f.find(section, "vocab")) c.vocab = split_words(*v);
  c.dropout = f.get(section, "dropout", c.dropout);
  c.weight_noise_sigma = f.get(section, "weight_noise_sigma", c.weight_noise_sigma);
  c.l2_weight = f.get(section, "l2_weight", c.l2_weight);
  c.input_shift = f.get(section, "input_shift", c.input_shift);
  c.input_scale = f.get(section, "input_scale", c.input_scale);
  return c;
}

template <typename T>
using Parameters = std::map<std::string, Mat<T>>;

struct ParamShape {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  enum class Kind { kLinear, kBias, kNormScale, kNormBias, kEmbedding } kind;
  Eigen::Index fan_in;
};

inline int subsample_layers(const ModelConfig& c) {
  int n = 0;
  for (int f = c.subsample_factor; f > 1; f >>= 1) ++n;
  return n;
}

// Every learnable tensor, in a fixed order. The key set and shapes are a
// pure function of the configuration.
inline std::vector<ParamShape> param_shapes(const ModelConfig& c) {
  using K = ParamShape::Kind;
  std::vector<ParamShape> s;
  auto linear = [&](const std::string& p, Eigen::Index in, Eigen::Index out, bool bias = true) {
    s.push_back({p + "/weight", in, out, K::kLinear, in});
    if (bias) s.push_back({p + "/bias", 1, out, K::kBias, in});
  };
  auto norm = [&](const std::string& p, Eigen::Index d) {
    s.push_back({p + "/scale", 1, d, K::kNormScale, d});
    s.push_back({p + "/bias", 1, d, K::kNormBias, d});
  };
  const Eigen::Index d = c.encoder_dim;
  Eigen::Index in = c.input_dim;
  for (int i = 0; i < subsample_layers(c); ++i) {
    linear("encoder/subsample/conv" + std::to_string(i), 3 * in, d);
    in = d;
  }
  linear("encoder/input_proj", in, d);
  for (int l = 0; l < c.encoder_layers; ++l) {
    const std::string b = "encoder/block" + std::to_string(l);
    for (const char* ffn : {"/ffn1", "/ffn2"}) {
      norm(b + ffn + "/norm", d);
      linear(b + ffn + "/linear1", d, d * c.ff_expansion);
      linear(b + ffn + "/linear2", d * c.ff_expansion, d);
    }
    norm(b + "/mhsa/norm", d);
    for (const char* proj : {"/mhsa/query", "/mhsa/key", "/mhsa/value", "/mhsa/out"}) linear(b + proj, d, d);
    norm(b + "/conv/norm", d);
    linear(b + "/conv/pointwise1", d, 2 * d);
    s.push_back({b + "/conv/depthwise/weight", c.conv_kernel, d, K::kLinear, c.conv_kernel});
    s.push_back({b + "/conv/depthwise/bias", 1, d, K::kBias, c.conv_kernel});
    norm(b + "/conv/mid_norm", d);
    linear(b + "/conv/pointwise2", d, d);
    norm(b + "/final_norm", d);
  }
  const Eigen::Index p = c.pred_dim;
  s.push_back({"decoder/pred/embedding", c.vocab_size(), p, K::kEmbedding, p});
  for (int l = 0; l < c.pred_layers; ++l) {
    const std::string b = "decoder/pred/lstm" + std::to_string(l);
    s.push_back({b + "/w_ih", p, 4 * p, K::kLinear, p});
    s.push_back({b + "/w_hh", p, 4 * p, K::kLinear, p});
    s.push_back({b + "/bias", 1, 4 * p, K::kBias, p});
  }
  linear("decoder/joint/enc_proj", d, c.joint_dim);
  linear("decoder/joint/pred_proj", p, c.joint_dim, false);
  linear("decoder/joint/out", c.joint_dim, c.vocab_size());
  return s;
}

inline std::size_t param_count(const ModelConfig& c) {
  std::size_t n = 0;
  for (const auto& s : param_shapes(c)) n += static_cast<std::size_t>(s.rows * s.cols);
  return n;
}

// Linear weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); embeddings ~ U(-1, 1);
// biases 0; norm scales 1.
template <typename T>
Parameters<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Parameters<T> params;
  for (const auto& s : param_shapes(cfg)) {
    Rng rng = make_rng(seed, "init", s.name);
    Mat<T> m(s.rows, s.cols);
    using K = ParamShape::Kind;
    switch (s.kind) {
      case K::kLinear:
      case K::kEmbedding: {
        const double bound = s.kind == K::kEmbedding ? 1.0 : 1.0 / std::sqrt(static_cast<double>(s.fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
        break;
      }
      case K::kBias:
      case K::kNormBias: m.setZero(); break;
      case K::kNormScale: m.setOnes(); break;
    }
    params.emplace(s.name, std::move(m));
  }
  return params;
}

template <typename T>
void check_params(const ModelConfig& cfg, const Parameters<T>& params) {
  const auto shapes = param_shapes(cfg);
  require(shapes.size() == params.size(), Errc::kConfigMismatch,
          "parameter set has " + std::to_string(params.size()) + " tensors, config expects " +
              std::to_string(shapes.size()));
  for (const auto& s : shapes) {
    auto it = params.find(s.name);
    require(it != params.end(), Errc::kConfigMismatch, "missing parameter " + s.name);
    require(it->second.rows() == s.rows && it->second.cols() == s.cols, Errc::kConfigMismatch,
            "shape mismatch for " + s.name);
  }
}

// Clean parameters plus i.i.d. N(0, sigma^2) on every tensor. The result is
// used for one step's forward/backward only.
template <typename T>
Parameters<T> apply_weight_noise(const Parameters<T>& params, double sigma, Rng& rng) {
  require(sigma >= 0.0, Errc::kInvalidArgument, "weight noise sigma must be >= 0");
  Parameters<T> noisy = params;
  if (sigma == 0.0) return noisy;
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& [name, m] : noisy) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += static_cast<T>(gauss(rng));
  }
  return noisy;
}

enum class Mode { kTrain, kEval };

template <typename T>
Mat<T> sinusoidal_positions(Eigen::Index length, Eigen::Index dim) {
  Mat<T> pe(length, dim);
  for (Eigen::Index pos = 0; pos < length; ++pos) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      pe(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
Mat<T> features_to_input(const FeatureMatrix& f, const ModelConfig& cfg,
                         std::optional<int> valid_frames = std::nullopt) {
  require(f.channels == cfg.input_dim, Errc::kShapeMismatch,
          "feature channels " + std::to_string(f.channels) + " do not match model input " +
              std::to_string(cfg.input_dim));
  const int frames = valid_frames ? std::min(*valid_frames, f.frames) : f.frames;
  Mat<T> x(frames, f.channels);
  for (int t = 0; t < frames; ++t) {
    for (int c = 0; c < f.channels; ++c) {
      x(t, c) = static_cast<T>((f.at(t, c) - cfg.input_shift) * cfg.input_scale);
    }
  }
  return x;
}

inline int encoder_length(int frames, int subsample_factor) {
  return (frames + subsample_factor - 1) / subsample_factor;
}

// Prediction-network recurrent state: one (h, c) pair per LSTM layer.
struct PredState {
  std::vector<Var> h;
  std::vector<Var> c;
};

template <typename T>
class ConformerTransducer {
 public:
  explicit ConformerTransducer(ModelConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

  const ModelConfig& config() const { return cfg_; }

  class Bound {
   public:
    Var operator[](const std::string& name) const {
      auto it = vars_.find(name);
      if (it == vars_.end()) fail(Errc::kConfigMismatch, "unbound parameter " + name);
      return it->second;
    }

   private:
    friend class ConformerTransducer;
    std::map<std::string, Var> vars_;
  };

  // Registers every parameter as a named leaf of the graph.
  Bound bind(Graph<T>& g, const Parameters<T>& params) const {
    check_params(cfg_, params);
    Bound b;
    for (const auto& [name, m] : params) b.vars_.emplace(name, g.leaf(m, name));
    return b;
  }

  // (frames x input_dim) -> (ceil(frames / subsample) x encoder_dim)
  Var encode(Graph<T>& g, const Bound& p, Var input, Mode mode, Rng* rng) const {
    require(g.value(input).cols() == cfg_.input_dim, Errc::kShapeMismatch,
            "encoder input has " + std::to_string(g.value(input).cols()) + " channels, expected " +
                std::to_string(cfg_.input_dim));
    require(g.value(input).rows() >= 1, Errc::kInvalidArgument, "encoder input has no frames");
    Rng* drop = mode == Mode::kTrain ? rng : nullptr;
    const double rate = cfg_.dropout;
    if (mode == Mode::kTrain && rate > 0.0) {
      require(rng != nullptr, Errc::kInvalidArgument, "train mode with dropout needs an rng");
    }

    Var x = input;
    for (int i = 0; i < subsample_layers(cfg_); ++i) {
      const std::string n = "encoder/subsample/conv" + std::to_string(i);
      x = ad::relu(g, linear(g, p, n, ad::im2col(g, x, 3, 2, 1)));
    }
    x = linear(g, p, "encoder/input_proj", x);
    x = ad::add(g, x, g.constant(sinusoidal_positions<T>(g.value(x).rows(), cfg_.encoder_dim)));
    x = ad::dropout(g, x, rate, drop);

    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      const std::string b = "encoder/block" + std::to_string(l);
      x = ad::add_scaled(g, x, feed_forward(g, p, b + "/ffn1", x, drop), T(0.5));
      x = ad::add(g, x, self_attention(g, p, b + "/mhsa", x, drop));
      x = ad::add(g, x, conv_module(g, p, b + "/conv", x, drop));
      x = ad::add_scaled(g, x, feed_forward(g, p, b + "/ffn2", x, drop), T(0.5));
      x = norm(g, p, b + "/final_norm", x);
    }
    return x;
  }

  Var feed_forward(Graph<T>& g, const Bound& p, const std::string& n, Var x, Rng* drop) const {
    Var y = norm(g, p, n + "/norm", x);
    y = ad::swish(g, linear(g, p, n + "/linear1", y));
    y = ad::dropout(g, y, cfg_.dropout, drop);
    y = linear(g, p, n + "/linear2", y);
    return ad::dropout(g, y, cfg_.dropout, drop);
  }

  Var self_attention(Graph<T>& g, const Bound& p, const std::string& n, Var x, Rng* drop) const {
    Var y = norm(g, p, n + "/norm", x);
    Var q = linear(g, p, n + "/query", y);
    Var k = linear(g, p, n + "/key", y);
    Var v = linear(g, p, n + "/value", y);
    const int heads = cfg_.attention_heads;
    const Eigen::Index dk = cfg_.encoder_dim / heads;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dk));
    std::vector<Var> outs;
    for (int h = 0; h < heads; ++h) {
      Var qh = ad::slice_cols(g, q, h * dk, dk);
      Var kh = ad::slice_cols(g, k, h * dk, dk);
      Var vh = ad::slice_cols(g, v, h * dk, dk);
      Var attn = ad::softmax_rows(g, ad::scale(g, ad::matmul_nt(g, qh, kh), inv_sqrt));
      outs.push_back(ad::matmul(g, attn, vh));
    }
    Var o = heads == 1 ? outs[0] : ad::concat_cols(g, outs);
    o = linear(g, p, n + "/out", o);
    return ad::dropout(g, o, cfg_.dropout, drop);
  }

  Var conv_module(Graph<T>& g, const Bound& p, const std::string& n, Var x, Rng* drop) const {
    Var y = norm(g, p, n + "/norm", x);
    y = ad::glu(g, linear(g, p, n + "/pointwise1", y));
    y = ad::add_row(g, ad::depthwise_conv1d(g, y, p[n + "/depthwise/weight"]), p[n + "/depthwise/bias"]);
    y = ad::swish(g, norm(g, p, n + "/mid_norm", y));
    y = linear(g, p, n + "/pointwise2", y);
    return ad::dropout(g, y, cfg_.dropout, drop);
  }

  PredState initial_state(Graph<T>& g) const {
    PredState s;
    for (int l = 0; l < cfg_.pred_layers; ++l) {
      s.h.push_back(g.constant(Mat<T>::Zero(1, cfg_.pred_dim)));
      s.c.push_back(g.constant(Mat<T>::Zero(1, cfg_.pred_dim)));
    }
    return s;
  }

  // One prediction-network step on `token` (blank doubles as start symbol).
  // Returns the top-layer output (1 x pred_dim) and updates `state`.
  Var pred_step(Graph<T>& g, const Bound& p, int token, PredState& state) const {
    Var x = ad::gather_rows(g, p["decoder/pred/embedding"], {token});
    for (int l = 0; l < cfg_.pred_layers; ++l) {
      x = lstm_cell(g, p, "decoder/pred/lstm" + std::to_string(l), x, state.h[l], state.c[l]);
    }
    return x;
  }

  Var lstm_cell(Graph<T>& g, const Bound& p, const std::string& n, Var x, Var& h, Var& c) const {
    const Eigen::Index d = cfg_.pred_dim;
    Var gates = ad::add(g, ad::matmul(g, x, p[n + "/w_ih"]), ad::matmul(g, h, p[n + "/w_hh"]));
    gates = ad::add_row(g, gates, p[n + "/bias"]);
    Var i = ad::sigmoid(g, ad::slice_cols(g, gates, 0, d));
    Var f = ad::sigmoid(g, ad::slice_cols(g, gates, d, d));
    Var z = ad::tanh(g, ad::slice_cols(g, gates, 2 * d, d));
    Var o = ad::sigmoid(g, ad::slice_cols(g, gates, 3 * d, d));
    c = ad::add(g, ad::mul(g, f, c), ad::mul(g, i, z));
    h = ad::mul(g, o, ad::tanh(g, c));
    return h;
  }

  // Prediction outputs after 0..U labels: (U + 1) x pred_dim.
  Var predict(Graph<T>& g, const Bound& p, const std::vector<int>& labels) const {
    check_labels(labels);
    PredState state = initial_state(g);
    std::vector<Var> rows;
    rows.push_back(pred_step(g, p, kBlank, state));
    for (int y : labels) rows.push_back(pred_step(g, p, y, state));
    return rows.size() == 1 ? rows[0] : ad::concat_rows(g, rows);
  }

  // (T' x d), (U+1 x p) -> (T' * (U+1)) x vocab lattice of raw logits.
  Var joint(Graph<T>& g, const Bound& p, Var enc, Var pred) const {
    Var e = linear(g, p, "decoder/joint/enc_proj", enc);
    Var q = ad::matmul(g, pred, p["decoder/joint/pred_proj/weight"]);
    Var h = ad::tanh(g, ad::pairwise_add(g, e, q));
    return linear(g, p, "decoder/joint/out", h);
  }

  // Joint logits for a single (encoder frame, prediction output) pair.
  Var joint_single(Graph<T>& g, const Bound& p, Var enc_proj_row, Var pred_out) const {
    Var q = ad::matmul(g, pred_out, p["decoder/joint/pred_proj/weight"]);
    Var h = ad::tanh(g, ad::add(g, enc_proj_row, q));
    return linear(g, p, "decoder/joint/out", h);
  }

  Var enc_proj(Graph<T>& g, const Bound& p, Var enc) const {
    return linear(g, p, "decoder/joint/enc_proj", enc);
  }

  // Per-utterance transducer loss (nats) as a graph scalar.
  Var utterance_loss(Graph<T>& g, const Bound& p, const Mat<T>& input, const std::vector<int>& labels,
                     Mode mode, Rng* rng) const {
    Var enc = encode(g, p, g.constant(input), mode, rng);
    Var lattice = joint(g, p, enc, predict(g, p, labels));
    return rnnt_loss_node(g, lattice, static_cast<int>(g.value(enc).rows()), labels);
  }

  void check_labels(const std::vector<int>& labels) const {
    require(static_cast<int>(labels.size()) <= cfg_.max_labels, Errc::kInvalidArgument,
            "label sequence longer than max_labels");
    for (int y : labels) {
      require(y != kBlank, Errc::kInvalidArgument, "label sequence contains blank");
      require(y > 0 && y < cfg_.vocab_size(), Errc::kInvalidArgument, "label outside vocabulary");
    }
  }

 private:
  Var linear(Graph<T>& g, const Bound& p, const std::string& n, Var x) const {
    return ad::add_row(g, ad::matmul(g, x, p[n + "/weight"]), p[n + "/bias"]);
  }

  Var norm(Graph<T>& g, const Bound& p, const std::string& n, Var x) const {
    return ad::layer_norm(g, x, p[n + "/scale"], p[n + "/bias"]);
  }

  ModelConfig cfg_;
};

// Batch encoder pass. Each utterance is processed on its own, so frames past
// an utterance's valid length (padding) can never reach its outputs.
template <typename T>
std::vector<Mat<T>> encoder_forward(const ModelConfig& cfg, const std::vector<FeatureMatrix>& batch,
                                    const Parameters<T>& params, Mode mode, Rng* rng,
                                    const std::vector<int>& valid_frames = {}) {
  ConformerTransducer<T> model(cfg);
  std::vector<Mat<T>> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::optional<int> valid;
    if (i < valid_frames.size()) valid = valid_frames[i];
    Graph<T> g;
    auto p = model.bind(g, params);
    Var enc = model.encode(g, p, g.constant(features_to_input<T>(batch[i], cfg, valid)), mode, rng);
    out.push_back(g.value(enc));
  }
  return out;
}

template <typename T>
std::vector<LogitLattice<T>> transducer_logits(const ModelConfig& cfg,
                                               const std::vector<Mat<T>>& encoder_states,
                                               const std::vector<std::vector<int>>& label_prefixes,
                                               const Parameters<T>& params) {
  require(encoder_states.size() == label_prefixes.size(), Errc::kShapeMismatch,
          "batch size mismatch between encoder states and labels");
  ConformerTransducer<T> model(cfg);
  std::vector<LogitLattice<T>> out;
  for (std::size_t i = 0; i < encoder_states.size(); ++i) {
    Graph<T> g;
    auto p = model.bind(g, params);
    Var enc = g.constant(encoder_states[i]);
    Var lat = model.joint(g, p, enc, model.predict(g, p, label_prefixes[i]));
    out.push_back({g.value(lat), static_cast<int>(encoder_states[i].rows()),
                   static_cast<int>(label_prefixes[i].size())});
  }
  return out;
}

}  // namespace stew
