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

// Mix, train, fine-tune, decode and evaluate.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stew/audio.hpp"
#include "stew/augment.hpp"
#include "stew/checkpoint.hpp"
#include "stew/config.hpp"
#include "stew/corpus.hpp"
#include "stew/decode.hpp"
#include "stew/error.hpp"
#include "stew/evalscore.hpp"
#include "stew/frontend.hpp"
#include "stew/model.hpp"
#include "stew/optim.hpp"
#include "stew/rng.hpp"

namespace stew {

struct RunConfig {
  std::string preset = "toy";
  ModelConfig model;
  OptimConfig optim;
  std::string augment_preset = "none";
  SpecAugmentPolicy augment;
  BatchConfig batch;
  FrontendConfig frontend;
  std::uint64_t total_steps = 2000;
  std::uint64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::uint64_t seed = 0;
  std::vector<std::string> train_manifests;
  std::vector<std::string> eval_manifests;
  std::vector<std::string> dev_manifests;
  std::string out_dir = "run";
  std::optional<std::string> init_checkpoint;  // set => fine-tune mode
  std::optional<std::string> resume_from;
  bool reset_ema_on_finetune = true;
  bool select_on_dev = false;   // fine-tune only: also keep the best-dev-loss checkpoint
  std::uint64_t dev_every = 0;
  bool normalize_features = true;

  bool finetune_mode() const { return init_checkpoint.has_value(); }
};

// Named run configurations. The large ones carry their published batch and
// step counts; "toy" and "toy-ft" are sized for one CPU core.
inline RunConfig run_preset(const std::string& name) {
  RunConfig r;
  r.preset = name;
  if (name == "toy" || name == "toy-ft") {
    r.model = model_preset("toy");
    r.model.dropout = 0.0;
    r.model.l2_weight = 0.0;
    r.optim.l2_weight = 0.0;
    r.optim.ema_decay = 0.99;
    r.optim.schedule = {2e-3, 100};
    r.batch.batch_size = 8;
    r.batch.max_frames = 3000;
    r.total_steps = 2000;
    if (name == "toy-ft") {
      r.optim.schedule = {1e-3, 20};
      r.total_steps = 500;
    }
    return r;
  }
  if (name == "stew-100m" || name == "chime-baseline-100m" || name == "chime-ft-100m") {
    r.model = model_preset("conformer-100m");
    r.model.dropout = 0.1;
    r.model.weight_noise_sigma = 0.01;
    r.optim.l2_weight = 1e-6;
    r.optim.ema_decay = 0.9999;
    r.optim.schedule = schedule_preset("stew-100m");
    r.augment_preset = "stew-train";
    r.batch.batch_size = 8192;
    r.total_steps = 100000;
    if (name == "chime-baseline-100m") {
      r.model.dropout = 0.5;
      r.optim.l2_weight = 1e-4;
      r.augment_preset = "chime-baseline-100m";
    } else if (name == "chime-ft-100m") {
      r.model.dropout = 0.4;
      r.optim.l2_weight = 1e-6;
      r.optim.schedule = schedule_preset("chime-ft-100m");
      r.augment_preset = "chime-ft-100m";
      r.total_steps = 4000;
    }
    r.model.l2_weight = r.optim.l2_weight;
    r.augment = spec_augment_preset(r.augment_preset);
    return r;
  }
  if (name == "stew-1b" || name == "chime-ft-1b") {
    r.model = model_preset("conformer-1b");
    r.model.dropout = 0.1;
    r.optim.l2_weight = 1e-6;
    r.optim.ema_decay.reset();
    r.optim.schedule = schedule_preset("1b-decoder");
    r.optim.groups["encoder/"] = schedule_preset("1b-encoder");
    r.optim.groups["decoder/"] = schedule_preset("1b-decoder");
    r.augment_preset = "stew-train";
    r.batch.batch_size = 2048;
    r.total_steps = 100000;
    if (name == "chime-ft-1b") {
      r.optim.l2_weight = 0.0;
      r.optim.schedule = schedule_preset("chime-ft-1b");
      r.optim.groups["encoder/"] = schedule_preset("chime-ft-1b");
      r.optim.groups["decoder/"] = schedule_preset("chime-ft-1b");
      r.augment_preset = "chime-ft-1b";
      r.total_steps = 6000;
    }
    r.model.l2_weight = r.optim.l2_weight;
    r.augment = spec_augment_preset(r.augment_preset);
    return r;
  }
  fail(Errc::kInvalidArgument, "unknown run preset: " + name);
}

inline std::vector<std::string> run_preset_names() {
  return {"toy", "toy-ft", "stew-100m", "stew-1b", "chime-baseline-100m", "chime-ft-100m", "chime-ft-1b"};
}

inline void validate(const RunConfig& r) {
  require(r.total_steps >= 1, Errc::kInvalidArgument, "total_steps must be >= 1");
  require(r.batch.batch_size >= 1, Errc::kInvalidArgument, "batch_size must be >= 1");
  require(r.batch.max_frames >= 1, Errc::kInvalidArgument, "max_frames must be >= 1");
  require(!r.select_on_dev || r.finetune_mode(), Errc::kInvalidArgument,
          "dev-set selection is only available when fine-tuning");
  require(!r.select_on_dev || !r.dev_manifests.empty(), Errc::kInvalidArgument,
          "dev-set selection needs dev_manifests");
  validate(r.optim);
  validate(r.augment);
}

// Settings that are valid but unlikely to run on a desk machine.
inline std::vector<std::string> run_warnings(const RunConfig& r) {
  std::vector<std::string> w;
  if (r.batch.batch_size >= 1024) {
    w.push_back("batch_size " + std::to_string(r.batch.batch_size) +
                " needs accelerator memory; lower it for a local run");
  }
  if (r.total_steps >= 50000) {
    w.push_back("total_steps " + std::to_string(r.total_steps) + " will take days on a CPU");
  }
  if (param_count(r.model) >= 10'000'000) {
    w.push_back("model has " + std::to_string(param_count(r.model)) + " parameters");
  }
  return w;
}

namespace detail {

inline ScheduleConfig read_schedule(const std::string& text) {
  // Either a preset name or "peak_lr,warmup_steps".
  const auto comma = text.find(',');
  if (comma == std::string::npos) return schedule_preset(text);
  ScheduleConfig s;
  try {
    s.peak_lr = std::stod(text.substr(0, comma));
    s.warmup_steps = std::stod(text.substr(comma + 1));
  } catch (const std::exception&) {
    fail(Errc::kParse, "bad schedule '" + text + "'");
  }
  return s;
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return (base / path).lexically_normal().string();
  return p;
}

}  // namespace detail

// Reads a run file. Sections: [run] [model] [optim] [optim.groups] [augment]
// [batch]. Values not given come from [run] preset. Relative paths are taken
// from the file's directory.
inline RunConfig parse_run_config(const KeyValueFile& f, const std::filesystem::path& base_dir = {}) {
  RunConfig r = run_preset(f.get<std::string>("run", "preset", "toy"));
  auto paths = [&](const std::string& key) {
    std::vector<std::string> out;
    if (auto v = f.find("run", key)) {
      for (const auto& p : split_words(*v)) out.push_back(detail::resolve_path(base_dir, p));
    }
    return out;
  };
  r.total_steps = f.get("run", "total_steps", r.total_steps);
  r.checkpoint_every = f.get("run", "checkpoint_every", r.checkpoint_every);
  r.seed = f.get("run", "seed", r.seed);
  if (f.find("run", "train_manifests")) r.train_manifests = paths("train_manifests");
  if (f.find("run", "eval_manifests")) r.eval_manifests = paths("eval_manifests");
  if (f.find("run", "dev_manifests")) r.dev_manifests = paths("dev_manifests");
  if (auto v = f.find("run", "out_dir")) r.out_dir = detail::resolve_path(base_dir, *v);
  if (auto v = f.find("run", "init_checkpoint")) r.init_checkpoint = detail::resolve_path(base_dir, *v);
  if (auto v = f.find("run", "resume_from")) r.resume_from = detail::resolve_path(base_dir, *v);
  r.reset_ema_on_finetune = f.get("run", "reset_ema_on_finetune", r.reset_ema_on_finetune);
  r.select_on_dev = f.get("run", "select_on_dev", r.select_on_dev);
  r.dev_every = f.get("run", "dev_every", r.dev_every);
  r.normalize_features = f.get("run", "normalize_features", r.normalize_features);

  r.model = read_model_config(f, "model", r.model);

  r.optim.beta1 = f.get("optim", "beta1", r.optim.beta1);
  r.optim.beta2 = f.get("optim", "beta2", r.optim.beta2);
  r.optim.epsilon = f.get("optim", "epsilon", r.optim.epsilon);
  r.optim.l2_weight = f.get("optim", "l2_weight", r.optim.l2_weight);
  if (auto v = f.find("optim", "ema_decay")) {
    if (*v == "none" || *v == "off") {
      r.optim.ema_decay.reset();
    } else {
      r.optim.ema_decay = f.get<double>("optim", "ema_decay");
    }
  }
  if (auto v = f.find("optim", "grad_clip")) {
    if (*v == "none" || *v == "off") {
      r.optim.grad_clip.reset();
    } else {
      r.optim.grad_clip = f.get<double>("optim", "grad_clip");
    }
  }
  if (auto v = f.find("optim", "schedule")) r.optim.schedule = detail::read_schedule(*v);
  r.optim.schedule.peak_lr = f.get("optim", "peak_lr", r.optim.schedule.peak_lr);
  r.optim.schedule.warmup_steps = f.get("optim", "warmup_steps", r.optim.schedule.warmup_steps);
  if (f.has_section("optim.groups")) {
    r.optim.groups.clear();
    for (const auto& key : f.keys("optim.groups")) {
      r.optim.groups[key] = detail::read_schedule(f.get<std::string>("optim.groups", key));
    }
  }
  r.model.l2_weight = r.optim.l2_weight;

  if (auto v = f.find("augment", "preset")) {
    r.augment_preset = *v;
    r.augment = spec_augment_preset(*v);
  }
  r.augment.freq_masks = f.get("augment", "freq_masks", r.augment.freq_masks);
  r.augment.freq_width = f.get("augment", "freq_width", r.augment.freq_width);
  r.augment.time_masks = f.get("augment", "time_masks", r.augment.time_masks);
  r.augment.time_ratio = f.get("augment", "time_ratio", r.augment.time_ratio);
  if (auto v = f.find("augment", "time_width")) {
    if (*v == "none") {
      r.augment.fixed_time_width.reset();
    } else {
      r.augment.fixed_time_width = f.get<int>("augment", "time_width");
    }
  }

  r.batch.batch_size = f.get("batch", "batch_size", r.batch.batch_size);
  r.batch.max_frames = f.get("batch", "max_frames", r.batch.max_frames);
  r.batch.drop_last = f.get("batch", "drop_last", r.batch.drop_last);
  r.batch.seed = r.seed;
  validate(r);
  return r;
}

inline RunConfig read_run_config(const std::filesystem::path& path) {
  return parse_run_config(KeyValueFile::load(path), path.parent_path());
}

// One utterance ready for the model: cached features and label ids.
struct Utterance {
  std::string utt_id;
  std::string domain;
  std::string transcript;
  std::vector<int> labels;
  FeatureMatrix features;
};

// Blank followed by the sorted distinct words of every transcript.
inline std::vector<std::string> vocab_from_transcripts(const Manifest& m) {
  std::set<std::string> words;
  for (const auto& e : m) {
    for (auto& w : split_words(e.transcript)) words.insert(std::move(w));
  }
  std::vector<std::string> vocab{kBlankToken};
  vocab.insert(vocab.end(), words.begin(), words.end());
  return vocab;
}

inline std::vector<int> encode_transcript(const std::vector<std::string>& vocab, const std::string& text,
                                          const std::string& utt_id = {}) {
  std::map<std::string, int> index;
  for (std::size_t i = 1; i < vocab.size(); ++i) index.emplace(vocab[i], static_cast<int>(i));
  std::vector<int> ids;
  for (const auto& w : split_words(text)) {
    auto it = index.find(w);
    if (it == index.end()) {
      fail(Errc::kUnknownWord, "word '" + w + "'" + (utt_id.empty() ? "" : " in " + utt_id) +
                                   " is not in the model vocabulary");
    }
    ids.push_back(it->second);
  }
  return ids;
}

inline FeatureMatrix featurize(const ManifestEntry& e, const FrontendConfig& cfg = {}) {
  AudioSegment audio = load_wav(e.audio);
  if (audio.sample_rate != kModelSampleRate) audio = resample(audio, kModelSampleRate);
  FeatureMatrix f = log_mel(audio, cfg);
  require(f.frames >= 1, Errc::kInvalidArgument, e.utt_id + ": audio shorter than one analysis frame");
  return f;
}

// Fails before any featurization if an audio file is missing.
inline void check_audio_exists(const Manifest& m) {
  for (const auto& e : m) {
    require(std::filesystem::exists(e.audio), Errc::kMissingFile,
            "audio for " + e.utt_id + " not found: " + e.audio);
  }
}

struct PrepareStats {
  std::size_t truncated = 0;
};

// Featurizes every entry. Utterances longer than max_frames are truncated
// (counted in `stats`), never dropped.
inline std::vector<Utterance> prepare_utterances(const Manifest& m, const std::vector<std::string>& vocab,
                                                 int max_frames, const FrontendConfig& frontend = {},
                                                 PrepareStats* stats = nullptr) {
  check_audio_exists(m);
  std::vector<Utterance> out;
  out.reserve(m.size());
  for (const auto& e : m) {
    Utterance u;
    u.utt_id = e.utt_id;
    u.domain = e.domain;
    u.transcript = e.transcript;
    u.labels = encode_transcript(vocab, e.transcript, e.utt_id);
    u.features = featurize(e, frontend);
    if (u.features.frames > max_frames) {
      u.features.values.resize(static_cast<std::size_t>(max_frames) * u.features.channels);
      u.features.frames = max_frames;
      if (stats) ++stats->truncated;
    }
    out.push_back(std::move(u));
  }
  return out;
}

// Scalar shift and scale that give the pooled training features zero mean
// and unit variance.
inline std::pair<double, double> feature_stats(const std::vector<Utterance>& data) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& u : data) {
    for (float v : u.features.values) {
      sum += v;
      sq += static_cast<double>(v) * v;
    }
    n += u.features.values.size();
  }
  if (n == 0) return {0.0, 1.0};
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(sq / static_cast<double>(n) - mean * mean, 1e-12);
  return {mean, 1.0 / std::sqrt(var)};
}

struct StepRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;       // mean transducer loss over the batch, nats per utterance
  double objective = 0.0;  // loss plus the L2 term
  double grad_norm = 0.0;
  double wall_time = 0.0;  // seconds since the loop started
  std::optional<double> dev_loss;
};

inline nlohmann::ordered_json to_json(const StepRecord& s) {
  nlohmann::ordered_json j;
  j["step"] = s.step;
  j["lr"] = s.lr;
  j["loss"] = s.loss;
  j["objective"] = s.objective;
  j["grad_norm"] = s.grad_norm;
  j["wall_time"] = s.wall_time;
  if (s.dev_loss) j["dev_loss"] = *s.dev_loss;
  return j;
}

using TrainState = Checkpoint<float>;

// Called after every step; return false to stop the loop early (the final
// checkpoint is still written).
using StepCallback = std::function<bool(const StepRecord&, const TrainState&)>;

struct TrainOptions {
  StepCallback on_step;
  bool write_files = true;  // checkpoints and log under out_dir
  std::ostream* progress = nullptr;
  std::uint64_t progress_every = 100;
};

struct TrainResult {
  TrainState state;
  std::vector<StepRecord> log;
  std::optional<std::filesystem::path> final_checkpoint;
  std::optional<std::filesystem::path> best_checkpoint;
  std::optional<double> best_dev_loss;
};

// Mean per-utterance transducer loss in evaluation mode.
template <typename T>
double dev_loss(const ModelConfig& cfg, const Parameters<T>& params, const std::vector<Utterance>& data) {
  require(!data.empty(), Errc::kInvalidArgument, "dev set is empty");
  ConformerTransducer<T> model(cfg);
  double total = 0.0;
  for (const auto& u : data) {
    Graph<T> g(false);
    auto p = model.bind(g, params);
    Var l = model.utterance_loss(g, p, features_to_input<T>(u.features, cfg), u.labels, Mode::kEval, nullptr);
    total += static_cast<double>(g.value(l)(0, 0));
  }
  return total / static_cast<double>(data.size());
}

inline std::string checkpoint_name(std::uint64_t step) {
  std::ostringstream s;
  s << "ckpt-" << std::setw(7) << std::setfill('0') << step << ".ckpt";
  return s.str();
}

// The optimizer loop shared by training from scratch, fine-tuning and
// resumption. `state` holds parameters, moments, EMA shadow and the number
// of steps already taken; the loop runs until state.step == total_steps.
// Domain tags are never read here.
inline TrainResult run_training(const RunConfig& cfg, TrainState state, const std::vector<Utterance>& data,
                                const std::vector<Utterance>& dev, const TrainOptions& opts = {}) {
  validate(cfg);
  require(!data.empty(), Errc::kInvalidArgument, "training set is empty");
  require(state.step <= cfg.total_steps, Errc::kInvalidArgument,
          "checkpoint step " + std::to_string(state.step) + " is past total_steps");
  const ModelConfig& mc = state.config;
  ConformerTransducer<float> model(mc);
  for (const auto& u : data) model.check_labels(u.labels);

  BatchConfig bc = cfg.batch;
  bc.seed = cfg.seed;
  BatchStream stream(data.size(), bc);

  namespace fs = std::filesystem;
  std::ofstream log_file;
  if (opts.write_files) {
    fs::create_directories(cfg.out_dir);
    log_file.open(fs::path(cfg.out_dir) / "train_log.jsonl", state.step == 0 ? std::ios::trunc : std::ios::app);
    require(static_cast<bool>(log_file), Errc::kIo, "cannot write training log in " + cfg.out_dir);
  }

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  const double ema_decay = cfg.optim.ema_decay.value_or(0.0);
  if (cfg.optim.ema_decay && !state.ema) state.ema = state.params;

  while (state.step < cfg.total_steps) {
    const std::uint64_t step = state.step + 1;
    const std::uint64_t batch_index = step - 1;
    const std::uint64_t epoch = stream.epoch_of(batch_index);
    const auto batch = stream.batch_at(batch_index);

    Parameters<float> noisy;
    const Parameters<float>* view = &state.params;
    if (mc.weight_noise_sigma > 0.0) {
      Rng noise_rng = make_rng(cfg.seed, "weight_noise", step);
      noisy = apply_weight_noise(state.params, mc.weight_noise_sigma, noise_rng);
      view = &noisy;
    }

    Graph<float> g(true);
    auto p = model.bind(g, *view);
    std::vector<Var> losses;
    losses.reserve(batch.size());
    double loss_sum = 0.0;
    for (std::size_t idx : batch) {
      const Utterance& u = data[idx];
      Rng aug_rng = make_rng(cfg.seed, "augment", epoch, u.utt_id);
      Rng drop_rng = make_rng(cfg.seed, "dropout", step, u.utt_id);
      const FeatureMatrix feats = spec_augment(u.features, cfg.augment, aug_rng);
      Var l;
      try {
        l = model.utterance_loss(g, p, features_to_input<float>(feats, mc), u.labels, Mode::kTrain, &drop_rng);
      } catch (const Error& e) {
        if (e.code() != Errc::kNonFinite) throw;
        fail(Errc::kNonFinite, "non-finite loss at step " + std::to_string(step) + ", utterance " + u.utt_id);
      }
      const double v = g.value(l)(0, 0);
      if (!std::isfinite(v)) {
        fail(Errc::kNonFinite, "non-finite loss at step " + std::to_string(step) + ", utterance " + u.utt_id);
      }
      loss_sum += v;
      losses.push_back(l);
    }
    const float inv_b = 1.0f / static_cast<float>(batch.size());
    Var total = ad::add_scalars(g, losses, inv_b);
    g.backward(total);
    Parameters<float> grads = g.named_gradients();

    StepRecord rec;
    rec.step = step;
    rec.lr = lr_at(cfg.optim.schedule, step);
    rec.loss = loss_sum / static_cast<double>(batch.size());
    rec.objective = rec.loss + l2_penalty(state.params, cfg.optim.l2_weight);
    rec.grad_norm = global_grad_norm(grads);

    OptimConfig oc = cfg.optim;
    try {
      adam_step(state.params, state.adam, grads, oc);
    } catch (const Error& e) {
      if (e.code() != Errc::kNonFinite) throw;
      std::string ids;
      for (std::size_t idx : batch) ids += (ids.empty() ? "" : ",") + data[idx].utt_id;
      fail(Errc::kNonFinite, std::string(e.what()) + " (utterances " + ids + ")");
    }
    state.step = state.adam.step;
    if (state.ema) ema_update(*state.ema, state.params, ema_decay);

    const bool dev_due = !dev.empty() && cfg.dev_every > 0 && (step % cfg.dev_every == 0 || step == cfg.total_steps);
    if (dev_due) {
      rec.dev_loss = dev_loss(mc, state.ema ? *state.ema : state.params, dev);
      if (cfg.select_on_dev && (!result.best_dev_loss || *rec.dev_loss < *result.best_dev_loss)) {
        result.best_dev_loss = rec.dev_loss;
        if (opts.write_files) {
          result.best_checkpoint = fs::path(cfg.out_dir) / "best.ckpt";
          save_checkpoint(*result.best_checkpoint, state);
        }
      }
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts.write_files) log_file << to_json(rec).dump() << '\n' << std::flush;
    if (opts.progress && (step % opts.progress_every == 0 || step == cfg.total_steps)) {
      *opts.progress << "step " << step << " lr " << rec.lr << " loss " << rec.loss << " grad_norm "
                     << rec.grad_norm << '\n';
    }
    result.log.push_back(rec);

    if (opts.write_files && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
      save_checkpoint(fs::path(cfg.out_dir) / checkpoint_name(step), state);
    }
    if (opts.on_step && !opts.on_step(rec, state)) break;
  }

  if (opts.write_files) {
    result.final_checkpoint = fs::path(cfg.out_dir) / "final.ckpt";
    save_checkpoint(*result.final_checkpoint, state);
  }
  result.state = std::move(state);
  return result;
}

// Training or fine-tuning state before the first step.
inline TrainState initial_state(const RunConfig& cfg, const std::vector<Utterance>& data) {
  TrainState s;
  s.config = cfg.model;
  if (cfg.normalize_features) {
    const auto [shift, scale] = feature_stats(data);
    s.config.input_shift = shift;
    s.config.input_scale = scale;
  }
  s.params = init_params<float>(s.config, cfg.seed);
  s.adam = init_adam(s.params);
  if (cfg.optim.ema_decay) s.ema = s.params;
  return s;
}

// Loads a pretrained checkpoint for fine-tuning: parameters come from the
// checkpoint, regularization from `cfg`, moments and step start at zero.
inline TrainState finetune_state(const RunConfig& cfg, const Checkpoint<float>& init) {
  ModelConfig expected = cfg.model;
  if (expected.vocab.size() <= 1) expected.vocab = init.config.vocab;
  check_compatible(expected, init.config);
  TrainState s;
  s.config = init.config;
  s.config.preset = cfg.model.preset;
  s.config.dropout = cfg.model.dropout;
  s.config.weight_noise_sigma = cfg.model.weight_noise_sigma;
  s.config.l2_weight = cfg.optim.l2_weight;
  s.params = init.params;
  s.adam = init_adam(s.params);
  s.step = 0;
  if (cfg.optim.ema_decay) {
    s.ema = (!cfg.reset_ema_on_finetune && init.ema) ? *init.ema : s.params;
  }
  return s;
}

inline Manifest load_manifests(const std::vector<std::string>& paths) {
  std::vector<Manifest> parts;
  for (const auto& p : paths) parts.push_back(read_manifest(p));
  return mix_manifests(parts);
}

// File-driven entry point behind `train` and `finetune`.
inline TrainResult train(const RunConfig& cfg, const TrainOptions& opts = {}) {
  validate(cfg);
  require(!cfg.train_manifests.empty(), Errc::kInvalidArgument, "no train_manifests given");
  const Manifest train_m = load_manifests(cfg.train_manifests);
  require(!train_m.empty(), Errc::kInvalidArgument, "training manifests are empty");
  check_audio_exists(train_m);
  const Manifest dev_m = cfg.dev_manifests.empty() ? Manifest{} : load_manifests(cfg.dev_manifests);
  check_audio_exists(dev_m);

  std::optional<Checkpoint<float>> resume;
  if (cfg.resume_from) resume = load_checkpoint<float>(*cfg.resume_from);
  std::optional<Checkpoint<float>> init;
  if (!resume && cfg.init_checkpoint) init = load_checkpoint<float>(*cfg.init_checkpoint);

  std::vector<std::string> vocab = cfg.model.vocab;
  if (resume) {
    vocab = resume->config.vocab;
  } else if (init) {
    if (vocab.size() <= 1) vocab = init->config.vocab;
  } else if (vocab.size() <= 1) {
    vocab = vocab_from_transcripts(train_m);
  }

  PrepareStats stats;
  const auto data = prepare_utterances(train_m, vocab, cfg.batch.max_frames, cfg.frontend, &stats);
  const auto dev = prepare_utterances(dev_m, vocab, cfg.batch.max_frames, cfg.frontend);
  if (stats.truncated > 0 && opts.progress) {
    *opts.progress << stats.truncated << " utterances truncated to " << cfg.batch.max_frames << " frames\n";
  }

  TrainState state;
  if (resume) {
    state = std::move(*resume);
  } else if (init) {
    RunConfig c = cfg;
    c.model.vocab = vocab;
    state = finetune_state(c, *init);
  } else {
    RunConfig c = cfg;
    c.model.vocab = vocab;
    state = initial_state(c, data);
  }
  return run_training(cfg, std::move(state), data, dev, opts);
}

inline TrainResult finetune(const RunConfig& cfg, const TrainOptions& opts = {}) {
  require(cfg.finetune_mode(), Errc::kInvalidArgument, "fine-tuning needs init_checkpoint");
  return train(cfg, opts);
}

// Weights used for inference: the EMA shadow when present.
inline const Parameters<float>& inference_params(const Checkpoint<float>& ck) {
  return ck.ema ? *ck.ema : ck.params;
}

inline TextTable decode_utterances(const Checkpoint<float>& ck, const std::vector<Utterance>& data) {
  ConformerTransducer<float> model(ck.config);
  const auto& params = inference_params(ck);
  TextTable hyps;
  hyps.reserve(data.size());
  for (const auto& u : data) {
    const Hypothesis h = greedy_decode(model, params, u.features);
    hyps.emplace_back(u.utt_id, tokens_to_text(ck.config.vocab, h.tokens));
  }
  return hyps;
}

// Featurizes without a vocabulary (references may contain unseen words).
inline std::vector<Utterance> prepare_for_decoding(const Manifest& m, const FrontendConfig& frontend = {}) {
  require(!m.empty(), Errc::kInvalidArgument, "manifest is empty");
  check_audio_exists(m);
  std::vector<Utterance> out;
  for (const auto& e : m) {
    Utterance u;
    u.utt_id = e.utt_id;
    u.domain = e.domain;
    u.transcript = e.transcript;
    u.features = featurize(e, frontend);
    out.push_back(std::move(u));
  }
  return out;
}

inline TextTable decode_manifest(const Checkpoint<float>& ck, const Manifest& m) {
  return decode_utterances(ck, prepare_for_decoding(m));
}

struct EvalOutput {
  WerReport report;
  TextTable hyps;
};

inline EvalOutput evaluate_utterances(const Checkpoint<float>& ck, const std::vector<Utterance>& data,
                                      const NormPolicy& policy) {
  require(!data.empty(), Errc::kInvalidArgument, "nothing to evaluate");
  EvalOutput out;
  out.hyps = decode_utterances(ck, data);
  TextTable refs;
  std::map<std::string, std::string> domains;
  for (const auto& u : data) {
    refs.emplace_back(u.utt_id, u.transcript);
    domains[u.utt_id] = u.domain;
  }
  out.report = wer(refs, out.hyps, policy, domains);
  return out;
}

inline EvalOutput evaluate(const Checkpoint<float>& ck, const Manifest& m, const NormPolicy& policy) {
  return evaluate_utterances(ck, prepare_for_decoding(m), policy);
}

}  // namespace stew
