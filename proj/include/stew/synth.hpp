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

// Micro-corpus generator: synthetic multi-domain manifests with audio.
//
// Spec file layout:
//
//   [corpus]
//   seed = 7
//   vocabulary = go stop left right
//   train_utterances = 16
//   dev_utterances = 4
//   min_words = 2
//   max_words = 4
//
//   ; one section per domain; any SynthRecipe field may be set
//   [domain.near]
//   pitch_shift = 1.0
//   snr_db = 30
//
// Keys under [corpus] other than the counts act as defaults for every domain.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stew/audio.hpp"
#include "stew/config.hpp"
#include "stew/corpus.hpp"
#include "stew/error.hpp"
#include "stew/rng.hpp"

namespace stew {

struct SynthDomain {
  std::string name;
  SynthRecipe recipe;
  int train_utterances = 16;
  int dev_utterances = 0;
  int min_words = 2;
  int max_words = 4;
  std::uint64_t seed = 0;
};

struct SynthItem {
  ManifestEntry entry;  // audio left empty until written
  AudioSegment audio;
};

struct SynthSplit {
  std::vector<SynthItem> train;
  std::vector<SynthItem> dev;
};

// Word sequences and audio for one domain. Utterance ids are
// "<domain>-<split>-<index>".
inline SynthSplit synth_domain(const SynthDomain& d) {
  require(d.min_words >= 1 && d.max_words >= d.min_words, Errc::kInvalidArgument,
          "word count range is empty for domain " + d.name);
  require(d.train_utterances >= 0 && d.dev_utterances >= 0, Errc::kInvalidArgument,
          "utterance counts must be non-negative");
  require(!d.recipe.vocabulary.empty(), Errc::kEmptyVocabulary, "domain " + d.name + " has no vocabulary");
  SynthSplit out;
  auto make = [&](const std::string& split, int count, std::vector<SynthItem>& dst) {
    Rng rng = make_rng(d.seed, "words", d.name, split);
    std::uniform_int_distribution<int> len(d.min_words, d.max_words);
    std::uniform_int_distribution<std::size_t> pick(0, d.recipe.vocabulary.size() - 1);
    for (int i = 0; i < count; ++i) {
      std::vector<std::string> words(static_cast<std::size_t>(len(rng)));
      for (auto& w : words) w = d.recipe.vocabulary[pick(rng)];
      SynthItem item;
      item.entry.utt_id = d.name + "-" + split + "-" + std::to_string(i);
      item.entry.domain = d.name;
      auto [seg, text] = synth_utterance(d.recipe, words, mix_seed(d.seed, d.name, split, i));
      item.entry.transcript = std::move(text);
      item.entry.duration = static_cast<double>(seg.samples.size()) / seg.sample_rate;
      item.audio = std::move(seg);
      dst.push_back(std::move(item));
    }
  };
  make("train", d.train_utterances, out.train);
  make("dev", d.dev_utterances, out.dev);
  return out;
}

namespace detail {

inline void read_recipe_keys(const KeyValueFile& f, const std::string& sec, SynthDomain& d) {
  if (auto v = f.find(sec, "vocabulary")) d.recipe.vocabulary = split_words(*v);
  d.recipe.sample_rate = f.get(sec, "sample_rate", d.recipe.sample_rate);
  d.recipe.word_ms = f.get(sec, "word_ms", d.recipe.word_ms);
  d.recipe.gap_ms = f.get(sec, "gap_ms", d.recipe.gap_ms);
  d.recipe.jitter = f.get(sec, "jitter", d.recipe.jitter);
  d.recipe.pitch_shift = f.get(sec, "pitch_shift", d.recipe.pitch_shift);
  d.recipe.amplitude = f.get(sec, "amplitude", d.recipe.amplitude);
  d.recipe.snr_db = f.get(sec, "snr_db", d.recipe.snr_db);
  d.recipe.add_noise = f.get(sec, "add_noise", d.recipe.add_noise);
  d.recipe.lead_ms = f.get(sec, "lead_ms", d.recipe.lead_ms);
  d.train_utterances = f.get(sec, "train_utterances", d.train_utterances);
  d.dev_utterances = f.get(sec, "dev_utterances", d.dev_utterances);
  d.min_words = f.get(sec, "min_words", d.min_words);
  d.max_words = f.get(sec, "max_words", d.max_words);
  d.seed = f.get(sec, "seed", d.seed);
}

}  // namespace detail

inline std::vector<SynthDomain> parse_synth_spec(const KeyValueFile& f) {
  SynthDomain defaults;
  if (f.has_section("corpus")) detail::read_recipe_keys(f, "corpus", defaults);
  std::vector<SynthDomain> out;
  const std::string prefix = "domain.";
  for (const auto& sec : f.sections()) {
    if (sec.compare(0, prefix.size(), prefix) != 0) continue;
    SynthDomain d = defaults;
    d.name = sec.substr(prefix.size());
    require(!d.name.empty(), Errc::kParse, "empty domain name in section [" + sec + "]");
    detail::read_recipe_keys(f, sec, d);
    out.push_back(std::move(d));
  }
  if (out.empty()) {
    defaults.name = f.get<std::string>("corpus", "domain", "synth");
    out.push_back(defaults);
  }
  return out;
}

struct WrittenCorpus {
  std::map<std::string, std::filesystem::path> train_manifests;  // by domain
  std::map<std::string, std::filesystem::path> dev_manifests;
};

// Writes <out>/<domain>/{train,dev}.jsonl with audio under <out>/<domain>/wav.
// Manifest audio paths are relative to the manifest.
inline WrittenCorpus write_synth_corpus(const std::vector<SynthDomain>& domains,
                                        const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  WrittenCorpus written;
  for (const auto& d : domains) {
    const fs::path dir = out_dir / d.name;
    fs::create_directories(dir / "wav");
    SynthSplit split = synth_domain(d);
    auto emit = [&](std::vector<SynthItem>& items, const std::string& name) {
      Manifest m;
      for (auto& item : items) {
        const std::string rel = "wav/" + item.entry.utt_id + ".wav";
        write_wav(dir / rel, item.audio);
        item.entry.audio = rel;
        m.push_back(item.entry);
      }
      const fs::path path = dir / (name + ".jsonl");
      write_manifest(path, m);
      return path;
    };
    written.train_manifests[d.name] = emit(split.train, "train");
    if (!split.dev.empty()) written.dev_manifests[d.name] = emit(split.dev, "dev");
  }
  return written;
}

}  // namespace stew
