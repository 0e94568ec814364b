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

// stew: mix manifests, train, fine-tune, decode, evaluate, synthesize.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stew/pipeline.hpp"
#include "stew/synth.hpp"

namespace {

namespace fs = std::filesystem;

int run_mix(const std::vector<std::string>& inputs, const std::string& out, bool prefix) {
  std::vector<stew::Manifest> parts;
  for (const auto& p : inputs) parts.push_back(stew::read_manifest(p));
  // Audio paths were resolved against each input; rewrite them relative to
  // the output so the mixed manifest stays relocatable with its sources.
  stew::Manifest mixed = stew::mix_manifests(parts, prefix);
  const fs::path out_dir = fs::absolute(fs::path(out)).parent_path();
  for (auto& e : mixed) {
    e.audio = fs::absolute(e.audio).lexically_relative(out_dir).string();
  }
  stew::write_manifest(out, mixed);
  for (const auto& [domain, n] : stew::domain_counts(mixed)) {
    std::cout << domain << '\t' << n << '\n';
  }
  std::cout << "total\t" << mixed.size() << '\n';
  return 0;
}

int run_train(const std::string& cfg_path, const std::optional<std::string>& init,
              const std::optional<std::string>& resume, bool require_init) {
  stew::RunConfig cfg = stew::read_run_config(cfg_path);
  if (init) cfg.init_checkpoint = *init;
  if (resume) cfg.resume_from = *resume;
  if (require_init && !cfg.init_checkpoint) {
    throw stew::Error(stew::Errc::kInvalidArgument, "finetune needs --init or [run] init_checkpoint");
  }
  for (const auto& w : stew::run_warnings(cfg)) std::cerr << "warning: " << w << '\n';
  stew::TrainOptions opts;
  opts.progress = &std::cout;
  const auto result = stew::train(cfg, opts);
  std::cout << "final checkpoint: " << result.final_checkpoint->string() << '\n';
  if (result.best_checkpoint) {
    std::cout << "best dev checkpoint: " << result.best_checkpoint->string() << " (dev loss "
              << *result.best_dev_loss << ")\n";
  }
  if (!cfg.eval_manifests.empty()) {
    const stew::Manifest m = stew::load_manifests(cfg.eval_manifests);
    const auto out = stew::evaluate(result.state, m, stew::NormPolicy{});
    std::cout << stew::report_to_json(out.report).dump(2) << '\n';
  }
  return 0;
}

int run_decode(const std::string& ckpt, const std::string& manifest, const std::string& out) {
  const auto ck = stew::load_checkpoint<float>(ckpt);
  stew::write_text_table(out, stew::decode_manifest(ck, stew::read_manifest(manifest)));
  return 0;
}

int run_evaluate(const std::string& ckpt, const std::vector<std::string>& manifests, bool strip_punct,
                 const std::optional<std::string>& report_path, const std::optional<std::string>& hyps_path,
                 bool show_alignments) {
  const auto ck = stew::load_checkpoint<float>(ckpt);
  stew::NormPolicy policy;
  policy.strip_punct = strip_punct;
  const auto out = stew::evaluate(ck, stew::load_manifests(manifests), policy);
  if (show_alignments) std::cout << stew::format_alignments(out.report);
  std::cout << "domain\tutts\twords\tsub\tins\tdel\twer%\n";
  auto row = [](const std::string& name, const stew::EditCounts& c) {
    std::cout << name << '\t' << c.utterances << '\t' << c.ref_words << '\t' << c.substitutions << '\t'
              << c.insertions << '\t' << c.deletions << '\t' << c.wer_percent() << '\n';
  };
  for (const auto& [domain, c] : out.report.per_domain) row(domain, c);
  row("overall", out.report.overall);
  if (report_path) {
    std::ofstream f(*report_path);
    if (!f) throw stew::Error(stew::Errc::kIo, "cannot write " + *report_path);
    f << stew::report_to_json(out.report).dump(2) << '\n';
  }
  if (hyps_path) stew::write_text_table(*hyps_path, out.hyps);
  return 0;
}

int run_synth(const std::string& spec, const std::string& out) {
  const auto domains = stew::parse_synth_spec(stew::KeyValueFile::load(spec));
  const auto written = stew::write_synth_corpus(domains, out);
  for (const auto& [domain, path] : written.train_manifests) std::cout << domain << " train\t" << path.string() << '\n';
  for (const auto& [domain, path] : written.dev_manifests) std::cout << domain << " dev\t" << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-domain transducer speech recognition toolkit"};
  app.require_subcommand(1);

  std::vector<std::string> mix_inputs;
  std::string mix_out;
  bool mix_prefix = false;
  auto* mix = app.add_subcommand("mix", "Concatenate manifests without reweighting");
  mix->add_option("manifests", mix_inputs, "Input manifests")->required()->check(CLI::ExistingFile);
  mix->add_option("-o,--output", mix_out, "Output manifest")->required();
  mix->add_flag("--prefix-domain", mix_prefix, "Prefix utterance ids with their domain");

  std::string cfg_path;
  std::optional<std::string> init, resume;
  auto* train = app.add_subcommand("train", "Train from scratch (or resume)");
  train->add_option("-c,--config", cfg_path, "Run config")->required()->check(CLI::ExistingFile);
  train->add_option("--resume", resume, "Checkpoint to resume from");

  auto* finetune = app.add_subcommand("finetune", "Fine-tune a trained checkpoint");
  finetune->add_option("-c,--config", cfg_path, "Run config")->required()->check(CLI::ExistingFile);
  finetune->add_option("--init", init, "Pretrained checkpoint")->check(CLI::ExistingFile);
  finetune->add_option("--resume", resume, "Fine-tune checkpoint to resume from");

  std::string ckpt, manifest, out;
  auto* decode = app.add_subcommand("decode", "Greedy-decode a manifest");
  decode->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  decode->add_option("--manifest", manifest, "Manifest")->required()->check(CLI::ExistingFile);
  decode->add_option("-o,--output", out, "Hypothesis file (utt_id<TAB>text)")->required();

  std::vector<std::string> eval_manifests;
  bool strip_punct = false, show_alignments = false;
  std::optional<std::string> report_path, hyps_path;
  auto* evaluate = app.add_subcommand("evaluate", "Decode and score word error rate per domain");
  evaluate->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--manifest", eval_manifests, "Manifest(s)")->required()->check(CLI::ExistingFile);
  evaluate->add_flag("--strip-punct", strip_punct, "Drop punctuation before scoring");
  evaluate->add_option("--report", report_path, "Write the flat JSON report here");
  evaluate->add_option("--hyps", hyps_path, "Write hypotheses here");
  evaluate->add_flag("--alignments", show_alignments, "Print per-utterance alignments");

  std::string synth_spec, synth_out;
  auto* synth = app.add_subcommand("synth-corpus", "Generate a synthetic multi-domain micro-corpus");
  synth->add_option("--spec", synth_spec, "Corpus spec")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (mix->parsed()) return run_mix(mix_inputs, mix_out, mix_prefix);
    if (train->parsed()) return run_train(cfg_path, std::nullopt, resume, false);
    if (finetune->parsed()) return run_train(cfg_path, init, resume, true);
    if (decode->parsed()) return run_decode(ckpt, manifest, out);
    if (evaluate->parsed()) {
      return run_evaluate(ckpt, eval_manifests, strip_punct, report_path, hyps_path, show_alignments);
    }
    if (synth->parsed()) return run_synth(synth_spec, synth_out);
  } catch (const stew::Error& e) {
    std::cerr << "error [" << stew::errc_name(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
