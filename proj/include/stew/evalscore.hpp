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

// Transcript normalization and word error rate.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stew/config.hpp"
#include "stew/error.hpp"

namespace stew {

struct NormPolicy {
  bool lowercase = true;
  bool strip_punct = false;
  bool collapse_whitespace = true;
};

namespace detail {

// Decodes one UTF-8 code point starting at text[i]; malformed bytes decode
// as themselves so the text is never dropped.
inline char32_t next_code_point(const std::string& text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= text.size()) return -1;
    const auto b = static_cast<unsigned char>(text[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return b0;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

// Unicode general category P (Pc, Pd, Ps, Pe, Pi, Pf, Po) for the blocks
// that occur in transcripts: Latin-1, General Punctuation, Supplemental
// Punctuation, CJK symbols, and full/half-width forms.
inline bool is_unicode_punct(char32_t c) {
  static constexpr std::pair<char32_t, char32_t> kRanges[] = {
      {0x00A1, 0x00A1}, {0x00A7, 0x00A7}, {0x00AB, 0x00AB}, {0x00B6, 0x00B7}, {0x00BB, 0x00BB},
      {0x00BF, 0x00BF}, {0x037E, 0x037E}, {0x0387, 0x0387}, {0x055A, 0x055F}, {0x0589, 0x058A},
      {0x05BE, 0x05BE}, {0x05C0, 0x05C0}, {0x05C3, 0x05C3}, {0x05C6, 0x05C6}, {0x05F3, 0x05F4},
      {0x0609, 0x060A}, {0x060C, 0x060D}, {0x061B, 0x061B}, {0x061D, 0x061F}, {0x066A, 0x066D},
      {0x06D4, 0x06D4}, {0x0964, 0x0965}, {0x0970, 0x0970}, {0x2010, 0x2027}, {0x2030, 0x2043},
      {0x2045, 0x2051}, {0x2053, 0x205E}, {0x207D, 0x207E}, {0x208D, 0x208E}, {0x2308, 0x230B},
      {0x2329, 0x232A}, {0x2768, 0x2775}, {0x27C5, 0x27C6}, {0x27E6, 0x27EF}, {0x2983, 0x2998},
      {0x29D8, 0x29DB}, {0x29FC, 0x29FD}, {0x2CF9, 0x2CFC}, {0x2CFE, 0x2CFF}, {0x2E00, 0x2E2E},
      {0x2E30, 0x2E4F}, {0x2E52, 0x2E5D}, {0x3001, 0x3003}, {0x3008, 0x3011}, {0x3014, 0x301F},
      {0x3030, 0x3030}, {0x303D, 0x303D}, {0x30A0, 0x30A0}, {0x30FB, 0x30FB}, {0xFE10, 0xFE19},
      {0xFE30, 0xFE52}, {0xFE54, 0xFE61}, {0xFE63, 0xFE63}, {0xFE68, 0xFE68}, {0xFE6A, 0xFE6B},
      {0xFF01, 0xFF03}, {0xFF05, 0xFF0A}, {0xFF0C, 0xFF0F}, {0xFF1A, 0xFF1B}, {0xFF1F, 0xFF20},
      {0xFF3B, 0xFF3D}, {0xFF3F, 0xFF3F}, {0xFF5B, 0xFF5B}, {0xFF5D, 0xFF5D}, {0xFF5F, 0xFF65},
  };
  for (const auto& [lo, hi] : kRanges) {
    if (c >= lo && c <= hi) return true;
  }
  return false;
}

inline bool is_ascii_punct(char32_t c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

inline bool is_space(char32_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace detail

inline bool is_punctuation(char32_t c) { return detail::is_ascii_punct(c) || detail::is_unicode_punct(c); }

// Applies lowercase, punctuation stripping and whitespace collapse, in that
// order. Lowercasing covers ASCII only.
inline std::string normalize_text(const std::string& text, const NormPolicy& policy) {
  std::string s = text;
  if (policy.lowercase) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); });
  }
  if (policy.strip_punct) {
    std::string kept;
    kept.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
      const std::size_t start = i;
      const char32_t cp = detail::next_code_point(s, i);
      if (!is_punctuation(cp)) kept.append(s, start, i - start);
    }
    s = std::move(kept);
  }
  if (policy.collapse_whitespace) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
      if (detail::is_space(static_cast<unsigned char>(c))) {
        pending_space = !out.empty();
      } else {
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
      }
    }
    s = std::move(out);
  }
  return s;
}

struct EditCounts {
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t ref_words = 0;
  std::int64_t utterances = 0;
  std::int64_t empty_ref_with_insertions = 0;

  std::int64_t errors() const { return substitutions + insertions + deletions; }

  // Fraction (not percent). An empty reference set with errors yields +inf.
  double wer() const {
    if (ref_words == 0) return errors() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(errors()) / static_cast<double>(ref_words);
  }

  double wer_percent() const {
    if (ref_words == 0) return errors() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return 100.0 * static_cast<double>(errors()) / static_cast<double>(ref_words);
  }

  EditCounts& operator+=(const EditCounts& o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    ref_words += o.ref_words;
    utterances += o.utterances;
    empty_ref_with_insertions += o.empty_ref_with_insertions;
    return *this;
  }
};

enum class EditOp { kMatch, kSubstitution, kInsertion, kDeletion };

struct Alignment {
  std::vector<std::pair<std::string, std::string>> pairs;  // empty string marks a gap
  std::vector<EditOp> ops;
  EditCounts counts;
};

// Minimal unit-cost word alignment. On ties the backtrace prefers
// substitution (or match), then insertion, then deletion.
inline Alignment align_words(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i][j - 1] + 1, d[i - 1][j] + 1});
    }
  }

  Alignment a;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      const bool match = ref[i - 1] == hyp[j - 1];
      a.ops.push_back(match ? EditOp::kMatch : EditOp::kSubstitution);
      a.pairs.emplace_back(ref[i - 1], hyp[j - 1]);
      if (!match) ++a.counts.substitutions;
      --i;
      --j;
    } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      a.ops.push_back(EditOp::kInsertion);
      a.pairs.emplace_back("", hyp[j - 1]);
      ++a.counts.insertions;
      --j;
    } else {
      a.ops.push_back(EditOp::kDeletion);
      a.pairs.emplace_back(ref[i - 1], "");
      ++a.counts.deletions;
      --i;
    }
  }
  std::reverse(a.ops.begin(), a.ops.end());
  std::reverse(a.pairs.begin(), a.pairs.end());
  a.counts.ref_words = static_cast<std::int64_t>(n);
  a.counts.utterances = 1;
  if (n == 0 && m > 0) a.counts.empty_ref_with_insertions = 1;
  return a;
}

// Ordered (id, text) records as read from an "utt_id<TAB>text" file.
using TextTable = std::vector<std::pair<std::string, std::string>>;

struct WerReport {
  std::map<std::string, EditCounts> per_domain;
  EditCounts overall;
  std::vector<std::pair<std::string, Alignment>> alignments;  // in reference order
};

inline constexpr const char* kDefaultDomain = "all";

// Scores every reference; a reference with no hypothesis counts as all
// deletions. `domains` maps utt_id to a grouping tag (default "all").
inline WerReport wer(const TextTable& refs, const TextTable& hyps, const NormPolicy& policy,
                     const std::map<std::string, std::string>& domains = {}) {
  std::map<std::string, std::string> ref_map;
  for (const auto& [id, text] : refs) {
    require(ref_map.emplace(id, text).second, Errc::kDuplicateId, "duplicate reference id " + id);
  }
  std::map<std::string, std::string> hyp_map;
  for (const auto& [id, text] : hyps) {
    require(hyp_map.emplace(id, text).second, Errc::kDuplicateId, "duplicate hypothesis id " + id);
    require(ref_map.count(id) == 1, Errc::kUnknownId, "hypothesis id without reference: " + id);
  }

  WerReport report;
  for (const auto& [id, ref_text] : refs) {
    auto h = hyp_map.find(id);
    const std::string hyp_text = h == hyp_map.end() ? std::string() : h->second;
    Alignment a = align_words(split_words(normalize_text(ref_text, policy)),
                              split_words(normalize_text(hyp_text, policy)));
    auto d = domains.find(id);
    const std::string domain = d == domains.end() ? kDefaultDomain : d->second;
    report.per_domain[domain] += a.counts;
    report.overall += a.counts;
    report.alignments.emplace_back(id, std::move(a));
  }
  return report;
}

inline TextTable read_text_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kMissingFile, "cannot open " + path.string());
  TextTable table;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::string id = tab == std::string::npos ? line : line.substr(0, tab);
    std::string text = tab == std::string::npos ? std::string() : line.substr(tab + 1);
    require(!id.empty(), Errc::kParse, path.string() + ":" + std::to_string(line_no) + ": empty id");
    require(seen.insert(id).second, Errc::kDuplicateId, path.string() + ": duplicate id " + id);
    table.emplace_back(std::move(id), std::move(text));
  }
  return table;
}

inline void write_text_table(const std::filesystem::path& path, const TextTable& table) {
  std::ofstream out(path);
  if (!out) fail(Errc::kIo, "cannot write " + path.string());
  for (const auto& [id, text] : table) out << id << '\t' << text << '\n';
}

// Flat key-value view of a report: "<scope>.<field>" with scope "overall"
// or "domain.<tag>". Non-finite WER is written as null.
inline nlohmann::ordered_json report_to_json(const WerReport& r) {
  nlohmann::ordered_json j;
  auto put = [&j](const std::string& scope, const EditCounts& c) {
    j[scope + ".utterances"] = c.utterances;
    j[scope + ".ref_words"] = c.ref_words;
    j[scope + ".substitutions"] = c.substitutions;
    j[scope + ".insertions"] = c.insertions;
    j[scope + ".deletions"] = c.deletions;
    j[scope + ".empty_ref_with_insertions"] = c.empty_ref_with_insertions;
    const double w = c.wer_percent();
    if (std::isfinite(w)) {
      j[scope + ".wer_percent"] = w;
    } else {
      j[scope + ".wer_percent"] = nullptr;
    }
  };
  put("overall", r.overall);
  for (const auto& [domain, c] : r.per_domain) put("domain." + domain, c);
  return j;
}

// Human-readable alignment table, one block per utterance. Gaps print as ***.
inline std::string format_alignments(const WerReport& r) {
  std::ostringstream out;
  for (const auto& [id, a] : r.alignments) {
    std::string ref_line, hyp_line, op_line;
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
      const std::string rw = a.pairs[k].first.empty() ? "***" : a.pairs[k].first;
      const std::string hw = a.pairs[k].second.empty() ? "***" : a.pairs[k].second;
      const std::size_t width = std::max(rw.size(), hw.size());
      const char* op = "C";
      switch (a.ops[k]) {
        case EditOp::kMatch: op = "C"; break;
        case EditOp::kSubstitution: op = "S"; break;
        case EditOp::kInsertion: op = "I"; break;
        case EditOp::kDeletion: op = "D"; break;
      }
      ref_line += rw + std::string(width - rw.size() + 1, ' ');
      hyp_line += hw + std::string(width - hw.size() + 1, ' ');
      op_line += std::string(op) + std::string(width, ' ');
    }
    out << id << " ref  " << ref_line << '\n'
        << id << " hyp  " << hyp_line << '\n'
        << id << " op   " << op_line << '\n'
        << id << " #csid " << std::count(a.ops.begin(), a.ops.end(), EditOp::kMatch) << ' '
        << a.counts.substitutions << ' ' << a.counts.insertions << ' ' << a.counts.deletions << '\n';
  }
  return out.str();
}

}  // namespace stew
