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

#include "stew/evalscore.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace stew {
namespace {

NormPolicy strip() {
  NormPolicy p;
  p.strip_punct = true;
  return p;
}

double wer1(const std::string& ref, const std::string& hyp, const NormPolicy& policy = {}) {
  return wer({{"u", ref}}, {{"u", hyp}}, policy).overall.wer();
}

// Independent oracle: edit distance by the classic two-row recurrence.
int edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> random_words(std::mt19937_64& rng, int max_len) {
  static const char* kWords[] = {"a", "b", "c", "d"};
  std::vector<std::string> w(std::uniform_int_distribution<std::size_t>(0, max_len)(rng));
  for (auto& x : w) x = kWords[rng() % 4];
  return w;
}

TEST(Normalize, HelloWorld) {
  EXPECT_EQ(normalize_text("Hello, world!", strip()), "hello world");
  EXPECT_EQ(normalize_text("Hello, world!", NormPolicy{}), "hello, world!");
}

TEST(Normalize, WhitespaceAndUnicodePunctuation) {
  EXPECT_EQ(normalize_text("  a \t b\n\nc  ", NormPolicy{}), "a b c");
  EXPECT_EQ(normalize_text("\xE2\x80\x9CQuoted\xE2\x80\x9D \xE2\x80\x94 text\xE2\x80\xA6", strip()), "quoted text");
  EXPECT_EQ(normalize_text("caf\xC3\xA9 \xC3\x89T\xC3\x89", strip()), "caf\xC3\xA9 \xC3\x89t\xC3\x89");  // non-ASCII letters kept
  EXPECT_EQ(normalize_text("don't", strip()), "dont");
}

TEST(Normalize, AllOffIsIdentityAndNormalizationIsIdempotent) {
  const NormPolicy off{false, false, false};
  const std::string messy = "  Mixed, CASE\ttext!! ";
  EXPECT_EQ(normalize_text(messy, off), messy);
  for (const NormPolicy& p : {NormPolicy{}, strip(), NormPolicy{false, true, true}}) {
    const auto once = normalize_text(messy, p);
    EXPECT_EQ(normalize_text(once, p), once);
  }
}

TEST(Wer, HandDerivedCases) {
  EXPECT_EQ(wer1("the cat sat", "the cat sat"), 0.0);
  EXPECT_EQ(wer1("the cat sat", "the dog sat"), 1.0 / 3.0);
  EXPECT_EQ(wer({{"u", "the cat sat"}}, {{"u", "the dog sat"}}, {}).overall.wer_percent(), 100.0 / 3.0);
  EXPECT_EQ(wer1("Hello, world!", "hello world", strip()), 0.0);
  EXPECT_GT(wer1("Hello, world!", "hello world"), 0.0);
  EXPECT_EQ(wer1("Hello, world!", "hello world"), 1.0);  // both words carry punctuation
  EXPECT_EQ(wer1("a b c d", "a c d"), 0.25);
  EXPECT_EQ(wer1("a b", "a x b y"), 1.0);
  EXPECT_EQ(wer1("a b", ""), 1.0);
  EXPECT_EQ(wer1("THE Cat", "the cat"), 0.0);
}

TEST(Wer, AlignmentCountsAndOps) {
  const auto a = align_words({"a", "b", "c"}, {"a", "x", "c", "d"});
  EXPECT_EQ(a.counts.substitutions, 1);
  EXPECT_EQ(a.counts.insertions, 1);
  EXPECT_EQ(a.counts.deletions, 0);
  EXPECT_EQ(a.ops, (std::vector<EditOp>{EditOp::kMatch, EditOp::kSubstitution, EditOp::kMatch, EditOp::kInsertion}));
  EXPECT_EQ(a.pairs[3], (std::pair<std::string, std::string>{"", "d"}));
}

TEST(Wer, ErrorsEqualEditDistance) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto r = random_words(rng, 8), h = random_words(rng, 8);
    const auto a = align_words(r, h);
    EXPECT_EQ(a.counts.errors(), edit_distance(r, h));
    // Swapping roles swaps insertions and deletions and keeps the total.
    const auto b = align_words(h, r);
    EXPECT_EQ(b.counts.errors(), a.counts.errors());
    EXPECT_EQ(a.counts.deletions - a.counts.insertions, static_cast<std::int64_t>(r.size() - h.size()));
    // Reconstruct both sides from the alignment.
    std::vector<std::string> rr, hh;
    for (const auto& [x, y] : a.pairs) {
      if (!x.empty()) rr.push_back(x);
      if (!y.empty()) hh.push_back(y);
    }
    EXPECT_EQ(rr, r);
    EXPECT_EQ(hh, h);
  }
}

TEST(Wer, TriangleInequality) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto x = random_words(rng, 6), y = random_words(rng, 6), z = random_words(rng, 6);
    EXPECT_LE(align_words(x, z).counts.errors(), align_words(x, y).counts.errors() + align_words(y, z).counts.errors());
  }
}

TEST(Wer, PooledNotAveraged) {
  // 1 error over 1 word and 0 over 9: pooled 10%, not the mean of 100% and 0%.
  const TextTable refs = {{"a", "x"}, {"b", "one two three four five six seven eight nine"}};
  const TextTable hyps = {{"a", "y"}, {"b", "one two three four five six seven eight nine"}};
  EXPECT_DOUBLE_EQ(wer(refs, hyps, {}).overall.wer(), 0.1);
}

TEST(Wer, OrderingAndIdRenamingInvariance) {
  const TextTable refs = {{"u1", "a b c"}, {"u2", "d e"}, {"u3", "f"}};
  const TextTable hyps = {{"u1", "a c"}, {"u2", "d e e"}, {"u3", "g"}};
  const auto base = wer(refs, hyps, {}).overall;
  TextTable r2(refs.rbegin(), refs.rend()), h2 = hyps;
  std::rotate(h2.begin(), h2.begin() + 1, h2.end());
  const auto shuffled = wer(r2, h2, {}).overall;
  EXPECT_EQ(shuffled.errors(), base.errors());
  EXPECT_EQ(shuffled.ref_words, base.ref_words);
  TextTable r3, h3;
  for (const auto& [id, t] : refs) r3.emplace_back("x" + id, t);
  for (const auto& [id, t] : hyps) h3.emplace_back("x" + id, t);
  EXPECT_EQ(wer(r3, h3, {}).overall.errors(), base.errors());
}

TEST(Wer, DomainsAndMissingHypotheses) {
  const TextTable refs = {{"n1", "a b"}, {"n2", "c"}, {"f1", "d e f"}};
  const TextTable hyps = {{"n1", "a b"}, {"f1", "d x f"}};
  const auto r = wer(refs, hyps, {}, {{"n1", "near"}, {"n2", "near"}, {"f1", "far"}});
  ASSERT_EQ(r.per_domain.size(), 2u);
  EXPECT_EQ(r.per_domain.at("near").deletions, 1);  // n2 had no hypothesis
  EXPECT_EQ(r.per_domain.at("near").ref_words, 3);
  EXPECT_EQ(r.per_domain.at("far").substitutions, 1);
  EXPECT_EQ(r.overall.utterances, 3);
  EXPECT_EQ(r.overall.errors(), 2);
  EXPECT_EQ(wer(refs, hyps, {}).per_domain.count(kDefaultDomain), 1u);
}

TEST(Wer, EmptyReferenceFlagsInsertions) {
  const auto r = wer({{"u", ""}}, {{"u", "oops"}}, {});
  EXPECT_EQ(r.overall.empty_ref_with_insertions, 1);
  EXPECT_TRUE(std::isinf(r.overall.wer()));
  EXPECT_TRUE(report_to_json(r)["overall.wer_percent"].is_null());
  EXPECT_EQ(wer({{"u", ""}}, {{"u", ""}}, {}).overall.wer(), 0.0);
}

TEST(Wer, IdErrors) {
  expect_errc([] { wer({{"a", "x"}, {"a", "y"}}, {}, {}); }, Errc::kDuplicateId, "reference");
  expect_errc([] { wer({{"a", "x"}}, {{"a", "x"}, {"a", "y"}}, {}); }, Errc::kDuplicateId, "hypothesis");
  expect_errc([] { wer({{"a", "x"}}, {{"b", "x"}}, {}); }, Errc::kUnknownId, "b");
}

TEST(Report, JsonAndAlignmentText) {
  const auto r = wer({{"u1", "a b c"}}, {{"u1", "a x c d"}}, {}, {{"u1", "near"}});
  const auto j = report_to_json(r);
  EXPECT_EQ(j["overall.substitutions"], 1);
  EXPECT_EQ(j["overall.insertions"], 1);
  EXPECT_DOUBLE_EQ(j["domain.near.wer_percent"].get<double>(), 200.0 / 3.0);
  EXPECT_EQ(j.begin().key(), "overall.utterances");
  const auto text = format_alignments(r);
  EXPECT_NE(text.find("u1 #csid 2 1 1 0"), std::string::npos) << text;
  EXPECT_NE(text.find("***"), std::string::npos);
}

TEST(TextTable, RoundTripAndErrors) {
  TempDir dir;
  const TextTable t = {{"b", "two words"}, {"a", ""}, {"c", "x\ty"}};
  write_text_table(dir / "t.txt", t);
  EXPECT_EQ(read_text_table(dir / "t.txt"), t);
  {
    std::ofstream out(dir / "dup.txt");
    out << "a\tx\r\n\nb\ty\na\tz\n";
  }
  expect_errc([&] { read_text_table(dir / "dup.txt"); }, Errc::kDuplicateId, "a");
  expect_errc([&] { read_text_table(dir / "none.txt"); }, Errc::kMissingFile);
}

}  // namespace
}  // namespace stew
