// Copyright 2026 The adscreen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adscreen/text_features.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "adscreen/random.hpp"
#include "test_util.hpp"

namespace adscreen {
namespace {

using testing::code_of;
using testing::TempDir;

TEST(TokenizeTest, TableSentence) {
  EXPECT_EQ(tokenize("OK, I'll watch a movie then."),
            (TokenList{"ok", "i'll", "watch", "a", "movie", "then"}));
}

TEST(TokenizeTest, FillersAndRepeatsPreserved) {
  EXPECT_EQ(tokenize("Um... I, I forgot."), (TokenList{"um", "i", "i", "forgot"}));
}

TEST(TokenizeTest, Empty) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("  ... !! ").empty());
}

TEST(TokenizeTest, FragmentMarkerKept) {
  EXPECT_EQ(tokenize("I wa- wanted 'that'"), (TokenList{"i", "wa-", "wanted", "that"}));
}

TEST(TokenizeTest, IdempotentOnJoinedOutput) {
  const std::vector<std::string> inputs = {
      "OK, I'll watch a movie then.", "Um... I, I forgot.", "\"Quoted\" words -- and dashes!",
      "It's the wa- the WATER, y'know?", "(brackets) [and] {braces}", "tabs\tand\nnewlines"};
  for (const std::string& in : inputs) {
    const TokenList once = tokenize(in);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    EXPECT_EQ(tokenize(joined), once) << in;
  }
}

TEST(FocusTest, TableRows) {
  const std::string a = "OK, I'll watch a movie then.";
  FocusResult r = extract_focus(tokenize(a), a);
  ASSERT_TRUE(r.focus);
  EXPECT_EQ(*r.focus, "movie");
  EXPECT_EQ(*r.position, 4u);
  EXPECT_FALSE(r.proper_noun);

  const std::string b = "Avengers, the newest one.";
  r = extract_focus(tokenize(b), b);
  ASSERT_TRUE(r.focus);
  EXPECT_EQ(*r.focus, "avengers");
  EXPECT_TRUE(r.proper_noun);

  const std::string c = "Yes, I like.";
  EXPECT_FALSE(extract_focus(tokenize(c), c).focus);
}

TEST(FocusTest, ResultIsAnInputToken) {
  const std::vector<std::string> inputs = {
      "I went to the park yesterday", "my daughter visited", "um the the garden",
      "we were walking slowly", "Paris is lovely", "nothing much really"};
  for (const std::string& in : inputs) {
    const TokenList t = tokenize(in);
    const FocusResult r = extract_focus(t, in);
    if (r.focus) {
      ASSERT_TRUE(r.position);
      EXPECT_EQ(t[*r.position], *r.focus);
    }
  }
}

TEST(FocusTest, WorksWithoutRawText) {
  const TokenList t = {"i", "like", "my", "garden"};
  EXPECT_EQ(extract_focus(t).focus, "garden");
}

std::vector<TokenList> toy_corpus() { return {tokenize("which movie"), tokenize("what movie")}; }

TEST(BigramTest, CountsFromToyCorpus) {
  const auto corpus = toy_corpus();
  BigramModel m = BigramModel::train(corpus);
  EXPECT_EQ(m.bigram_count("which", "movie"), 1u);
  EXPECT_EQ(m.bigram_count("what", "movie"), 1u);
  EXPECT_EQ(m.total_tokens(), 4u);
  EXPECT_EQ(m.vocabulary_size(), 3u);
}

TEST(BigramTest, EmptyCorpus) {
  std::vector<TokenList> none;
  EXPECT_EQ(code_of([&] { BigramModel::train(none); }), ErrorCode::kEmptyCorpus);
  std::vector<TokenList> blank = {{}, {}};
  EXPECT_EQ(code_of([&] { BigramModel::train(blank); }), ErrorCode::kEmptyCorpus);
}

TEST(BigramTest, JointProbabilityToyValue) {
  const auto corpus = toy_corpus();
  BigramModel m = BigramModel::train(corpus);
  // (c(which)+1)/(N+V) * (c(which,movie)+1)/(c(which)+V) = 2/7 * 2/4
  EXPECT_NEAR(joint_probability(m, "which", "movie"), 1.0 / 7.0, 1e-15);
  // Unseen continuation: 2/7 * 1/4
  EXPECT_NEAR(joint_probability(m, "which", "what"), 1.0 / 14.0, 1e-15);
  EXPECT_GT(joint_probability(m, "zebra", "xylophone"), 0.0);
}

TEST(BigramTest, RepeatedCorpusDoublesCounts) {
  auto corpus = toy_corpus();
  const auto twice_corpus = [&] {
    auto c = corpus;
    c.insert(c.end(), corpus.begin(), corpus.end());
    return c;
  }();
  BigramModel once = BigramModel::train(corpus);
  BigramModel twice = BigramModel::train(twice_corpus);
  EXPECT_EQ(twice.bigram_count("which", "movie"), 2 * once.bigram_count("which", "movie"));
  EXPECT_EQ(twice.unigram_count("movie"), 2 * once.unigram_count("movie"));
  // 3/11 * 3/5
  EXPECT_NEAR(joint_probability(twice, "which", "movie"), 9.0 / 55.0, 1e-15);
}

TEST(BigramTest, ConditionalSumsToOnePerHistory) {
  const std::vector<TokenList> corpus = {tokenize("which movie did you see"),
                                         tokenize("what movie is that"),
                                         tokenize("where did you go"), tokenize("who")};
  BigramModel m = BigramModel::train(corpus);
  std::vector<std::string> vocab;
  for (const auto& line : corpus) vocab.insert(vocab.end(), line.begin(), line.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  for (const std::string& h : vocab) {
    double sum = 0.0;
    for (const std::string& w : vocab) sum += m.conditional_probability(h, w);
    EXPECT_NEAR(sum, 1.0, 1e-12) << h;
  }
}

TEST(BigramTest, JointProbabilityIncreasesWithBigramCount) {
  std::vector<TokenList> corpus = {tokenize("which movie"), tokenize("what book"),
                                   tokenize("where park"), tokenize("which book")};
  const double before = joint_probability(BigramModel::train(corpus), "which", "movie");
  corpus.push_back(tokenize("which movie"));
  const double after = joint_probability(BigramModel::train(corpus), "which", "movie");
  EXPECT_GT(after, before);
}

TEST(VocabularyTest, OneHot) {
  Vocabulary v = Vocabulary::from_tokens({"a", "b", "c", "d"});
  EXPECT_EQ(v.size(), 5u);
  const auto dense = one_hot_dense(v, TokenList{"c", "zzz"});
  ASSERT_EQ(dense.size(), 2u);
  Eigen::VectorXd expect(5);
  expect << 0, 0, 0, 1, 0;
  EXPECT_EQ(dense[0], expect);
  EXPECT_EQ(dense[1][0], 1.0);
  for (const auto& d : dense) EXPECT_EQ(d.sum(), 1.0);
}

TEST(VocabularyTest, BuildRanksByFrequency) {
  const std::vector<TokenList> corpus = {{"b", "a", "a"}, {"c", "a", "b"}};
  Vocabulary v = Vocabulary::build(corpus, 3);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(v.index_of("c"), Vocabulary::kOov);
}

TEST(VocabularyTest, SaveLoad) {
  TempDir dir("vocab");
  Vocabulary v = Vocabulary::from_tokens({"um", "movie", "i'll"});
  v.save(dir.path() / "vocab.txt");
  Vocabulary w = Vocabulary::load(dir.path() / "vocab.txt");
  EXPECT_EQ(w.tokens(), v.tokens());
}

TEST(EmbeddingTest, SequencesPreserveLength) {
  EmbeddingTable table(8, 1234);
  EXPECT_TRUE(embed_sequence(table, TokenList{}).empty());
  const auto seq = embed_sequence(table, TokenList{"movie", "movie", "um"});
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq[0], seq[1]);
  EXPECT_NE(seq[0], seq[2]);
}

TEST(EmbeddingTest, OovVectorsDependOnlyOnSeedAndToken) {
  // Independent derivation of the documented hash-seeded draw.
  const std::uint64_t seed = 99;
  Rng rng(seed ^ fnv1a64("avengers"));
  Eigen::VectorXd expect(4);
  for (int i = 0; i < 4; ++i) expect[i] = rng.uniform(-1.0, 1.0);
  EXPECT_EQ(EmbeddingTable(4, seed).lookup("avengers"), expect);
  EXPECT_EQ(EmbeddingTable(4, seed).lookup("avengers"), EmbeddingTable(4, seed).lookup("avengers"));
  EXPECT_NE(EmbeddingTable(4, seed + 1).lookup("avengers"), expect);
}

TEST(EmbeddingTest, LoadsTextFile) {
  TempDir dir("emb");
  {
    std::ofstream out(dir.path() / "emb.txt");
    out << "movie 0.1 0.2 0.3\nmusic -1 0 1\n";
  }
  EmbeddingTable t = EmbeddingTable::load(dir.path() / "emb.txt");
  EXPECT_EQ(t.dim(), 3u);
  EXPECT_EQ(t.known_size(), 2u);
  EXPECT_DOUBLE_EQ(t.lookup("music")[2], 1.0);
  {
    std::ofstream out(dir.path() / "bad.txt");
    out << "movie 0.1 0.2 0.3\nmusic -1 0\n";
  }
  EXPECT_EQ(code_of([&] { EmbeddingTable::load(dir.path() / "bad.txt"); }),
            ErrorCode::kDimMismatch);
}

}  // namespace
}  // namespace adscreen
