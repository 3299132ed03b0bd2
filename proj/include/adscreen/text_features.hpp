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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace adscreen {

using TokenList = std::vector<std::string>;

// Lowercases, splits on whitespace and strips surrounding punctuation.
// Intra-word apostrophes and a trailing fragment hyphen ("wa-") survive.
TokenList tokenize(std::string_view raw_text);

bool is_filler(std::string_view token);

// ---------------------------------------------------------------------------
// Vocabulary: index 0 is reserved for out-of-vocabulary tokens.

class Vocabulary {
 public:
  static constexpr std::size_t kOov = 0;

  Vocabulary() = default;

  // Keeps the max_size - 1 most frequent tokens (ties broken alphabetically).
  static Vocabulary build(std::span<const TokenList> corpus, std::size_t max_size = 512);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens_in_index_order);

  std::size_t size() const { return tokens_.size() + 1; }
  std::size_t index_of(std::string_view token) const;
  // Tokens for indices 1..size()-1.
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One index per token; the hot position of each one-hot vector.
std::vector<std::size_t> one_hot_sequence(const Vocabulary& vocab, std::span<const std::string> tokens);
std::vector<Eigen::VectorXd> one_hot_dense(const Vocabulary& vocab, std::span<const std::string> tokens);

// ---------------------------------------------------------------------------
// Embeddings. Tokens missing from the table get a vector drawn from a
// deterministic generator keyed by (seed, token).

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 16, std::uint64_t seed = 0x5eedULL);

  // Text format: "token v1 v2 ... vd" per line, dim taken from the first line.
  static EmbeddingTable load(const std::filesystem::path& path, std::uint64_t seed = 0x5eedULL);

  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t known_size() const { return vectors_.size(); }

  void insert(const std::string& token, Eigen::VectorXd v);
  // Writes the known vectors in token order, in the format load() reads.
  void save(const std::filesystem::path& path) const;
  Eigen::VectorXd lookup(std::string_view token) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
};

std::vector<Eigen::VectorXd> embed_sequence(const EmbeddingTable& table, std::span<const std::string> tokens);

// ---------------------------------------------------------------------------
// Bigram model with add-one smoothing.

class BigramModel {
 public:
  // Bigrams are counted within each utterance only. Throws kEmptyCorpus.
  static BigramModel train(std::span<const TokenList> corpus);
  static BigramModel train_file(const std::filesystem::path& corpus_path);

  std::uint64_t unigram_count(std::string_view w) const;
  std::uint64_t bigram_count(std::string_view w1, std::string_view w2) const;
  // Number of bigrams whose first token is w.
  std::uint64_t history_count(std::string_view w) const;
  std::size_t vocabulary_size() const { return unigrams_.size(); }
  std::uint64_t total_tokens() const { return total_; }

  // (c(w) + 1) / (N + V)
  double unigram_probability(std::string_view w) const;
  // (c(h, w) + 1) / (c_hist(h) + V)
  double conditional_probability(std::string_view history, std::string_view w) const;

 private:
  std::map<std::string, std::uint64_t, std::less<>> unigrams_;
  std::map<std::string, std::uint64_t, std::less<>> histories_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> bigrams_;
  std::uint64_t total_ = 0;
};

// P(wh, noun) = P(wh) * P(noun | wh).
double joint_probability(const BigramModel& model, std::string_view wh, std::string_view noun);

// ---------------------------------------------------------------------------
// Focus word extraction.

struct FocusResult {
  std::optional<std::string> focus;
  std::optional<std::size_t> position;
  // Capitalized in the raw text; treated as an instance of a topic rather
  // than a topic of its own.
  bool proper_noun = false;
};

class FocusExtractor {
 public:
  virtual ~FocusExtractor() = default;
  virtual FocusResult extract(std::span<const std::string> tokens, std::string_view raw_text) const = 0;
};

// Closed-class stoplist, suffix rules and a capitalization check for proper
// nouns. Picks the last noun-like token.
class HeuristicFocusExtractor final : public FocusExtractor {
 public:
  FocusResult extract(std::span<const std::string> tokens, std::string_view raw_text) const override;

  static bool is_noun_like(std::string_view token, bool capitalized);
};

FocusResult extract_focus(std::span<const std::string> tokens, std::string_view raw_text = {});

}  // namespace adscreen
