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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "adscreen/error.hpp"
#include "adscreen/random.hpp"
#include "adscreen/text_features.hpp"

namespace adscreen {

Vocabulary Vocabulary::build(std::span<const TokenList> corpus, std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const TokenList& line : corpus) {
    for (const std::string& t : line) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (const auto& [tok, _] : ranked) {
    if (max_size > 0 && tokens.size() + 1 >= max_size) break;
    tokens.push_back(tok);
  }
  return from_tokens(tokens);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens_in_index_order) {
  Vocabulary v;
  for (const std::string& t : tokens_in_index_order) {
    if (v.index_.contains(t)) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate vocabulary token '" + t + "'");
    }
    v.tokens_.push_back(t);
    v.index_.emplace(t, v.tokens_.size());
  }
  return v;
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kOov : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(tokens);
}

std::vector<std::size_t> one_hot_sequence(const Vocabulary& vocab,
                                          std::span<const std::string> tokens) {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(vocab.index_of(t));
  return out;
}

std::vector<Eigen::VectorXd> one_hot_dense(const Vocabulary& vocab,
                                           std::span<const std::string> tokens) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(tokens.size());
  for (std::size_t idx : one_hot_sequence(vocab, tokens)) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
    v[static_cast<Eigen::Index>(idx)] = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dim must be positive");
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  std::map<std::string, const Eigen::VectorXd*> sorted;
  for (const auto& [tok, v] : vectors_) sorted.emplace(tok, &v);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  char buf[32];
  for (const auto& [tok, v] : sorted) {
    out << tok;
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), (*v)[i]);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open embeddings " + path.string());
  std::optional<EmbeddingTable> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    double x;
    while (ss >> x) values.push_back(x);
    if (!ss.eof()) {
      throw Error(ErrorCode::kParseError, "bad number on line " + std::to_string(line_no));
    }
    if (!table) {
      if (values.empty()) {
        throw Error(ErrorCode::kParseError, "no vector on line " + std::to_string(line_no));
      }
      table.emplace(values.size(), seed);
    }
    if (values.size() != table->dim()) {
      throw Error(ErrorCode::kDimMismatch, "line " + std::to_string(line_no) + " has " +
                                               std::to_string(values.size()) + " values");
    }
    table->insert(token, Eigen::Map<Eigen::VectorXd>(values.data(),
                                                     static_cast<Eigen::Index>(values.size())));
  }
  if (!table) throw Error(ErrorCode::kParseError, "embedding file is empty");
  return std::move(*table);
}

void EmbeddingTable::insert(const std::string& token, Eigen::VectorXd v) {
  if (static_cast<std::size_t>(v.size()) != dim_) {
    throw Error(ErrorCode::kDimMismatch, "embedding for '" + token + "' has wrong dim");
  }
  vectors_[token] = std::move(v);
}

Eigen::VectorXd EmbeddingTable::lookup(std::string_view token) const {
  if (auto it = vectors_.find(std::string(token)); it != vectors_.end()) return it->second;
  Rng rng(seed_ ^ fnv1a64(token));
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

std::vector<Eigen::VectorXd> embed_sequence(const EmbeddingTable& table,
                                            std::span<const std::string> tokens) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(table.lookup(t));
  return out;
}

}  // namespace adscreen
