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

#include <fstream>
#include <string>

#include "adscreen/error.hpp"
#include "adscreen/text_features.hpp"

namespace adscreen {

BigramModel BigramModel::train(std::span<const TokenList> corpus) {
  BigramModel m;
  for (const TokenList& line : corpus) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      ++m.unigrams_[line[i]];
      ++m.total_;
      if (i + 1 < line.size()) {
        ++m.histories_[line[i]];
        ++m.bigrams_[{line[i], line[i + 1]}];
      }
    }
  }
  if (m.total_ == 0) throw Error(ErrorCode::kEmptyCorpus, "bigram corpus has no tokens");
  return m;
}

BigramModel BigramModel::train_file(const std::filesystem::path& corpus_path) {
  std::ifstream in(corpus_path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open corpus " + corpus_path.string());
  std::vector<TokenList> lines;
  std::string line;
  while (std::getline(in, line)) {
    TokenList t = tokenize(line);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  return train(lines);
}

std::uint64_t BigramModel::unigram_count(std::string_view w) const {
  auto it = unigrams_.find(w);
  return it == unigrams_.end() ? 0 : it->second;
}

std::uint64_t BigramModel::history_count(std::string_view w) const {
  auto it = histories_.find(w);
  return it == histories_.end() ? 0 : it->second;
}

std::uint64_t BigramModel::bigram_count(std::string_view w1, std::string_view w2) const {
  auto it = bigrams_.find({std::string(w1), std::string(w2)});
  return it == bigrams_.end() ? 0 : it->second;
}

double BigramModel::unigram_probability(std::string_view w) const {
  return static_cast<double>(unigram_count(w) + 1) /
         static_cast<double>(total_ + vocabulary_size());
}

double BigramModel::conditional_probability(std::string_view history, std::string_view w) const {
  return static_cast<double>(bigram_count(history, w) + 1) /
         static_cast<double>(history_count(history) + vocabulary_size());
}

double joint_probability(const BigramModel& model, std::string_view wh, std::string_view noun) {
  return model.unigram_probability(wh) * model.conditional_probability(wh, noun);
}

}  // namespace adscreen
