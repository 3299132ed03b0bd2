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
#include <array>
#include <cctype>

#include "adscreen/text_features.hpp"

namespace adscreen {
namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

TokenList tokenize(std::string_view raw_text) {
  TokenList out;
  std::size_t i = 0;
  const std::size_t n = raw_text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(raw_text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(raw_text[j]))) ++j;
    std::string_view chunk = raw_text.substr(i, j - i);
    i = j;

    std::size_t b = 0;
    while (b < chunk.size() && !is_word_char(static_cast<unsigned char>(chunk[b]))) ++b;
    if (b == chunk.size()) continue;
    std::size_t e = chunk.size() - 1;
    while (!is_word_char(static_cast<unsigned char>(chunk[e]))) --e;
    // Keep a fragment marker: "wa-" is a cut-off word.
    if (e + 1 < chunk.size() && chunk[e + 1] == '-') ++e;

    std::string token(chunk.substr(b, e - b + 1));
    std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) {
      return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    });
    out.push_back(std::move(token));
  }
  return out;
}

bool is_filler(std::string_view token) {
  static constexpr std::array<std::string_view, 5> kFillers = {"uh", "um", "er", "mm", "hmm"};
  return std::find(kFillers.begin(), kFillers.end(), token) != kFillers.end();
}

}  // namespace adscreen
