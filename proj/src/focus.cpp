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
#include <string>
#include <unordered_set>

#include "adscreen/text_features.hpp"

namespace adscreen {
namespace {

// Closed-class words plus frequent verbs and modifiers that the
// suffix rules would otherwise let through.
const std::unordered_set<std::string_view>& stoplist() {
  static const std::unordered_set<std::string_view> kWords = {
      // determiners, quantifiers, numerals
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "no",
      "every", "each", "all", "both", "either", "neither", "much", "many", "more",
      "most", "few", "little", "lot", "lots", "other", "another", "such", "one",
      "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
      "first", "second", "last", "next",
      // pronouns
      "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "he",
      "him", "his", "himself", "she", "her", "hers", "herself", "it", "its",
      "itself", "we", "us", "our", "ours", "they", "them", "their", "theirs",
      "something", "anything", "nothing", "everything", "someone", "anyone",
      "everyone", "somebody", "nobody", "everybody", "one's", "ones",
      // contractions
      "i'm", "i'll", "i've", "i'd", "you're", "you'll", "you've", "you'd",
      "he's", "she's", "it's", "we're", "we'll", "we've", "they're", "they'll",
      "they've", "that's", "there's", "here's", "what's", "who's", "let's",
      "don't", "doesn't", "didn't", "can't", "won't", "isn't", "aren't",
      "wasn't", "weren't", "couldn't", "wouldn't", "shouldn't", "haven't",
      "hasn't", "hadn't",
      // prepositions and particles
      "in", "on", "at", "to", "from", "of", "for", "with", "without", "about",
      "by", "into", "onto", "over", "under", "after", "before", "between",
      "through", "during", "around", "up", "down", "out", "off", "near", "like",
      "than", "as", "since", "until", "till", "upon", "along", "across", "behind",
      // conjunctions
      "and", "or", "but", "so", "because", "if", "then", "while", "though",
      "although", "unless", "whether", "nor",
      // auxiliaries and modals
      "be", "am", "is", "are", "was", "were", "been", "being", "do", "does",
      "did", "done", "have", "has", "had", "having", "will", "would", "shall",
      "should", "can", "could", "may", "might", "must",
      // frequent verbs
      "go", "goes", "went", "gone", "get", "gets", "got", "make", "makes",
      "made", "take", "takes", "took", "see", "sees", "saw", "seen", "watch",
      "watches", "know", "knows", "knew", "think", "thinks", "thought", "say",
      "says", "said", "tell", "told", "want", "wants", "need", "needs", "love",
      "loves", "hate", "enjoy", "enjoys", "remember", "forget", "forgot",
      "come", "comes", "came", "give", "gave", "put", "keep", "kept", "let",
      "feel", "felt", "look", "looks", "read", "eat", "ate", "drink", "play",
      "plays", "live", "lives", "visit", "try", "use", "work", "works", "mean",
      "guess", "hope", "wish", "prefer", "listen", "talk", "talked", "speak",
      "sing", "cook", "walk", "sleep", "buy", "bought", "call", "sit", "stay",
      // adverbs
      "not", "very", "really", "too", "also", "just", "only", "still", "already",
      "again", "always", "never", "often", "sometimes", "usually", "maybe",
      "perhaps", "here", "there", "now", "today", "tonight", "tomorrow",
      "yesterday", "soon", "later", "well", "even", "quite", "pretty", "rather",
      "almost", "away", "back", "ever", "once", "twice", "together", "yet",
      // adjectives
      "good", "great", "nice", "bad", "new", "old", "big", "small", "long",
      "short", "high", "low", "young", "happy", "sad", "fine", "sure", "right",
      "wrong", "same", "different", "own", "favorite", "favourite", "best",
      "better", "worse", "worst", "fun", "funny", "hot", "cold", "warm",
      // wh-words
      "who", "whom", "whose", "what", "when", "where", "which", "why", "how",
      // interjections, responses, fillers
      "yes", "yeah", "yep", "no", "nope", "ok", "okay", "oh", "ah", "hi",
      "hello", "bye", "please", "thanks", "thank", "sorry", "wow", "uh", "um",
      "er", "mm", "hmm", "huh", "well", "right",
  };
  return kWords;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() + 1 && s.substr(s.size() - suffix.size()) == suffix;
}

// Nouns whose endings would be rejected by the suffix rules.
bool is_suffix_exception(std::string_view token) {
  static const std::unordered_set<std::string_view> kNouns = {
      "morning", "evening", "building", "painting", "meeting", "wedding",
      "spring", "ring", "king", "thing", "ceiling", "clothing", "family",
      "bed", "shed", "sled", "island", "guest", "forest", "chest", "nest",
  };
  return kNouns.contains(token);
}

struct RawWord {
  std::string token;
  bool capitalized;
};

std::vector<RawWord> scan_raw(std::string_view raw_text) {
  std::vector<RawWord> out;
  std::size_t i = 0;
  const std::size_t n = raw_text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(raw_text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(raw_text[j]))) ++j;
    const std::string_view chunk = raw_text.substr(i, j - i);
    i = j;
    TokenList t = tokenize(chunk);
    if (t.empty()) continue;
    bool cap = false;
    for (char c : chunk) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cap = std::isupper(static_cast<unsigned char>(c)) != 0;
        break;
      }
    }
    out.push_back({std::move(t.front()), cap});
  }
  return out;
}

}  // namespace

bool HeuristicFocusExtractor::is_noun_like(std::string_view token, bool capitalized) {
  if (token.empty() || stoplist().contains(token)) return false;
  if (token.back() == '-') return false;  // fragment
  if (std::none_of(token.begin(), token.end(),
                   [](unsigned char c) { return std::isalpha(c) || c >= 0x80; })) {
    return false;  // numbers and symbols
  }
  if (token.find('\'') != std::string_view::npos && !ends_with(token, "'s")) return false;
  if (capitalized) return true;
  if (is_suffix_exception(token)) return true;
  static constexpr std::array<std::string_view, 12> kNonNounSuffixes = {
      "ly", "ed", "ing", "est", "ous", "ful", "ive", "able", "ible", "ish", "less", "ic"};
  for (std::string_view suf : kNonNounSuffixes) {
    if (ends_with(token, suf)) return false;
  }
  return token.size() >= 2;
}

FocusResult HeuristicFocusExtractor::extract(std::span<const std::string> tokens,
                                             std::string_view raw_text) const {
  const std::vector<RawWord> raw = scan_raw(raw_text);
  const bool aligned = raw.size() == tokens.size();
  FocusResult result;
  for (std::size_t k = tokens.size(); k-- > 0;) {
    const bool cap = aligned && raw[k].token == tokens[k] && raw[k].capitalized;
    if (is_noun_like(tokens[k], cap)) {
      result.focus = tokens[k];
      result.position = k;
      result.proper_noun = cap;
      break;
    }
  }
  return result;
}

FocusResult extract_focus(std::span<const std::string> tokens, std::string_view raw_text) {
  return HeuristicFocusExtractor{}.extract(tokens, raw_text);
}

}  // namespace adscreen
