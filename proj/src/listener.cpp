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

#include "adscreen/listener.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "adscreen/error.hpp"

namespace adscreen {
namespace {

constexpr std::array<std::string_view, 16> kQuestionOpeners = {
    "who", "what", "when", "where", "which", "why", "how", "do",
    "does", "did", "is", "are", "can", "could", "will", "would"};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string fill(std::string tmpl, const std::string& wh, const std::string& focus) {
  replace_all(tmpl, "{Wh}", capitalize(wh));
  replace_all(tmpl, "{wh}", wh);
  replace_all(tmpl, "{Focus}", capitalize(focus));
  replace_all(tmpl, "{focus}", focus);
  return tmpl;
}

std::string trailing_trimmed(std::string_view s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto b = std::find_if(s.begin(), s.end(), not_space);
  auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return b < e ? std::string(b, e) : std::string();
}

Response formulaic(ListenerState& state, const ListenerConfig& config) {
  const auto& pool = config.formulaic_responses;
  const std::string& text = pool[state.formulaic_cursor % pool.size()];
  ++state.formulaic_cursor;
  return {ResponseType::kFormulaicResponse, text};
}

std::string next_topic(ListenerState& state, const ListenerConfig& config) {
  const std::string& t = config.topics[state.topic_cursor % config.topics.size()];
  ++state.topic_cursor;
  return t;
}

}  // namespace

std::string_view dialogue_act_name(DialogueAct a) {
  switch (a) {
    case DialogueAct::kQuestion: return "question";
    case DialogueAct::kStatement: return "statement";
    case DialogueAct::kSilence: return "silence";
  }
  return "?";
}

std::string_view response_type_name(ResponseType t) {
  switch (t) {
    case ResponseType::kAnswer: return "answer";
    case ResponseType::kQuestionOnFocus: return "question_on_focus";
    case ResponseType::kPartialRepeat: return "partial_repeat";
    case ResponseType::kFollowUpQuestion: return "follow_up_question";
    case ResponseType::kTopicIntroduction: return "topic_introduction";
    case ResponseType::kFormulaicResponse: return "formulaic_response";
  }
  return "?";
}

ResponseType parse_response_type(std::string_view name) {
  for (ResponseType t : kAllResponseTypes) {
    if (response_type_name(t) == name) return t;
  }
  throw Error(ErrorCode::kParseError, "unknown response type '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

QADatabase::QADatabase(std::vector<QAEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::kConfigError, "QA database has no entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& pats = entries_[i].patterns;
    std::erase_if(pats, [](const TokenList& p) { return p.empty(); });
    if (pats.empty()) {
      throw Error(ErrorCode::kConfigError, "QA entry " + std::to_string(i) + " has no patterns");
    }
  }
}

QADatabase QADatabase::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open QA database " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  std::vector<QAEntry> entries;
  try {
    for (const auto& e : j.at("entries")) {
      QAEntry entry;
      for (const auto& p : e.at("patterns")) entry.patterns.push_back(tokenize(p.get<std::string>()));
      entry.answer = e.at("answer").get<std::string>();
      entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return QADatabase(std::move(entries));
}

QADatabase::Match QADatabase::best_match(std::span<const std::string> query) const {
  const std::set<std::string, std::less<>> q(query.begin(), query.end());
  Match best;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (const TokenList& pattern : entries_[i].patterns) {
      const std::set<std::string, std::less<>> p(pattern.begin(), pattern.end());
      std::size_t hit = 0;
      for (const std::string& t : p) hit += q.contains(t);
      const double score = static_cast<double>(hit) / static_cast<double>(p.size());
      if (score > best.score) best = {i, score};
    }
  }
  return best;
}

std::vector<std::string> load_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trailing_trimmed(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  if (out.empty()) throw Error(ErrorCode::kConfigError, path.string() + " is empty");
  return out;
}

void ListenerConfig::validate() const {
  if (!(silence_threshold_s > 0)) throw Error(ErrorCode::kConfigError, "silence_threshold_s must be > 0");
  if (!(wh_threshold > 0 && wh_threshold < 1)) {
    throw Error(ErrorCode::kConfigError, "wh_threshold must lie in (0, 1)");
  }
  if (wh_words.empty()) throw Error(ErrorCode::kConfigError, "wh_words is empty");
  if (topics.empty()) throw Error(ErrorCode::kConfigError, "topic list is empty");
  if (formulaic_responses.empty()) throw Error(ErrorCode::kConfigError, "no formulaic responses");
  if (breakdown_after < 1) throw Error(ErrorCode::kConfigError, "breakdown_after must be >= 1");
}

// ---------------------------------------------------------------------------

DialogueAct tag_dialogue_act(std::span<const std::string> tokens, std::string_view raw_text,
                             const BiGRUClassifier* model, const EmbeddingTable* embeddings) {
  if (tokens.empty()) throw Error(ErrorCode::kEmptyUtterance, "cannot tag an empty utterance");
  const std::string trimmed = trailing_trimmed(raw_text);
  if (!trimmed.empty() && trimmed.back() == '?') return DialogueAct::kQuestion;
  if (model && embeddings) {
    const Eigen::VectorXd p = classify_probs(*model, embed_sequence(*embeddings, tokens));
    return p[1] > p[0] ? DialogueAct::kQuestion : DialogueAct::kStatement;
  }
  const bool opener = std::find(kQuestionOpeners.begin(), kQuestionOpeners.end(), tokens.front()) !=
                      kQuestionOpeners.end();
  return opener ? DialogueAct::kQuestion : DialogueAct::kStatement;
}

Response respond_to_question(const QADatabase& db, std::span<const std::string> tokens,
                             const ListenerConfig& config, ListenerState& state) {
  const QADatabase::Match m = db.best_match(tokens);
  if (m.score >= config.qa_match_threshold) {
    return {ResponseType::kAnswer, db.entries()[m.entry].answer};
  }
  return formulaic(state, config);
}

Response respond_to_statement(ListenerState& state, const BigramModel& bigram,
                              std::span<const std::string> tokens, std::string_view raw_text,
                              const ListenerConfig& config) {
  const FocusResult f = extract_focus(tokens, raw_text);
  if (!f.focus) return formulaic(state, config);
  // A proper noun names an instance of the running topic, so the topic
  // itself is kept for later follow-ups.
  if (!f.proper_noun) state.last_topic = *f.focus;

  double best = -1.0;
  const std::string* best_wh = nullptr;
  for (const std::string& wh : config.wh_words) {
    const double p = joint_probability(bigram, wh, *f.focus);
    if (p > best) {
      best = p;
      best_wh = &wh;
    }
  }
  if (best_wh && best >= config.wh_threshold) {
    return {ResponseType::kQuestionOnFocus, fill(config.question_on_focus_template, *best_wh, *f.focus)};
  }
  return {ResponseType::kPartialRepeat, fill(config.partial_repeat_template, "", *f.focus)};
}

Response on_silence_expiry(ListenerState& state, const ListenerConfig& config) {
  Response r;
  if (state.silence_stage == 0) {
    r.type = ResponseType::kFollowUpQuestion;
    r.text = state.last_topic ? fill(config.follow_up_template, "", *state.last_topic)
                              : next_topic(state, config);
  } else {
    r.type = ResponseType::kTopicIntroduction;
    r.text = next_topic(state, config);
  }
  ++state.silence_stage;
  ++state.unanswered_prompts;
  if (state.unanswered_prompts >= config.breakdown_after) state.breakdown = true;
  state.silence_deadline = state.now + config.silence_threshold_s;
  return r;
}

double event_time(const ListenerEvent& e) {
  if (const auto* u = std::get_if<UserUtteranceEvent>(&e)) return u->utterance.t_end;
  return std::get<TimerExpiredEvent>(e).time;
}

StepResult step(const ListenerResources& res, ListenerState state, const ListenerEvent& event) {
  const double t = event_time(event);
  if (t < state.now) {
    throw Error(ErrorCode::kClockRegression, "event at " + std::to_string(t) +
                                                 " precedes listener time " +
                                                 std::to_string(state.now));
  }
  state.now = t;
  RobotAction action{};
  action.time = t;
  if (const auto* u = std::get_if<UserUtteranceEvent>(&event)) {
    const Utterance& utt = u->utterance;
    state.silence_stage = 0;
    state.unanswered_prompts = 0;
    const BiGRUClassifier* model = res.act_model ? &*res.act_model : nullptr;
    action.act = tag_dialogue_act(utt.tokens, utt.raw_text, model, &res.act_embeddings);
    action.response = action.act == DialogueAct::kQuestion
                          ? respond_to_question(res.qa, utt.tokens, res.config, state)
                          : respond_to_statement(state, res.bigram, utt.tokens, utt.raw_text,
                                                 res.config);
    state.silence_deadline = t + res.config.silence_threshold_s;
  } else {
    action.act = DialogueAct::kSilence;
    action.response = on_silence_expiry(state, res.config);
  }
  action.silence_deadline = *state.silence_deadline;
  action.next_stage = state.silence_stage + 1;
  return {std::move(state), std::move(action)};
}

ListenerResources load_listener_resources(ListenerConfig config,
                                          const std::filesystem::path& qa_path,
                                          const std::filesystem::path& topics_path,
                                          const std::filesystem::path& formulaic_path,
                                          const std::filesystem::path& corpus_path) {
  config.topics = load_lines(topics_path);
  if (!formulaic_path.empty()) config.formulaic_responses = load_lines(formulaic_path);
  config.validate();
  return ListenerResources{
      .config = std::move(config),
      .qa = QADatabase::load(qa_path),
      .bigram = BigramModel::train_file(corpus_path),
      .act_model = std::nullopt,
      .act_embeddings = EmbeddingTable(),
  };
}

}  // namespace adscreen
