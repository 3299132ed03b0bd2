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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adscreen/bigru.hpp"
#include "adscreen/dialogue.hpp"
#include "adscreen/text_features.hpp"

namespace adscreen {

enum class DialogueAct { kQuestion, kStatement, kSilence };

enum class ResponseType {
  kAnswer,
  kQuestionOnFocus,
  kPartialRepeat,
  kFollowUpQuestion,
  kTopicIntroduction,
  kFormulaicResponse,
};

inline constexpr std::array<ResponseType, 6> kAllResponseTypes = {
    ResponseType::kAnswer,           ResponseType::kQuestionOnFocus,
    ResponseType::kPartialRepeat,    ResponseType::kFollowUpQuestion,
    ResponseType::kTopicIntroduction, ResponseType::kFormulaicResponse};

std::string_view dialogue_act_name(DialogueAct a);
// snake_case wire names: "answer", "question_on_focus", ...
std::string_view response_type_name(ResponseType t);
ResponseType parse_response_type(std::string_view name);

// Adjacency pairs: an entry answers any question close enough to one of its
// patterns.
struct QAEntry {
  std::vector<TokenList> patterns;
  std::string answer;
};

class QADatabase {
 public:
  // Throws kConfigError on an empty database or an entry without patterns.
  explicit QADatabase(std::vector<QAEntry> entries);

  // JSON: {"entries": [{"patterns": [string...], "answer": string}, ...]}.
  // Throws kIoError when unreadable; bad content raises kParseError or kConfigError.
  static QADatabase load(const std::filesystem::path& path);

  const std::vector<QAEntry>& entries() const { return entries_; }

  struct Match {
    std::size_t entry = 0;
    double score = 0.0;
  };
  // Best |query & pattern| / |pattern| over all patterns; ties go to the
  // earlier entry.
  Match best_match(std::span<const std::string> query) const;

 private:
  std::vector<QAEntry> entries_;
};

// Non-empty lines, trimmed. Throws kIoError or kConfigError when empty.
std::vector<std::string> load_lines(const std::filesystem::path& path);

struct ListenerConfig {
  double silence_threshold_s = 5.0;
  double wh_threshold = 1e-4;
  std::vector<std::string> wh_words = {"who", "what", "when", "where", "which"};
  std::vector<std::string> topics = {"Do you like music?"};
  std::vector<std::string> formulaic_responses = {"That's good."};
  double qa_match_threshold = 0.5;
  // {Wh}/{wh} and {Focus}/{focus} are replaced by the wh-word and the focus
  // word, capitalized or as is.
  std::string question_on_focus_template = "{Wh} {focus}?";
  std::string partial_repeat_template = "{Focus}?";
  std::string follow_up_template = "What's your favorite {focus}?";
  // Consecutive unanswered prompts after which the dialogue counts as broken
  // down.
  int breakdown_after = 5;

  // Throws kConfigError.
  void validate() const;
};

struct ListenerState {
  std::optional<std::string> last_topic;
  int silence_stage = 0;
  std::optional<double> silence_deadline;
  std::size_t topic_cursor = 0;
  std::size_t formulaic_cursor = 0;
  int unanswered_prompts = 0;
  bool breakdown = false;
  double now = 0.0;

  bool operator==(const ListenerState&) const = default;
};

// Immutable resources shared by all sessions.
struct ListenerResources {
  ListenerConfig config;
  QADatabase qa;
  BigramModel bigram;
  // Optional two-class tagger (class 1 = question) over embedded tokens.
  std::optional<BiGRUClassifier> act_model;
  EmbeddingTable act_embeddings;
};

// Trailing '?' is absolute; otherwise the model (if any) decides, else a
// leading interrogative or auxiliary word. Throws kEmptyUtterance.
DialogueAct tag_dialogue_act(std::span<const std::string> tokens, std::string_view raw_text,
                             const BiGRUClassifier* model = nullptr,
                             const EmbeddingTable* embeddings = nullptr);

struct Response {
  ResponseType type;
  std::string text;

  bool operator==(const Response&) const = default;
};

Response respond_to_question(const QADatabase& db, std::span<const std::string> tokens,
                             const ListenerConfig& config, ListenerState& state);
Response respond_to_statement(ListenerState& state, const BigramModel& bigram,
                              std::span<const std::string> tokens, std::string_view raw_text,
                              const ListenerConfig& config);
// Advances the escalation stage and re-arms the watch from state.now.
Response on_silence_expiry(ListenerState& state, const ListenerConfig& config);

struct UserUtteranceEvent {
  Utterance utterance;
};
struct TimerExpiredEvent {
  double time = 0.0;
};
using ListenerEvent = std::variant<UserUtteranceEvent, TimerExpiredEvent>;

double event_time(const ListenerEvent& e);

struct RobotAction {
  Response response;
  DialogueAct act;      // what the robot responded to
  double time = 0.0;    // emission time
  double silence_deadline = 0.0;
  int next_stage = 1;   // stage the armed watch will fire

  bool operator==(const RobotAction&) const = default;
};

struct StepResult {
  ListenerState state;
  RobotAction action;
};

// One robot action per event. Throws kClockRegression when the event is
// older than state.now.
StepResult step(const ListenerResources& res, ListenerState state, const ListenerEvent& event);

// Loads qa, topics, formulaic responses and the corpus from files.
ListenerResources load_listener_resources(ListenerConfig config,
                                          const std::filesystem::path& qa_path,
                                          const std::filesystem::path& topics_path,
                                          const std::filesystem::path& formulaic_path,
                                          const std::filesystem::path& corpus_path);

}  // namespace adscreen
