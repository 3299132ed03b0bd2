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
#include <unordered_map>
#include <variant>
#include <vector>

#include "adscreen/detectors.hpp"
#include "adscreen/dialogue.hpp"
#include "adscreen/listener.hpp"
#include "adscreen/signal_features.hpp"

namespace adscreen {

// ---------------------------------------------------------------------------
// Events into a session. All times are seconds on the session clock.

struct SessionStart {
  std::string session_id;
  double time = 0.0;
  double wall_origin = 0.0;  // Unix seconds of session time 0
};

struct UserUtteranceIn {
  std::string text;
  std::optional<double> t_start;
  std::optional<double> t_end;
  std::optional<AudioBuffer> audio;
  double arrival = 0.0;  // session clock when the message arrived
};

struct Tick {
  double now = 0.0;
};

struct SessionEnd {
  double time = 0.0;
};

using SessionEvent = std::variant<SessionStart, UserUtteranceIn, Tick, SessionEnd>;

// Missing t_end becomes the arrival time; missing t_start is estimated from
// the word count at typing_rate_wpm with a 0.5 s floor.
Utterance assign_times(const UserUtteranceIn& in, double arrival_clock, double typing_rate_wpm);

// ---------------------------------------------------------------------------
// Outputs.

struct SilenceWatch {
  double deadline_s = 0.0;
  int stage = 1;
  bool operator==(const SilenceWatch&) const = default;
};

struct Diagnosis {
  std::size_t block_index = 0;
  BlockVerdict verdict;
};

using SessionOutput = std::variant<RobotAction, SilenceWatch, Diagnosis>;

struct TurnSummary {
  Speaker speaker = Speaker::kHuman;
  std::string text;
  double t_start = 0.0;
  double t_end = 0.0;
  std::optional<ResponseType> response_type;  // robot turns only
  bool operator==(const TurnSummary&) const = default;
};

struct BlockRecord {
  std::string wall_time;
  std::string session_id;
  std::size_t block_index = 0;
  std::vector<TurnSummary> turns;
  std::array<DegreeDistribution, kNumClassifiers> distributions;
  std::array<DiagnosisDegree, kNumClassifiers> votes{};
  DiagnosisDegree final = DiagnosisDegree::kNonAD;
  bool tie_broken = false;
  InteractionalFeatures features;
  DisfluencyInventory disfluencies;
  bool breakdown = false;
  bool operator==(const BlockRecord&) const = default;
};

struct SessionSummaryRecord {
  std::string wall_time;
  std::string session_id;
  std::size_t pairs = 0;
  std::vector<DiagnosisDegree> finals;  // one per block
  bool breakdown = false;
  bool operator==(const SessionSummaryRecord&) const = default;
};

using MedicalLogRecord = std::variant<BlockRecord, SessionSummaryRecord>;

// ISO-8601 UTC with milliseconds, e.g. 2026-01-02T03:04:05.678Z.
std::string format_iso8601(double unix_seconds);

// ---------------------------------------------------------------------------
// External acoustic features: CSV with a header row; first column is the
// utterance id "<session_id>/<pair_index>".

using ExternalFeatures = std::unordered_map<std::string, AcousticFeatureVector>;

// Throws kIoError or kParseError naming the line. Duplicate ids keep the last
// row and log a warning.
ExternalFeatures load_external_features(const std::filesystem::path& path);
std::string utterance_id(const std::string& session_id, std::size_t pair_index);

// ---------------------------------------------------------------------------

struct SessionOptions {
  std::size_t block_size = kPairsPerBlock;
  double pause_min_s = 0.25;
  double vad_threshold_db = -40.0;
  double typing_rate_wpm = 150.0;
  double robot_wpm = 150.0;
};

// Absolute human pauses in a block: VAD pauses inside turns that carry audio,
// response latencies before turns that do not.
std::vector<TimeSpan> block_pauses(const DialogueBlock& block,
                                   std::span<const UtteranceSignals> signals,
                                   double pause_min_s, double silence_threshold_s,
                                   double vad_threshold_db = -40.0);

// Signal-side inputs for one human utterance; audio too short to analyse is
// treated as absent.
UtteranceSignals analyse_utterance(const Utterance& human, const std::optional<AudioBuffer>& audio,
                                   const AcousticFeatureVector* external, double vad_threshold_db);

struct StepOutput {
  std::vector<SessionOutput> messages;
  std::vector<MedicalLogRecord> records;
};

// Event loop of one session. Not thread-safe; one owner per session.
class SessionRunner {
 public:
  // Throws kDimMismatch when external vectors do not fit the audio model.
  SessionRunner(const ListenerResources& listener, const DetectorModels& models,
                SessionOptions options, const ExternalFeatures* external = nullptr);

  // Throws kProtocolViolation on events out of order, before SessionStart or
  // after SessionEnd. A throwing call leaves the session unchanged.
  StepOutput handle(const SessionEvent& event);

  const DialogueSession& dialogue() const { return session_; }
  const ListenerState& listener_state() const { return state_; }
  bool started() const { return started_; }
  bool ended() const { return ended_; }
  double now() const { return now_; }
  // Signal-side inputs of every completed pair, indexed like dialogue().pairs.
  const std::vector<UtteranceSignals>& signals() const { return signals_; }
  // Deadline of the armed silence watch; empty when none is armed or the
  // robot has stopped prompting after a breakdown.
  std::optional<double> silence_deadline() const;

 private:
  struct PendingPair {
    Utterance human;
    RobotAction action;
    UtteranceSignals signals;
  };

  void on_start(const SessionStart& e, StepOutput& out);
  void on_utterance(const UserUtteranceIn& e, StepOutput& out);
  void fire_expiries_until(double t, StepOutput& out);
  void respond(Utterance human, UtteranceSignals signals, const ListenerEvent& ev, StepOutput& out);
  void finalize_pending(std::optional<double> next_start, StepOutput& out);
  void close_blocks(StepOutput& out);
  void advance(double t);
  std::string wall_time(double t) const;

  const ListenerResources& listener_;
  const DetectorModels& models_;
  SessionOptions options_;
  const ExternalFeatures* external_;

  DialogueSession session_;
  ListenerState state_;
  std::vector<UtteranceSignals> signals_;
  std::vector<ResponseType> robot_types_;
  std::optional<PendingPair> pending_;
  std::vector<DiagnosisDegree> finals_;
  double now_ = 0.0;
  bool started_ = false;
  bool ended_ = false;
};

// Runs a complete event stream (SessionStart first, SessionEnd last).
StepOutput run_session(std::span<const SessionEvent> events, const ListenerResources& listener,
                       const DetectorModels& models, const SessionOptions& options,
                       const ExternalFeatures* external = nullptr);

}  // namespace adscreen
