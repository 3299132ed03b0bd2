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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adscreen/dialogue.hpp"
#include "adscreen/session.hpp"
#include "adscreen/signal_features.hpp"

namespace adscreen {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  bool operator==(const MeanSd&) const = default;
};

// Synthetic speaker. Rates are probabilities per generated token.
struct UserProfile {
  std::string name;
  DiagnosisDegree label = DiagnosisDegree::kNonAD;
  MeanSd speaking_rate_wpm{140.0, 10.0};
  double filler_rate = 0.02;
  double repetition_rate = 0.01;
  double silence_prob = 0.0;      // a prompt slot gets no reply
  MeanSd reply_delay_s{1.5, 0.4};
  MeanSd utterance_length{7.0, 2.0};  // tokens
  double pause_rate_per_10w = 0.5;    // pauses per 10 word boundaries inside a turn
  MeanSd pause_duration_s{0.6, 0.15};
  double question_prob = 0.15;
  MeanSd f0_hz{180.0, 15.0};
  std::vector<std::string> vocabulary;
  std::vector<std::string> focus_nouns;  // subset of the vocabulary used in questions

  // Throws kConfigError.
  void validate() const;
  bool operator==(const UserProfile&) const = default;
};

// JSON: {"profiles": [{...UserProfile fields...}]}. Throws kIoError when
// unreadable; bad content raises kParseError or kConfigError.
std::vector<UserProfile> load_profiles(const std::filesystem::path& path);
std::vector<UserProfile> parse_profiles(const std::string& json_text);
nlohmann::json profile_to_json(const UserProfile& p);

// Recipe for a tone-based stand-in for speech: a harmonic tone at f0 during
// voiced spans, near silence elsewhere.
struct ToneSpec {
  int sample_rate = 8000;
  double f0_hz = 150.0;
  double duration_s = 0.0;
  std::vector<TimeSpan> voiced;  // relative to the utterance start
  std::uint64_t seed = 0;
};

AudioBuffer synthesize_tone(const ToneSpec& spec);

// Ground truth about one user turn.
struct UtteranceAnnotation {
  std::size_t event_index = 0;  // into ScriptedSession::events
  int tokens = 0;
  int fillers = 0;
  int repetitions = 0;
  int pauses = 0;               // inside the turn
  bool question = false;
  std::optional<ToneSpec> tone;
};

struct ScriptedSession {
  std::string session_id;
  std::string profile;
  DiagnosisDegree label = DiagnosisDegree::kNonAD;
  std::uint64_t seed = 0;
  std::vector<SessionEvent> events;  // audio is left empty; see materialize_audio
  std::vector<UtteranceAnnotation> annotations;
};

// Session t = 0 of simulated sessions: 2026-01-01T00:00:00Z.
inline constexpr double kSimulatedEpoch = 1767225600.0;

struct GenerateOptions {
  std::size_t n_pairs = kPairsPerBlock;
  double silence_threshold_s = 5.0;
  // A reply is forced after this many silent slots in a row, since the robot
  // stops prompting at that point.
  int breakdown_after = 5;
  bool pseudo_audio = false;
  int sample_rate = 8000;
};

// Deterministic in (profile, seed, options). Every user slot is either one
// utterance or one silence long enough to trigger a prompt.
ScriptedSession generate_session(const UserProfile& profile, std::uint64_t seed,
                                 const GenerateOptions& options = {},
                                 const std::string& session_id = {});

// Fills UserUtteranceIn::audio from the tone recipes.
void materialize_audio(ScriptedSession& session);

nlohmann::json session_to_json(const ScriptedSession& s);
ScriptedSession session_from_json(const nlohmann::json& j);
void save_session(const ScriptedSession& s, const std::filesystem::path& path);
ScriptedSession load_session(const std::filesystem::path& path);

struct ManifestRow {
  std::string file;  // relative to the corpus directory
  DiagnosisDegree label = DiagnosisDegree::kNonAD;
  std::uint64_t seed = 0;
  std::string profile;
  std::string digest;  // FNV-1a of the session file, hex
  bool operator==(const ManifestRow&) const = default;
};

inline constexpr const char* kManifestName = "manifest.csv";

// n_per_profile sessions per profile under dir/sessions, plus dir/manifest.csv.
// Session seeds derive from (seed, running index). Throws kConfigError unless
// at least two distinct labels are present, and kIoError.
std::vector<ManifestRow> generate_corpus(const std::vector<UserProfile>& profiles,
                                         std::size_t n_per_profile, std::uint64_t seed,
                                         const std::filesystem::path& dir,
                                         const GenerateOptions& options = {});

std::vector<ManifestRow> load_manifest(const std::filesystem::path& corpus_dir);

// Sessions in manifest order, without audio; materialize one at a time.
std::vector<ScriptedSession> load_corpus(const std::filesystem::path& corpus_dir);

}  // namespace adscreen
