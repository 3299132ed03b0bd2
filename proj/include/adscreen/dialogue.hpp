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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adscreen {

enum class Speaker { kHuman, kRobot };

std::string_view speaker_name(Speaker s);

// Times are seconds on the session's monotonic clock.
struct Utterance {
  Speaker speaker = Speaker::kHuman;
  std::vector<std::string> tokens;
  std::string raw_text;
  double t_start = 0.0;
  double t_end = 0.0;
  std::optional<std::string> audio_ref;

  double duration() const { return t_end - t_start; }
  // A human turn with no words stands for a silence that provoked a prompt.
  bool is_silence() const { return speaker == Speaker::kHuman && tokens.empty(); }

  bool operator==(const Utterance&) const = default;
};

// Tokenizes raw_text and validates timing. Throws kTimeOrderViolation when
// t_end < t_start and kSpeakerMismatch when a robot utterance carries audio.
Utterance make_utterance(Speaker speaker, std::string raw_text, double t_start,
                         double t_end,
                         std::optional<std::string> audio_ref = std::nullopt);

// Zero-length human turn marking a silence expiry at time t.
Utterance make_silence_turn(double t);

// Joins consecutive human utterances into one turn spanning the first start to
// the last end.
Utterance concatenate_utterances(std::span<const Utterance> parts);

struct TurnPair {
  Utterance human;
  Utterance robot;
  std::size_t index = 0;

  bool operator==(const TurnPair&) const = default;
};

TurnPair make_turn_pair(Utterance human, Utterance robot, std::size_t index);

inline constexpr std::size_t kPairsPerBlock = 6;

struct DialogueBlock {
  std::vector<TurnPair> pairs;
  std::size_t block_index = 0;
};

struct DialogueSession {
  std::string session_id;
  std::vector<TurnPair> pairs;
  std::vector<DialogueBlock> completed_blocks;
  // Wall-clock time (seconds since the Unix epoch) of session t = 0.
  double clock_origin = 0.0;
  std::size_t block_size = kPairsPerBlock;

  std::size_t unblocked_pairs() const {
    return pairs.size() - completed_blocks.size() * block_size;
  }
};

// Appends a pair; its index must equal the current pair count and its times
// must not precede the previous pair.
void append_pair(DialogueSession& session, TurnPair pair);

// Moves the oldest block_size unblocked pairs into a new block. Leaves the
// session untouched and returns nullopt when too few pairs are pending.
std::optional<DialogueBlock> close_block(DialogueSession& session);

enum class DiagnosisDegree { kNonAD = 0, kMild = 1, kModerate = 2, kSevere = 3 };

inline constexpr std::size_t kNumDegrees = 4;
inline constexpr std::array<DiagnosisDegree, kNumDegrees> kAllDegrees = {
    DiagnosisDegree::kNonAD, DiagnosisDegree::kMild, DiagnosisDegree::kModerate,
    DiagnosisDegree::kSevere};

// Wire names: non_ad, mild, moderate, severe.
std::string_view degree_name(DiagnosisDegree d);
DiagnosisDegree parse_degree(std::string_view name);

inline constexpr double kDistributionTolerance = 1e-9;

// Probability vector over the four degrees, validated on construction.
class DegreeDistribution {
 public:
  // Uniform distribution.
  DegreeDistribution();

  // Throws kInvalidDistribution unless every p >= 0 and |sum - 1| <= 1e-9.
  static DegreeDistribution from_probabilities(const std::array<double, kNumDegrees>& p);

  double operator[](DiagnosisDegree d) const { return p_[static_cast<std::size_t>(d)]; }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::array<double, kNumDegrees>& values() const { return p_; }

  // Ties resolve toward the more severe degree.
  DiagnosisDegree argmax() const;

  bool operator==(const DegreeDistribution&) const = default;

 private:
  explicit DegreeDistribution(const std::array<double, kNumDegrees>& p) : p_(p) {}
  std::array<double, kNumDegrees> p_;

  friend DegreeDistribution normalize_distribution(const std::array<double, kNumDegrees>&);
};

// raw / sum(raw). Throws kZeroMass when the sum is zero and
// kInvalidDistribution on negative or non-finite entries.
DegreeDistribution normalize_distribution(const std::array<double, kNumDegrees>& raw);

}  // namespace adscreen
