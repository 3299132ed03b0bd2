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

#include "adscreen/dialogue.hpp"

#include <cmath>
#include <numeric>

#include "adscreen/error.hpp"
#include "adscreen/text_features.hpp"

namespace adscreen {

std::string_view speaker_name(Speaker s) {
  return s == Speaker::kHuman ? "human" : "robot";
}

Utterance make_utterance(Speaker speaker, std::string raw_text, double t_start,
                         double t_end, std::optional<std::string> audio_ref) {
  if (!(t_end >= t_start)) {
    throw Error(ErrorCode::kTimeOrderViolation, "utterance ends before it starts");
  }
  if (speaker == Speaker::kRobot && audio_ref) {
    throw Error(ErrorCode::kSpeakerMismatch, "robot utterances carry no audio");
  }
  Utterance u;
  u.speaker = speaker;
  u.tokens = tokenize(raw_text);
  u.raw_text = std::move(raw_text);
  u.t_start = t_start;
  u.t_end = t_end;
  u.audio_ref = std::move(audio_ref);
  return u;
}

Utterance make_silence_turn(double t) {
  Utterance u;
  u.speaker = Speaker::kHuman;
  u.t_start = t;
  u.t_end = t;
  return u;
}

Utterance concatenate_utterances(std::span<const Utterance> parts) {
  if (parts.empty()) throw Error(ErrorCode::kEmptyUtterance, "nothing to concatenate");
  Utterance out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Utterance& p = parts[i];
    if (p.speaker != out.speaker) {
      throw Error(ErrorCode::kSpeakerMismatch, "mixed speakers in one turn");
    }
    if (p.t_start < out.t_end) {
      throw Error(ErrorCode::kTimeOrderViolation, "turn fragments overlap");
    }
    if (!p.raw_text.empty()) {
      if (!out.raw_text.empty()) out.raw_text += ' ';
      out.raw_text += p.raw_text;
    }
    out.tokens.insert(out.tokens.end(), p.tokens.begin(), p.tokens.end());
    out.t_end = p.t_end;
    if (!out.audio_ref) out.audio_ref = p.audio_ref;
  }
  return out;
}

TurnPair make_turn_pair(Utterance human, Utterance robot, std::size_t index) {
  if (human.speaker != Speaker::kHuman || robot.speaker != Speaker::kRobot) {
    throw Error(ErrorCode::kSpeakerMismatch, "turn pair must be (human, robot)");
  }
  if (robot.audio_ref) {
    throw Error(ErrorCode::kSpeakerMismatch, "robot utterances carry no audio");
  }
  if (human.t_end > robot.t_start || human.t_end < human.t_start ||
      robot.t_end < robot.t_start) {
    throw Error(ErrorCode::kTimeOrderViolation, "robot turn starts before human turn ends");
  }
  return TurnPair{std::move(human), std::move(robot), index};
}

void append_pair(DialogueSession& session, TurnPair pair) {
  if (pair.index != session.pairs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pair index out of sequence");
  }
  if (!session.pairs.empty() && pair.human.t_start < session.pairs.back().robot.t_end) {
    throw Error(ErrorCode::kTimeOrderViolation, "pair starts before the previous one ends");
  }
  session.pairs.push_back(std::move(pair));
}

std::optional<DialogueBlock> close_block(DialogueSession& session) {
  if (session.block_size == 0 || session.unblocked_pairs() < session.block_size) {
    return std::nullopt;
  }
  const std::size_t first = session.completed_blocks.size() * session.block_size;
  DialogueBlock block;
  block.block_index = session.completed_blocks.size();
  block.pairs.assign(session.pairs.begin() + static_cast<std::ptrdiff_t>(first),
                     session.pairs.begin() + static_cast<std::ptrdiff_t>(first + session.block_size));
  session.completed_blocks.push_back(block);
  return block;
}

std::string_view degree_name(DiagnosisDegree d) {
  switch (d) {
    case DiagnosisDegree::kNonAD: return "non_ad";
    case DiagnosisDegree::kMild: return "mild";
    case DiagnosisDegree::kModerate: return "moderate";
    case DiagnosisDegree::kSevere: return "severe";
  }
  return "unknown";
}

DiagnosisDegree parse_degree(std::string_view name) {
  for (DiagnosisDegree d : kAllDegrees) {
    if (degree_name(d) == name) return d;
  }
  throw Error(ErrorCode::kParseError, "unknown degree '" + std::string(name) + "'");
}

DegreeDistribution::DegreeDistribution() : p_{0.25, 0.25, 0.25, 0.25} {}

DegreeDistribution DegreeDistribution::from_probabilities(
    const std::array<double, kNumDegrees>& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kInvalidDistribution, "negative or non-finite probability");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw Error(ErrorCode::kInvalidDistribution, "probabilities do not sum to one");
  }
  return DegreeDistribution(p);
}

DiagnosisDegree DegreeDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumDegrees; ++i) {
    if (p_[i] >= p_[best]) best = i;
  }
  return static_cast<DiagnosisDegree>(best);
}

DegreeDistribution normalize_distribution(const std::array<double, kNumDegrees>& raw) {
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kInvalidDistribution, "negative or non-finite mass");
    }
    sum += v;
  }
  if (sum == 0.0) throw Error(ErrorCode::kZeroMass, "distribution has zero mass");
  std::array<double, kNumDegrees> p{};
  for (std::size_t i = 0; i < kNumDegrees; ++i) p[i] = raw[i] / sum;
  return DegreeDistribution(p);
}

}  // namespace adscreen
