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

#include <gtest/gtest.h>

#include "adscreen/error.hpp"
#include "adscreen/random.hpp"
#include "test_util.hpp"

namespace adscreen {
namespace {

using testing::code_of;

Utterance human(double a, double b, const std::string& text = "hello there") {
  return make_utterance(Speaker::kHuman, text, a, b);
}

Utterance robot(double a, double b, const std::string& text = "Nice.") {
  return make_utterance(Speaker::kRobot, text, a, b);
}

TEST(TurnPairTest, WellOrderedTimes) {
  TurnPair p = make_turn_pair(human(0, 2), robot(2.5, 3), 0);
  EXPECT_EQ(p.index, 0u);
  EXPECT_EQ(p.human.tokens, (std::vector<std::string>{"hello", "there"}));
}

TEST(TurnPairTest, OverlapIsRejected) {
  EXPECT_EQ(code_of([] { make_turn_pair(human(0, 2), robot(1, 3), 0); }),
            ErrorCode::kTimeOrderViolation);
}

TEST(TurnPairTest, RobotAsHumanIsRejected) {
  EXPECT_EQ(code_of([] { make_turn_pair(robot(0, 2), robot(2.5, 3), 0); }),
            ErrorCode::kSpeakerMismatch);
}

TEST(UtteranceTest, RobotCannotCarryAudio) {
  EXPECT_EQ(code_of([] { make_utterance(Speaker::kRobot, "hi", 0, 1, "clip-1"); }),
            ErrorCode::kSpeakerMismatch);
  EXPECT_NO_THROW(make_utterance(Speaker::kHuman, "hi", 0, 1, "clip-1"));
}

TEST(UtteranceTest, ConcatenationSpansFirstToLast) {
  std::vector<Utterance> parts = {human(1, 2, "I went"), human(2.5, 4, "to the park")};
  Utterance u = concatenate_utterances(parts);
  EXPECT_DOUBLE_EQ(u.t_start, 1);
  EXPECT_DOUBLE_EQ(u.t_end, 4);
  EXPECT_EQ(u.tokens.size(), 5u);
  EXPECT_EQ(u.raw_text, "I went to the park");
}

DialogueSession session_with(std::size_t n) {
  DialogueSession s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 10.0 * static_cast<double>(i);
    append_pair(s, make_turn_pair(human(t, t + 2), robot(t + 3, t + 4), i));
  }
  return s;
}

TEST(CloseBlockTest, FivePairsIsNotEnough) {
  DialogueSession s = session_with(5);
  EXPECT_FALSE(close_block(s).has_value());
  EXPECT_TRUE(s.completed_blocks.empty());
}

TEST(CloseBlockTest, SixPairsCloseOneBlock) {
  DialogueSession s = session_with(6);
  auto b = close_block(s);
  ASSERT_TRUE(b.has_value());
  ASSERT_EQ(b->pairs.size(), 6u);
  EXPECT_EQ(b->pairs.front().index, 0u);
  EXPECT_EQ(b->pairs.back().index, 5u);
}

TEST(CloseBlockTest, ThirteenPairsSecondBlock) {
  DialogueSession s = session_with(13);
  ASSERT_TRUE(close_block(s).has_value());
  auto b = close_block(s);
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(b->block_index, 1u);
  EXPECT_EQ(b->pairs.front().index, 6u);
  EXPECT_EQ(b->pairs.back().index, 11u);
  EXPECT_EQ(s.unblocked_pairs(), 1u);
  EXPECT_FALSE(close_block(s).has_value());
}

TEST(CloseBlockTest, BlocksPartitionPrefix) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rng.index(40);
    DialogueSession s = session_with(n);
    while (close_block(s)) {
    }
    ASSERT_EQ(s.completed_blocks.size(), n / 6);
    std::size_t expect = 0;
    for (const DialogueBlock& b : s.completed_blocks) {
      for (const TurnPair& p : b.pairs) EXPECT_EQ(p.index, expect++);
    }
    EXPECT_EQ(expect, 6 * (n / 6));
  }
}

TEST(DistributionTest, Normalize) {
  DegreeDistribution u = normalize_distribution({1, 1, 1, 1});
  for (double p : u.values()) EXPECT_DOUBLE_EQ(p, 0.25);
  DegreeDistribution one = normalize_distribution({2, 0, 0, 0});
  EXPECT_EQ(one.values(), (std::array<double, 4>{1, 0, 0, 0}));
  EXPECT_EQ(code_of([] { normalize_distribution({0, 0, 0, 0}); }), ErrorCode::kZeroMass);
}

TEST(DistributionTest, ConstructionChecksMass) {
  EXPECT_EQ(code_of([] { DegreeDistribution::from_probabilities({0.5, 0.5, 0.1, 0}); }),
            ErrorCode::kInvalidDistribution);
  EXPECT_EQ(code_of([] { DegreeDistribution::from_probabilities({1.5, -0.5, 0, 0}); }),
            ErrorCode::kInvalidDistribution);
}

TEST(DistributionTest, ArgmaxTiesGoToMoreSevere) {
  EXPECT_EQ(DegreeDistribution().argmax(), DiagnosisDegree::kSevere);
  EXPECT_EQ(normalize_distribution({2, 2, 1, 0}).argmax(), DiagnosisDegree::kMild);
}

TEST(DegreeTest, NamesRoundTrip) {
  for (DiagnosisDegree d : kAllDegrees) EXPECT_EQ(parse_degree(degree_name(d)), d);
  EXPECT_LT(DiagnosisDegree::kNonAD, DiagnosisDegree::kSevere);
}

}  // namespace
}  // namespace adscreen
