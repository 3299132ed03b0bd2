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

#include "adscreen/protocol.hpp"

#include <gtest/gtest.h>

#include "adscreen/error.hpp"
#include "adscreen/random.hpp"
#include "test_util.hpp"

namespace adscreen {
namespace {

using testing::code_of;

TEST(ProtocolTest, ClientRoundTrip) {
  const std::vector<ClientMessage> msgs = {
      HelloMsg{"web"}, UtteranceMsg{"How is the weather?", 1.5, 3.25, std::nullopt},
      UtteranceMsg{"hi", std::nullopt, std::nullopt, "UklGRg=="}, ByeMsg{}};
  for (const auto& m : msgs) EXPECT_EQ(decode_client(encode(m)), m);
  EXPECT_EQ(encode(msgs[1]),
            R"({"type":"utterance","text":"How is the weather?","t_start":1.5,"t_end":3.25})");
}

TEST(ProtocolTest, ServerFixtures) {
  EXPECT_EQ(encode(ServerMessage{WelcomeMsg{"s-1", 5.0, 6}}),
            R"({"type":"welcome","session_id":"s-1","config":{"silence_threshold_s":5.0,"block_size_pairs":6}})");
  EXPECT_EQ(encode(ServerMessage{ResponseMsg{ResponseType::kQuestionOnFocus, "Which movie?"}}),
            R"({"type":"response","response_type":"question_on_focus","text":"Which movie?"})");
  EXPECT_EQ(encode(ServerMessage{SilenceWatchMsg{16.0, 1}}),
            R"({"type":"silence_watch","deadline_s":16.0,"stage":1})");
  DiagnosisMsg d;
  d.block_index = 0;
  d.final = DiagnosisDegree::kMild;
  for (auto& p : d.per_classifier) p = {0.25, 0.25, 0.25, 0.25};
  d.votes = {DiagnosisDegree::kSevere, DiagnosisDegree::kMild, DiagnosisDegree::kMild,
             DiagnosisDegree::kNonAD};
  EXPECT_EQ(encode(ServerMessage{d}),
            R"({"type":"diagnosis","block_index":0,"final":"mild","per_classifier":{)"
            R"("audio":[0.25,0.25,0.25,0.25],"language":[0.25,0.25,0.25,0.25],)"
            R"("disfluency":[0.25,0.25,0.25,0.25],"interactivity":[0.25,0.25,0.25,0.25]},)"
            R"("votes":["severe","mild","mild","non_ad"],"tie_broken":false})");
  EXPECT_EQ(encode(ServerMessage{ErrorMsg{kBadMessage, "not valid JSON"}}),
            R"({"type":"error","code":"bad_message","message":"not valid JSON"})");
}

TEST(ProtocolTest, ServerRoundTrip) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    DiagnosisMsg d;
    d.block_index = rng.index(50);
    d.final = kAllDegrees[rng.index(4)];
    for (auto& p : d.per_classifier) {
      std::array<double, 4> raw{};
      for (double& x : raw) x = rng.uniform(0.01, 1.0);
      p = normalize_distribution(raw).values();
    }
    for (auto& v : d.votes) v = kAllDegrees[rng.index(4)];
    d.tie_broken = rng.bernoulli(0.5);
    const ServerMessage m = d;
    EXPECT_EQ(decode_server(encode(m)), m);
    const ServerMessage w = SilenceWatchMsg{rng.uniform(0, 1e4), static_cast<int>(rng.index(4)) + 1};
    EXPECT_EQ(decode_server(encode(w)), w);
  }
}

TEST(ProtocolTest, MalformedInputIsParseError) {
  for (const char* bad : {"", "{", "[]", "42", R"({"text":"x"})", R"({"type":"nope"})",
                          R"({"type":"utterance"})", R"({"type":"utterance","text":5})",
                          R"({"type":"utterance","text":"x","t_end":"soon"})",
                          R"({"type":"hello","client":3})"}) {
    EXPECT_EQ(code_of([&] { decode_client(bad); }), ErrorCode::kParseError) << bad;
  }
  EXPECT_EQ(code_of([] { decode_server(R"({"type":"response","response_type":"rant","text":""})"); }),
            ErrorCode::kParseError);
}

TEST(ProtocolTest, ToWire) {
  RobotAction a{{ResponseType::kPartialRepeat, "Avengers?"}, DialogueAct::kStatement, 11, 16, 1};
  EXPECT_EQ(to_wire(a), ServerMessage(ResponseMsg{ResponseType::kPartialRepeat, "Avengers?"}));
  EXPECT_EQ(to_wire(SilenceWatch{16.0, 2}), ServerMessage(SilenceWatchMsg{16.0, 2}));
}

TEST(Base64Test, KnownVectorsAndRoundTrip) {
  auto enc = [](std::string s) {
    return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  Rng rng(9);
  for (int n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.index(256));
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
  EXPECT_EQ(code_of([] { base64_decode("abc"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { base64_decode("a$c="); }), ErrorCode::kParseError);
}

}  // namespace
}  // namespace adscreen
