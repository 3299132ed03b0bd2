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

#include "adscreen/medical_log.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <thread>

#include "adscreen/error.hpp"
#include "test_util.hpp"

namespace adscreen {
namespace {

using testing::code_of;
using testing::TempDir;

BlockRecord sample_block(const std::string& sid, std::size_t index) {
  BlockRecord r;
  r.wall_time = "2026-01-02T03:04:05.678Z";
  r.session_id = sid;
  r.block_index = index;
  r.turns = {{Speaker::kHuman, "How is the weather?", 0.0, 2.0, std::nullopt},
             {Speaker::kRobot, "It's raining outside.", 2.0, 3.2, ResponseType::kAnswer},
             {Speaker::kHuman, "", 8.2, 8.2, std::nullopt},
             {Speaker::kRobot, "Do you like \"music\"?", 8.2, 9.9, ResponseType::kTopicIntroduction}};
  r.distributions[0] = DegreeDistribution::from_probabilities({0.1, 0.2, 0.3, 0.4});
  r.distributions[2] = DegreeDistribution::from_probabilities({1.0 / 3, 1.0 / 3, 1.0 / 6, 1.0 / 6});
  r.votes = {DiagnosisDegree::kSevere, DiagnosisDegree::kSevere, DiagnosisDegree::kMild,
             DiagnosisDegree::kNonAD};
  r.final = DiagnosisDegree::kSevere;
  r.tie_broken = true;
  r.features = {10.0, 0.6, 15.0, 0.75, 90.0 + 1e-13};
  r.disfluencies = {1, 2, 0, 4};
  r.breakdown = false;
  return r;
}

SessionSummaryRecord sample_summary(const std::string& sid) {
  return {"2026-01-02T03:05:00.000Z", sid, 12,
          {DiagnosisDegree::kMild, DiagnosisDegree::kModerate}, true};
}

TEST(RecordCodecTest, RoundTrip) {
  const MedicalLogRecord a = sample_block("s1", 3);
  const MedicalLogRecord b = sample_summary("s1");
  EXPECT_EQ(parse_record(serialize_record(a)), a);
  EXPECT_EQ(parse_record(serialize_record(b)), b);
  EXPECT_EQ(serialize_record(a).find('\n'), std::string::npos);
}

TEST(RecordCodecTest, FieldOrderIsFixed) {
  const std::string line = serialize_record(sample_summary("s9"));
  EXPECT_EQ(line,
            R"({"record":"session_summary","wall_time":"2026-01-02T03:05:00.000Z","session_id":"s9",)"
            R"("pairs":12,"finals":["mild","moderate"],"breakdown":true})");
}

TEST(RecordCodecTest, RejectsInvalid) {
  EXPECT_EQ(code_of([] { parse_record("not json"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_record(R"({"record":"other"})"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_record(R"({"record":"session_summary","wall_time":1})"); }),
            ErrorCode::kParseError);
  std::string bad = serialize_record(sample_block("s", 0));
  bad.replace(bad.find("0.4"), 3, "0.9");  // distribution no longer sums to 1
  EXPECT_EQ(code_of([&] { parse_record(bad); }), ErrorCode::kParseError);
}

TEST(AppendTest, TwoAppendsInOrder) {
  TempDir dir("medlog");
  const auto path = dir.path() / "log.jsonl";
  append_medical_log(path, sample_block("a", 0));
  append_medical_log(path, sample_summary("a"));
  const auto recs = read_medical_log(path);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0], MedicalLogRecord(sample_block("a", 0)));
  EXPECT_EQ(recs[1], MedicalLogRecord(sample_summary("a")));
  EXPECT_EQ(code_of([&] { append_medical_log(dir.path() / "no" / "such" / "dir", sample_summary("a")); }),
            ErrorCode::kIoError);
}

TEST(AppendTest, TruncatedTailDoesNotCorruptEarlierLines) {
  TempDir dir("medlog");
  const auto path = dir.path() / "log.jsonl";
  append_medical_log(path, sample_block("a", 0));
  std::ofstream(path, std::ios::app) << R"({"record":"block","wall_ti)";
  try {
    read_medical_log(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(parse_record(first), MedicalLogRecord(sample_block("a", 0)));
}

TEST(AppendTest, ConcurrentAppendersNeverInterleave) {
  TempDir dir("medlog");
  const auto path = dir.path() / "log.jsonl";
  constexpr int kPerThread = 300;
  auto worker = [&](const std::string& sid) {
    for (int i = 0; i < kPerThread; ++i) append_medical_log(path, sample_block(sid, i));
  };
  std::thread t1(worker, "left");
  std::thread t2(worker, "right");
  t1.join();
  t2.join();
  const auto recs = read_medical_log(path);
  ASSERT_EQ(recs.size(), 2u * kPerThread);
  std::map<std::string, std::size_t> next;
  for (const auto& r : recs) {
    const auto& b = std::get<BlockRecord>(r);
    EXPECT_EQ(b.block_index, next[b.session_id]++);  // per-session order kept
  }
}

TEST(WriterTest, QueueDrainsInPushOrder) {
  TempDir dir("medlog");
  const auto path = dir.path() / "log.jsonl";
  {
    MedicalLogWriter w(path);
    std::thread a([&] { for (int i = 0; i < 100; ++i) w.push(sample_block("a", i)); });
    std::thread b([&] { for (int i = 0; i < 100; ++i) w.push(sample_block("b", i)); });
    a.join();
    b.join();
    w.flush();
    EXPECT_EQ(read_medical_log(path).size(), 200u);
    w.push(sample_summary("a"));
  }
  const auto recs = read_medical_log(path);
  ASSERT_EQ(recs.size(), 201u);
  EXPECT_TRUE(std::holds_alternative<SessionSummaryRecord>(recs.back()));
}

}  // namespace
}  // namespace adscreen
