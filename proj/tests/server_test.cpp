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

#include "adscreen/server.hpp"

#include <gtest/gtest.h>

#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "adscreen/error.hpp"
#include "test_util.hpp"

namespace adscreen {
namespace {

using namespace std::chrono_literals;
using testing::code_of;
using testing::data_dir;
using testing::TempDir;

// Short silence threshold so the proactive prompts arrive quickly.
constexpr double kThreshold = 0.3;

const ServiceResources& resources() {
  static const ServiceResources res = [] {
    ServiceConfig c;
    c.qa_db = data_dir() / "qa.json";
    c.topics = data_dir() / "topics.txt";
    c.formulaic = data_dir() / "formulaic.txt";
    c.ngram_corpus = data_dir() / "ngram_corpus.txt";
    c.silence_threshold_s = kThreshold;
    return load_service_resources(c);
  }();
  return res;
}

template <typename T>
T expect(LineClient& c, std::chrono::milliseconds timeout = 3000ms) {
  auto m = c.receive(timeout);
  if (!m) throw std::runtime_error("no message from server");
  if (!std::holds_alternative<T>(*m)) throw std::runtime_error("unexpected message: " + encode(*m));
  return std::get<T>(*m);
}

// Waits for the next robot response, skipping silence watches.
ResponseMsg next_response(LineClient& c) {
  for (;;) {
    auto m = c.receive(3000ms);
    if (!m) throw std::runtime_error("no response from server");
    if (auto* r = std::get_if<ResponseMsg>(&*m)) return *r;
    if (!std::holds_alternative<SilenceWatchMsg>(*m)) {
      throw std::runtime_error("unexpected message: " + encode(*m));
    }
  }
}

struct ScriptResult {
  std::string session_id;
  std::vector<ResponseMsg> responses;
  std::vector<DiagnosisMsg> diagnoses;
};

ScriptResult reference_dialogue_over_the_wire(std::uint16_t port) {
  LineClient c("127.0.0.1", port);
  ScriptResult out;
  c.send(HelloMsg{"test"});
  out.session_id = expect<WelcomeMsg>(c).session_id;
  expect<SilenceWatchMsg>(c);
  for (const char* text : {"How is the weather?", "OK, I'll watch a movie then.",
                           "Avengers, the newest one."}) {
    c.send(UtteranceMsg{text, std::nullopt, std::nullopt, std::nullopt});
    out.responses.push_back(next_response(c));
  }
  // Stay silent through two expiries.
  out.responses.push_back(next_response(c));
  out.responses.push_back(next_response(c));
  c.send(UtteranceMsg{"Yes, I like.", std::nullopt, std::nullopt, std::nullopt});
  out.responses.push_back(next_response(c));
  c.send(ByeMsg{});
  while (auto m = c.receive(3000ms)) {
    if (auto* d = std::get_if<DiagnosisMsg>(&*m)) out.diagnoses.push_back(*d);
  }
  return out;
}

const std::vector<ResponseMsg> kReferenceDialogue = {
    {ResponseType::kAnswer, "It's raining outside."},
    {ResponseType::kQuestionOnFocus, "Which movie?"},
    {ResponseType::kPartialRepeat, "Avengers?"},
    {ResponseType::kFollowUpQuestion, "What's your favorite movie?"},
    {ResponseType::kTopicIntroduction, "Do you like music?"},
    {ResponseType::kFormulaicResponse, "That's good."},
};

TEST(ServerTest, HandshakeAndMalformedLines) {
  TempDir dir("server");
  MedicalLogWriter log(dir.path() / "log.jsonl");
  Server server(resources(), log, 0);
  server.start(2);
  LineClient c("127.0.0.1", server.port());

  c.send(UtteranceMsg{"hello", std::nullopt, std::nullopt, std::nullopt});
  EXPECT_EQ(expect<ErrorMsg>(c).code, kProtocolError);

  c.send(HelloMsg{"test"});
  const WelcomeMsg w = expect<WelcomeMsg>(c);
  EXPECT_FALSE(w.session_id.empty());
  EXPECT_EQ(w.silence_threshold_s, kThreshold);
  EXPECT_EQ(w.block_size_pairs, 6u);
  EXPECT_EQ(expect<SilenceWatchMsg>(c), (SilenceWatchMsg{kThreshold, 1}));

  c.send_raw("{this is not json\n");
  EXPECT_EQ(expect<ErrorMsg>(c).code, kBadMessage);
  c.send_raw(R"({"type":"utterance","text":42})" "\n");
  EXPECT_EQ(expect<ErrorMsg>(c).code, kBadMessage);
  c.send_raw(R"({"type":"utterance","text":"hi","audio_b64":"!!!!"})" "\n");
  EXPECT_EQ(expect<ErrorMsg>(c).code, kBadMessage);
  c.send(HelloMsg{"again"});
  EXPECT_EQ(expect<ErrorMsg>(c).code, kProtocolError);

  // Still alive.
  c.send(UtteranceMsg{"How is the weather?", std::nullopt, std::nullopt, std::nullopt});
  EXPECT_EQ(next_response(c), kReferenceDialogue[0]);
}

TEST(ServerTest, TwoConcurrentClientsAndIntactLog) {
  TempDir dir("server");
  const auto log_path = dir.path() / "log.jsonl";
  {
    MedicalLogWriter log(log_path);
    Server server(resources(), log, 0);
    server.start(2);
    ScriptResult a, b;
    std::thread ta([&] { a = reference_dialogue_over_the_wire(server.port()); });
    std::thread tb([&] { b = reference_dialogue_over_the_wire(server.port()); });
    ta.join();
    tb.join();
    EXPECT_NE(a.session_id, b.session_id);
    EXPECT_EQ(a.responses, kReferenceDialogue);
    EXPECT_EQ(b.responses, kReferenceDialogue);
    ASSERT_EQ(a.diagnoses.size(), 1u);
    ASSERT_EQ(b.diagnoses.size(), 1u);
    server.stop();
    log.flush();
  }
  const auto records = read_medical_log(log_path);
  ASSERT_EQ(records.size(), 4u);
  std::map<std::string, int> blocks, summaries;
  for (const auto& r : records) {
    if (const auto* blk = std::get_if<BlockRecord>(&r)) {
      ++blocks[blk->session_id];
      EXPECT_EQ(blk->turns.size(), 12u);
    } else {
      ++summaries[std::get<SessionSummaryRecord>(r).session_id];
    }
  }
  EXPECT_EQ(blocks.size(), 2u);
  for (const auto& [sid, n] : blocks) {
    EXPECT_EQ(n, 1);
    EXPECT_EQ(summaries[sid], 1);
  }
}

TEST(ServerTest, WebSocketTransport) {
  namespace net = boost::asio;
  namespace beast = boost::beast;
  TempDir dir("server");
  MedicalLogWriter log(dir.path() / "log.jsonl");
  Server server(resources(), log, 0);
  server.start(1);

  net::io_context ioc;
  net::ip::tcp::socket sock(ioc);
  sock.connect({net::ip::make_address("127.0.0.1"), server.port()});
  beast::websocket::stream<net::ip::tcp::socket> ws(std::move(sock));
  ws.handshake("127.0.0.1", "/");
  ws.text(true);
  auto read = [&] {
    beast::flat_buffer buf;
    ws.read(buf);
    return decode_server(beast::buffers_to_string(buf.data()));
  };
  ws.write(net::buffer(encode(ClientMessage{HelloMsg{"browser"}})));
  EXPECT_TRUE(std::holds_alternative<WelcomeMsg>(read()));
  EXPECT_TRUE(std::holds_alternative<SilenceWatchMsg>(read()));
  ws.write(net::buffer(std::string("nonsense")));
  EXPECT_EQ(std::get<ErrorMsg>(read()).code, kBadMessage);
  ws.write(net::buffer(encode(ClientMessage{UtteranceMsg{"How is the weather?", 0.0, 1.0, std::nullopt}})));
  EXPECT_EQ(read(), ServerMessage(kReferenceDialogue[0]));
  ws.write(net::buffer(encode(ClientMessage{ByeMsg{}})));
  // Drain until the server closes.
  beast::error_code ec;
  for (int i = 0; i < 10 && !ec; ++i) {
    beast::flat_buffer buf;
    ws.read(buf, ec);
  }
  EXPECT_EQ(ec, beast::websocket::error::closed);
}

TEST(ServerTest, SilencePromptsFollowTheRealClock) {
  TempDir dir("server");
  MedicalLogWriter log(dir.path() / "log.jsonl");
  Server server(resources(), log, 0);
  server.start(1);
  LineClient c("127.0.0.1", server.port());
  const auto t0 = std::chrono::steady_clock::now();
  c.send(HelloMsg{"clock"});
  expect<WelcomeMsg>(c);
  expect<SilenceWatchMsg>(c);
  EXPECT_EQ(expect<ResponseMsg>(c).response_type, ResponseType::kFollowUpQuestion);
  EXPECT_GE(std::chrono::steady_clock::now() - t0, 290ms);
  EXPECT_EQ(expect<SilenceWatchMsg>(c).stage, 2);
  EXPECT_EQ(expect<ResponseMsg>(c).response_type, ResponseType::kTopicIntroduction);
}

TEST(ServerTest, BindErrorOnBusyPort) {
  TempDir dir("server");
  MedicalLogWriter log(dir.path() / "log.jsonl");
  Server first(resources(), log, 0);
  EXPECT_EQ(code_of([&] { Server second(resources(), log, first.port()); }), ErrorCode::kBindError);
  EXPECT_EQ(code_of([&] { Server bad(resources(), log, 0, "not-an-address"); }), ErrorCode::kBindError);
}

TEST(ClientTest, ConnectFailureIsIoError) {
  std::uint16_t port = 0;
  {
    boost::asio::io_context ioc;
    boost::asio::ip::tcp::acceptor a(ioc, {boost::asio::ip::make_address("127.0.0.1"), 0});
    port = a.local_endpoint().port();
  }
  EXPECT_EQ(code_of([&] { LineClient c("127.0.0.1", port); }), ErrorCode::kIoError);
}

}  // namespace
}  // namespace adscreen
