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

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "adscreen/error.hpp"

namespace adscreen {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kParseError, why); }

json parse_object(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) bad("not valid JSON");
  if (!j.is_object()) bad("message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) bad("missing string field 'type'");
  return j;
}

std::string req_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) bad(std::string("missing string field '") + key + "'");
  return j[key].get<std::string>();
}

double req_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) bad(std::string("missing number field '") + key + "'");
  return j[key].get<double>();
}

std::optional<double> opt_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) bad(std::string("field '") + key + "' must be a number");
  return j[key].get<double>();
}

template <typename F>
auto wrap(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    bad(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    bad(e.what());
  }
}

}  // namespace

std::string encode(const ClientMessage& m) {
  ordered_json j;
  if (const auto* h = std::get_if<HelloMsg>(&m)) {
    j["type"] = "hello";
    j["client"] = h->client;
  } else if (const auto* u = std::get_if<UtteranceMsg>(&m)) {
    j["type"] = "utterance";
    j["text"] = u->text;
    if (u->t_start) j["t_start"] = *u->t_start;
    if (u->t_end) j["t_end"] = *u->t_end;
    if (u->audio_b64) j["audio_b64"] = *u->audio_b64;
  } else {
    j["type"] = "bye";
  }
  return j.dump();
}

std::string encode(const ServerMessage& m) {
  ordered_json j;
  if (const auto* w = std::get_if<WelcomeMsg>(&m)) {
    j["type"] = "welcome";
    j["session_id"] = w->session_id;
    j["config"] = {{"silence_threshold_s", w->silence_threshold_s},
                   {"block_size_pairs", w->block_size_pairs}};
  } else if (const auto* r = std::get_if<ResponseMsg>(&m)) {
    j["type"] = "response";
    j["response_type"] = response_type_name(r->response_type);
    j["text"] = r->text;
  } else if (const auto* s = std::get_if<SilenceWatchMsg>(&m)) {
    j["type"] = "silence_watch";
    j["deadline_s"] = s->deadline_s;
    j["stage"] = s->stage;
  } else if (const auto* d = std::get_if<DiagnosisMsg>(&m)) {
    j["type"] = "diagnosis";
    j["block_index"] = d->block_index;
    j["final"] = degree_name(d->final);
    ordered_json per = ordered_json::object();
    for (ClassifierKind k : kAllClassifiers) {
      per[std::string(classifier_name(k))] = d->per_classifier[static_cast<std::size_t>(k)];
    }
    j["per_classifier"] = std::move(per);
    ordered_json votes = ordered_json::array();
    for (DiagnosisDegree v : d->votes) votes.push_back(degree_name(v));
    j["votes"] = std::move(votes);
    j["tie_broken"] = d->tie_broken;
  } else {
    const auto& e = std::get<ErrorMsg>(m);
    j["type"] = "error";
    j["code"] = e.code;
    j["message"] = e.message;
  }
  return j.dump();
}

ClientMessage decode_client(const std::string& line) {
  return wrap([&]() -> ClientMessage {
    const json j = parse_object(line);
    const std::string type = j["type"].get<std::string>();
    if (type == "hello") {
      HelloMsg h;
      if (j.contains("client")) h.client = req_string(j, "client");
      return h;
    }
    if (type == "utterance") {
      UtteranceMsg u;
      u.text = req_string(j, "text");
      u.t_start = opt_number(j, "t_start");
      u.t_end = opt_number(j, "t_end");
      if (j.contains("audio_b64") && !j["audio_b64"].is_null()) u.audio_b64 = req_string(j, "audio_b64");
      return u;
    }
    if (type == "bye") return ByeMsg{};
    bad("unknown message type '" + type + "'");
  });
}

ServerMessage decode_server(const std::string& line) {
  return wrap([&]() -> ServerMessage {
    const json j = parse_object(line);
    const std::string type = j["type"].get<std::string>();
    if (type == "welcome") {
      WelcomeMsg w;
      w.session_id = req_string(j, "session_id");
      if (j.contains("config")) {
        const json& c = j["config"];
        w.silence_threshold_s = c.at("silence_threshold_s").get<double>();
        w.block_size_pairs = c.at("block_size_pairs").get<std::size_t>();
      }
      return w;
    }
    if (type == "response") {
      return ResponseMsg{parse_response_type(req_string(j, "response_type")), req_string(j, "text")};
    }
    if (type == "silence_watch") {
      return SilenceWatchMsg{req_number(j, "deadline_s"), j.at("stage").get<int>()};
    }
    if (type == "diagnosis") {
      DiagnosisMsg d;
      d.block_index = j.at("block_index").get<std::size_t>();
      d.final = parse_degree(req_string(j, "final"));
      for (ClassifierKind k : kAllClassifiers) {
        d.per_classifier[static_cast<std::size_t>(k)] =
            j.at("per_classifier").at(std::string(classifier_name(k))).get<std::array<double, kNumDegrees>>();
      }
      const json& votes = j.at("votes");
      if (!votes.is_array() || votes.size() != kNumClassifiers) bad("votes must list four degrees");
      for (std::size_t i = 0; i < kNumClassifiers; ++i) d.votes[i] = parse_degree(votes[i].get<std::string>());
      d.tie_broken = j.at("tie_broken").get<bool>();
      return d;
    }
    if (type == "error") return ErrorMsg{req_string(j, "code"), req_string(j, "message")};
    bad("unknown message type '" + type + "'");
  });
}

ServerMessage to_wire(const SessionOutput& out) {
  if (const auto* a = std::get_if<RobotAction>(&out)) {
    return ResponseMsg{a->response.type, a->response.text};
  }
  if (const auto* w = std::get_if<SilenceWatch>(&out)) return SilenceWatchMsg{w->deadline_s, w->stage};
  const auto& d = std::get<Diagnosis>(out);
  DiagnosisMsg m;
  m.block_index = d.block_index;
  m.final = d.verdict.final;
  for (std::size_t i = 0; i < kNumClassifiers; ++i) {
    m.per_classifier[i] = d.verdict.distributions[i].values();
  }
  m.votes = d.verdict.votes;
  m.tie_broken = d.verdict.tie_broken;
  return m;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) bad("base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) bad("invalid base64");
  // EVP_DecodeBlock keeps the bytes produced by '=' padding; drop them.
  std::size_t size = static_cast<std::size_t>(n);
  if (!text.empty() && text.back() == '=') --size;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --size;
  out.resize(size);
  return out;
}

}  // namespace adscreen
