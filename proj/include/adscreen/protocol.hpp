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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "adscreen/session.hpp"

namespace adscreen {

// Client to server.
struct HelloMsg {
  std::string client;
  bool operator==(const HelloMsg&) const = default;
};
struct UtteranceMsg {
  std::string text;
  std::optional<double> t_start;
  std::optional<double> t_end;
  std::optional<std::string> audio_b64;  // base64 of a WAV file
  bool operator==(const UtteranceMsg&) const = default;
};
struct ByeMsg {
  bool operator==(const ByeMsg&) const = default;
};
using ClientMessage = std::variant<HelloMsg, UtteranceMsg, ByeMsg>;

// Server to client.
struct WelcomeMsg {
  std::string session_id;
  double silence_threshold_s = 5.0;
  std::size_t block_size_pairs = kPairsPerBlock;
  bool operator==(const WelcomeMsg&) const = default;
};
struct ResponseMsg {
  ResponseType response_type = ResponseType::kFormulaicResponse;
  std::string text;
  bool operator==(const ResponseMsg&) const = default;
};
struct SilenceWatchMsg {
  double deadline_s = 0.0;
  int stage = 1;
  bool operator==(const SilenceWatchMsg&) const = default;
};
struct DiagnosisMsg {
  std::size_t block_index = 0;
  DiagnosisDegree final = DiagnosisDegree::kNonAD;
  std::array<std::array<double, kNumDegrees>, kNumClassifiers> per_classifier{};
  std::array<DiagnosisDegree, kNumClassifiers> votes{};
  bool tie_broken = false;
  bool operator==(const DiagnosisMsg&) const = default;
};
struct ErrorMsg {
  std::string code;
  std::string message;
  bool operator==(const ErrorMsg&) const = default;
};
using ServerMessage = std::variant<WelcomeMsg, ResponseMsg, SilenceWatchMsg, DiagnosisMsg, ErrorMsg>;

// Error codes sent on the wire.
inline constexpr const char* kBadMessage = "bad_message";
inline constexpr const char* kProtocolError = "protocol_violation";
inline constexpr const char* kInternalError = "internal";

// Single-line JSON, no trailing newline. Keys appear in a fixed order so the
// same message always encodes to the same bytes.
std::string encode(const ClientMessage& m);
std::string encode(const ServerMessage& m);
// Throw kParseError on malformed JSON, unknown types or bad fields.
ClientMessage decode_client(const std::string& line);
ServerMessage decode_server(const std::string& line);

// Server message for a runner output.
ServerMessage to_wire(const SessionOutput& out);

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws kParseError on invalid input.
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace adscreen
