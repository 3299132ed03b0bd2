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

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "adscreen/config.hpp"
#include "adscreen/detectors.hpp"
#include "adscreen/listener.hpp"
#include "adscreen/medical_log.hpp"
#include "adscreen/protocol.hpp"
#include "adscreen/session.hpp"

namespace adscreen {

// Everything a live session needs, loaded once and shared read-only.
struct ServiceResources {
  ServiceConfig config;
  ListenerResources listener;
  DetectorModels models;
  std::optional<ExternalFeatures> external;

  SessionOptions session_options() const;
};

// Untrained models when config.models_dir is empty. A dialogue-act tagger is
// picked up from models_dir/dialogue_act.model when present.
ServiceResources load_service_resources(const ServiceConfig& config);

// One TCP port. A connection whose first bytes are "GET " is upgraded to a
// WebSocket carrying one message per text frame; any other connection speaks
// newline-delimited JSON. Each connection is one session with its own strand
// and silence timer.
class Server {
 public:
  // port 0 picks a free port. Throws kBindError.
  Server(const ServiceResources& resources, MedicalLogWriter& log, std::uint16_t port,
         const std::string& address = "127.0.0.1");
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  // Runs the event loop on `threads` background threads.
  void start(unsigned threads = 2);
  // Blocks the calling thread until stop() is called from elsewhere.
  void run(unsigned threads = 2);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocking newline-delimited JSON client, for tests and the terminal REPL.
class LineClient {
 public:
  // Throws kIoError when the connection fails.
  LineClient(const std::string& host, std::uint16_t port);
  ~LineClient();

  void send(const ClientMessage& m);
  // Sends raw bytes; the caller adds the newline.
  void send_raw(const std::string& bytes);
  // Next message, or nullopt on timeout or connection close. Throws
  // kParseError on a malformed server line.
  std::optional<ServerMessage> receive(std::chrono::milliseconds timeout);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adscreen
