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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "adscreen/listener.hpp"

namespace adscreen {

// Service configuration. Paths are resolved against the directory of the
// config file they came from.
struct ServiceConfig {
  int port = 8765;
  double silence_threshold_s = 5.0;
  std::size_t block_size_pairs = kPairsPerBlock;
  double wh_threshold = 1e-4;
  std::filesystem::path qa_db = "qa.json";
  std::filesystem::path topics = "topics.txt";
  std::filesystem::path formulaic = "formulaic.txt";
  std::filesystem::path ngram_corpus = "ngram_corpus.txt";
  std::filesystem::path embeddings;         // optional
  std::filesystem::path models_dir;         // empty: untrained models
  std::filesystem::path medical_log = "medical_log.jsonl";
  std::filesystem::path external_features;  // optional CSV
  double vad_threshold_db = -40.0;
  double pause_min_s = 0.25;
  double typing_rate_wpm = 150.0;
  double robot_wpm = 150.0;
  int breakdown_after = 5;

  // Throws kConfigError.
  void validate() const;
  ListenerConfig listener_config() const;
};

// Prefix of environment overrides: ADSCREEN_PORT, ADSCREEN_SILENCE_THRESHOLD_S,
// ... (upper-cased key names).
inline constexpr const char* kEnvPrefix = "ADSCREEN_";

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// JSON object with the ServiceConfig keys; unknown keys are rejected.
// Throws kIoError when unreadable; bad content raises kParseError or kConfigError.
ServiceConfig load_service_config(const std::filesystem::path& path,
                                  const EnvLookup& env = process_env);
ServiceConfig parse_service_config(const std::string& json_text,
                                   const std::filesystem::path& base_dir,
                                   const EnvLookup& env = process_env);

}  // namespace adscreen
