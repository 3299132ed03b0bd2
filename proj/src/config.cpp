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

#include "adscreen/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "adscreen/error.hpp"

namespace adscreen {
namespace {

using nlohmann::json;

// Each key knows how to read itself from JSON and from an environment string.
struct Field {
  const char* key;
  std::function<void(ServiceConfig&, const json&)> from_json;
};

template <typename T>
Field field(const char* key, T ServiceConfig::*member) {
  return {key, [member](ServiceConfig& c, const json& v) { c.*member = v.get<T>(); }};
}

Field path_field(const char* key, std::filesystem::path ServiceConfig::*member) {
  return {key, [member](ServiceConfig& c, const json& v) {
            c.*member = std::filesystem::path(v.get<std::string>());
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      field("port", &ServiceConfig::port),
      field("silence_threshold_s", &ServiceConfig::silence_threshold_s),
      field("block_size_pairs", &ServiceConfig::block_size_pairs),
      field("wh_threshold", &ServiceConfig::wh_threshold),
      path_field("qa_db", &ServiceConfig::qa_db),
      path_field("topics", &ServiceConfig::topics),
      path_field("formulaic", &ServiceConfig::formulaic),
      path_field("ngram_corpus", &ServiceConfig::ngram_corpus),
      path_field("embeddings", &ServiceConfig::embeddings),
      path_field("models_dir", &ServiceConfig::models_dir),
      path_field("medical_log", &ServiceConfig::medical_log),
      path_field("external_features", &ServiceConfig::external_features),
      field("vad_threshold_db", &ServiceConfig::vad_threshold_db),
      field("pause_min_s", &ServiceConfig::pause_min_s),
      field("typing_rate_wpm", &ServiceConfig::typing_rate_wpm),
      field("robot_wpm", &ServiceConfig::robot_wpm),
      field("breakdown_after", &ServiceConfig::breakdown_after),
  };
  return f;
}

std::string env_name(const char* key) {
  std::string name = kEnvPrefix;
  for (const char* p = key; *p; ++p) name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
  return name;
}

// Environment values are JSON scalars when they parse as such, else strings.
json env_value(const std::string& raw) {
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded() || v.is_structured()) return raw;
  return v;
}

void resolve(std::filesystem::path& p, const std::filesystem::path& base) {
  if (!p.empty() && p.is_relative()) p = base / p;
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw Error(ErrorCode::kConfigError, "port out of range");
  if (block_size_pairs == 0) throw Error(ErrorCode::kConfigError, "block_size_pairs must be > 0");
  if (!(pause_min_s >= 0)) throw Error(ErrorCode::kConfigError, "pause_min_s must be >= 0");
  if (!(typing_rate_wpm > 0) || !(robot_wpm > 0)) {
    throw Error(ErrorCode::kConfigError, "speech rates must be > 0");
  }
  listener_config().validate();
}

ListenerConfig ServiceConfig::listener_config() const {
  ListenerConfig c;
  c.silence_threshold_s = silence_threshold_s;
  c.wh_threshold = wh_threshold;
  c.breakdown_after = breakdown_after;
  return c;
}

ServiceConfig parse_service_config(const std::string& json_text,
                                   const std::filesystem::path& base_dir, const EnvLookup& env) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  ServiceConfig c;
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const Field& f : fields()) known = known || key == f.key;
    if (!known) throw Error(ErrorCode::kConfigError, "unknown config key '" + key + "'");
  }
  for (const Field& f : fields()) {
    try {
      if (j.contains(f.key)) f.from_json(c, j.at(f.key));
      if (env) {
        if (auto raw = env(env_name(f.key))) f.from_json(c, env_value(*raw));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfigError, std::string("config key ") + f.key + ": " + e.what());
    }
  }
  for (auto* p : {&c.qa_db, &c.topics, &c.formulaic, &c.ngram_corpus, &c.embeddings,
                  &c.models_dir, &c.medical_log, &c.external_features}) {
    resolve(*p, base_dir);
  }
  c.validate();
  if (c.block_size_pairs != kPairsPerBlock) {
    spdlog::warn("non-standard block size of {} turn pairs", c.block_size_pairs);
  }
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_service_config(ss.str(), path.parent_path(), env);
}

}  // namespace adscreen
