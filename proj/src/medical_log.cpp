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

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include <spdlog/spdlog.h>

#include "adscreen/error.hpp"

namespace adscreen {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kFeatureNames[InteractionalFeatures::kDim] = {
    "turn_length_mean", "floor_control_ratio", "standardized_pause_rate", "phonation_rate",
    "speaking_rate"};

Speaker parse_speaker(const std::string& s) {
  if (s == "human") return Speaker::kHuman;
  if (s == "robot") return Speaker::kRobot;
  throw Error(ErrorCode::kParseError, "unknown speaker '" + s + "'");
}

ordered_json block_json(const BlockRecord& r) {
  ordered_json j;
  j["record"] = "block";
  j["wall_time"] = r.wall_time;
  j["session_id"] = r.session_id;
  j["block_index"] = r.block_index;
  ordered_json turns = ordered_json::array();
  for (const TurnSummary& t : r.turns) {
    ordered_json tj;
    tj["speaker"] = speaker_name(t.speaker);
    tj["text"] = t.text;
    tj["t_start"] = t.t_start;
    tj["t_end"] = t.t_end;
    tj["response_type"] =
        t.response_type ? ordered_json(response_type_name(*t.response_type)) : ordered_json();
    turns.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns);
  ordered_json per = ordered_json::object();
  ordered_json votes = ordered_json::object();
  for (ClassifierKind k : kAllClassifiers) {
    const auto i = static_cast<std::size_t>(k);
    per[std::string(classifier_name(k))] = r.distributions[i].values();
    votes[std::string(classifier_name(k))] = degree_name(r.votes[i]);
  }
  j["per_classifier"] = std::move(per);
  j["votes"] = std::move(votes);
  j["final"] = degree_name(r.final);
  j["tie_broken"] = r.tie_broken;
  const Eigen::VectorXd f = r.features.as_vector();
  ordered_json feats;
  for (std::size_t i = 0; i < InteractionalFeatures::kDim; ++i) feats[kFeatureNames[i]] = f[static_cast<Eigen::Index>(i)];
  j["features"] = std::move(feats);
  j["disfluencies"] = {{"restart", r.disfluencies.restart},
                       {"repetition", r.disfluencies.repetition},
                       {"correction", r.disfluencies.correction},
                       {"filler", r.disfluencies.filler}};
  j["breakdown"] = r.breakdown;
  return j;
}

ordered_json summary_json(const SessionSummaryRecord& r) {
  ordered_json j;
  j["record"] = "session_summary";
  j["wall_time"] = r.wall_time;
  j["session_id"] = r.session_id;
  j["pairs"] = r.pairs;
  ordered_json finals = ordered_json::array();
  for (DiagnosisDegree d : r.finals) finals.push_back(degree_name(d));
  j["finals"] = std::move(finals);
  j["breakdown"] = r.breakdown;
  return j;
}

BlockRecord block_from_json(const json& j) {
  BlockRecord r;
  r.wall_time = j.at("wall_time").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.block_index = j.at("block_index").get<std::size_t>();
  for (const json& t : j.at("turns")) {
    TurnSummary s;
    s.speaker = parse_speaker(t.at("speaker").get<std::string>());
    s.text = t.at("text").get<std::string>();
    s.t_start = t.at("t_start").get<double>();
    s.t_end = t.at("t_end").get<double>();
    const json& rt = t.at("response_type");
    if (!rt.is_null()) s.response_type = parse_response_type(rt.get<std::string>());
    r.turns.push_back(std::move(s));
  }
  for (ClassifierKind k : kAllClassifiers) {
    const auto i = static_cast<std::size_t>(k);
    const std::string name(classifier_name(k));
    r.distributions[i] = DegreeDistribution::from_probabilities(
        j.at("per_classifier").at(name).get<std::array<double, kNumDegrees>>());
    r.votes[i] = parse_degree(j.at("votes").at(name).get<std::string>());
  }
  r.final = parse_degree(j.at("final").get<std::string>());
  r.tie_broken = j.at("tie_broken").get<bool>();
  const json& f = j.at("features");
  r.features.turn_length_mean = f.at(kFeatureNames[0]).get<double>();
  r.features.floor_control_ratio = f.at(kFeatureNames[1]).get<double>();
  r.features.standardized_pause_rate = f.at(kFeatureNames[2]).get<double>();
  r.features.phonation_rate = f.at(kFeatureNames[3]).get<double>();
  r.features.speaking_rate = f.at(kFeatureNames[4]).get<double>();
  const json& d = j.at("disfluencies");
  r.disfluencies = {d.at("restart").get<int>(), d.at("repetition").get<int>(),
                    d.at("correction").get<int>(), d.at("filler").get<int>()};
  r.breakdown = j.at("breakdown").get<bool>();
  return r;
}

SessionSummaryRecord summary_from_json(const json& j) {
  SessionSummaryRecord r;
  r.wall_time = j.at("wall_time").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.pairs = j.at("pairs").get<std::size_t>();
  for (const json& d : j.at("finals")) r.finals.push_back(parse_degree(d.get<std::string>()));
  r.breakdown = j.at("breakdown").get<bool>();
  return r;
}

}  // namespace

ordered_json record_to_json(const MedicalLogRecord& record) {
  if (const auto* b = std::get_if<BlockRecord>(&record)) return block_json(*b);
  return summary_json(std::get<SessionSummaryRecord>(record));
}

MedicalLogRecord record_from_json(const json& j) {
  try {
    const std::string kind = j.at("record").get<std::string>();
    if (kind == "block") return block_from_json(j);
    if (kind == "session_summary") return summary_from_json(j);
    throw Error(ErrorCode::kParseError, "unknown record kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("medical log record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    throw Error(ErrorCode::kParseError, std::string("medical log record: ") + e.what());
  }
}

std::string serialize_record(const MedicalLogRecord& record) {
  return record_to_json(record).dump();
}

MedicalLogRecord parse_record(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kParseError, "medical log line is not a JSON object");
  }
  return record_from_json(j);
}

void append_medical_log(const std::filesystem::path& path, const MedicalLogRecord& record) {
  const std::string line = serialize_record(record) + '\n';
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  const ssize_t n = ::write(fd, line.data(), line.size());
  const int err = errno;
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size())) {
    throw Error(ErrorCode::kIoError, "short write to " + path.string() + ": " +
                                         (n < 0 ? std::strerror(err) : "partial line"));
  }
}

std::vector<MedicalLogRecord> read_medical_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<MedicalLogRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

MedicalLogWriter::MedicalLogWriter(std::filesystem::path path)
    : path_(std::move(path)), worker_([this] { run(); }) {}

MedicalLogWriter::~MedicalLogWriter() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void MedicalLogWriter::push(MedicalLogRecord record) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(record));
  }
  cv_.notify_one();
}

void MedicalLogWriter::flush() {
  std::unique_lock lock(mu_);
  drained_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

void MedicalLogWriter::run() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) break;  // stop requested and nothing left
    MedicalLogRecord r = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    try {
      append_medical_log(path_, r);
    } catch (const Error& e) {
      spdlog::error("medical log: {}", e.what());
    }
    lock.lock();
    busy_ = false;
    if (queue_.empty()) drained_.notify_all();
  }
  drained_.notify_all();
}

}  // namespace adscreen
