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

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "adscreen/session.hpp"

namespace adscreen {

// One JSON object per line. Block records carry "record":"block", session
// summaries "record":"session_summary"; keys are written in a fixed order.
nlohmann::ordered_json record_to_json(const MedicalLogRecord& record);
// Throws kParseError when a field is missing or has the wrong type.
MedicalLogRecord record_from_json(const nlohmann::json& j);

std::string serialize_record(const MedicalLogRecord& record);  // no newline
MedicalLogRecord parse_record(const std::string& line);

// Appends serialize_record(record) + '\n' with a single write on a file
// opened in append mode, so concurrent appenders never split a line.
// Throws kIoError.
void append_medical_log(const std::filesystem::path& path, const MedicalLogRecord& record);

// Throws kIoError, or kParseError naming the offending line.
std::vector<MedicalLogRecord> read_medical_log(const std::filesystem::path& path);

// Single background writer fed by a queue; sessions on any thread push.
class MedicalLogWriter {
 public:
  explicit MedicalLogWriter(std::filesystem::path path);
  ~MedicalLogWriter();  // drains the queue

  MedicalLogWriter(const MedicalLogWriter&) = delete;
  MedicalLogWriter& operator=(const MedicalLogWriter&) = delete;

  void push(MedicalLogRecord record);
  // Blocks until everything pushed so far is on disk.
  void flush();
  const std::filesystem::path& path() const { return path_; }

 private:
  void run();

  std::filesystem::path path_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable drained_;
  std::deque<MedicalLogRecord> queue_;
  bool busy_ = false;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace adscreen
