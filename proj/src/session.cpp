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

#include "adscreen/session.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adscreen/error.hpp"

namespace adscreen {

Utterance assign_times(const UserUtteranceIn& in, double arrival_clock, double typing_rate_wpm) {
  const double t_end = in.t_end.value_or(arrival_clock);
  double t_start = 0.0;
  if (in.t_start) {
    t_start = *in.t_start;
  } else {
    const double words = static_cast<double>(tokenize(in.text).size());
    t_start = t_end - std::max(0.5, words / (typing_rate_wpm / 60.0));
  }
  return make_utterance(Speaker::kHuman, in.text, t_start, t_end);
}

std::string format_iso8601(double unix_seconds) {
  const auto ms_total = static_cast<long long>(std::llround(unix_seconds * 1000.0));
  long long secs = ms_total / 1000;
  long long ms = ms_total % 1000;
  if (ms < 0) {
    ms += 1000;
    --secs;
  }
  const std::time_t tt = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03lldZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
  return buf;
}

std::string utterance_id(const std::string& session_id, std::size_t pair_index) {
  return session_id + "/" + std::to_string(pair_index);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

ExternalFeatures load_external_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    dim = split_csv(line).size();
    break;
  }
  if (dim < 2) throw Error(ErrorCode::kParseError, path.string() + ": missing header row");
  --dim;
  ExternalFeatures out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != dim + 1) {
      throw Error(ErrorCode::kParseError, where + ": expected " + std::to_string(dim) +
                                              " values, got " + std::to_string(cells.size() - 1));
    }
    if (cells[0].empty()) throw Error(ErrorCode::kParseError, where + ": empty utterance id");
    AcousticFeatureVector v;
    v.values.reserve(dim);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      double x = 0.0;
      const char* b = cells[i].data();
      const char* e = b + cells[i].size();
      auto [p, ec] = std::from_chars(b, e, x);
      if (ec != std::errc() || p != e || !std::isfinite(x)) {
        throw Error(ErrorCode::kParseError, where + ": bad number '" + cells[i] + "'");
      }
      v.values.push_back(x);
    }
    if (out.contains(cells[0])) {
      spdlog::warn("{}: duplicate utterance id '{}', keeping the later row", where, cells[0]);
    }
    out[cells[0]] = std::move(v);
  }
  return out;
}

std::vector<TimeSpan> block_pauses(const DialogueBlock& block,
                                   std::span<const UtteranceSignals> signals,
                                   double pause_min_s, double silence_threshold_s,
                                   double vad_threshold_db) {
  std::vector<TimeSpan> out;
  for (std::size_t i = 0; i < block.pairs.size(); ++i) {
    const Utterance& h = block.pairs[i].human;
    if (h.is_silence()) continue;
    const UtteranceSignals* s = signals.empty() ? nullptr : &signals[i];
    if (s && s->analysis) {
      for (const TimeSpan& p : detect_pauses(*s->analysis, pause_min_s, vad_threshold_db)) {
        out.push_back({h.t_start + p.start_s, h.t_start + p.end_s});
      }
    } else if (i > 0) {
      const double prev_end = block.pairs[i - 1].robot.t_end;
      const double gap = h.t_start - prev_end;
      if (gap >= pause_min_s && gap < silence_threshold_s) out.push_back({prev_end, h.t_start});
    }
  }
  return out;
}

UtteranceSignals analyse_utterance(const Utterance& human, const std::optional<AudioBuffer>& audio,
                                   const AcousticFeatureVector* external, double vad_threshold_db) {
  UtteranceSignals s;
  ProsodyConfig cfg;
  cfg.vad_threshold_db = vad_threshold_db;
  if (audio) {
    try {
      s.analysis = extract_acoustic_vector(*audio, FrameSpec{}, cfg);
      Sequence frames;
      for (const auto& seg : acoustic_segments(*audio, 0.5, FrameSpec{}, cfg)) {
        frames.push_back(Eigen::Map<const Eigen::VectorXd>(seg.values.data(),
                                                           static_cast<Eigen::Index>(seg.dim())));
      }
      s.audio_frames = std::move(frames);
      s.token_spans = uniform_token_spans(human.tokens.size(), audio->duration_s());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooShort) throw;
      s = UtteranceSignals{};
    }
  }
  if (external) {
    s.audio_frames = Sequence{Eigen::Map<const Eigen::VectorXd>(
        external->values.data(), static_cast<Eigen::Index>(external->dim()))};
  }
  return s;
}

// ---------------------------------------------------------------------------

SessionRunner::SessionRunner(const ListenerResources& listener, const DetectorModels& models,
                             SessionOptions options, const ExternalFeatures* external)
    : listener_(listener), models_(models), options_(options), external_(external) {
  if (options_.block_size == 0) throw Error(ErrorCode::kConfigError, "block size must be > 0");
  session_.block_size = options_.block_size;
  if (external_) {
    for (const auto& [id, v] : *external_) {
      if (v.dim() != models_.audio.input_dim()) {
        throw Error(ErrorCode::kDimMismatch,
                    "external features of '" + id + "' have dim " + std::to_string(v.dim()) +
                        ", the audio model expects " + std::to_string(models_.audio.input_dim()));
      }
    }
  }
}

std::optional<double> SessionRunner::silence_deadline() const {
  if (ended_ || state_.unanswered_prompts >= listener_.config.breakdown_after) return std::nullopt;
  return state_.silence_deadline;
}

std::string SessionRunner::wall_time(double t) const {
  return format_iso8601(session_.clock_origin + t);
}

void SessionRunner::advance(double t) {
  if (t < now_) {
    throw Error(ErrorCode::kProtocolViolation,
                "event at " + std::to_string(t) + " precedes session time " + std::to_string(now_));
  }
  now_ = t;
}

StepOutput SessionRunner::handle(const SessionEvent& event) {
  StepOutput out;
  if (ended_) throw Error(ErrorCode::kProtocolViolation, "event after session end");
  if (const auto* s = std::get_if<SessionStart>(&event)) {
    if (started_) throw Error(ErrorCode::kProtocolViolation, "session already started");
    on_start(*s, out);
    return out;
  }
  if (!started_) throw Error(ErrorCode::kProtocolViolation, "event before session start");
  if (const auto* u = std::get_if<UserUtteranceIn>(&event)) {
    on_utterance(*u, out);
  } else if (const auto* t = std::get_if<Tick>(&event)) {
    advance(t->now);
    fire_expiries_until(t->now, out);
  } else {
    const double end = std::get<SessionEnd>(event).time;
    advance(end);
    fire_expiries_until(end, out);
    finalize_pending(std::nullopt, out);
    SessionSummaryRecord summary{wall_time(end), session_.session_id, session_.pairs.size(),
                                 finals_, state_.breakdown};
    out.records.emplace_back(std::move(summary));
    ended_ = true;
  }
  return out;
}

void SessionRunner::on_start(const SessionStart& e, StepOutput& out) {
  if (e.session_id.empty()) throw Error(ErrorCode::kProtocolViolation, "empty session id");
  started_ = true;
  session_.session_id = e.session_id;
  session_.clock_origin = e.wall_origin;
  now_ = e.time;
  state_.now = e.time;
  state_.silence_deadline = e.time + listener_.config.silence_threshold_s;
  out.messages.emplace_back(SilenceWatch{*state_.silence_deadline, 1});
}

void SessionRunner::fire_expiries_until(double t, StepOutput& out) {
  // After breakdown_after unanswered prompts the robot stops prompting until
  // the user speaks again.
  while (state_.silence_deadline && *state_.silence_deadline <= t &&
         state_.unanswered_prompts < listener_.config.breakdown_after) {
    const double deadline = *state_.silence_deadline;
    finalize_pending(deadline, out);
    respond(make_silence_turn(deadline), UtteranceSignals{}, TimerExpiredEvent{deadline}, out);
  }
}

void SessionRunner::on_utterance(const UserUtteranceIn& e, StepOutput& out) {
  if (tokenize(e.text).empty()) throw Error(ErrorCode::kProtocolViolation, "utterance has no words");
  Utterance human = assign_times(e, e.arrival, options_.typing_rate_wpm);
  if (human.t_end < now_) {
    throw Error(ErrorCode::kProtocolViolation,
                "utterance ends at " + std::to_string(human.t_end) + " before session time " +
                    std::to_string(now_));
  }
  // Everything that can throw runs before the session changes.
  UtteranceSignals signals = analyse_utterance(human, e.audio, nullptr, options_.vad_threshold_db);

  // A turn cannot begin before the robot's previous emission.
  human.t_start = std::max(human.t_start, pending_ ? pending_->action.time : now_);
  fire_expiries_until(human.t_start, out);
  human.t_start = std::max(human.t_start, pending_ ? pending_->action.time : now_);
  advance(human.t_end);

  if (external_) {
    const std::size_t index = session_.pairs.size() + (pending_ ? 1 : 0);
    auto it = external_->find(utterance_id(session_.session_id, index));
    if (it != external_->end()) {
      signals.audio_frames = Sequence{Eigen::Map<const Eigen::VectorXd>(
          it->second.values.data(), static_cast<Eigen::Index>(it->second.dim()))};
    }
  }
  finalize_pending(human.t_start, out);
  respond(human, std::move(signals), UserUtteranceEvent{human}, out);
}

void SessionRunner::respond(Utterance human, UtteranceSignals signals, const ListenerEvent& ev,
                            StepOutput& out) {
  StepResult r = step(listener_, state_, ev);
  state_ = std::move(r.state);
  now_ = std::max(now_, r.action.time);
  out.messages.emplace_back(r.action);
  out.messages.emplace_back(SilenceWatch{r.action.silence_deadline, r.action.next_stage});
  pending_ = PendingPair{std::move(human), std::move(r.action), std::move(signals)};
}

void SessionRunner::finalize_pending(std::optional<double> next_start, StepOutput& out) {
  if (!pending_) return;
  PendingPair p = std::move(*pending_);
  pending_.reset();
  const Response& resp = p.action.response;
  const double words = static_cast<double>(tokenize(resp.text).size());
  double t_end = p.action.time + std::max(0.5, words / (options_.robot_wpm / 60.0));
  if (next_start) t_end = std::min(t_end, std::max(*next_start, p.action.time));
  Utterance robot = make_utterance(Speaker::kRobot, resp.text, p.action.time, t_end);
  const std::size_t index = session_.pairs.size();
  append_pair(session_, make_turn_pair(std::move(p.human), std::move(robot), index));
  signals_.push_back(std::move(p.signals));
  robot_types_.push_back(resp.type);
  close_blocks(out);
}

void SessionRunner::close_blocks(StepOutput& out) {
  while (auto block = close_block(session_)) {
    const std::size_t first = block->pairs.front().index;
    const std::span<const UtteranceSignals> sig(signals_.data() + first, block->pairs.size());
    const auto pauses = block_pauses(*block, sig, options_.pause_min_s,
                                     listener_.config.silence_threshold_s,
                                     options_.vad_threshold_db);
    BlockVerdict v = detect_block(*block, models_, sig, pauses);

    BlockRecord rec;
    rec.wall_time = wall_time(now_);
    rec.session_id = session_.session_id;
    rec.block_index = block->block_index;
    for (const TurnPair& tp : block->pairs) {
      rec.turns.push_back({Speaker::kHuman, tp.human.raw_text, tp.human.t_start, tp.human.t_end, {}});
      rec.turns.push_back({Speaker::kRobot, tp.robot.raw_text, tp.robot.t_start, tp.robot.t_end,
                           robot_types_[tp.index]});
    }
    rec.distributions = v.distributions;
    rec.votes = v.votes;
    rec.final = v.final;
    rec.tie_broken = v.tie_broken;
    rec.features = v.features;
    rec.disfluencies = v.disfluencies;
    rec.breakdown = state_.breakdown;
    finals_.push_back(v.final);
    out.records.emplace_back(std::move(rec));
    out.messages.emplace_back(Diagnosis{block->block_index, std::move(v)});
  }
}

StepOutput run_session(std::span<const SessionEvent> events, const ListenerResources& listener,
                       const DetectorModels& models, const SessionOptions& options,
                       const ExternalFeatures* external) {
  if (events.empty() || !std::holds_alternative<SessionStart>(events.front())) {
    throw Error(ErrorCode::kProtocolViolation, "stream must begin with SessionStart");
  }
  if (!std::holds_alternative<SessionEnd>(events.back())) {
    throw Error(ErrorCode::kProtocolViolation, "stream must end with SessionEnd");
  }
  SessionRunner runner(listener, models, options, external);
  StepOutput all;
  for (const SessionEvent& e : events) {
    StepOutput o = runner.handle(e);
    std::move(o.messages.begin(), o.messages.end(), std::back_inserter(all.messages));
    std::move(o.records.begin(), o.records.end(), std::back_inserter(all.records));
  }
  return all;
}

}  // namespace adscreen
