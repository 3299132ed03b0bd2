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

#include "adscreen/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "adscreen/error.hpp"
#include "adscreen/random.hpp"
#include "adscreen/text_features.hpp"

namespace adscreen {
namespace {

using nlohmann::json;

const std::vector<std::string>& default_vocabulary() {
  static const std::vector<std::string> v = {
      "i",      "went",   "to",     "the",    "garden", "yesterday", "my",     "daughter",
      "came",   "over",   "we",     "had",    "tea",    "and",       "cake",   "it",
      "was",    "nice",   "weather", "today", "walk",   "park",      "dog",    "church",
      "friend", "music",  "radio",  "kitchen", "dinner", "son",      "house",  "river",
      "like",   "really", "very",   "old",    "new",    "little",    "home",   "book"};
  return v;
}

const std::vector<std::string>& default_nouns() {
  static const std::vector<std::string> v = {"garden", "music", "dog", "park", "book", "dinner"};
  return v;
}

constexpr std::array<const char*, 3> kFillerTokens = {"um", "uh", "er"};
constexpr std::array<const char*, 4> kQuestionOpeners = {"what", "where", "do", "is"};

void check_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kConfigError, std::string(what) + " must be in [0, 1]");
}

void check_positive(const MeanSd& m, const char* what) {
  if (!(m.mean > 0.0) || !(m.sd >= 0.0)) {
    throw Error(ErrorCode::kConfigError, std::string(what) + " needs mean > 0 and sd >= 0");
  }
}

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

json mean_sd_json(const MeanSd& m) { return {{"mean", m.mean}, {"sd", m.sd}}; }

MeanSd mean_sd_from(const json& j) { return {j.at("mean").get<double>(), j.at("sd").get<double>()}; }

}  // namespace

void UserProfile::validate() const {
  if (name.empty()) throw Error(ErrorCode::kConfigError, "profile needs a name");
  check_prob(filler_rate, "filler_rate");
  check_prob(repetition_rate, "repetition_rate");
  check_prob(silence_prob, "silence_prob");
  check_prob(question_prob, "question_prob");
  if (filler_rate + repetition_rate > 1.0) {
    throw Error(ErrorCode::kConfigError, "filler_rate + repetition_rate must not exceed 1");
  }
  if (!(pause_rate_per_10w >= 0.0 && pause_rate_per_10w <= 10.0)) {
    throw Error(ErrorCode::kConfigError, "pause_rate_per_10w must be in [0, 10]");
  }
  check_positive(speaking_rate_wpm, "speaking_rate_wpm");
  check_positive(reply_delay_s, "reply_delay_s");
  check_positive(utterance_length, "utterance_length");
  check_positive(pause_duration_s, "pause_duration_s");
  check_positive(f0_hz, "f0_hz");
  for (const auto& n : focus_nouns) {
    if (!vocabulary.empty() && std::find(vocabulary.begin(), vocabulary.end(), n) == vocabulary.end()) {
      throw Error(ErrorCode::kConfigError, "focus noun '" + n + "' is not in the vocabulary");
    }
  }
}

json profile_to_json(const UserProfile& p) {
  return {{"name", p.name},
          {"label", std::string(degree_name(p.label))},
          {"speaking_rate_wpm", mean_sd_json(p.speaking_rate_wpm)},
          {"filler_rate", p.filler_rate},
          {"repetition_rate", p.repetition_rate},
          {"silence_prob", p.silence_prob},
          {"reply_delay_s", mean_sd_json(p.reply_delay_s)},
          {"utterance_length", mean_sd_json(p.utterance_length)},
          {"pause_rate_per_10w", p.pause_rate_per_10w},
          {"pause_duration_s", mean_sd_json(p.pause_duration_s)},
          {"question_prob", p.question_prob},
          {"f0_hz", mean_sd_json(p.f0_hz)},
          {"vocabulary", p.vocabulary},
          {"focus_nouns", p.focus_nouns}};
}

std::vector<UserProfile> parse_profiles(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) throw Error(ErrorCode::kParseError, "profiles: not valid JSON");
  std::vector<UserProfile> out;
  try {
    for (const json& j : root.at("profiles")) {
      UserProfile p;
      for (const auto& [key, _] : j.items()) {
        static const std::set<std::string> known = {
            "name", "label", "speaking_rate_wpm", "filler_rate", "repetition_rate",
            "silence_prob", "reply_delay_s", "utterance_length", "pause_rate_per_10w",
            "pause_duration_s", "question_prob", "f0_hz", "vocabulary", "focus_nouns"};
        if (!known.contains(key)) throw Error(ErrorCode::kConfigError, "unknown profile key '" + key + "'");
      }
      p.name = j.at("name").get<std::string>();
      p.label = parse_degree(j.at("label").get<std::string>());
      if (j.contains("speaking_rate_wpm")) p.speaking_rate_wpm = mean_sd_from(j["speaking_rate_wpm"]);
      if (j.contains("filler_rate")) p.filler_rate = j["filler_rate"].get<double>();
      if (j.contains("repetition_rate")) p.repetition_rate = j["repetition_rate"].get<double>();
      if (j.contains("silence_prob")) p.silence_prob = j["silence_prob"].get<double>();
      if (j.contains("reply_delay_s")) p.reply_delay_s = mean_sd_from(j["reply_delay_s"]);
      if (j.contains("utterance_length")) p.utterance_length = mean_sd_from(j["utterance_length"]);
      if (j.contains("pause_rate_per_10w")) p.pause_rate_per_10w = j["pause_rate_per_10w"].get<double>();
      if (j.contains("pause_duration_s")) p.pause_duration_s = mean_sd_from(j["pause_duration_s"]);
      if (j.contains("question_prob")) p.question_prob = j["question_prob"].get<double>();
      if (j.contains("f0_hz")) p.f0_hz = mean_sd_from(j["f0_hz"]);
      if (j.contains("vocabulary")) p.vocabulary = j["vocabulary"].get<std::vector<std::string>>();
      if (j.contains("focus_nouns")) p.focus_nouns = j["focus_nouns"].get<std::vector<std::string>>();
      p.validate();
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("profiles: ") + e.what());
  }
  if (out.empty()) throw Error(ErrorCode::kConfigError, "no profiles defined");
  return out;
}

std::vector<UserProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profiles(ss.str());
}

// ---------------------------------------------------------------------------

AudioBuffer synthesize_tone(const ToneSpec& spec) {
  AudioBuffer b;
  b.sample_rate = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
  b.samples.resize(n);
  Rng rng(spec.seed);
  for (double& s : b.samples) s = 1e-4 * (2.0 * rng.uniform() - 1.0);  // about -80 dBFS
  const double fade = 0.01;
  for (std::size_t k = 0; k < spec.voiced.size(); ++k) {
    const TimeSpan& v = spec.voiced[k];
    // Slight per-span pitch movement keeps the tone from being perfectly flat.
    const double f0 = spec.f0_hz * (1.0 + 0.03 * rng.normal());
    const auto i0 = static_cast<std::size_t>(std::max(0.0, v.start_s) * spec.sample_rate);
    const auto i1 = std::min(n, static_cast<std::size_t>(v.end_s * spec.sample_rate));
    for (std::size_t i = i0; i < i1; ++i) {
      const double t = static_cast<double>(i) / spec.sample_rate;
      const double rel = t - v.start_s, left = v.end_s - t;
      const double env = std::min({1.0, rel / fade, left / fade});
      const double w = 2.0 * std::numbers::pi * f0 * t;
      b.samples[i] += 0.3 * env * (std::sin(w) + 0.5 * std::sin(2 * w) + 0.25 * std::sin(3 * w)) / 1.75;
    }
  }
  return b;
}

ScriptedSession generate_session(const UserProfile& profile, std::uint64_t seed,
                                 const GenerateOptions& options, const std::string& session_id) {
  profile.validate();
  const auto& vocab = profile.vocabulary.empty() ? default_vocabulary() : profile.vocabulary;
  const auto& nouns = profile.focus_nouns.empty()
                          ? (profile.vocabulary.empty() ? default_nouns() : profile.vocabulary)
                          : profile.focus_nouns;
  const double thr = options.silence_threshold_s;

  ScriptedSession s;
  s.session_id = session_id.empty() ? profile.name + "-" + std::to_string(seed) : session_id;
  s.profile = profile.name;
  s.label = profile.label;
  s.seed = seed;
  Rng rng(seed);

  s.events.emplace_back(SessionStart{s.session_id, 0.0, kSimulatedEpoch});
  double t = 0.0;
  double deadline = thr;
  int silent_run = 0;
  // Conditional probability of a repetition given the token is not a filler,
  // so that both rates hold per generated token.
  const double rep_given_word =
      profile.filler_rate < 1.0 ? profile.repetition_rate / (1.0 - profile.filler_rate) : 0.0;

  for (std::size_t slot = 0; slot < options.n_pairs; ++slot) {
    if (silent_run < options.breakdown_after && rng.bernoulli(profile.silence_prob)) {
      s.events.emplace_back(Tick{deadline});
      t = deadline;
      deadline = t + thr;
      ++silent_run;
      continue;
    }
    silent_run = 0;

    UtteranceAnnotation ann;
    ann.question = rng.bernoulli(profile.question_prob);
    const int length = std::max(1, static_cast<int>(std::lround(
                                       rng.normal(profile.utterance_length.mean, profile.utterance_length.sd))));
    std::vector<std::string> tokens;
    if (ann.question) tokens.emplace_back(kQuestionOpeners[rng.index(kQuestionOpeners.size())]);
    while (static_cast<int>(tokens.size()) < length) {
      if (rng.bernoulli(profile.filler_rate)) {
        tokens.emplace_back(kFillerTokens[rng.index(kFillerTokens.size())]);
        ++ann.fillers;
      } else if (!tokens.empty() && !is_filler(tokens.back()) && rng.bernoulli(rep_given_word)) {
        tokens.push_back(tokens.back());
        ++ann.repetitions;
      } else {
        tokens.push_back(vocab[rng.index(vocab.size())]);
      }
    }
    if (ann.question) tokens.push_back(nouns[rng.index(nouns.size())]);
    ann.tokens = static_cast<int>(tokens.size());

    std::string text;
    for (const auto& tok : tokens) text += (text.empty() ? "" : " ") + tok;
    text = capitalize(text) + (ann.question && rng.bernoulli(0.7) ? "?" : ".");

    // Word timing: voiced core plus a short gap, with occasional longer pauses
    // between words.
    const double wpm = std::max(30.0, rng.normal(profile.speaking_rate_wpm.mean, profile.speaking_rate_wpm.sd));
    const double word_s = 60.0 / wpm;
    const double gap = std::min(0.2 * word_s, 0.15);
    const double p_pause = profile.pause_rate_per_10w / 10.0;
    ToneSpec tone;
    tone.sample_rate = options.sample_rate;
    tone.f0_hz = std::max(60.0, rng.normal(profile.f0_hz.mean, profile.f0_hz.sd));
    tone.seed = rng.next_u64();
    double at = 0.05;
    for (std::size_t w = 0; w < tokens.size(); ++w) {
      tone.voiced.push_back({at, at + word_s - gap});
      at += word_s;
      if (w + 1 < tokens.size() && rng.bernoulli(p_pause)) {
        at += clamp(rng.normal(profile.pause_duration_s.mean, profile.pause_duration_s.sd), 0.3, 2.0);
        ++ann.pauses;
      }
    }
    tone.duration_s = at + 0.05;

    const double delay = clamp(rng.normal(profile.reply_delay_s.mean, profile.reply_delay_s.sd), 0.2,
                               thr - 0.25);
    UserUtteranceIn u;
    u.text = text;
    u.t_start = t + delay;
    u.t_end = *u.t_start + tone.duration_s;
    u.arrival = *u.t_end;
    ann.event_index = s.events.size();
    if (options.pseudo_audio) ann.tone = std::move(tone);
    s.events.emplace_back(u);
    s.annotations.push_back(std::move(ann));
    t = *u.t_end;
    deadline = t + thr;
  }
  s.events.emplace_back(SessionEnd{t + std::min(1.0, thr / 2.0)});
  return s;
}

void materialize_audio(ScriptedSession& session) {
  for (const UtteranceAnnotation& a : session.annotations) {
    if (!a.tone) continue;
    std::get<UserUtteranceIn>(session.events.at(a.event_index)).audio = synthesize_tone(*a.tone);
  }
}

// ---------------------------------------------------------------------------

json session_to_json(const ScriptedSession& s) {
  json events = json::array();
  for (const SessionEvent& e : s.events) {
    if (const auto* st = std::get_if<SessionStart>(&e)) {
      events.push_back({{"kind", "start"}, {"time", st->time}, {"wall_origin", st->wall_origin}});
    } else if (const auto* u = std::get_if<UserUtteranceIn>(&e)) {
      json j = {{"kind", "utterance"}, {"text", u->text}, {"arrival", u->arrival}};
      if (u->t_start) j["t_start"] = *u->t_start;
      if (u->t_end) j["t_end"] = *u->t_end;
      events.push_back(std::move(j));
    } else if (const auto* t = std::get_if<Tick>(&e)) {
      events.push_back({{"kind", "tick"}, {"now", t->now}});
    } else {
      events.push_back({{"kind", "end"}, {"time", std::get<SessionEnd>(e).time}});
    }
  }
  json anns = json::array();
  for (const UtteranceAnnotation& a : s.annotations) {
    json j = {{"event_index", a.event_index}, {"tokens", a.tokens},       {"fillers", a.fillers},
              {"repetitions", a.repetitions}, {"pauses", a.pauses},       {"question", a.question}};
    if (a.tone) {
      json voiced = json::array();
      for (const TimeSpan& v : a.tone->voiced) voiced.push_back({v.start_s, v.end_s});
      j["tone"] = {{"sample_rate", a.tone->sample_rate}, {"f0_hz", a.tone->f0_hz},
                   {"duration_s", a.tone->duration_s},   {"voiced", std::move(voiced)},
                   {"seed", a.tone->seed}};
    }
    anns.push_back(std::move(j));
  }
  return {{"session_id", s.session_id}, {"profile", s.profile},   {"label", std::string(degree_name(s.label))},
          {"seed", s.seed},             {"events", std::move(events)}, {"annotations", std::move(anns)}};
}

ScriptedSession session_from_json(const json& j) {
  try {
    ScriptedSession s;
    s.session_id = j.at("session_id").get<std::string>();
    s.profile = j.at("profile").get<std::string>();
    s.label = parse_degree(j.at("label").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const json& e : j.at("events")) {
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "start") {
        s.events.emplace_back(SessionStart{s.session_id, e.at("time").get<double>(),
                                           e.at("wall_origin").get<double>()});
      } else if (kind == "utterance") {
        UserUtteranceIn u;
        u.text = e.at("text").get<std::string>();
        u.arrival = e.at("arrival").get<double>();
        if (e.contains("t_start")) u.t_start = e["t_start"].get<double>();
        if (e.contains("t_end")) u.t_end = e["t_end"].get<double>();
        s.events.emplace_back(std::move(u));
      } else if (kind == "tick") {
        s.events.emplace_back(Tick{e.at("now").get<double>()});
      } else if (kind == "end") {
        s.events.emplace_back(SessionEnd{e.at("time").get<double>()});
      } else {
        throw Error(ErrorCode::kParseError, "unknown event kind '" + kind + "'");
      }
    }
    for (const json& a : j.at("annotations")) {
      UtteranceAnnotation ann;
      ann.event_index = a.at("event_index").get<std::size_t>();
      ann.tokens = a.at("tokens").get<int>();
      ann.fillers = a.at("fillers").get<int>();
      ann.repetitions = a.at("repetitions").get<int>();
      ann.pauses = a.at("pauses").get<int>();
      ann.question = a.at("question").get<bool>();
      if (a.contains("tone")) {
        const json& t = a["tone"];
        ToneSpec tone;
        tone.sample_rate = t.at("sample_rate").get<int>();
        tone.f0_hz = t.at("f0_hz").get<double>();
        tone.duration_s = t.at("duration_s").get<double>();
        tone.seed = t.at("seed").get<std::uint64_t>();
        for (const json& v : t.at("voiced")) tone.voiced.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        ann.tone = std::move(tone);
      }
      if (ann.event_index >= s.events.size() ||
          !std::holds_alternative<UserUtteranceIn>(s.events[ann.event_index])) {
        throw Error(ErrorCode::kParseError, "annotation does not point at an utterance");
      }
      s.annotations.push_back(std::move(ann));
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("session file: ") + e.what());
  }
}

void save_session(const ScriptedSession& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << session_to_json(s).dump() << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

ScriptedSession load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParseError, path.string() + ": not valid JSON");
  return session_from_json(j);
}

// ---------------------------------------------------------------------------

namespace {

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<ManifestRow> generate_corpus(const std::vector<UserProfile>& profiles,
                                         std::size_t n_per_profile, std::uint64_t seed,
                                         const std::filesystem::path& dir,
                                         const GenerateOptions& options) {
  std::set<DiagnosisDegree> labels;
  for (const auto& p : profiles) labels.insert(p.label);
  if (labels.size() < 2) throw Error(ErrorCode::kConfigError, "a corpus needs at least two distinct labels");

  std::error_code ec;
  std::filesystem::create_directories(dir / "sessions", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (dir / "sessions").string());

  std::vector<ManifestRow> rows;
  std::size_t index = 0;
  for (const UserProfile& p : profiles) {
    for (std::size_t i = 0; i < n_per_profile; ++i, ++index) {
      const std::uint64_t s_seed = Rng::stream(seed, index).next_u64();
      char name[64];
      std::snprintf(name, sizeof name, "%s-%05zu", p.name.c_str(), i);
      const ScriptedSession s = generate_session(p, s_seed, options, name);
      const std::string file = std::string("sessions/") + name + ".json";
      save_session(s, dir / file);
      rows.push_back({file, p.label, s_seed, p.name, hex64(fnv1a64(read_file(dir / file)))});
    }
  }
  std::ofstream m(dir / kManifestName);
  if (!m) throw Error(ErrorCode::kIoError, "cannot write manifest in " + dir.string());
  m << "file,label,seed,profile,digest\n";
  for (const auto& r : rows) {
    m << r.file << ',' << degree_name(r.label) << ',' << r.seed << ',' << r.profile << ',' << r.digest << '\n';
  }
  if (!m) throw Error(ErrorCode::kIoError, "manifest write failed");
  return rows;
}

std::vector<ManifestRow> load_manifest(const std::filesystem::path& corpus_dir) {
  std::ifstream in(corpus_dir / kManifestName);
  if (!in) throw Error(ErrorCode::kIoError, "no manifest in " + corpus_dir.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != 5) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line_no) + ": expected 5 fields");
    }
    try {
      rows.push_back({cells[0], parse_degree(cells[1]), std::stoull(cells[2]), cells[3], cells[4]});
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<ScriptedSession> load_corpus(const std::filesystem::path& corpus_dir) {
  std::vector<ScriptedSession> out;
  for (const ManifestRow& r : load_manifest(corpus_dir)) {
    ScriptedSession s = load_session(corpus_dir / r.file);
    if (s.label != r.label) {
      throw Error(ErrorCode::kParseError, r.file + ": label differs from the manifest");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace adscreen
