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

#include "adscreen/training.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "adscreen/error.hpp"
#include "adscreen/text_features.hpp"

namespace adscreen {

namespace {

const DetectorModels& placeholder_models() {
  static const DetectorModels m = DetectorModels::untrained(acoustic_layout::kDim, Vocabulary());
  return m;
}

int label_index(DiagnosisDegree d) { return static_cast<int>(d); }

}  // namespace

ReplayedSession replay_session(const ScriptedSession& session, const ListenerResources& listener,
                               const SessionOptions& options) {
  ScriptedSession with_audio = session;
  materialize_audio(with_audio);
  SessionRunner runner(listener, placeholder_models(), options);
  for (const SessionEvent& e : with_audio.events) runner.handle(e);
  if (!runner.ended()) throw Error(ErrorCode::kProtocolViolation, session.session_id + ": no SessionEnd");
  return {session.session_id, session.label, runner.dialogue(), runner.signals()};
}

std::vector<ReplayedSession> replay_corpus(std::span<const ScriptedSession> sessions,
                                           const ListenerResources& listener,
                                           const SessionOptions& options) {
  std::vector<ReplayedSession> out;
  out.reserve(sessions.size());
  for (const ScriptedSession& s : sessions) out.push_back(replay_session(s, listener, options));
  return out;
}

std::string_view train_target_name(TrainTarget t) {
  switch (t) {
    case TrainTarget::kAudio: return "audio";
    case TrainTarget::kLanguage: return "language";
    case TrainTarget::kDisfluency: return "disfluency";
    case TrainTarget::kInteractivity: return "interactivity";
    case TrainTarget::kDialogueAct: return "dialogue_act";
  }
  return "unknown";
}

TrainTarget parse_train_target(std::string_view name) {
  for (TrainTarget t : {TrainTarget::kAudio, TrainTarget::kLanguage, TrainTarget::kDisfluency,
                        TrainTarget::kInteractivity, TrainTarget::kDialogueAct}) {
    if (train_target_name(t) == name) return t;
  }
  throw Error(ErrorCode::kConfigError, "unknown training target '" + std::string(name) + "'");
}

Vocabulary corpus_vocabulary(std::span<const ReplayedSession> sessions, std::size_t max_size) {
  std::vector<TokenList> turns;
  for (const auto& s : sessions) {
    for (const TurnPair& p : s.dialogue.pairs) {
      if (!p.human.is_silence()) turns.push_back(p.human.tokens);
    }
  }
  return Vocabulary::build(turns, max_size);
}

DetectorModels initial_models(std::span<const ReplayedSession> sessions, const TrainingSettings& settings) {
  return DetectorModels::untrained(acoustic_layout::kDim, corpus_vocabulary(sessions, settings.vocab_max),
                                   EmbeddingTable(settings.embedding_dim, settings.embedding_seed),
                                   settings.hidden_dim);
}

std::vector<LabeledSequence> classifier_samples(ClassifierKind kind, std::span<const ReplayedSession> sessions,
                                                const DetectorModels& models) {
  if (kind == ClassifierKind::kInteractivity) {
    throw Error(ErrorCode::kInvalidArgument, "interactivity works on blocks, not pairs");
  }
  std::vector<LabeledSequence> out;
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i < s.dialogue.pairs.size(); ++i) {
      const Utterance& human = s.dialogue.pairs[i].human;
      if (human.is_silence()) continue;
      const UtteranceSignals& sig = s.signals.at(i);
      Sequence xs;
      switch (kind) {
        case ClassifierKind::kAudio: xs = audio_input(sig); break;
        case ClassifierKind::kLanguage: xs = language_input(models, human); break;
        default: xs = disfluency_input(models, human, sig); break;
      }
      if (!xs.empty()) out.push_back({std::move(xs), label_index(s.label)});
    }
  }
  return out;
}

std::vector<BlockSample> interactivity_samples(std::span<const ReplayedSession> sessions,
                                               const SessionOptions& options,
                                               double silence_threshold_s) {
  std::vector<BlockSample> out;
  for (const auto& s : sessions) {
    for (const DialogueBlock& b : s.dialogue.completed_blocks) {
      const std::size_t first = b.pairs.front().index;
      const std::span<const UtteranceSignals> sig(s.signals.data() + first, b.pairs.size());
      const auto pauses =
          block_pauses(b, sig, options.pause_min_s, silence_threshold_s, options.vad_threshold_db);
      out.push_back({compute_interactional_features(b, pauses), label_index(s.label)});
    }
  }
  return out;
}

std::vector<LabeledSequence> dialogue_act_samples(std::span<const ScriptedSession> sessions,
                                                  const EmbeddingTable& embeddings) {
  std::vector<LabeledSequence> out;
  for (const auto& s : sessions) {
    for (const UtteranceAnnotation& a : s.annotations) {
      // Tokens carry no punctuation, so the tagger learns from words alone.
      const TokenList tokens = tokenize(std::get<UserUtteranceIn>(s.events.at(a.event_index)).text);
      if (tokens.empty()) continue;
      LabeledSequence seq;
      for (const auto& t : tokens) seq.xs.push_back(embeddings.lookup(t));
      seq.label = a.question ? 1 : 0;
      out.push_back(std::move(seq));
    }
  }
  return out;
}

void train_target(TrainTarget target, ModelBundle& bundle, std::span<const ScriptedSession> scripted,
                  std::span<const ReplayedSession> replayed, const SessionOptions& options,
                  double silence_threshold_s, const TrainingSettings& settings) {
  DetectorModels& m = bundle.detectors;
  auto fit_sequence = [&](BiGRUClassifier& slot, ClassifierKind kind, std::size_t input_dim) {
    const auto data = classifier_samples(kind, replayed, m);
    if (data.empty()) {
      throw Error(ErrorCode::kEmptyDataset, std::string("no samples for ") + std::string(classifier_name(kind)));
    }
    auto init = BiGRUClassifier::random(input_dim, settings.hidden_dim, kNumDegrees,
                                        settings.bigru.seed + static_cast<std::uint64_t>(kind));
    TrainResult r = train(std::move(init), data, settings.bigru);
    spdlog::info("{}: {} samples, loss {:.4f}, training accuracy {:.3f}", classifier_name(kind), data.size(),
                 r.loss_history.empty() ? 0.0 : r.loss_history.back(), accuracy(r.model, data));
    slot = std::move(r.model);
  };

  switch (target) {
    case TrainTarget::kAudio:
      fit_sequence(m.audio, ClassifierKind::kAudio, acoustic_layout::kDim);
      break;
    case TrainTarget::kLanguage:
      fit_sequence(m.language, ClassifierKind::kLanguage, m.embeddings.dim());
      break;
    case TrainTarget::kDisfluency:
      fit_sequence(m.disfluency, ClassifierKind::kDisfluency, m.vocab.size() + kProsodicSlots);
      break;
    case TrainTarget::kInteractivity: {
      const auto samples = interactivity_samples(replayed, options, silence_threshold_s);
      std::vector<InteractionalFeatures> f;
      std::vector<int> y;
      for (const auto& s : samples) {
        f.push_back(s.features);
        y.push_back(s.label);
      }
      m.interactivity = fit_linear_softmax(f, y, settings.linear);
      spdlog::info("interactivity: {} blocks", samples.size());
      break;
    }
    case TrainTarget::kDialogueAct: {
      const auto data = dialogue_act_samples(scripted, m.embeddings);
      if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "no utterances for the dialogue-act tagger");
      auto init = BiGRUClassifier::random(m.embeddings.dim(), settings.hidden_dim, 2, settings.bigru.seed + 7);
      TrainResult r = train(std::move(init), data, settings.bigru);
      spdlog::info("dialogue_act: {} samples, training accuracy {:.3f}", data.size(), accuracy(r.model, data));
      bundle.dialogue_act = std::move(r.model);
      break;
    }
  }
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  bundle.detectors.save(dir);
  if (bundle.dialogue_act) save_model(*bundle.dialogue_act, dir / kDialogueActModelFile);
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  ModelBundle b{DetectorModels::load(dir), std::nullopt};
  if (std::filesystem::exists(dir / kDialogueActModelFile)) {
    b.dialogue_act = load_model(dir / kDialogueActModelFile, 2);
  }
  return b;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["sessions"] = sessions;
  j["blocks"] = blocks;
  j["accuracy"] = accuracy;
  std::vector<std::string> labels;
  for (DiagnosisDegree d : kAllDegrees) labels.emplace_back(degree_name(d));
  j["labels"] = labels;
  j["confusion"] = confusion;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (ClassifierKind k : kAllClassifiers) {
    per[std::string(classifier_name(k))] = per_classifier_accuracy[static_cast<std::size_t>(k)];
  }
  j["per_classifier_accuracy"] = per;
  j["tie_broken"] = tie_broken;
  return j;
}

ExperimentReport evaluate(std::span<const ScriptedSession> sessions, const ListenerResources& listener,
                          const DetectorModels& models, const SessionOptions& options) {
  ExperimentReport r;
  std::array<std::size_t, kNumClassifiers> votes_right{};
  std::size_t right = 0;
  for (const ScriptedSession& s : sessions) {
    ScriptedSession with_audio = s;
    materialize_audio(with_audio);
    const StepOutput out = run_session(with_audio.events, listener, models, options);
    ++r.sessions;
    for (const SessionOutput& m : out.messages) {
      const auto* d = std::get_if<Diagnosis>(&m);
      if (!d) continue;
      ++r.blocks;
      const auto truth = static_cast<std::size_t>(s.label);
      ++r.confusion[truth][static_cast<std::size_t>(d->verdict.final)];
      right += d->verdict.final == s.label;
      r.tie_broken += d->verdict.tie_broken;
      for (std::size_t k = 0; k < kNumClassifiers; ++k) votes_right[k] += d->verdict.votes[k] == s.label;
    }
  }
  if (r.blocks > 0) {
    r.accuracy = static_cast<double>(right) / static_cast<double>(r.blocks);
    for (std::size_t k = 0; k < kNumClassifiers; ++k) {
      r.per_classifier_accuracy[k] = static_cast<double>(votes_right[k]) / static_cast<double>(r.blocks);
    }
  }
  return r;
}

ExperimentReport run_experiment(const std::filesystem::path& corpus_dir,
                                const std::filesystem::path& models_dir,
                                const std::filesystem::path& report_path,
                                const ListenerResources& listener, const SessionOptions& options) {
  const auto sessions = load_corpus(corpus_dir);
  const ModelBundle bundle = load_bundle(models_dir);
  ListenerResources tagged = listener;
  if (bundle.dialogue_act) {
    tagged.act_model = bundle.dialogue_act;
    tagged.act_embeddings = bundle.detectors.embeddings;
  }
  const ExperimentReport r = evaluate(sessions, tagged, bundle.detectors, options);
  std::ofstream out(report_path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + report_path.string());
  out << r.to_json().dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + report_path.string());
  return r;
}

}  // namespace adscreen
