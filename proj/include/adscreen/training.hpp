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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "adscreen/bigru.hpp"
#include "adscreen/detectors.hpp"
#include "adscreen/listener.hpp"
#include "adscreen/session.hpp"
#include "adscreen/simulator.hpp"

namespace adscreen {

// A scripted session after replay: the dialogue the robot actually produced
// and the per-pair signal inputs, labeled with the generating profile.
struct ReplayedSession {
  std::string session_id;
  DiagnosisDegree label = DiagnosisDegree::kNonAD;
  DialogueSession dialogue;
  std::vector<UtteranceSignals> signals;  // one per pair
};

// Replays through the session runner with placeholder models. Audio is
// synthesized from the tone recipes for the duration of the call only.
ReplayedSession replay_session(const ScriptedSession& session, const ListenerResources& listener,
                               const SessionOptions& options);
std::vector<ReplayedSession> replay_corpus(std::span<const ScriptedSession> sessions,
                                           const ListenerResources& listener,
                                           const SessionOptions& options);

enum class TrainTarget { kAudio, kLanguage, kDisfluency, kInteractivity, kDialogueAct };

// "audio", "language", "disfluency", "interactivity", "dialogue_act".
std::string_view train_target_name(TrainTarget t);
// Throws kConfigError.
TrainTarget parse_train_target(std::string_view name);

struct TrainingSettings {
  std::size_t hidden_dim = 8;
  std::size_t embedding_dim = 16;
  std::uint64_t embedding_seed = 0x5eedULL;
  std::size_t vocab_max = 256;
  TrainConfig bigru;
  LinearTrainConfig linear;
};

// Vocabulary over the human turns of the corpus.
Vocabulary corpus_vocabulary(std::span<const ReplayedSession> sessions, std::size_t max_size);

// Untrained detector models whose vocabulary and embeddings fit the corpus.
DetectorModels initial_models(std::span<const ReplayedSession> sessions, const TrainingSettings& settings);

// Per-pair sequences labeled with the session label. Pairs without input for
// the classifier (silences, missing audio) are skipped. Only the three
// sequence classifiers are valid here; throws kInvalidArgument otherwise.
std::vector<LabeledSequence> classifier_samples(ClassifierKind kind, std::span<const ReplayedSession> sessions,
                                                const DetectorModels& models);

struct BlockSample {
  InteractionalFeatures features;
  int label = 0;
};

// One sample per complete block, with pauses found exactly as at detection.
std::vector<BlockSample> interactivity_samples(std::span<const ReplayedSession> sessions,
                                               const SessionOptions& options,
                                               double silence_threshold_s);

// Embedded tokens of every scripted utterance; label 1 for questions.
std::vector<LabeledSequence> dialogue_act_samples(std::span<const ScriptedSession> sessions,
                                                  const EmbeddingTable& embeddings);

struct ModelBundle {
  DetectorModels detectors;
  std::optional<BiGRUClassifier> dialogue_act;
};

inline constexpr const char* kDialogueActModelFile = "dialogue_act.model";

// Trains one target in place. Throws kEmptyDataset when the corpus has no
// usable samples for it.
void train_target(TrainTarget target, ModelBundle& bundle, std::span<const ScriptedSession> scripted,
                  std::span<const ReplayedSession> replayed, const SessionOptions& options,
                  double silence_threshold_s, const TrainingSettings& settings);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
// The dialogue-act model is optional in the directory.
ModelBundle load_bundle(const std::filesystem::path& dir);

struct ExperimentReport {
  std::size_t sessions = 0;
  std::size_t blocks = 0;
  double accuracy = 0.0;  // block-level final verdict against the session label
  // confusion[true][predicted], counted in blocks.
  std::array<std::array<std::size_t, kNumDegrees>, kNumDegrees> confusion{};
  std::array<double, kNumClassifiers> per_classifier_accuracy{};
  std::size_t tie_broken = 0;

  nlohmann::ordered_json to_json() const;
};

// Replays every session with the given models and scores the block verdicts.
ExperimentReport evaluate(std::span<const ScriptedSession> sessions, const ListenerResources& listener,
                          const DetectorModels& models, const SessionOptions& options);

// Corpus and model directories to a JSON report on disk.
ExperimentReport run_experiment(const std::filesystem::path& corpus_dir,
                                const std::filesystem::path& models_dir,
                                const std::filesystem::path& report_path,
                                const ListenerResources& listener, const SessionOptions& options);

}  // namespace adscreen
