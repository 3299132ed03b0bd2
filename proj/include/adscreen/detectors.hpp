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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "adscreen/bigru.hpp"
#include "adscreen/dialogue.hpp"
#include "adscreen/signal_features.hpp"
#include "adscreen/text_features.hpp"

namespace adscreen {

enum class ClassifierKind { kAudio = 0, kLanguage = 1, kDisfluency = 2, kInteractivity = 3 };
inline constexpr std::size_t kNumClassifiers = 4;
inline constexpr std::array<ClassifierKind, kNumClassifiers> kAllClassifiers = {
    ClassifierKind::kAudio, ClassifierKind::kLanguage, ClassifierKind::kDisfluency,
    ClassifierKind::kInteractivity};

// "audio", "language", "disfluency", "interactivity".
std::string_view classifier_name(ClassifierKind k);
ClassifierKind parse_classifier(std::string_view name);

// ---------------------------------------------------------------------------
// Interactional features of one block.

struct InteractionalFeatures {
  double turn_length_mean = 0.0;         // human words per turn
  double floor_control_ratio = 0.0;      // human speech / all speech
  double standardized_pause_rate = 0.0;  // human words per pause
  double phonation_rate = 0.0;           // speech / (speech + pause)
  double speaking_rate = 0.0;            // human words per minute of speech + pause

  static constexpr std::size_t kDim = 5;
  Eigen::VectorXd as_vector() const;
  bool operator==(const InteractionalFeatures&) const = default;
};

// pauses are absolute time spans of human pausing. Human speech time is the
// total human utterance time minus the part of it covered by pauses.
// Throws kEmptyBlock.
InteractionalFeatures compute_interactional_features(const DialogueBlock& block,
                                                     std::span<const TimeSpan> pauses);

// Response latencies: for every pair after the first, the gap between the
// previous robot turn and this human turn when min_s <= gap < max_s.
// Silence turns contribute nothing.
std::vector<TimeSpan> latency_pauses(const DialogueBlock& block, double min_s, double max_s);

// ---------------------------------------------------------------------------
// Multinomial logistic model over the five interactional features, with the
// training-set standardization stored alongside.

struct LinearSoftmaxModel {
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(kNumDegrees, InteractionalFeatures::kDim);
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(kNumDegrees);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(InteractionalFeatures::kDim);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(InteractionalFeatures::kDim);

  Eigen::VectorXd standardize(const Eigen::VectorXd& f) const;
  bool operator==(const LinearSoftmaxModel&) const = default;
};

struct LinearTrainConfig {
  double learning_rate = 0.5;
  int epochs = 500;
  double l2 = 1e-4;
};

// Full-batch gradient descent on mean cross-entropy. Throws kEmptyDataset.
LinearSoftmaxModel fit_linear_softmax(std::span<const InteractionalFeatures> features,
                                      std::span<const int> labels,
                                      const LinearTrainConfig& cfg = {});

void save_linear_model(const LinearSoftmaxModel& model, const std::filesystem::path& path);
// Throws kIoError or kFormatVersionMismatch.
LinearSoftmaxModel load_linear_model(const std::filesystem::path& path);

DegreeDistribution interactivity_classify(const LinearSoftmaxModel& model,
                                          const InteractionalFeatures& f);

// ---------------------------------------------------------------------------
// Per-utterance classifiers.

// Throws kEmptySequence.
DegreeDistribution audio_classify(const BiGRUClassifier& model, std::span<const Eigen::VectorXd> frames);
DegreeDistribution language_classify(const BiGRUClassifier& model,
                                     std::span<const Eigen::VectorXd> embedded);

// Per-token prosody appended to the one-hot lexical vector: mean F0 over
// voiced frames, mean intensity and mean spectral stability.
inline constexpr std::size_t kProsodicSlots = 3;

// Token spans are seconds relative to the start of the analysed audio.
// Without analysis the prosodic slots are zero. Throws kAlignmentError when
// analysis is present and spans do not match the tokens one to one.
Sequence disfluency_features(const Vocabulary& vocab, std::span<const std::string> tokens,
                             const AcousticAnalysis* analysis = nullptr,
                             std::span<const TimeSpan> token_spans = {});

// Evenly spread tokens over [0, duration_s].
std::vector<TimeSpan> uniform_token_spans(std::size_t n_tokens, double duration_s);

DegreeDistribution disfluency_classify(const BiGRUClassifier& model, std::span<const Eigen::VectorXd> fused);

struct DisfluencyInventory {
  int restart = 0;
  int repetition = 0;
  int correction = 0;
  int filler = 0;

  int total() const { return restart + repetition + correction + filler; }
  DisfluencyInventory& operator+=(const DisfluencyInventory& o);
  bool operator==(const DisfluencyInventory&) const = default;
};

DisfluencyInventory count_disfluencies(std::span<const std::string> tokens);

// ---------------------------------------------------------------------------
// Two-stage fusion.

// Component-wise mean of any non-empty set. Throws kWrongArity when empty.
DegreeDistribution mean_distribution(std::span<const DegreeDistribution> ds);
// The same mean over exactly six distributions. Throws kWrongArity.
DegreeDistribution stage1_average(std::span<const DegreeDistribution> six);

struct VoteInput {
  DiagnosisDegree label;
  DegreeDistribution distribution;
};

struct VoteResult {
  DiagnosisDegree final = DiagnosisDegree::kNonAD;
  bool tie_broken = false;
};

// Plurality; ties go to the tied label with the largest summed probability,
// then to the most severe tied label. Throws kWrongArity unless four inputs.
VoteResult stage2_vote(std::span<const VoteInput> results);

// ---------------------------------------------------------------------------
// Whole-block detection.

struct DetectorModels {
  BiGRUClassifier audio;
  BiGRUClassifier language;
  BiGRUClassifier disfluency;
  LinearSoftmaxModel interactivity;
  Vocabulary vocab;
  EmbeddingTable embeddings;

  // Zero-weight models: every classifier outputs the uniform distribution.
  static DetectorModels untrained(std::size_t audio_dim, Vocabulary vocab,
                                  EmbeddingTable embeddings = EmbeddingTable(),
                                  std::size_t hidden_dim = 8);

  // Files: audio.model, language.model, disfluency.model,
  // interactivity.linear, vocab.txt and optionally embeddings.txt.
  void save(const std::filesystem::path& dir) const;
  static DetectorModels load(const std::filesystem::path& dir);
};

// Signal-side inputs of one human turn. Missing audio frames make the audio
// classifier contribute a uniform distribution for that pair.
struct UtteranceSignals {
  std::optional<Sequence> audio_frames;
  std::optional<AcousticAnalysis> analysis;
  std::vector<TimeSpan> token_spans;  // relative to the start of the audio
};

struct BlockVerdict {
  std::array<DegreeDistribution, kNumClassifiers> distributions;
  std::array<DiagnosisDegree, kNumClassifiers> votes{};
  DiagnosisDegree final = DiagnosisDegree::kNonAD;
  bool tie_broken = false;
  InteractionalFeatures features;
  DisfluencyInventory disfluencies;

  const DegreeDistribution& distribution(ClassifierKind k) const {
    return distributions[static_cast<std::size_t>(k)];
  }
};

// The per-pair input sequences each classifier sees; shared by detection and
// training so both use identical features. Empty when the classifier has no
// input for the pair.
Sequence audio_input(const UtteranceSignals& signals);
Sequence language_input(const DetectorModels& models, const Utterance& human);
Sequence disfluency_input(const DetectorModels& models, const Utterance& human,
                          const UtteranceSignals& signals);

// signals is either empty (text only) or one entry per pair. pauses are the
// absolute human pauses for the interactional features.
BlockVerdict detect_block(const DialogueBlock& block, const DetectorModels& models,
                          std::span<const UtteranceSignals> signals,
                          std::span<const TimeSpan> pauses);

}  // namespace adscreen
