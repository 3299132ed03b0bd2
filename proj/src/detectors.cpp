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

#include "adscreen/detectors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adscreen/error.hpp"

namespace adscreen {
namespace {

using Eigen::VectorXd;

DegreeDistribution to_distribution(const VectorXd& p) {
  std::array<double, kNumDegrees> a{};
  for (std::size_t i = 0; i < kNumDegrees; ++i) a[i] = p[static_cast<Eigen::Index>(i)];
  return normalize_distribution(a);
}

VectorXd softmax(const VectorXd& logits) {
  const VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double overlap(const TimeSpan& a, double start, double end) {
  return std::max(0.0, std::min(a.end_s, end) - std::max(a.start_s, start));
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void write_row(std::ostream& out, const VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
  out << '\n';
}

[[noreturn]] void bad_linear(const std::string& what) {
  throw Error(ErrorCode::kFormatVersionMismatch, "linear model: " + what);
}

VectorXd read_row(std::istream& in, const std::string& key, Eigen::Index n) {
  std::string k;
  if (!(in >> k) || k != key) bad_linear("expected '" + key + "'");
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string tok;
    if (!(in >> tok)) bad_linear("truncated " + key);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v[i]);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) bad_linear("bad number " + tok);
  }
  return v;
}

constexpr const char* kLinearMagic = "ADSCREEN-LINEAR";

}  // namespace

std::string_view classifier_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kAudio: return "audio";
    case ClassifierKind::kLanguage: return "language";
    case ClassifierKind::kDisfluency: return "disfluency";
    case ClassifierKind::kInteractivity: return "interactivity";
  }
  return "?";
}

ClassifierKind parse_classifier(std::string_view name) {
  for (ClassifierKind k : kAllClassifiers) {
    if (classifier_name(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown classifier '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

VectorXd InteractionalFeatures::as_vector() const {
  VectorXd v(kDim);
  v << turn_length_mean, floor_control_ratio, standardized_pause_rate, phonation_rate,
      speaking_rate;
  return v;
}

InteractionalFeatures compute_interactional_features(const DialogueBlock& block,
                                                     std::span<const TimeSpan> pauses) {
  if (block.pairs.empty()) throw Error(ErrorCode::kEmptyBlock, "block has no turn pairs");
  double words = 0, human_time = 0, robot_time = 0, covered = 0, pause_time = 0;
  for (const TurnPair& p : block.pairs) {
    words += static_cast<double>(p.human.tokens.size());
    human_time += p.human.duration();
    robot_time += p.robot.duration();
    for (const TimeSpan& s : pauses) covered += overlap(s, p.human.t_start, p.human.t_end);
  }
  for (const TimeSpan& s : pauses) pause_time += std::max(0.0, s.duration());
  const double speech = std::max(0.0, human_time - covered);

  InteractionalFeatures f;
  f.turn_length_mean = words / static_cast<double>(block.pairs.size());
  f.floor_control_ratio = speech + robot_time > 0 ? speech / (speech + robot_time) : 0.0;
  f.standardized_pause_rate = words / std::max<double>(1.0, static_cast<double>(pauses.size()));
  const double spoken = speech + pause_time;
  f.phonation_rate = spoken > 0 ? speech / spoken : 0.0;
  f.speaking_rate = spoken > 0 ? words / (spoken / 60.0) : 0.0;
  return f;
}

std::vector<TimeSpan> latency_pauses(const DialogueBlock& block, double min_s, double max_s) {
  std::vector<TimeSpan> out;
  for (std::size_t i = 1; i < block.pairs.size(); ++i) {
    const Utterance& h = block.pairs[i].human;
    if (h.is_silence()) continue;
    const double prev_end = block.pairs[i - 1].robot.t_end;
    const double gap = h.t_start - prev_end;
    if (gap >= min_s && gap < max_s) out.push_back({prev_end, h.t_start});
  }
  return out;
}

// ---------------------------------------------------------------------------

VectorXd LinearSoftmaxModel::standardize(const VectorXd& f) const {
  return (f - mean).cwiseQuotient(scale);
}

DegreeDistribution interactivity_classify(const LinearSoftmaxModel& model,
                                          const InteractionalFeatures& f) {
  return to_distribution(softmax(model.weights * model.standardize(f.as_vector()) + model.bias));
}

LinearSoftmaxModel fit_linear_softmax(std::span<const InteractionalFeatures> features,
                                      std::span<const int> labels, const LinearTrainConfig& cfg) {
  if (features.empty()) throw Error(ErrorCode::kEmptyDataset, "no interactional samples");
  if (features.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "features and labels differ in length");
  }
  const auto n = static_cast<double>(features.size());
  LinearSoftmaxModel m;
  std::vector<VectorXd> xs;
  for (const InteractionalFeatures& f : features) xs.push_back(f.as_vector());
  m.mean.setZero();
  for (const VectorXd& x : xs) m.mean += x;
  m.mean /= n;
  VectorXd var = VectorXd::Zero(InteractionalFeatures::kDim);
  for (const VectorXd& x : xs) var += (x - m.mean).cwiseAbs2();
  m.scale = (var / n).cwiseSqrt();
  for (Eigen::Index i = 0; i < m.scale.size(); ++i) {
    if (!(m.scale[i] > 1e-8)) m.scale[i] = 1.0;
  }
  for (VectorXd& x : xs) x = m.standardize(x);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Eigen::MatrixXd gw = cfg.l2 * m.weights;
    VectorXd gb = VectorXd::Zero(kNumDegrees);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      VectorXd d = softmax(m.weights * xs[i] + m.bias);
      d[labels[i]] -= 1.0;
      gw.noalias() += d * xs[i].transpose() / n;
      gb += d / n;
    }
    m.weights -= cfg.learning_rate * gw;
    m.bias -= cfg.learning_rate * gb;
  }
  return m;
}

void save_linear_model(const LinearSoftmaxModel& model, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kLinearMagic << " 1\n";
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    out << "w" << r << ' ';
    write_row(out, model.weights.row(r).transpose());
  }
  out << "bias ";
  write_row(out, model.bias);
  out << "mean ";
  write_row(out, model.mean);
  out << "scale ";
  write_row(out, model.scale);
  std::ofstream file(path, std::ios::trunc);
  if (!file || !(file << out.str())) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  }
}

LinearSoftmaxModel load_linear_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string magic, version;
  if (!(in >> magic >> version) || magic != kLinearMagic) bad_linear("not a linear model");
  if (version != "1") bad_linear("unsupported version " + version);
  LinearSoftmaxModel m;
  constexpr auto kD = static_cast<Eigen::Index>(InteractionalFeatures::kDim);
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    m.weights.row(r) = read_row(in, "w" + std::to_string(r), kD).transpose();
  }
  m.bias = read_row(in, "bias", kNumDegrees);
  m.mean = read_row(in, "mean", kD);
  m.scale = read_row(in, "scale", kD);
  return m;
}

// ---------------------------------------------------------------------------

DegreeDistribution audio_classify(const BiGRUClassifier& model, std::span<const VectorXd> frames) {
  return classify(model, frames);
}

DegreeDistribution language_classify(const BiGRUClassifier& model,
                                     std::span<const VectorXd> embedded) {
  return classify(model, embedded);
}

DegreeDistribution disfluency_classify(const BiGRUClassifier& model, std::span<const VectorXd> fused) {
  return classify(model, fused);
}

std::vector<TimeSpan> uniform_token_spans(std::size_t n_tokens, double duration_s) {
  std::vector<TimeSpan> out;
  const double step = n_tokens ? duration_s / static_cast<double>(n_tokens) : 0.0;
  for (std::size_t i = 0; i < n_tokens; ++i) {
    out.push_back({step * static_cast<double>(i), step * static_cast<double>(i + 1)});
  }
  return out;
}

Sequence disfluency_features(const Vocabulary& vocab, std::span<const std::string> tokens,
                             const AcousticAnalysis* analysis,
                             std::span<const TimeSpan> token_spans) {
  if (analysis && token_spans.size() != tokens.size()) {
    throw Error(ErrorCode::kAlignmentError,
                std::to_string(tokens.size()) + " tokens but " +
                    std::to_string(token_spans.size()) + " token timings");
  }
  const auto v = static_cast<Eigen::Index>(vocab.size());
  Sequence out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    VectorXd x = VectorXd::Zero(v + static_cast<Eigen::Index>(kProsodicSlots));
    x[static_cast<Eigen::Index>(vocab.index_of(tokens[i]))] = 1.0;
    if (analysis && !analysis->frames.empty()) {
      const double rate = analysis->sample_rate;
      const double win = static_cast<double>(analysis->spec.window_samples(analysis->sample_rate)) / rate;
      const double hop = static_cast<double>(analysis->spec.hop_samples(analysis->sample_rate)) / rate;
      const auto& frames = analysis->frames;
      double f0 = 0, inten = 0, stab = 0;
      int voiced = 0, n = 0;
      auto add = [&](const ProsodicFrame& f) {
        if (f.voiced) {
          f0 += f.f0_hz;
          ++voiced;
        }
        inten += f.intensity_db;
        stab += f.stability;
        ++n;
      };
      for (std::size_t k = 0; k < frames.size(); ++k) {
        const double centre = static_cast<double>(k) * hop + win / 2;
        if (centre >= token_spans[i].start_s && centre < token_spans[i].end_s) add(frames[k]);
      }
      if (n == 0) {
        // Span shorter than a hop: use the nearest frame.
        const double mid = (token_spans[i].start_s + token_spans[i].end_s) / 2;
        const double k = std::clamp(std::round((mid - win / 2) / hop), 0.0,
                                    static_cast<double>(frames.size() - 1));
        add(frames[static_cast<std::size_t>(k)]);
      }
      x[v] = voiced ? f0 / voiced : 0.0;
      x[v + 1] = inten / n;
      x[v + 2] = stab / n;
    }
    out.push_back(std::move(x));
  }
  return out;
}

DisfluencyInventory& DisfluencyInventory::operator+=(const DisfluencyInventory& o) {
  restart += o.restart;
  repetition += o.repetition;
  correction += o.correction;
  filler += o.filler;
  return *this;
}

DisfluencyInventory count_disfluencies(std::span<const std::string> tokens) {
  DisfluencyInventory inv;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (is_filler(t)) ++inv.filler;
    if (t.size() > 1 && t.back() == '-') ++inv.restart;
    if (i > 0 && t == tokens[i - 1]) ++inv.repetition;
    // A repair marker only counts when something follows it.
    const bool has_more = i + 1 < tokens.size();
    if ((t == "no" || t == "sorry") && has_more) ++inv.correction;
    if (t == "i" && i + 2 < tokens.size() && tokens[i + 1] == "mean") ++inv.correction;
  }
  return inv;
}

// ---------------------------------------------------------------------------

DegreeDistribution mean_distribution(std::span<const DegreeDistribution> ds) {
  if (ds.empty()) throw Error(ErrorCode::kWrongArity, "no distributions to average");
  std::array<double, kNumDegrees> sum{};
  for (const DegreeDistribution& d : ds) {
    for (std::size_t i = 0; i < kNumDegrees; ++i) sum[i] += d[i];
  }
  for (double& s : sum) s /= static_cast<double>(ds.size());
  return normalize_distribution(sum);
}

DegreeDistribution stage1_average(std::span<const DegreeDistribution> six) {
  if (six.size() != kPairsPerBlock) {
    throw Error(ErrorCode::kWrongArity, "expected 6 distributions, got " + std::to_string(six.size()));
  }
  return mean_distribution(six);
}

VoteResult stage2_vote(std::span<const VoteInput> results) {
  if (results.size() != kNumClassifiers) {
    throw Error(ErrorCode::kWrongArity, "expected 4 votes, got " + std::to_string(results.size()));
  }
  std::array<int, kNumDegrees> count{};
  std::array<double, kNumDegrees> mass{};
  for (const VoteInput& r : results) {
    ++count[static_cast<std::size_t>(r.label)];
    for (std::size_t i = 0; i < kNumDegrees; ++i) mass[i] += r.distribution[i];
  }
  const int top = *std::max_element(count.begin(), count.end());
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < kNumDegrees; ++i) {
    if (count[i] == top) tied.push_back(i);
  }
  if (tied.size() == 1) return {static_cast<DiagnosisDegree>(tied[0]), false};
  // Iterating upward with >= leaves the most severe label among equal masses.
  std::size_t best = tied[0];
  for (std::size_t i : tied) {
    if (mass[i] >= mass[best]) best = i;
  }
  return {static_cast<DiagnosisDegree>(best), true};
}

// ---------------------------------------------------------------------------

DetectorModels DetectorModels::untrained(std::size_t audio_dim, Vocabulary vocab,
                                         EmbeddingTable embeddings, std::size_t hidden_dim) {
  DetectorModels m{
      .audio = BiGRUClassifier::zeros(audio_dim, hidden_dim),
      .language = BiGRUClassifier::zeros(embeddings.dim(), hidden_dim),
      .disfluency = BiGRUClassifier::zeros(vocab.size() + kProsodicSlots, hidden_dim),
      .interactivity = {},
      .vocab = std::move(vocab),
      .embeddings = std::move(embeddings),
  };
  return m;
}

void DetectorModels::save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  save_model(audio, dir / "audio.model");
  save_model(language, dir / "language.model");
  save_model(disfluency, dir / "disfluency.model");
  save_linear_model(interactivity, dir / "interactivity.linear");
  vocab.save(dir / "vocab.txt");
  std::ofstream meta(dir / "embedding.meta");
  meta << "dim " << embeddings.dim() << "\nseed " << embeddings.seed() << '\n';
  if (!meta) throw Error(ErrorCode::kIoError, "cannot write embedding.meta");
  if (embeddings.known_size() > 0) embeddings.save(dir / "embeddings.txt");
}

DetectorModels DetectorModels::load(const std::filesystem::path& dir) {
  DetectorModels m;
  m.audio = load_model(dir / "audio.model", kNumDegrees);
  m.language = load_model(dir / "language.model", kNumDegrees);
  m.disfluency = load_model(dir / "disfluency.model", kNumDegrees);
  m.interactivity = load_linear_model(dir / "interactivity.linear");
  m.vocab = Vocabulary::load(dir / "vocab.txt");

  std::size_t dim = 16;
  std::uint64_t seed = 0x5eedULL;
  if (std::ifstream meta(dir / "embedding.meta"); meta) {
    std::string k1, k2;
    meta >> k1 >> dim >> k2 >> seed;
    if (!meta || k1 != "dim" || k2 != "seed") {
      throw Error(ErrorCode::kFormatVersionMismatch, "bad embedding.meta");
    }
  }
  m.embeddings = std::filesystem::exists(dir / "embeddings.txt")
                     ? EmbeddingTable::load(dir / "embeddings.txt", seed)
                     : EmbeddingTable(dim, seed);
  if (m.language.input_dim() != m.embeddings.dim() ||
      m.disfluency.input_dim() != m.vocab.size() + kProsodicSlots) {
    throw Error(ErrorCode::kDimMismatch, "models in " + dir.string() +
                                             " disagree with the vocabulary or embeddings");
  }
  return m;
}

Sequence audio_input(const UtteranceSignals& signals) {
  return signals.audio_frames.value_or(Sequence{});
}

Sequence language_input(const DetectorModels& models, const Utterance& human) {
  return embed_sequence(models.embeddings, human.tokens);
}

Sequence disfluency_input(const DetectorModels& models, const Utterance& human,
                          const UtteranceSignals& signals) {
  const AcousticAnalysis* a = signals.analysis ? &*signals.analysis : nullptr;
  return disfluency_features(models.vocab, human.tokens, a, signals.token_spans);
}

BlockVerdict detect_block(const DialogueBlock& block, const DetectorModels& models,
                          std::span<const UtteranceSignals> signals,
                          std::span<const TimeSpan> pauses) {
  if (block.pairs.empty()) throw Error(ErrorCode::kEmptyBlock, "block has no turn pairs");
  if (!signals.empty() && signals.size() != block.pairs.size()) {
    throw Error(ErrorCode::kLengthMismatch, "signals must match the block's turn pairs");
  }
  const UtteranceSignals none;
  std::array<std::vector<DegreeDistribution>, 3> per_pair;
  BlockVerdict v;
  for (std::size_t i = 0; i < block.pairs.size(); ++i) {
    const Utterance& human = block.pairs[i].human;
    const UtteranceSignals& sig = signals.empty() ? none : signals[i];
    v.disfluencies += count_disfluencies(human.tokens);

    const Sequence audio = audio_input(sig);
    per_pair[0].push_back(audio.empty() ? DegreeDistribution() : audio_classify(models.audio, audio));
    if (human.tokens.empty()) {
      per_pair[1].emplace_back();
      per_pair[2].emplace_back();
      continue;
    }
    per_pair[1].push_back(language_classify(models.language, language_input(models, human)));
    per_pair[2].push_back(disfluency_classify(models.disfluency, disfluency_input(models, human, sig)));
  }
  // Blocks are six pairs unless the service was configured otherwise.
  for (std::size_t k = 0; k < 3; ++k) v.distributions[k] = mean_distribution(per_pair[k]);
  v.features = compute_interactional_features(block, pauses);
  v.distributions[3] = interactivity_classify(models.interactivity, v.features);

  std::array<VoteInput, kNumClassifiers> inputs{
      VoteInput{DiagnosisDegree::kNonAD, {}}, VoteInput{DiagnosisDegree::kNonAD, {}},
      VoteInput{DiagnosisDegree::kNonAD, {}}, VoteInput{DiagnosisDegree::kNonAD, {}}};
  for (std::size_t k = 0; k < kNumClassifiers; ++k) {
    v.votes[k] = v.distributions[k].argmax();
    inputs[k] = {v.votes[k], v.distributions[k]};
  }
  const VoteResult r = stage2_vote(inputs);
  v.final = r.final;
  v.tie_broken = r.tie_broken;
  return v;
}

}  // namespace adscreen
