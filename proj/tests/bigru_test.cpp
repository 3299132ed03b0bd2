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

#include "adscreen/bigru.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "adscreen/error.hpp"
#include "adscreen/random.hpp"
#include "test_util.hpp"

namespace adscreen {
namespace {

using Eigen::VectorXd;
using testing::code_of;
using testing::TempDir;

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

GRUCellParams ones_cell() {
  GRUCellParams c = GRUCellParams::zeros(1, 1);
  c.w_update.setOnes();
  c.u_update.setOnes();
  c.w_reset.setOnes();
  c.u_reset.setOnes();
  c.w_candidate.setOnes();
  c.u_candidate.setOnes();
  return c;
}

TEST(GruStepTest, ScalarOracle) {
  // z = sigmoid(1.5), r = sigmoid(1.5), h~ = tanh(1 + 0.5 r).
  const VectorXd h = gru_step(ones_cell(), vec({1.0}), vec({0.5}));
  EXPECT_NEAR(h[0], 0.8165945318562012, 1e-12);
}

TEST(GruStepTest, ZeroWeights) {
  const GRUCellParams c = GRUCellParams::zeros(1, 1);
  // z = 0.5, h~ = 0.
  EXPECT_NEAR(gru_step(c, vec({3.0}), vec({0.8}))[0], 0.4, 1e-15);
  EXPECT_EQ(gru_step(c, vec({3.0}), vec({0.0}))[0], 0.0);
}

TEST(GruStepTest, ShapeMismatch) {
  const GRUCellParams c = GRUCellParams::zeros(3, 2);
  EXPECT_EQ(code_of([&] { gru_step(c, vec({1, 2}), vec({0, 0})); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([&] { gru_step(c, vec({1, 2, 3}), vec({0})); }), ErrorCode::kShapeMismatch);
}

Sequence fixed_input() {
  return {vec({0.5, -0.2, 0.1}), vec({0.3, 0.8, -0.5}), vec({-0.7, 0.4, 0.9})};
}

TEST(BiGruTest, SeededForwardOracle) {
  const BiGRUClassifier m = BiGRUClassifier::random(3, 2, 4, 42);
  const Sequence xs = fixed_input();
  const auto states = bigru_forward(m, xs);
  const double expect[3][4] = {
      {-0.022699038796194018, -0.0632375694709959, -0.03749022691983148, 0.002859909658206476},
      {-0.03828457913471718, -0.06142350504110066, -0.035582231631991965, 0.025749355638581717},
      {-0.06914755265569501, -0.02719846927719423, -0.03919975926775159, 0.06846732887049616}};
  ASSERT_EQ(states.size(), 3u);
  for (int t = 0; t < 3; ++t) {
    ASSERT_EQ(states[t].size(), 4);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(states[t][k], expect[t][k], 1e-12) << t << "," << k;
  }
  const VectorXd p = classify_probs(m, xs);
  const double probs[4] = {0.2415684000865809, 0.27002465553940946, 0.240914085336469,
                           0.24749285903754067};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(p[k], probs[k], 1e-12);
  EXPECT_EQ(classify(m, xs).argmax(), DiagnosisDegree::kMild);
}

TEST(BiGruTest, BackwardMatchesForwardOfReversed) {
  BiGRUClassifier m = BiGRUClassifier::random(3, 4, 4, 9, 0.5);
  m.backward = m.forward;
  Sequence xs = fixed_input();
  xs.push_back(vec({0.1, 0.1, -0.3}));
  Sequence rev(xs.rbegin(), xs.rend());
  const auto a = bigru_forward(m, xs);
  const auto b = bigru_forward(m, rev);
  const std::size_t n = xs.size();
  for (std::size_t t = 0; t < n; ++t) {
    EXPECT_TRUE(a[t].tail(4).isApprox(b[n - 1 - t].head(4), 1e-14));
  }
}

TEST(BiGruTest, ZeroHeadIsUniform) {
  BiGRUClassifier m = BiGRUClassifier::random(3, 2, 4, 1);
  m.head_weight.setZero();
  m.head_bias.setZero();
  const VectorXd p = classify_probs(m, fixed_input());
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(p[k], 0.25);
  std::vector<LabeledSequence> batch = {{fixed_input(), 2}};
  EXPECT_NEAR(mean_loss(m, batch), std::log(4.0), 1e-12);
}

TEST(BiGruTest, ErrorsOnBadInput) {
  const BiGRUClassifier m = BiGRUClassifier::random(3, 2, 4, 1);
  EXPECT_EQ(code_of([&] { bigru_forward(m, Sequence{}); }), ErrorCode::kEmptySequence);
  EXPECT_EQ(code_of([&] { bigru_forward(m, Sequence{vec({1, 2})}); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([&] { loss_and_gradients(m, {}); }), ErrorCode::kEmptyBatch);
}

std::vector<LabeledSequence> random_batch(Rng& rng, std::size_t n, std::size_t len, std::size_t d) {
  std::vector<LabeledSequence> out(n);
  for (LabeledSequence& s : out) {
    for (std::size_t t = 0; t < len; ++t) {
      VectorXd x(static_cast<Eigen::Index>(d));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
      s.xs.push_back(x);
    }
    s.label = static_cast<int>(rng.index(4));
  }
  return out;
}

TEST(GradientTest, MatchesFiniteDifferences) {
  constexpr double kEps = 1e-5;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    BiGRUClassifier m = BiGRUClassifier::random(3, 4, 4, seed, 0.5);
    Rng rng(seed + 100);
    const auto batch = random_batch(rng, 3, 5, 3);
    LossAndGradients lg = loss_and_gradients(m, batch);
    EXPECT_NEAR(lg.loss, mean_loss(m, batch), 1e-12);
    auto params = parameter_tensors(m);
    auto grads = parameter_tensors(lg.gradients);
    ASSERT_EQ(params.size(), grads.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].size; ++i) {
        double& w = params[k].data[i];
        const double saved = w;
        w = saved + kEps;
        const double up = mean_loss(m, batch);
        w = saved - kEps;
        const double down = mean_loss(m, batch);
        w = saved;
        const double numeric = (up - down) / (2 * kEps);
        const double analytic = grads[k].data[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        EXPECT_LT(std::abs(analytic - numeric) / denom, 1e-4)
            << params[k].name << "[" << i << "] seed " << seed;
      }
    }
  }
}

TEST(GradientTest, DuplicatedBatchKeepsMeanLoss) {
  const BiGRUClassifier m = BiGRUClassifier::random(3, 4, 4, 5, 0.3);
  Rng rng(8);
  auto batch = random_batch(rng, 4, 3, 3);
  const double once = mean_loss(m, batch);
  auto twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  EXPECT_NEAR(mean_loss(m, twice), once, 1e-12);
}

// Class k: constant sequence along axis k with a little noise.
std::vector<LabeledSequence> toy_dataset(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledSequence> data;
  for (int i = 0; i < 20; ++i) {
    LabeledSequence s;
    s.label = i % 4;
    const std::size_t len = 2 + rng.index(4);
    for (std::size_t t = 0; t < len; ++t) {
      VectorXd x = VectorXd::Zero(4);
      for (Eigen::Index d = 0; d < 4; ++d) x[d] = 0.1 * rng.normal();
      x[s.label] += 1.0;
      s.xs.push_back(x);
    }
    data.push_back(std::move(s));
  }
  return data;
}

TEST(TrainTest, LearnsSeparableToy) {
  const auto data = toy_dataset(17);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.5;
  cfg.batch_size = 4;
  const TrainResult r = train(BiGRUClassifier::random(4, 8, 4, 3), data, cfg);
  ASSERT_EQ(r.loss_history.size(), 200u);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
  EXPECT_DOUBLE_EQ(accuracy(r.model, data), 1.0);
}

TEST(TrainTest, DeterministicForSeed) {
  const auto data = toy_dataset(4);
  TrainConfig cfg;
  cfg.epochs = 5;
  const TrainResult a = train(BiGRUClassifier::random(4, 3, 4, 3), data, cfg);
  const TrainResult b = train(BiGRUClassifier::random(4, 3, 4, 3), data, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.model.head_weight, b.model.head_weight);
}

TEST(TrainTest, ZeroLearningRateKeepsLoss) {
  const auto data = toy_dataset(4);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 0.0;
  const TrainResult r = train(BiGRUClassifier::random(4, 3, 4, 3), data, cfg);
  for (double l : r.loss_history) EXPECT_EQ(l, r.loss_history.front());
  EXPECT_EQ(code_of([&] { train(r.model, std::vector<LabeledSequence>{}, cfg); }),
            ErrorCode::kEmptyDataset);
}

TEST(ModelIoTest, RoundTripIsExact) {
  TempDir dir("model");
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto data = toy_dataset(2);
  const BiGRUClassifier m = train(BiGRUClassifier::random(4, 3, 4, 11), data, cfg).model;
  ASSERT_FALSE(m.input_norm.is_identity());
  save_model(m, dir.path() / "m.txt");
  BiGRUClassifier back = load_model(dir.path() / "m.txt", 4);
  BiGRUClassifier orig = m;
  const auto a = parameter_tensors(orig);
  const auto b = parameter_tensors(back);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].size; ++i) ASSERT_EQ(a[k].data[i], b[k].data[i]);
  }
  EXPECT_EQ(back.input_norm.mean, m.input_norm.mean);
  EXPECT_EQ(back.input_norm.scale, m.input_norm.scale);
  EXPECT_EQ(back.seed, 11u);
  EXPECT_EQ(classify_probs(back, data[0].xs), classify_probs(m, data[0].xs));
}

TEST(ModelIoTest, MatricesAreRowMajor) {
  TempDir dir("model");
  BiGRUClassifier m = BiGRUClassifier::zeros(3, 2, 4);
  m.forward.w_update << 1, 2, 3, 4, 5, 6;
  save_model(m, dir.path() / "m.txt");
  std::ifstream in(dir.path() / "m.txt");
  std::string line;
  while (std::getline(in, line) && line != "tensor forward.w_update 2 3") {
  }
  std::getline(in, line);
  EXPECT_EQ(line, "1 2 3 4 5 6");
}

TEST(ModelIoTest, RejectsBadFiles) {
  TempDir dir("model");
  save_model(BiGRUClassifier::random(3, 2, 4, 1), dir.path() / "m.txt");
  EXPECT_EQ(code_of([&] { load_model(dir.path() / "m.txt", 3); }),
            ErrorCode::kFormatVersionMismatch);
  std::ifstream in(dir.path() / "m.txt");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  std::ofstream(dir.path() / "cut.txt") << text.substr(0, text.size() / 2);
  EXPECT_EQ(code_of([&] { load_model(dir.path() / "cut.txt"); }),
            ErrorCode::kFormatVersionMismatch);
  std::string v2 = text;
  v2.replace(v2.find(" 1\n"), 3, " 2\n");
  std::ofstream(dir.path() / "v2.txt") << v2;
  EXPECT_EQ(code_of([&] { load_model(dir.path() / "v2.txt"); }),
            ErrorCode::kFormatVersionMismatch);
  EXPECT_EQ(code_of([&] { load_model(dir.path() / "absent.txt"); }), ErrorCode::kIoError);
}

}  // namespace
}  // namespace adscreen
