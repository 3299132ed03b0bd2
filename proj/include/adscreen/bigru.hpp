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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adscreen/dialogue.hpp"

namespace adscreen {

using Sequence = std::vector<Eigen::VectorXd>;

// Parameters of one GRU cell:
//   z  = sigmoid(W_update x + U_update h_prev + b_update)
//   r  = sigmoid(W_reset x + U_reset h_prev + b_reset)
//   h~ = tanh(W_candidate x + U_candidate (r .* h_prev) + b_candidate)
//   h  = (1 - z) .* h_prev + z .* h~
struct GRUCellParams {
  Eigen::MatrixXd w_update, u_update;
  Eigen::VectorXd b_update;
  Eigen::MatrixXd w_reset, u_reset;
  Eigen::VectorXd b_reset;
  Eigen::MatrixXd w_candidate, u_candidate;
  Eigen::VectorXd b_candidate;

  static GRUCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return static_cast<std::size_t>(w_update.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w_update.rows()); }
};

// Throws kShapeMismatch when x or h_prev do not fit the cell.
Eigen::VectorXd gru_step(const GRUCellParams& cell, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev);

// Per-dimension (x - mean) / scale applied to every input vector. Empty means
// identity.
struct InputStandardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  bool is_identity() const { return mean.size() == 0; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  static InputStandardizer fit(std::span<const Sequence> sequences);
};

// Forward and backward GRU over the sequence; the head reads the final
// forward state concatenated with the final backward state.
struct BiGRUClassifier {
  GRUCellParams forward;
  GRUCellParams backward;
  Eigen::MatrixXd head_weight;  // classes x 2H
  Eigen::VectorXd head_bias;
  InputStandardizer input_norm;
  std::uint64_t seed = 0;

  static BiGRUClassifier zeros(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t num_classes = kNumDegrees);
  // Every parameter uniform in [-init_scale, init_scale].
  static BiGRUClassifier random(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t num_classes, std::uint64_t seed,
                                double init_scale = 0.08);

  std::size_t input_dim() const { return forward.input_dim(); }
  std::size_t hidden_dim() const { return forward.hidden_dim(); }
  std::size_t num_classes() const { return static_cast<std::size_t>(head_weight.rows()); }
};

// View of one parameter tensor; data is column-major (Eigen storage).
struct NamedTensor {
  std::string name;
  double* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t size;
};

// All trainable tensors in a fixed order (standardizer excluded).
std::vector<NamedTensor> parameter_tensors(BiGRUClassifier& model);
std::size_t parameter_count(const BiGRUClassifier& model);

// Per-step states h_t = forward_t ++ backward_t, each of size 2H.
// Throws kEmptySequence.
std::vector<Eigen::VectorXd> bigru_forward(const BiGRUClassifier& model,
                                           std::span<const Eigen::VectorXd> xs);

// Softmax over num_classes().
Eigen::VectorXd classify_probs(const BiGRUClassifier& model, std::span<const Eigen::VectorXd> xs);
// Four-class models only.
DegreeDistribution classify(const BiGRUClassifier& model, std::span<const Eigen::VectorXd> xs);

struct LabeledSequence {
  Sequence xs;
  int label = 0;
};

struct LossAndGradients {
  double loss = 0.0;
  BiGRUClassifier gradients;  // same shapes as the model
};

// Mean cross-entropy over the batch and its gradient by backpropagation
// through time. Throws kEmptyBatch.
LossAndGradients loss_and_gradients(const BiGRUClassifier& model,
                                    std::span<const LabeledSequence> batch);
double mean_loss(const BiGRUClassifier& model, std::span<const LabeledSequence> batch);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 30;
  std::size_t batch_size = 16;
  std::uint64_t seed = 42;
  double clip_norm = 5.0;
  // Fit the input standardizer on the training set before the first epoch.
  bool fit_standardizer = true;
};

struct TrainResult {
  BiGRUClassifier model;
  std::vector<double> loss_history;  // full-dataset loss after each epoch
};

// Mini-batch gradient descent with global-norm clipping. Throws kEmptyDataset.
TrainResult train(BiGRUClassifier model, std::span<const LabeledSequence> data,
                  const TrainConfig& cfg);

double accuracy(const BiGRUClassifier& model, std::span<const LabeledSequence> data);

inline constexpr int kModelFormatVersion = 1;

// Text container: header line with format version, dims, seed, standardizer
// and each tensor as its shape followed by row-major round-trip decimal values.
void save_model(const BiGRUClassifier& model, const std::filesystem::path& path);
// expected_classes = 0 skips the class-count check. Throws kIoError or
// kFormatVersionMismatch.
BiGRUClassifier load_model(const std::filesystem::path& path, std::size_t expected_classes = 0);

}  // namespace adscreen
