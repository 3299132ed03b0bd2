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

#include <cmath>
#include <numeric>

#include "adscreen/error.hpp"
#include "adscreen/random.hpp"

namespace adscreen {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd sigmoid(const VectorXd& a) {
  return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

VectorXd softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

struct StepCache {
  VectorXd x, h_prev, z, r, candidate, h;
};

StepCache cell_forward(const GRUCellParams& c, const VectorXd& x, const VectorXd& h_prev) {
  StepCache s;
  s.x = x;
  s.h_prev = h_prev;
  s.z = sigmoid(c.w_update * x + c.u_update * h_prev + c.b_update);
  s.r = sigmoid(c.w_reset * x + c.u_reset * h_prev + c.b_reset);
  s.candidate = (c.w_candidate * x + c.u_candidate * s.r.cwiseProduct(h_prev) + c.b_candidate)
                    .array()
                    .tanh()
                    .matrix();
  s.h = (VectorXd::Ones(s.z.size()) - s.z).cwiseProduct(h_prev) + s.z.cwiseProduct(s.candidate);
  return s;
}

// Runs the cell over xs in the given order; caches every step.
std::vector<StepCache> run_cell(const GRUCellParams& c, const std::vector<VectorXd>& xs,
                                bool reverse) {
  std::vector<StepCache> steps;
  steps.reserve(xs.size());
  VectorXd h = VectorXd::Zero(static_cast<Eigen::Index>(c.hidden_dim()));
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const VectorXd& x = reverse ? xs[xs.size() - 1 - k] : xs[k];
    steps.push_back(cell_forward(c, x, h));
    h = steps.back().h;
  }
  return steps;
}

// Backpropagates dh (gradient on the last state) through the cached steps,
// accumulating into g.
void cell_backward(const GRUCellParams& c, const std::vector<StepCache>& steps, VectorXd dh,
                   GRUCellParams& g) {
  for (std::size_t k = steps.size(); k-- > 0;) {
    const StepCache& s = steps[k];
    const VectorXd one = VectorXd::Ones(s.z.size());
    const VectorXd dz = dh.cwiseProduct(s.candidate - s.h_prev);
    const VectorXd dcand = dh.cwiseProduct(s.z);
    VectorXd dh_prev = dh.cwiseProduct(one - s.z);

    const VectorXd da_cand =
        dcand.cwiseProduct((one.array() - s.candidate.array().square()).matrix());
    const VectorXd rh = s.r.cwiseProduct(s.h_prev);
    g.w_candidate.noalias() += da_cand * s.x.transpose();
    g.u_candidate.noalias() += da_cand * rh.transpose();
    g.b_candidate += da_cand;
    const VectorXd drh = c.u_candidate.transpose() * da_cand;
    const VectorXd dr = drh.cwiseProduct(s.h_prev);
    dh_prev += drh.cwiseProduct(s.r);

    const VectorXd da_z = dz.cwiseProduct(s.z.cwiseProduct(one - s.z));
    g.w_update.noalias() += da_z * s.x.transpose();
    g.u_update.noalias() += da_z * s.h_prev.transpose();
    g.b_update += da_z;
    dh_prev.noalias() += c.u_update.transpose() * da_z;

    const VectorXd da_r = dr.cwiseProduct(s.r.cwiseProduct(one - s.r));
    g.w_reset.noalias() += da_r * s.x.transpose();
    g.u_reset.noalias() += da_r * s.h_prev.transpose();
    g.b_reset += da_r;
    dh_prev.noalias() += c.u_reset.transpose() * da_r;

    dh = std::move(dh_prev);
  }
}

std::vector<VectorXd> prepare_inputs(const BiGRUClassifier& model,
                                     std::span<const VectorXd> xs) {
  if (xs.empty()) throw Error(ErrorCode::kEmptySequence, "empty input sequence");
  std::vector<VectorXd> out;
  out.reserve(xs.size());
  for (const VectorXd& x : xs) {
    if (static_cast<std::size_t>(x.size()) != model.input_dim()) {
      throw Error(ErrorCode::kShapeMismatch, "input of dim " + std::to_string(x.size()) +
                                                 ", model expects " +
                                                 std::to_string(model.input_dim()));
    }
    out.push_back(model.input_norm.apply(x));
  }
  return out;
}

VectorXd pooled_state(const std::vector<StepCache>& fwd, const std::vector<StepCache>& bwd) {
  const Eigen::Index h = fwd.back().h.size();
  VectorXd pooled(2 * h);
  pooled << fwd.back().h, bwd.back().h;
  return pooled;
}

void fill_uniform(std::vector<NamedTensor> tensors, Rng& rng, double scale) {
  for (const NamedTensor& t : tensors) {
    for (std::size_t i = 0; i < t.size; ++i) t.data[i] = rng.uniform(-scale, scale);
  }
}

}  // namespace

GRUCellParams GRUCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  const auto d = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden_dim);
  GRUCellParams c;
  c.w_update = MatrixXd::Zero(h, d);
  c.u_update = MatrixXd::Zero(h, h);
  c.b_update = VectorXd::Zero(h);
  c.w_reset = MatrixXd::Zero(h, d);
  c.u_reset = MatrixXd::Zero(h, h);
  c.b_reset = VectorXd::Zero(h);
  c.w_candidate = MatrixXd::Zero(h, d);
  c.u_candidate = MatrixXd::Zero(h, h);
  c.b_candidate = VectorXd::Zero(h);
  return c;
}

VectorXd gru_step(const GRUCellParams& cell, const VectorXd& x, const VectorXd& h_prev) {
  if (static_cast<std::size_t>(x.size()) != cell.input_dim() ||
      static_cast<std::size_t>(h_prev.size()) != cell.hidden_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "gru_step operand sizes do not match the cell");
  }
  return cell_forward(cell, x, h_prev).h;
}

VectorXd InputStandardizer::apply(const VectorXd& x) const {
  if (is_identity()) return x;
  return (x - mean).cwiseQuotient(scale);
}

InputStandardizer InputStandardizer::fit(std::span<const Sequence> sequences) {
  InputStandardizer s;
  Eigen::Index dim = 0;
  std::size_t n = 0;
  for (const Sequence& seq : sequences) {
    for (const VectorXd& x : seq) {
      if (dim == 0) {
        dim = x.size();
        s.mean = VectorXd::Zero(dim);
        s.scale = VectorXd::Zero(dim);
      }
      s.mean += x;
      ++n;
    }
  }
  if (n == 0) return {};
  s.mean /= static_cast<double>(n);
  for (const Sequence& seq : sequences) {
    for (const VectorXd& x : seq) s.scale += (x - s.mean).cwiseAbs2();
  }
  s.scale = (s.scale / static_cast<double>(n)).cwiseSqrt();
  // Constant dimensions pass through centred but unscaled.
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(s.scale[i] > 1e-8)) s.scale[i] = 1.0;
  }
  return s;
}

BiGRUClassifier BiGRUClassifier::zeros(std::size_t input_dim, std::size_t hidden_dim,
                                       std::size_t num_classes) {
  BiGRUClassifier m;
  m.forward = GRUCellParams::zeros(input_dim, hidden_dim);
  m.backward = GRUCellParams::zeros(input_dim, hidden_dim);
  m.head_weight = MatrixXd::Zero(static_cast<Eigen::Index>(num_classes),
                                 static_cast<Eigen::Index>(2 * hidden_dim));
  m.head_bias = VectorXd::Zero(static_cast<Eigen::Index>(num_classes));
  return m;
}

BiGRUClassifier BiGRUClassifier::random(std::size_t input_dim, std::size_t hidden_dim,
                                        std::size_t num_classes, std::uint64_t seed,
                                        double init_scale) {
  BiGRUClassifier m = zeros(input_dim, hidden_dim, num_classes);
  m.seed = seed;
  Rng rng(seed);
  fill_uniform(parameter_tensors(m), rng, init_scale);
  return m;
}

std::vector<NamedTensor> parameter_tensors(BiGRUClassifier& m) {
  std::vector<NamedTensor> out;
  auto add = [&out](std::string name, auto& t) {
    out.push_back({std::move(name), t.data(), static_cast<std::size_t>(t.rows()),
                   static_cast<std::size_t>(t.cols()), static_cast<std::size_t>(t.size())});
  };
  for (auto [prefix, cell] : {std::pair<const char*, GRUCellParams*>{"forward", &m.forward},
                              {"backward", &m.backward}}) {
    const std::string p(prefix);
    add(p + ".w_update", cell->w_update);
    add(p + ".u_update", cell->u_update);
    add(p + ".b_update", cell->b_update);
    add(p + ".w_reset", cell->w_reset);
    add(p + ".u_reset", cell->u_reset);
    add(p + ".b_reset", cell->b_reset);
    add(p + ".w_candidate", cell->w_candidate);
    add(p + ".u_candidate", cell->u_candidate);
    add(p + ".b_candidate", cell->b_candidate);
  }
  add("head.weight", m.head_weight);
  add("head.bias", m.head_bias);
  return out;
}

std::size_t parameter_count(const BiGRUClassifier& model) {
  std::size_t n = 0;
  for (const NamedTensor& t : parameter_tensors(const_cast<BiGRUClassifier&>(model))) n += t.size;
  return n;
}

std::vector<VectorXd> bigru_forward(const BiGRUClassifier& model, std::span<const VectorXd> xs) {
  const std::vector<VectorXd> in = prepare_inputs(model, xs);
  const std::vector<StepCache> fwd = run_cell(model.forward, in, false);
  const std::vector<StepCache> bwd = run_cell(model.backward, in, true);
  const std::size_t n = in.size();
  const Eigen::Index h = static_cast<Eigen::Index>(model.hidden_dim());
  std::vector<VectorXd> out(n, VectorXd(2 * h));
  for (std::size_t t = 0; t < n; ++t) {
    // The backward cell reached position t at its step n - 1 - t.
    out[t] << fwd[t].h, bwd[n - 1 - t].h;
  }
  return out;
}

VectorXd classify_probs(const BiGRUClassifier& model, std::span<const VectorXd> xs) {
  const std::vector<VectorXd> in = prepare_inputs(model, xs);
  const std::vector<StepCache> fwd = run_cell(model.forward, in, false);
  const std::vector<StepCache> bwd = run_cell(model.backward, in, true);
  return softmax(model.head_weight * pooled_state(fwd, bwd) + model.head_bias);
}

DegreeDistribution classify(const BiGRUClassifier& model, std::span<const VectorXd> xs) {
  if (model.num_classes() != kNumDegrees) {
    throw Error(ErrorCode::kShapeMismatch, "degree classifier needs four classes");
  }
  const VectorXd p = classify_probs(model, xs);
  return normalize_distribution({p[0], p[1], p[2], p[3]});
}

LossAndGradients loss_and_gradients(const BiGRUClassifier& model,
                                    std::span<const LabeledSequence> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "empty batch");
  LossAndGradients out;
  out.gradients = BiGRUClassifier::zeros(model.input_dim(), model.hidden_dim(),
                                         model.num_classes());
  out.gradients.input_norm = model.input_norm;
  const Eigen::Index h = static_cast<Eigen::Index>(model.hidden_dim());
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const LabeledSequence& item : batch) {
    if (item.label < 0 || static_cast<std::size_t>(item.label) >= model.num_classes()) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range");
    }
    const std::vector<VectorXd> in = prepare_inputs(model, item.xs);
    const std::vector<StepCache> fwd = run_cell(model.forward, in, false);
    const std::vector<StepCache> bwd = run_cell(model.backward, in, true);
    const VectorXd pooled = pooled_state(fwd, bwd);
    const VectorXd p = softmax(model.head_weight * pooled + model.head_bias);
    out.loss -= std::log(std::max(p[item.label], 1e-300)) * inv_n;

    VectorXd dlogits = p * inv_n;
    dlogits[item.label] -= inv_n;
    out.gradients.head_weight.noalias() += dlogits * pooled.transpose();
    out.gradients.head_bias += dlogits;
    const VectorXd dpooled = model.head_weight.transpose() * dlogits;
    cell_backward(model.forward, fwd, dpooled.head(h), out.gradients.forward);
    cell_backward(model.backward, bwd, dpooled.tail(h), out.gradients.backward);
  }
  return out;
}

double mean_loss(const BiGRUClassifier& model, std::span<const LabeledSequence> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "empty batch");
  double loss = 0.0;
  for (const LabeledSequence& item : batch) {
    const VectorXd p = classify_probs(model, item.xs);
    loss -= std::log(std::max(p[item.label], 1e-300));
  }
  return loss / static_cast<double>(batch.size());
}

TrainResult train(BiGRUClassifier model, std::span<const LabeledSequence> data,
                  const TrainConfig& cfg) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "no training sequences");
  if (cfg.learning_rate < 0.0 || cfg.batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad training configuration");
  }
  if (cfg.fit_standardizer) {
    std::vector<Sequence> seqs;
    seqs.reserve(data.size());
    for (const LabeledSequence& s : data) seqs.push_back(s.xs);
    model.input_norm = InputStandardizer::fit(seqs);
  }

  TrainResult result;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledSequence> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(start + cfg.batch_size, order.size()); ++k) {
        batch.push_back(data[order[k]]);
      }
      LossAndGradients lg = loss_and_gradients(model, batch);
      std::vector<NamedTensor> grads = parameter_tensors(lg.gradients);
      double sq = 0.0;
      for (const NamedTensor& g : grads) {
        for (std::size_t i = 0; i < g.size; ++i) sq += g.data[i] * g.data[i];
      }
      const double norm = std::sqrt(sq);
      const double clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;
      std::vector<NamedTensor> params = parameter_tensors(model);
      for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t i = 0; i < params[t].size; ++i) {
          params[t].data[i] -= cfg.learning_rate * clip * grads[t].data[i];
        }
      }
    }
    result.loss_history.push_back(mean_loss(model, data));
  }
  result.model = std::move(model);
  return result;
}

double accuracy(const BiGRUClassifier& model, std::span<const LabeledSequence> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const LabeledSequence& s : data) {
    const VectorXd p = classify_probs(model, s.xs);
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    if (best == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace adscreen
