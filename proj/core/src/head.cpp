// Copyright 2026 The reggap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "reggap/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "reggap/error.hpp"

namespace reggap {
namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BatchTrace {
  MatrixXd x;   // C x B, already transformed
  MatrixXd z1;  // H1 x B
  MatrixXd keep;  // H1 x B dropout multipliers (0 or 1/(1-p)); empty if none
  MatrixXd a1;  // post-dropout activations
  MatrixXd z2;
  MatrixXd a2;
  Eigen::RowVectorXd y;
};

MatrixXd relu(const MatrixXd& z) { return z.cwiseMax(0.0); }

MatrixXd relu_mask(const MatrixXd& z) {
  return (z.array() > 0.0).cast<double>().matrix();
}

void check_input(const HeadParams& params, std::size_t n) {
  if (n != params.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "head expects " +
                                           std::to_string(params.input_dim()) +
                                           " inputs, got " + std::to_string(n));
  }
}

MatrixXd transform_inputs(const HeadParams& params, MatrixXd x) {
  x.colwise() -= params.input_mean;
  x.array().colwise() *= params.input_scale.array();
  return x;
}

BatchTrace forward_batch(const HeadParams& params, const MatrixXd& raw_x,
                         double dropout_rate, Rng* rng) {
  const HeadTensors& w = params.weights;
  BatchTrace t;
  t.x = transform_inputs(params, raw_x);
  t.z1 = (w.w1 * t.x).colwise() + w.b1;
  t.a1 = relu(t.z1);
  if (rng != nullptr && dropout_rate > 0.0) {
    const double scale = 1.0 / (1.0 - dropout_rate);
    t.keep.resize(t.a1.rows(), t.a1.cols());
    for (Eigen::Index j = 0; j < t.keep.cols(); ++j) {
      for (Eigen::Index i = 0; i < t.keep.rows(); ++i) {
        t.keep(i, j) = rng->uniform01() < dropout_rate ? 0.0 : scale;
      }
    }
    t.a1 = t.a1.cwiseProduct(t.keep);
  }
  t.z2 = (w.w2 * t.a1).colwise() + w.b2;
  t.a2 = relu(t.z2);
  t.y = (w.w3 * t.a2).colwise() + w.b3;
  return t;
}

// Gradient of mean((y - target)^2) over the batch.
HeadTensors backward_batch(const HeadParams& params, const BatchTrace& t,
                           const Eigen::RowVectorXd& target) {
  const HeadTensors& w = params.weights;
  const auto batch = static_cast<double>(target.size());
  HeadTensors g;
  const Eigen::RowVectorXd dy = 2.0 * (t.y - target) / batch;
  g.w3 = dy * t.a2.transpose();
  g.b3 = VectorXd::Constant(1, dy.sum());
  const MatrixXd dz2 = (w.w3.transpose() * dy).cwiseProduct(relu_mask(t.z2));
  g.w2 = dz2 * t.a1.transpose();
  g.b2 = dz2.rowwise().sum();
  MatrixXd dz1 = (w.w2.transpose() * dz2).cwiseProduct(relu_mask(t.z1));
  if (t.keep.size() > 0) dz1 = dz1.cwiseProduct(t.keep);
  g.w1 = dz1 * t.x.transpose();
  g.b1 = dz1.rowwise().sum();
  return g;
}

MatrixXd to_column(std::span<const double> x) {
  MatrixXd m(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = x[i];
  return m;
}

void adam_update(HeadParams& params, const HeadTensors& grad, const HeadConfig& config) {
  // Keras 2.x formulation: bias correction folded into the step size and
  // epsilon added to the raw second-moment root.
  const double iterations = static_cast<double>(params.step);
  const double lr = config.learning_rate / (1.0 + config.decay * iterations);
  params.step += 1;
  const double t = static_cast<double>(params.step);
  const double lr_t = lr * std::sqrt(1.0 - std::pow(config.beta2, t)) /
                      (1.0 - std::pow(config.beta1, t));

  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    p.array() -= lr_t * m.array() / (v.array().sqrt() + config.epsilon);
  };
  update(params.weights.w1, params.m.w1, params.v.w1, grad.w1);
  update(params.weights.b1, params.m.b1, params.v.b1, grad.b1);
  update(params.weights.w2, params.m.w2, params.v.w2, grad.w2);
  update(params.weights.b2, params.m.b2, params.v.b2, grad.b2);
  update(params.weights.w3, params.m.w3, params.v.w3, grad.w3);
  update(params.weights.b3, params.m.b3, params.v.b3, grad.b3);
}

void clip_rows(MatrixXd& w, double max_norm) {
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    const double norm = w.row(r).norm();
    if (norm > max_norm) w.row(r) *= max_norm / norm;
  }
}

// Flat view used by the finite-difference check.
double& parameter_at(HeadTensors& t, std::size_t index) {
  std::size_t offset = index;
  auto pick = [&](auto& tensor) -> double* {
    const auto n = static_cast<std::size_t>(tensor.size());
    if (offset < n) return tensor.data() + offset;
    offset -= n;
    return nullptr;
  };
  if (double* p = pick(t.w1)) return *p;
  if (double* p = pick(t.b1)) return *p;
  if (double* p = pick(t.w2)) return *p;
  if (double* p = pick(t.b2)) return *p;
  if (double* p = pick(t.w3)) return *p;
  if (double* p = pick(t.b3)) return *p;
  fail(ErrorCode::DimensionMismatch, "parameter index out of range");
}

}  // namespace

void validate_head_config(const HeadConfig& config) {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (config.input_dim == 0) bad("input_dim must be positive");
  if (config.hidden1 == 0 || config.hidden2 == 0) bad("hidden sizes must be positive");
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    bad("dropout_rate must lie in [0, 1)");
  }
  if (!(config.max_norm > 0.0)) bad("max_norm must be positive");
  if (!(config.learning_rate > 0.0)) bad("learning_rate must be positive");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0)) bad("beta1 must lie in [0, 1)");
  if (!(config.beta2 >= 0.0 && config.beta2 < 1.0)) bad("beta2 must lie in [0, 1)");
  if (!(config.epsilon > 0.0)) bad("epsilon must be positive");
  if (!(config.decay >= 0.0)) bad("decay must be non-negative");
  if (config.batch_size == 0) bad("batch_size must be positive");
  if (config.epochs == 0) bad("epochs must be positive");
}

HeadTensors HeadTensors::zeros(const HeadConfig& config) {
  const auto c = static_cast<Eigen::Index>(config.input_dim);
  const auto h1 = static_cast<Eigen::Index>(config.hidden1);
  const auto h2 = static_cast<Eigen::Index>(config.hidden2);
  return HeadTensors{MatrixXd::Zero(h1, c), VectorXd::Zero(h1), MatrixXd::Zero(h2, h1),
                     VectorXd::Zero(h2),    MatrixXd::Zero(1, h2), VectorXd::Zero(1)};
}

std::size_t HeadTensors::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

HeadParams init_head(const HeadConfig& config) {
  validate_head_config(config);
  HeadParams p;
  p.weights = HeadTensors::zeros(config);
  p.m = HeadTensors::zeros(config);
  p.v = HeadTensors::zeros(config);
  p.input_mean = VectorXd::Zero(static_cast<Eigen::Index>(config.input_dim));
  p.input_scale = VectorXd::Ones(static_cast<Eigen::Index>(config.input_dim));

  Rng rng(mix_seed(config.seed, 0));
  auto glorot = [&](MatrixXd& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
    }
  };
  glorot(p.weights.w1);
  glorot(p.weights.w2);
  glorot(p.weights.w3);
  return p;
}

double forward(const HeadParams& params, std::span<const double> x, bool training,
               double dropout_rate, Rng* rng) {
  check_input(params, x.size());
  if (training && dropout_rate > 0.0 && rng == nullptr) {
    fail(ErrorCode::InvalidConfig, "training-mode dropout needs a random source");
  }
  const BatchTrace t =
      forward_batch(params, to_column(x), training ? dropout_rate : 0.0, training ? rng : nullptr);
  return t.y(0);
}

void apply_max_norm(HeadTensors& weights, double max_norm) {
  clip_rows(weights.w1, max_norm);
  clip_rows(weights.w2, max_norm);
}

double max_constrained_row_norm(const HeadTensors& weights) {
  return std::max(weights.w1.rowwise().norm().maxCoeff(),
                  weights.w2.rowwise().norm().maxCoeff());
}

double train_epoch(HeadParams& params, std::span<const LabeledEmbedding> data,
                   const HeadConfig& config, std::size_t epoch,
                   const BatchObserver& observer) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no training samples");
  for (const auto& s : data) check_input(params, s.x.size());

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(config.seed + epoch);
  shuffle_rng.shuffle(std::span(order));
  Rng dropout_rng(mix_seed(config.seed + epoch, 1));

  const auto c = static_cast<Eigen::Index>(params.input_dim());
  double total = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), begin + config.batch_size);
    const auto b = static_cast<Eigen::Index>(end - begin);
    MatrixXd x(c, b);
    Eigen::RowVectorXd target(b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const LabeledEmbedding& s = data[order[begin + static_cast<std::size_t>(j)]];
      for (Eigen::Index i = 0; i < c; ++i) x(i, j) = s.x[static_cast<std::size_t>(i)];
      target(j) = s.bmi;
    }
    const BatchTrace trace = forward_batch(params, x, config.dropout_rate, &dropout_rng);
    const double loss = (trace.y - target).squaredNorm() / static_cast<double>(b);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "loss became " << loss << " at epoch " << epoch << " batch " << batch_index
          << " (step " << params.step << ", max |w1| row norm "
          << params.weights.w1.rowwise().norm().maxCoeff() << ")";
      fail(ErrorCode::NonFiniteLoss, msg.str());
    }
    const HeadTensors grad = backward_batch(params, trace, target);
    adam_update(params, grad, config);
    apply_max_norm(params.weights, config.max_norm);
    total += loss * static_cast<double>(b);
    if (observer) observer(params, batch_index, loss);
  }
  return total / static_cast<double>(data.size());
}

void fit_input_transform(HeadParams& params, std::span<const LabeledEmbedding> data,
                         const HeadConfig& config) {
  const auto c = static_cast<Eigen::Index>(params.input_dim());
  params.input_mean = VectorXd::Zero(c);
  params.input_scale = VectorXd::Ones(c);
  if (!config.standardize_inputs || data.empty()) return;
  const auto n = static_cast<double>(data.size());
  for (const auto& s : data) {
    check_input(params, s.x.size());
    for (Eigen::Index i = 0; i < c; ++i) params.input_mean(i) += s.x[static_cast<std::size_t>(i)];
  }
  params.input_mean /= n;
  VectorXd var = VectorXd::Zero(c);
  for (const auto& s : data) {
    for (Eigen::Index i = 0; i < c; ++i) {
      const double d = s.x[static_cast<std::size_t>(i)] - params.input_mean(i);
      var(i) += d * d;
    }
  }
  var /= n;
  for (Eigen::Index i = 0; i < c; ++i) {
    const double sd = std::sqrt(var(i));
    params.input_scale(i) = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

std::vector<double> fit(HeadParams& params, std::span<const LabeledEmbedding> data,
                        const HeadConfig& config,
                        const std::function<void(std::size_t, double)>& on_epoch,
                        const BatchObserver& observer) {
  validate_head_config(config);
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no training samples");
  fit_input_transform(params, data, config);
  std::vector<double> losses;
  losses.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    losses.push_back(train_epoch(params, data, config, epoch, observer));
    if (on_epoch) on_epoch(epoch, losses.back());
  }
  return losses;
}

double sample_loss(const HeadParams& params, std::span<const double> x, double target) {
  const double y = forward(params, x, false);
  return (y - target) * (y - target);
}

HeadTensors loss_gradient(const HeadParams& params, std::span<const double> x,
                          double target) {
  check_input(params, x.size());
  const BatchTrace t = forward_batch(params, to_column(x), 0.0, nullptr);
  return backward_batch(params, t, Eigen::RowVectorXd::Constant(1, target));
}

double gradient_check(const HeadParams& params, std::span<const double> x, double target,
                      std::uint64_t seed, std::size_t max_params, double h, double floor) {
  HeadTensors analytic = loss_gradient(params, x, target);
  HeadParams probe = params;
  const std::size_t total = probe.weights.parameter_count();

  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(indices));
  indices.resize(std::min(max_params, total));

  double worst = 0.0;
  for (std::size_t index : indices) {
    double& p = parameter_at(probe.weights, index);
    const double original = p;
    p = original + h;
    const double up = sample_loss(probe, x, target);
    p = original - h;
    const double down = sample_loss(probe, x, target);
    p = original;
    const double numeric = (up - down) / (2.0 * h);
    const double a = parameter_at(analytic, index);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

std::vector<double> predict(const HeadParams& params,
                            std::span<const std::vector<double>> inputs) {
  std::vector<double> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(forward(params, x, false));
  return out;
}

std::vector<double> predict(const HeadParams& params, std::span<const Embedding> embeddings) {
  std::vector<double> out;
  out.reserve(embeddings.size());
  for (const auto& e : embeddings) out.push_back(forward(params, e.values, false));
  return out;
}

}  // namespace reggap
