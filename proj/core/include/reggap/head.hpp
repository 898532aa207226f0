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

#ifndef REGGAP_HEAD_HPP
#define REGGAP_HEAD_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "reggap/rng.hpp"
#include "reggap/types.hpp"

namespace reggap {

/// Hyper-parameters of the BMI regression head.
///
/// Defaults follow the published configuration: 512 and 256 ReLU units with
/// max-norm 5 kernels, dropout 0.4 after the first layer, and Adam with
/// lr 0.001, beta1 0.9, beta2 0.999, epsilon 0.48, decay 0. An epsilon of
/// 0.48 is far above the usual 1e-7..1e-8; it damps steps once gradients
/// fall below roughly 0.5 and can be overridden.
struct HeadConfig {
  std::size_t input_dim = 0;
  std::size_t hidden1 = 512;
  std::size_t hidden2 = 256;
  double dropout_rate = 0.4;
  double max_norm = 5.0;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 0.48;
  double decay = 0.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  /// Z-score the inputs with training-set statistics before the first layer.
  bool standardize_inputs = true;
};

/// Throws InvalidConfig when a field is out of range.
void validate_head_config(const HeadConfig& config);

/// The six trainable tensors. Weight matrices are (fan_out x fan_in): row j
/// holds the incoming weights of unit j.
struct HeadTensors {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;
  Eigen::VectorXd b3;

  static HeadTensors zeros(const HeadConfig& config);

  /// Visits w1, b1, w2, b2, w3, b3 in that fixed order.
  template <typename F>
  void for_each(F&& f) {
    f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
  }

  std::size_t parameter_count() const;
};

struct HeadParams {
  HeadTensors weights;
  /// Fixed input transform x' = (x - input_mean) .* input_scale.
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  /// Adam first and second moments.
  HeadTensors m;
  HeadTensors v;
  std::uint64_t step = 0;

  std::size_t input_dim() const noexcept {
    return static_cast<std::size_t>(weights.w1.cols());
  }
};

/// Glorot-uniform weights, zero biases and moments, identity input
/// transform. Deterministic in config.seed.
HeadParams init_head(const HeadConfig& config);

/// One prediction. Dropout (inverted, rate config.dropout_rate) is applied to
/// the first hidden layer only when `training` is set; `rng` may be null
/// otherwise. Throws DimensionMismatch.
double forward(const HeadParams& params, std::span<const double> x, bool training,
               double dropout_rate = 0.0, Rng* rng = nullptr);

struct LabeledEmbedding {
  std::vector<double> x;
  double bmi = 0.0;
};

/// Called after each optimiser step (with max-norm already applied).
using BatchObserver = std::function<void(const HeadParams&, std::size_t batch, double loss)>;

/// One pass over `data` in mini-batches. Shuffling uses seed
/// config.seed + epoch. Each batch: mean squared error, backprop, Adam
/// update, max-norm projection of w1 and w2 rows. Returns the sample-mean
/// loss over the epoch (pre-update batch losses).
/// Throws EmptyDataset, DimensionMismatch, NonFiniteLoss.
double train_epoch(HeadParams& params, std::span<const LabeledEmbedding> data,
                   const HeadConfig& config, std::size_t epoch,
                   const BatchObserver& observer = {});

/// Sets the input transform from data when config.standardize_inputs.
void fit_input_transform(HeadParams& params, std::span<const LabeledEmbedding> data,
                         const HeadConfig& config);

/// fit_input_transform, then config.epochs epochs. Returns per-epoch losses.
std::vector<double> fit(HeadParams& params, std::span<const LabeledEmbedding> data,
                        const HeadConfig& config,
                        const std::function<void(std::size_t epoch, double loss)>& on_epoch = {},
                        const BatchObserver& observer = {});

/// Rescales any row of w1 / w2 whose Euclidean norm exceeds max_norm to norm
/// max_norm.
void apply_max_norm(HeadTensors& weights, double max_norm);

/// Largest row norm over w1 and w2.
double max_constrained_row_norm(const HeadTensors& weights);

/// Analytic gradient of the squared error of one sample (dropout off).
HeadTensors loss_gradient(const HeadParams& params, std::span<const double> x,
                          double target);

double sample_loss(const HeadParams& params, std::span<const double> x, double target);

/// Compares loss_gradient with central differences (step `h`) on up to
/// `max_params` randomly chosen parameters and returns the largest relative
/// error |a - n| / max(|a|, |n|, floor).
double gradient_check(const HeadParams& params, std::span<const double> x,
                      double target, std::uint64_t seed = 0,
                      std::size_t max_params = 200, double h = 1e-5,
                      double floor = 1e-6);

/// Inference-mode predictions in input order. Throws DimensionMismatch.
std::vector<double> predict(const HeadParams& params, std::span<const Embedding> embeddings);
std::vector<double> predict(const HeadParams& params,
                            std::span<const std::vector<double>> inputs);

}  // namespace reggap

#endif  // REGGAP_HEAD_HPP
