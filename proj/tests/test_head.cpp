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

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "reggap/error.hpp"
#include "reggap/head.hpp"
#include "reggap/rng.hpp"

namespace reggap {
namespace {

HeadConfig small_config(std::size_t c, std::uint64_t seed = 0) {
  HeadConfig cfg;
  cfg.input_dim = c;
  cfg.hidden1 = 16;
  cfg.hidden2 = 8;
  cfg.seed = seed;
  return cfg;
}

// Plain loops over the stored tensors.
double oracle_forward(const HeadParams& p, const std::vector<double>& x) {
  const auto& w = p.weights;
  std::vector<double> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    xs[i] = (x[i] - p.input_mean(static_cast<Eigen::Index>(i))) *
            p.input_scale(static_cast<Eigen::Index>(i));
  std::vector<double> h1(static_cast<std::size_t>(w.w1.rows()));
  for (Eigen::Index j = 0; j < w.w1.rows(); ++j) {
    double s = w.b1(j);
    for (Eigen::Index i = 0; i < w.w1.cols(); ++i) s += w.w1(j, i) * xs[static_cast<std::size_t>(i)];
    h1[static_cast<std::size_t>(j)] = std::max(0.0, s);
  }
  std::vector<double> h2(static_cast<std::size_t>(w.w2.rows()));
  for (Eigen::Index j = 0; j < w.w2.rows(); ++j) {
    double s = w.b2(j);
    for (Eigen::Index i = 0; i < w.w2.cols(); ++i) s += w.w2(j, i) * h1[static_cast<std::size_t>(i)];
    h2[static_cast<std::size_t>(j)] = std::max(0.0, s);
  }
  double out = w.b3(0);
  for (Eigen::Index i = 0; i < w.w3.cols(); ++i) out += w.w3(0, i) * h2[static_cast<std::size_t>(i)];
  return out;
}

std::vector<LabeledEmbedding> toy_set(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<LabeledEmbedding> out(n);
  for (auto& s : out) {
    s.x.resize(c);
    for (double& v : s.x) v = u(gen);
    s.bmi = 3.0 * std::accumulate(s.x.begin(), s.x.end(), 0.0) / static_cast<double>(c);
  }
  return out;
}

TEST(HeadConfig, Validation) {
  HeadConfig c = small_config(4);
  EXPECT_NO_THROW(validate_head_config(c));
  c.dropout_rate = 1.0;
  EXPECT_THROW(init_head(c), Error);
  c = small_config(4);
  c.max_norm = 0.0;
  EXPECT_THROW(validate_head_config(c), Error);
  c = small_config(0);
  EXPECT_THROW(validate_head_config(c), Error);
}

TEST(HeadConfig, DefaultsFollowPublishedSettings) {
  const HeadConfig c;
  EXPECT_EQ(c.hidden1, 512u);
  EXPECT_EQ(c.hidden2, 256u);
  EXPECT_EQ(c.dropout_rate, 0.4);
  EXPECT_EQ(c.max_norm, 5.0);
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.epsilon, 0.48);
  EXPECT_EQ(c.decay, 0.0);
}

TEST(InitHead, DeterministicAndBounded) {
  HeadConfig c;
  c.input_dim = 1792;
  const HeadParams a = init_head(c), b = init_head(c);
  EXPECT_TRUE(a.weights.w1 == b.weights.w1);
  EXPECT_TRUE(a.weights.w3 == b.weights.w3);
  EXPECT_EQ(a.weights.b1.norm(), 0.0);
  EXPECT_EQ(a.m.w1.norm(), 0.0);
  EXPECT_EQ(a.step, 0u);
  EXPECT_LE(max_constrained_row_norm(a.weights), 5.0);
  const double limit = std::sqrt(6.0 / (1792.0 + 512.0));
  EXPECT_LE(a.weights.w1.cwiseAbs().maxCoeff(), limit);
  c.seed = 1;
  EXPECT_FALSE(init_head(c).weights.w1 == a.weights.w1);
}

TEST(Forward, ZeroParamsGiveZero) {
  HeadParams p = init_head(small_config(3));
  p.weights.for_each([](auto& t) { t.setZero(); });
  EXPECT_EQ(forward(p, std::vector<double>{1.0, -2.0, 5.0}, false), 0.0);
}

TEST(Forward, InferenceIsDeterministicAndMatchesOracle) {
  HeadParams p = init_head(small_config(6, 3));
  Rng rng(5);
  p.weights.for_each([&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
  });
  const std::vector<double> ones(6, 1.0);
  const double a = forward(p, ones, false);
  EXPECT_EQ(a, forward(p, ones, false));
  EXPECT_NEAR(a, oracle_forward(p, ones), 1e-6);
  p.input_mean = Eigen::VectorXd::Constant(6, 0.3);
  p.input_scale = Eigen::VectorXd::Constant(6, 2.0);
  EXPECT_NEAR(forward(p, ones, false), oracle_forward(p, ones), 1e-12);
}

TEST(Forward, DimensionMismatch) {
  const HeadParams p = init_head(small_config(4));
  try {
    forward(p, std::vector<double>(5, 0.0), false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Forward, DropoutExpectationMatchesInference) {
  HeadParams p = init_head(small_config(5, 2));
  // Keep every second-layer unit active so the network is linear in the
  // dropped activations and the expectation is exact.
  p.weights.b1.setConstant(0.5);
  p.weights.b2.setConstant(100.0);
  const std::vector<double> x{0.2, 0.9, -0.4, 1.3, 0.1};
  const double infer = forward(p, x, false);
  Rng rng(99);
  const int n = 10000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = forward(p, x, true, 0.4, &rng);
    sum += y;
    sq += y * y;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
  EXPECT_GT(sd, 0.0);
  EXPECT_LT(std::abs(mean - infer), 3.0 * sd / std::sqrt(double(n)));
}

TEST(MaxNorm, InflatedRowIsProjectedToBound) {
  HeadParams p = init_head(small_config(4));
  p.weights.w1.row(2) = Eigen::RowVectorXd::Constant(4, 5.0);  // norm 10
  p.weights.w2.row(0) *= 0.1;
  const Eigen::RowVectorXd untouched = p.weights.w2.row(0);
  apply_max_norm(p.weights, 5.0);
  EXPECT_NEAR(p.weights.w1.row(2).norm(), 5.0, 1e-12);
  EXPECT_TRUE(p.weights.w2.row(0) == untouched);
}

TEST(MaxNorm, HoldsAfterEveryStep) {
  HeadConfig c = small_config(4, 1);
  c.max_norm = 0.8;  // tight enough to bind
  c.learning_rate = 0.05;
  c.epochs = 20;
  HeadParams p = init_head(c);
  std::size_t batches = 0;
  fit(p, toy_set(200, 4, 3), c, {}, [&](const HeadParams& q, std::size_t, double) {
    ++batches;
    ASSERT_LE(max_constrained_row_norm(q.weights), 0.8 + 1e-9);
  });
  EXPECT_EQ(batches, 20u * 7u);
}

TEST(TrainEpoch, ToyTaskImproves) {
  HeadConfig c = small_config(4, 0);
  c.hidden1 = 512;
  c.hidden2 = 256;
  HeadParams p = init_head(c);
  const auto data = toy_set(200, 4, 1);
  fit_input_transform(p, data, c);
  const double first = train_epoch(p, data, c, 0);
  double last = first;
  for (std::size_t e = 1; e < 10; ++e) last = train_epoch(p, data, c, e);
  EXPECT_LT(last, first);
}

TEST(TrainEpoch, RepeatedSampleLossNonIncreasing) {
  HeadConfig c = small_config(3, 4);
  c.dropout_rate = 0.0;
  HeadParams p = init_head(c);
  std::vector<LabeledEmbedding> data(32, LabeledEmbedding{{0.5, -1.0, 2.0}, 25.0});
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < 5; ++e) {
    const double loss = train_epoch(p, data, c, e);
    EXPECT_LE(loss, prev);
    prev = loss;
  }
}

TEST(TrainEpoch, Errors) {
  HeadConfig c = small_config(2);
  HeadParams p = init_head(c);
  try {
    train_epoch(p, {}, c, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
  std::vector<LabeledEmbedding> bad{{{1.0, std::nan("")}, 20.0}};
  try {
    train_epoch(p, bad, c, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
  std::vector<LabeledEmbedding> wide{{{1.0, 2.0, 3.0}, 20.0}};
  EXPECT_THROW(train_epoch(p, wide, c, 0), Error);
}

TEST(Fit, DeterministicForFixedSeed) {
  HeadConfig c = small_config(4, 7);
  c.epochs = 5;
  const auto data = toy_set(64, 4, 2);
  HeadParams a = init_head(c), b = init_head(c);
  const auto la = fit(a, data, c), lb = fit(b, data, c);
  EXPECT_EQ(la, lb);
  EXPECT_TRUE(a.weights.w1 == b.weights.w1);
  EXPECT_TRUE(a.v.w2 == b.v.w2);
  EXPECT_EQ(a.step, b.step);
  EXPECT_EQ(a.step, 5u * 2u);
}

TEST(Predict, EmptyOrderAndHeldOutAccuracy) {
  HeadConfig c = small_config(4, 0);
  c.hidden1 = 512;
  c.hidden2 = 256;
  c.epochs = 150;
  c.learning_rate = 0.005;
  HeadParams p = init_head(c);
  EXPECT_TRUE(predict(p, std::span<const std::vector<double>>{}).empty());
  fit(p, toy_set(200, 4, 10), c);
  const auto test = toy_set(100, 4, 11);
  std::vector<std::vector<double>> xs;
  for (const auto& s : test) xs.push_back(s.x);
  xs.push_back(xs.front());
  const auto pred = predict(p, xs);
  ASSERT_EQ(pred.size(), xs.size());
  EXPECT_EQ(pred.front(), pred.back());
  double mae = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) mae += std::abs(pred[i] - test[i].bmi);
  mae /= static_cast<double>(test.size());
  EXPECT_LT(mae, 0.5);
}

TEST(GradientCheck, RandomSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    HeadConfig c = small_config(6, seed);
    HeadParams p = init_head(c);
    Rng rng(mix_seed(seed, 77));
    p.weights.b1.setConstant(0.05);
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    EXPECT_LT(gradient_check(p, x, 30.0, seed), 1e-4) << seed;
  }
}

TEST(GradientCheck, ZeroEverythingGivesZeroGradient) {
  HeadParams p = init_head(small_config(3));
  p.weights.for_each([](auto& t) { t.setZero(); });
  const HeadTensors g = loss_gradient(p, std::vector<double>(3, 0.0), 0.0);
  g.for_each([](const auto& t) { EXPECT_EQ(t.cwiseAbs().maxCoeff(), 0.0); });
}

TEST(GradientCheck, LinearPathIsExactToFiniteDifferences) {
  HeadParams p = init_head(small_config(4, 3));
  p.weights.w1 = p.weights.w1.cwiseAbs();
  p.weights.w2 = p.weights.w2.cwiseAbs();
  p.weights.b1.setConstant(0.1);
  p.weights.b2.setConstant(0.1);
  const std::vector<double> x{0.5, 1.0, 0.25, 2.0};
  EXPECT_LT(gradient_check(p, x, 10.0, 0, 200), 1e-6);
}

TEST(Adam, FirstStepMovesByLearningRateScaledRatio) {
  // One sample, batch of one, no dropout: check the bias-corrected step on b3.
  HeadConfig c = small_config(2, 0);
  c.dropout_rate = 0.0;
  c.batch_size = 1;
  c.max_norm = 1e6;
  HeadParams p = init_head(c);
  const std::vector<double> x{0.3, 0.7};
  const double target = 4.0;
  const HeadTensors g = loss_gradient(p, x, target);
  const double b3_before = p.weights.b3(0);
  std::vector<LabeledEmbedding> data{{x, target}};
  train_epoch(p, data, c, 0);
  const double gb = g.b3(0);
  const double lr_t = c.learning_rate * std::sqrt(1.0 - c.beta2) / (1.0 - c.beta1);
  const double m = (1.0 - c.beta1) * gb;
  const double v = (1.0 - c.beta2) * gb * gb;
  EXPECT_NEAR(p.weights.b3(0), b3_before - lr_t * m / (std::sqrt(v) + c.epsilon), 1e-12);
  EXPECT_EQ(p.step, 1u);
}

}  // namespace
}  // namespace reggap
