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
#include <random>

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "reggap/error.hpp"
#include "reggap/evaluation.hpp"

namespace reggap {
namespace {

double boost_two_sided_p(double t, double dof) {
  const boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidConfig;
}

TEST(Metrics, HandExamples) {
  const std::vector<double> t{20.0, 25.0, 30.0}, p{21.0, 23.0, 30.0};
  EXPECT_DOUBLE_EQ(mae(t, p), 1.0);
  EXPECT_DOUBLE_EQ(rmse(t, p), std::sqrt(5.0 / 3.0));
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_EQ(rmse(t, t), 0.0);
}

TEST(Metrics, FrozenPearson) {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 4};
  EXPECT_NEAR(pearson(a, b), 0.9819805060619656, 1e-15);
  EXPECT_DOUBLE_EQ(pearson(a, a), 1.0);
  const std::vector<double> neg{3, 2, 1};
  EXPECT_DOUBLE_EQ(pearson(a, neg), -1.0);
}

TEST(Metrics, Errors) {
  const std::vector<double> a{1, 2, 3}, b{1, 2}, c{4, 4, 4};
  EXPECT_EQ(code_of([&] { mae(a, b); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { mae({}, {}); }), ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([&] { pearson(a, c); }), ErrorCode::ZeroVariance);
  EXPECT_EQ(code_of([&] { class_bin(std::nan("")); }), ErrorCode::NonFinite);
}

TEST(Metrics, RmseDominatesMaeAndPearsonIsAffineInvariant) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n(25.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> t(30), p(30), q(30);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = n(gen);
      p[i] = n(gen);
      q[i] = 2.5 * p[i] + 7.0;
    }
    EXPECT_GE(rmse(t, p), mae(t, p));
    EXPECT_NEAR(pearson(t, q), pearson(t, p), 1e-12);
  }
}

TEST(ClassBin, Boundaries) {
  EXPECT_EQ(class_bin(18.49), BmiClass::UnderWeight);
  EXPECT_EQ(class_bin(18.5), BmiClass::Normal);
  EXPECT_EQ(class_bin(24.99), BmiClass::Normal);
  EXPECT_EQ(class_bin(25.0), BmiClass::OverWeight);
  EXPECT_EQ(class_bin(30.0), BmiClass::Obese);
  EXPECT_EQ(class_bin(35.0), BmiClass::SeverelyObese);
  EXPECT_EQ(class_bin(39.999), BmiClass::SeverelyObese);
  EXPECT_EQ(class_bin(40.0), BmiClass::VerySeverelyObese);
  EXPECT_EQ(to_string(BmiClass::OverWeight), "over_weight");
}

TEST(TTest, FrozenExample) {
  const std::vector<double> d{0.5, 1.5, 1.0, 0.8, 1.2}, zero(5, 0.0);
  const auto r = paired_t_test(d, zero);
  EXPECT_NEAR(r.t, 5.872202195147035, 1e-12);
  EXPECT_NEAR(r.p, 0.00420072669346761, 1e-12);
  EXPECT_EQ(r.n, 5u);
  EXPECT_FALSE(r.degenerate);
  const auto flipped = paired_t_test(zero, d);
  EXPECT_DOUBLE_EQ(flipped.t, -r.t);
  EXPECT_DOUBLE_EQ(flipped.p, r.p);
}

TEST(TTest, MatchesBoostOracle) {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> len(2, 60);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = static_cast<std::size_t>(len(gen));
    std::vector<double> a(m), b(m);
    const double shift = 0.3 * n(gen);
    for (std::size_t i = 0; i < m; ++i) {
      a[i] = std::abs(n(gen)) + shift;
      b[i] = std::abs(n(gen));
    }
    const auto r = paired_t_test(a, b);
    EXPECT_NEAR(r.p, boost_two_sided_p(r.t, static_cast<double>(m - 1)), 1e-8) << trial;
  }
}

TEST(TTest, IdenticalInputsAreDegenerate) {
  const std::vector<double> a{1.0, 2.0, 0.5};
  const auto r = paired_t_test(a, a);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_EQ(r.t, 0.0);
  const std::vector<double> b{0.0, 1.0, -0.5};
  const auto shifted = paired_t_test(a, b);
  EXPECT_TRUE(shifted.degenerate);
  EXPECT_TRUE(std::isinf(shifted.t) && shifted.t > 0);
  EXPECT_EQ(code_of([&] { paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}); }),
            ErrorCode::EmptyInput);
}

TEST(IncompleteBeta, KnownValues) {
  EXPECT_NEAR(regularized_incomplete_beta(1.0, 1.0, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(regularized_incomplete_beta(2.0, 3.0, 0.4), 0.5248, 1e-12);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 1.0), 1.0);
  EXPECT_NEAR(student_t_cdf(0.0, 7.0), 0.5, 1e-15);
  const boost::math::students_t dist(7.0);
  EXPECT_NEAR(student_t_cdf(1.3, 7.0), boost::math::cdf(dist, 1.3), 1e-12);
  EXPECT_NEAR(student_t_cdf(-2.1, 7.0), boost::math::cdf(dist, -2.1), 1e-12);
}

TEST(Report, GroupsAndIdentities) {
  const std::vector<double> t{17.0, 22.0, 24.0, 27.0, 41.0};
  const std::vector<double> p{18.0, 21.0, 25.5, 26.0, 38.0};
  const std::vector<std::optional<Gender>> g{Gender::Male, Gender::Female, Gender::Male,
                                             std::nullopt, Gender::Female};
  const EvalReport r = build_report(t, p, g);
  EXPECT_EQ(r.n, 5u);
  EXPECT_DOUBLE_EQ(r.mae, mae(t, p));
  EXPECT_DOUBLE_EQ(r.rmse, rmse(t, p));
  ASSERT_TRUE(r.pearson);
  EXPECT_DOUBLE_EQ(*r.pearson, pearson(t, p));
  ASSERT_EQ(r.per_class.size(), 4u);
  EXPECT_EQ(r.per_class.at(BmiClass::Normal).n, 2u);
  EXPECT_DOUBLE_EQ(r.per_class.at(BmiClass::Normal).mae, 1.25);
  EXPECT_FALSE(r.per_class.at(BmiClass::UnderWeight).pearson);
  ASSERT_TRUE(r.per_gender);
  EXPECT_EQ(r.per_gender->at(Gender::Male).n, 2u);
  EXPECT_EQ(r.per_gender->at(Gender::Female).n, 2u);
  std::size_t total = 0;
  for (const auto& [cls, m] : r.per_class) total += m.n;
  EXPECT_EQ(total, r.n);

  EXPECT_FALSE(build_report(t, p).per_gender);
  EXPECT_EQ(code_of([&] { build_report(t, p, std::span(g).first(3)); }),
            ErrorCode::LengthMismatch);
}

TEST(Report, Serialisation) {
  const std::vector<double> t{20.0, 26.0}, p{21.0, 26.0};
  EvalReport r = build_report(t, p);
  r.significance = SignificanceResult{2.0, 0.25, 2, false};
  const std::string json = report_to_json(r);
  EXPECT_NE(json.find("\"overall\""), std::string::npos);
  EXPECT_NE(json.find("\"over_weight\""), std::string::npos);
  EXPECT_NE(json.find("\"per_gender\": null"), std::string::npos);
  EXPECT_NE(json.find("\"p\": 0.25"), std::string::npos);
  const std::string text = report_to_text(r);
  EXPECT_NE(text.find("overall"), std::string::npos);
  EXPECT_NE(text.find("paired t-test: t = 2.0000"), std::string::npos);
}

}  // namespace
}  // namespace reggap
