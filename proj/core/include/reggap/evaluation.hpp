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

#ifndef REGGAP_EVALUATION_HPP
#define REGGAP_EVALUATION_HPP

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "reggap/types.hpp"

namespace reggap {

/// WHO-style BMI classes. Bounds are left-closed, right-open:
/// (-inf, 18.5), [18.5, 25), [25, 30), [30, 35), [35, 40), [40, inf).
enum class BmiClass : std::uint8_t {
  UnderWeight,
  Normal,
  OverWeight,
  Obese,
  SeverelyObese,
  VerySeverelyObese,
};

inline constexpr std::array<BmiClass, 6> kAllBmiClasses = {
    BmiClass::UnderWeight, BmiClass::Normal,        BmiClass::OverWeight,
    BmiClass::Obese,       BmiClass::SeverelyObese, BmiClass::VerySeverelyObese};

/// Lower bounds of classes 1..5; class 0 is unbounded below.
inline constexpr std::array<double, 5> kBmiClassLowerBounds = {18.5, 25.0, 30.0, 35.0, 40.0};

std::string_view to_string(BmiClass cls) noexcept;

/// Throws NonFinite.
BmiClass class_bin(double bmi);

/// Mean absolute error. Throws LengthMismatch or EmptyInput.
double mae(std::span<const double> truth, std::span<const double> pred);
/// Root mean squared error. Throws LengthMismatch or EmptyInput.
double rmse(std::span<const double> truth, std::span<const double> pred);
/// Sample Pearson correlation. Throws LengthMismatch, EmptyInput (n < 2) or
/// ZeroVariance.
double pearson(std::span<const double> truth, std::span<const double> pred);

struct GroupMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  /// Absent for fewer than two samples or a constant column.
  std::optional<double> pearson;
  std::size_t n = 0;
};

struct SignificanceResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  /// Differences had zero variance; p is reported as 1.
  bool degenerate = false;
};

struct EvalReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> pearson;
  std::size_t n = 0;
  std::map<BmiClass, GroupMetrics> per_class;
  std::optional<std::map<Gender, GroupMetrics>> per_gender;
  std::optional<SignificanceResult> significance;
};

GroupMetrics group_metrics(std::span<const double> truth, std::span<const double> pred);

/// Overall metrics, per-class metrics keyed by the class of the ground truth,
/// and per-gender metrics when at least one gender is known. `genders` is
/// either empty or aligned with `truth`.
EvalReport build_report(std::span<const double> truth, std::span<const double> pred,
                        std::span<const std::optional<Gender>> genders = {});

/// Regularised incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

/// Paired t-test on per-sample errors: t = mean(d) / (sd(d) / sqrt(n)) with
/// d = a - b, two-sided p from Student's t with n - 1 dof. Zero-variance
/// differences are flagged degenerate with p = 1 (t = 0 when the mean
/// difference is zero, +/-inf otherwise).
/// Throws LengthMismatch or EmptyInput (n < 2).
SignificanceResult paired_t_test(std::span<const double> errors_a,
                                 std::span<const double> errors_b);

/// JSON document with keys overall, per_class, per_gender, significance.
std::string report_to_json(const EvalReport& report);
/// Fixed-width text table.
std::string report_to_text(const EvalReport& report);

}  // namespace reggap

#endif  // REGGAP_EVALUATION_HPP
