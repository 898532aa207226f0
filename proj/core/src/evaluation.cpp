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

#include "reggap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "reggap/error.hpp"

namespace reggap {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n) {
  if (a.size() != b.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(a.size()) + " vs " +
                                        std::to_string(b.size()) + " values");
  }
  if (a.size() < min_n) {
    fail(ErrorCode::EmptyInput, "need at least " + std::to_string(min_n) + " values");
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

nlohmann::json metrics_json(const GroupMetrics& g) {
  nlohmann::json j;
  j["mae"] = g.mae;
  j["rmse"] = g.rmse;
  j["pearson"] = g.pearson ? nlohmann::json(*g.pearson) : nlohmann::json(nullptr);
  j["n"] = g.n;
  return j;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string_view to_string(BmiClass cls) noexcept {
  switch (cls) {
    case BmiClass::UnderWeight: return "under_weight";
    case BmiClass::Normal: return "normal";
    case BmiClass::OverWeight: return "over_weight";
    case BmiClass::Obese: return "obese";
    case BmiClass::SeverelyObese: return "severely_obese";
    case BmiClass::VerySeverelyObese: return "very_severely_obese";
  }
  return "unknown";
}

BmiClass class_bin(double bmi) {
  if (!std::isfinite(bmi)) fail(ErrorCode::NonFinite, "BMI value is not finite");
  std::size_t cls = 0;
  while (cls < kBmiClassLowerBounds.size() && bmi >= kBmiClassLowerBounds[cls]) ++cls;
  return kAllBmiClasses[cls];
}

double mae(std::span<const double> truth, std::span<const double> pred) {
  check_pair(truth, pred, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
  return s / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> pred) {
  check_pair(truth, pred, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

double pearson(std::span<const double> truth, std::span<const double> pred) {
  check_pair(truth, pred, 2);
  const double mx = mean(truth);
  const double my = mean(pred);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dx = truth[i] - mx;
    const double dy = pred[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    fail(ErrorCode::ZeroVariance, "pearson needs non-constant inputs");
  }
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

GroupMetrics group_metrics(std::span<const double> truth, std::span<const double> pred) {
  GroupMetrics g;
  g.mae = mae(truth, pred);
  g.rmse = rmse(truth, pred);
  g.n = truth.size();
  if (g.n >= 2) {
    try {
      g.pearson = pearson(truth, pred);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
    }
  }
  return g;
}

EvalReport build_report(std::span<const double> truth, std::span<const double> pred,
                        std::span<const std::optional<Gender>> genders) {
  check_pair(truth, pred, 1);
  if (!genders.empty() && genders.size() != truth.size()) {
    fail(ErrorCode::LengthMismatch, "gender column is not aligned with predictions");
  }
  const GroupMetrics overall = group_metrics(truth, pred);
  EvalReport report;
  report.mae = overall.mae;
  report.rmse = overall.rmse;
  report.pearson = overall.pearson;
  report.n = overall.n;

  std::map<BmiClass, std::pair<std::vector<double>, std::vector<double>>> by_class;
  std::map<Gender, std::pair<std::vector<double>, std::vector<double>>> by_gender;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& c = by_class[class_bin(truth[i])];
    c.first.push_back(truth[i]);
    c.second.push_back(pred[i]);
    if (!genders.empty() && genders[i]) {
      auto& g = by_gender[*genders[i]];
      g.first.push_back(truth[i]);
      g.second.push_back(pred[i]);
    }
  }
  for (const auto& [cls, values] : by_class) {
    report.per_class[cls] = group_metrics(values.first, values.second);
  }
  if (!by_gender.empty()) {
    std::map<Gender, GroupMetrics> per_gender;
    for (const auto& [g, values] : by_gender) {
      per_gender[g] = group_metrics(values.first, values.second);
    }
    report.per_gender = std::move(per_gender);
  }
  return report;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) fail(ErrorCode::InvalidConfig, "beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

SignificanceResult paired_t_test(std::span<const double> errors_a,
                                 std::span<const double> errors_b) {
  check_pair(errors_a, errors_b, 2);
  const std::size_t n = errors_a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = errors_a[i] - errors_b[i];
  const double md = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - md) * (v - md);
  const double var = ss / static_cast<double>(n - 1);

  SignificanceResult r;
  r.n = n;
  if (var == 0.0) {
    r.degenerate = true;
    r.p = 1.0;
    r.t = md == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), md);
    return r;
  }
  const double dof = static_cast<double>(n - 1);
  r.t = md / std::sqrt(var / static_cast<double>(n));
  // Two-sided tail directly from the incomplete beta avoids 1 - cdf cancellation.
  r.p = regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + r.t * r.t));
  return r;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["overall"] = metrics_json(GroupMetrics{report.mae, report.rmse, report.pearson, report.n});
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, g] : report.per_class) per_class[std::string(to_string(cls))] = metrics_json(g);
  doc["per_class"] = per_class;
  if (report.per_gender) {
    nlohmann::json per_gender = nlohmann::json::object();
    for (const auto& [g, m] : *report.per_gender) per_gender[std::string(to_string(g))] = metrics_json(m);
    doc["per_gender"] = per_gender;
  } else {
    doc["per_gender"] = nullptr;
  }
  if (report.significance) {
    const auto& s = *report.significance;
    doc["significance"] = {{"t", finite_or_null(s.t)}, {"p", s.p}, {"n", s.n},
                           {"degenerate", s.degenerate}};
  } else {
    doc["significance"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  auto row = [&](std::string_view name, const GroupMetrics& g) {
    out << std::left << std::setw(22) << name << std::right << std::setw(8) << g.n
        << std::setw(10) << g.mae << std::setw(10) << g.rmse;
    if (g.pearson) {
      out << std::setw(10) << *g.pearson;
    } else {
      out << std::setw(10) << "-";
    }
    out << "\n";
  };
  out << std::left << std::setw(22) << "group" << std::right << std::setw(8) << "n"
      << std::setw(10) << "MAE" << std::setw(10) << "RMSE" << std::setw(10) << "Pearson"
      << "\n";
  row("overall", GroupMetrics{report.mae, report.rmse, report.pearson, report.n});
  for (const auto& [cls, g] : report.per_class) row(to_string(cls), g);
  if (report.per_gender) {
    for (const auto& [gender, g] : *report.per_gender) row(to_string(gender), g);
  }
  if (report.significance) {
    const auto& s = *report.significance;
    out << "paired t-test: t = " << s.t << ", p = " << std::setprecision(6) << s.p
        << ", n = " << s.n << (s.degenerate ? " (zero-variance differences)" : "") << "\n";
  }
  return out.str();
}

}  // namespace reggap
