// Copyright 2026 The zoneppi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "zoneppi/estimators.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "zoneppi/stats.h"

namespace zoneppi {
namespace {

bool all_equal(std::span<const double> a, std::span<const double> b) {
  const double ref = a.empty() ? b.front() : a.front();
  return std::all_of(a.begin(), a.end(), [&](double v) { return v == ref; }) &&
         std::all_of(b.begin(), b.end(), [&](double v) { return v == ref; });
}

// Variance of f pooled over labeled and unlabeled, divisor n + N - 1.
double pooled_variance(std::span<const double> fl, std::span<const double> fu) {
  const double total = static_cast<double>(fl.size() + fu.size());
  double sum = 0.0;
  for (double v : fl) sum += v;
  for (double v : fu) sum += v;
  const double fbar = sum / total;
  double ss = 0.0;
  for (double v : fl) ss += (v - fbar) * (v - fbar);
  for (double v : fu) ss += (v - fbar) * (v - fbar);
  return ss / (total - 1.0);
}

double se_unchecked(std::span<const double> y, std::span<const double> fl,
                    std::span<const double> fu, double lambda) {
  const double n = static_cast<double>(y.size());
  const double N = static_cast<double>(fu.size());
  double first = 0.0;
  if (lambda != 0.0 && !fu.empty()) {
    first = lambda * lambda * pooled_variance(fl, fu) / N;
  }
  std::vector<double> resid(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - lambda * fl[i];
  const double second = sample_variance(resid) / n;
  return std::sqrt(std::max(0.0, first + second));
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kLbl: return "lbl";
    case EstimatorKind::kPpipp: return "ppipp";
    case EstimatorKind::kPpi: return "ppi";
    case EstimatorKind::kAipw: return "aipw";
    case EstimatorKind::kNophoto: return "nophoto";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view tag) {
  for (auto kind : {EstimatorKind::kLbl, EstimatorKind::kPpipp,
                    EstimatorKind::kPpi, EstimatorKind::kAipw,
                    EstimatorKind::kNophoto}) {
    if (tag == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(tag) + "'");
}

bool uses_control_function(EstimatorKind kind) {
  return kind != EstimatorKind::kLbl;
}

bool uses_prediction(EstimatorKind kind) {
  return kind != EstimatorKind::kLbl && kind != EstimatorKind::kNophoto;
}

double lambda_hat(std::span<const double> labeled_y,
                  std::span<const double> labeled_f,
                  std::span<const double> unlabeled_f) {
  if (labeled_y.size() != labeled_f.size()) {
    throw std::invalid_argument("labeled outcome and control lengths differ");
  }
  if (labeled_y.size() < 2) throw std::invalid_argument("lambda_hat needs n >= 2");
  if (unlabeled_f.empty()) throw std::invalid_argument("lambda_hat needs N >= 1");
  if (all_equal(labeled_f, unlabeled_f)) return 0.0;

  const double n = static_cast<double>(labeled_y.size());
  const double N = static_cast<double>(unlabeled_f.size());
  const double var_f = pooled_variance(labeled_f, unlabeled_f);
  if (!(var_f > 0.0)) return 0.0;
  return N / (n + N) * sample_covariance(labeled_y, labeled_f) / var_f;
}

EstimateResult ppi_estimate(std::span<const double> labeled_y,
                            std::span<const double> labeled_f,
                            std::span<const double> unlabeled_f,
                            EstimatorKind kind) {
  if (labeled_y.empty()) throw std::invalid_argument("empty labeled set");
  if (kind != EstimatorKind::kLbl) {
    if (labeled_f.size() != labeled_y.size()) {
      throw std::invalid_argument("labeled outcome and control lengths differ");
    }
    if (unlabeled_f.empty()) throw std::invalid_argument("empty unlabeled set");
  }

  EstimateResult r;
  r.estimator = kind;
  r.n = labeled_y.size();
  r.N = unlabeled_f.size();
  const double n = static_cast<double>(r.n);
  const double N = static_cast<double>(r.N);

  switch (kind) {
    case EstimatorKind::kLbl: r.lambda_hat = 0.0; break;
    case EstimatorKind::kPpi: r.lambda_hat = 1.0; break;
    case EstimatorKind::kAipw: r.lambda_hat = N / (n + N); break;
    case EstimatorKind::kPpipp:
    case EstimatorKind::kNophoto:
      r.lambda_hat = lambda_hat(labeled_y, labeled_f, unlabeled_f);
      break;
  }

  const double theta_lbl = mean(labeled_y);
  r.theta_hat = theta_lbl;
  if (r.lambda_hat != 0.0) {
    r.theta_hat -= r.lambda_hat * (mean(labeled_f) - mean(unlabeled_f));
  }

  if (r.n < 2) {
    r.se_plugin = std::numeric_limits<double>::quiet_NaN();
  } else if (kind == EstimatorKind::kLbl) {
    r.se_plugin = std::sqrt(sample_variance(labeled_y) / n);
  } else {
    r.se_plugin = se_unchecked(labeled_y, labeled_f, unlabeled_f, r.lambda_hat);
  }
  return r;
}

double plugin_se(std::span<const double> labeled_y,
                 std::span<const double> labeled_f,
                 std::span<const double> unlabeled_f, double lambda) {
  if (labeled_y.size() != labeled_f.size()) {
    throw std::invalid_argument("labeled outcome and control lengths differ");
  }
  if (labeled_y.size() < 2) throw std::invalid_argument("plugin_se needs n >= 2");
  if (unlabeled_f.size() < 2) throw std::invalid_argument("plugin_se needs N >= 2");
  return se_unchecked(labeled_y, labeled_f, unlabeled_f, lambda);
}

double r_squared_within(std::span<const double> labeled_y,
                        std::span<const double> predictions) {
  if (labeled_y.size() != predictions.size()) {
    throw std::invalid_argument("r_squared_within: length mismatch");
  }
  if (labeled_y.size() < 2) return 0.0;
  const double vy = sample_variance(labeled_y);
  const double vp = sample_variance(predictions);
  if (!(vy > 0.0) || !(vp > 0.0)) return 0.0;
  const double c = sample_covariance(labeled_y, predictions);
  return std::clamp(c * c / (vy * vp), 0.0, 1.0);
}

double theoretical_re(double r2, std::size_t n, std::size_t N) {
  if (!(r2 >= 0.0 && r2 <= 1.0)) {
    throw std::invalid_argument("theoretical_re: r2 must lie in [0, 1]");
  }
  if (n < 1) throw std::invalid_argument("theoretical_re: n must be >= 1");
  const double share = static_cast<double>(N) / static_cast<double>(N + n);
  const double denom = 1.0 - r2 * share;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("theoretical_re: r2 * N / (N + n) must be < 1");
  }
  return 1.0 / denom;
}

}  // namespace zoneppi
