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

#ifndef ZONEPPI_ESTIMATORS_H_
#define ZONEPPI_ESTIMATORS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace zoneppi {

// Members of the estimator family
//   theta = mean(Y) - lambda * (mean f over labeled - mean f over unlabeled)
// differing only in how lambda is chosen:
//   lbl      lambda = 0
//   ppipp    lambda estimated (power tuning)
//   ppi      lambda = 1
//   aipw     lambda = N / (n + N)
//   nophoto  lambda estimated, f built without the prediction column
enum class EstimatorKind { kLbl, kPpipp, kPpi, kAipw, kNophoto };

std::string_view to_string(EstimatorKind kind);
// Throws std::invalid_argument on an unknown tag.
EstimatorKind parse_estimator(std::string_view tag);

// True for every kind except lbl.
bool uses_control_function(EstimatorKind kind);
// False only for nophoto (and lbl, which has no basis at all).
bool uses_prediction(EstimatorKind kind);

struct EstimateResult {
  double theta_hat = 0.0;
  double lambda_hat = 0.0;
  std::size_t n = 0;
  std::size_t N = 0;
  double se_plugin = 0.0;  // NaN when n < 2
  EstimatorKind estimator = EstimatorKind::kLbl;
  std::string zone_id;
};

// Power-tuning coefficient
//   (N / (n + N)) * cov_n(Y, f) / var_{n+N}(f)
// with divisors n - 1 and n + N - 1. Returns 0 when f takes a single value
// over all n + N observations. Requires n >= 2 and N >= 1.
double lambda_hat(std::span<const double> labeled_y,
                  std::span<const double> labeled_f,
                  std::span<const double> unlabeled_f);

// Throws std::invalid_argument for an empty labeled set, mismatched labeled
// lengths, an empty unlabeled set with kind != lbl, or n < 2 with an
// estimated lambda.
EstimateResult ppi_estimate(std::span<const double> labeled_y,
                            std::span<const double> labeled_f,
                            std::span<const double> unlabeled_f,
                            EstimatorKind kind);

// sqrt(lambda^2 var_{n+N}(f) / N + var_n(Y - lambda f) / n). Requires n >= 2
// and N >= 2.
double plugin_se(std::span<const double> labeled_y,
                 std::span<const double> labeled_f,
                 std::span<const double> unlabeled_f, double lambda);

// Squared Pearson correlation; 0 when either side is constant or n < 2.
double r_squared_within(std::span<const double> labeled_y,
                        std::span<const double> predictions);

// Asymptotic efficiency relative to the labeled mean,
// 1 / (1 - r2 * N / (N + n)).
double theoretical_re(double r2, std::size_t n, std::size_t N);

}  // namespace zoneppi

#endif  // ZONEPPI_ESTIMATORS_H_
