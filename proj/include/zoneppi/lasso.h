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

#ifndef ZONEPPI_LASSO_H_
#define ZONEPPI_LASSO_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zoneppi/features.h"

namespace zoneppi {

// L1-penalized least squares by cyclic coordinate descent on standardized
// columns. The objective for penalty t is
//
//   (1 / 2m) * sum_i (y_i - b0 - x_i' b)^2 + t * sum_j |b_j|
//
// with the penalty applied to the standardized-scale coefficients (the
// usual glmnet convention). The intercept is never penalized.
struct LassoOptions {
  std::size_t n_lambdas = 100;
  double lambda_min_ratio = 1e-4;
  // Convergence: max absolute change of a standardized coefficient over one
  // full sweep.
  double tolerance = 1e-7;
  std::size_t max_sweeps = 100000;
  // Append an unpenalized (t = 0) fit to the path when q < m.
  bool append_zero_penalty = true;
  bool record_objective = false;
};

struct LassoFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;         // original scale, length q
  Eigen::VectorXd scaled_coefficients;  // standardized scale, length q
  double penalty = 0.0;
  double cv_error = 0.0;
  std::size_t sweeps = 0;
  // Standardized-scale objective after each sweep (record_objective only).
  std::vector<double> objective_trace;

  double predict(std::span<const double> x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// Column centering and scaling (population standard deviation). Columns whose
// spread is negligible are flagged constant; their standardized values are 0.
struct Standardization {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;  // 0 for constant columns

  static Standardization fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  bool constant(Eigen::Index j) const { return scales(j) == 0.0; }
};

// sign(x) * max(|x| - t, 0).
double soft_threshold(double x, double t);

// Smallest penalty at which every coefficient is zero:
// max_j |<x~_j, y - ybar>| / m.
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Geometric grid lambda_max .. lambda_max * lambda_min_ratio, plus 0 when
// append_zero_penalty and q < m.
std::vector<double> lambda_path(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y,
                                const LassoOptions& options = {});

// X excludes the intercept column. Throws std::invalid_argument for m < 2,
// q < 1, non-finite data, or a size mismatch, and ConvergenceError (carrying
// the penalty index) when a fit does not converge within max_sweeps.
std::vector<LassoFit> fit_lasso_path(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y,
                                     const LassoOptions& options = {});
std::vector<LassoFit> fit_lasso_path(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y,
                                     std::span<const double> penalties,
                                     const LassoOptions& options = {});

// Fold label in [0, k) for each of m rows: seeded shuffle then round-robin,
// so fold sizes differ by at most one.
std::vector<int> assign_cv_folds(std::size_t m, int k, std::uint64_t seed);

enum class PenaltyRule { kMinimum, kOneStandardError };

struct CvCurve {
  std::vector<double> penalties;
  std::vector<double> mean_error;      // pooled held-out squared error
  std::vector<double> standard_error;  // across folds
  std::size_t selected = 0;
};

CvCurve cv_curve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                 std::uint64_t seed, const LassoOptions& options = {},
                 PenaltyRule rule = PenaltyRule::kMinimum);

// Full-data fit at the penalty chosen by k-fold CV. Throws
// std::invalid_argument when k < 2 or m < k.
LassoFit cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                   std::uint64_t seed, const LassoOptions& options = {},
                   PenaltyRule rule = PenaltyRule::kMinimum);

// f(W) = intercept + coefficients' psi(W) without its leading 1. Covariates
// are shifted by covariate_center before basis expansion, which keeps the
// square terms from being collinear with the linear ones.
struct ControlFunction {
  LassoFit fit;
  bool include_prediction = true;
  std::string region;
  std::vector<double> covariate_center;

  BasisRow basis(const FeatureRow& row) const;
  // row must carry the layout produced by basis(); row[0] == 1.
  double operator()(const BasisRow& row) const;
  double evaluate(const FeatureRow& row) const { return (*this)(basis(row)); }

  static ControlFunction constant(double value, bool include_prediction,
                                  std::string region,
                                  std::vector<double> covariate_center);
};

}  // namespace zoneppi

#endif  // ZONEPPI_LASSO_H_
