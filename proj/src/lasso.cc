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

#include "zoneppi/lasso.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "zoneppi/error.h"
#include "zoneppi/random.h"

namespace zoneppi {
namespace {

void check_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("design rows and response length differ");
  }
  if (X.rows() < 2) throw std::invalid_argument("lasso needs at least 2 rows");
  if (X.cols() < 1) throw std::invalid_argument("lasso needs at least 1 column");
  if (!X.allFinite()) throw std::invalid_argument("non-finite design matrix");
  if (!y.allFinite()) throw std::invalid_argument("non-finite response");
}

bool is_constant(const Eigen::VectorXd& y) {
  return (y.array() == y(0)).all();
}

LassoFit make_fit(const Standardization& std_, const Eigen::VectorXd& beta,
                  double y_mean, double penalty) {
  LassoFit fit;
  fit.penalty = penalty;
  fit.scaled_coefficients = beta;
  fit.coefficients = Eigen::VectorXd::Zero(beta.size());
  double intercept = y_mean;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (std_.constant(j) || beta(j) == 0.0) continue;
    fit.coefficients(j) = beta(j) / std_.scales(j);
    intercept -= fit.coefficients(j) * std_.means(j);
  }
  fit.intercept = intercept;
  return fit;
}

}  // namespace

double LassoFit::predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != coefficients.size()) {
    throw std::invalid_argument("predict: feature length mismatch");
  }
  double out = intercept;
  for (std::size_t j = 0; j < x.size(); ++j) out += coefficients(j) * x[j];
  return out;
}

Eigen::VectorXd LassoFit::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != coefficients.size()) {
    throw std::invalid_argument("predict: feature length mismatch");
  }
  return (X * coefficients).array() + intercept;
}

Standardization Standardization::fit(const Eigen::MatrixXd& X) {
  Standardization s;
  const double m = static_cast<double>(X.rows());
  s.means = X.colwise().mean().transpose();
  s.scales.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.means(j)).square().sum() / m;
    const double sd = std::sqrt(var);
    const double floor = 1e-12 * std::max(1.0, std::abs(s.means(j)));
    s.scales(j) = sd > floor ? sd : 0.0;
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (constant(j)) {
      out.col(j).setZero();
    } else {
      out.col(j) = (X.col(j).array() - means(j)) / scales(j);
    }
  }
  return out;
}

double soft_threshold(double x, double t) {
  if (t < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_design(X, y);
  if (is_constant(y)) return 0.0;
  const Eigen::MatrixXd Xs = Standardization::fit(X).apply(X);
  const Eigen::VectorXd yc = y.array() - y.mean();
  // Same reduction as the first coordinate-descent step, so the fit at
  // lambda_max is exactly zero.
  double top = 0.0;
  for (Eigen::Index j = 0; j < Xs.cols(); ++j) {
    top = std::max(top, std::abs(Xs.col(j).dot(yc) / static_cast<double>(X.rows())));
  }
  return top;
}

std::vector<double> lambda_path(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y,
                                const LassoOptions& options) {
  if (options.n_lambdas < 1) throw std::invalid_argument("n_lambdas must be >= 1");
  if (!(options.lambda_min_ratio > 0.0 && options.lambda_min_ratio < 1.0)) {
    throw std::invalid_argument("lambda_min_ratio must lie in (0, 1)");
  }
  const double top = lambda_max(X, y);
  std::vector<double> path;
  if (top == 0.0) {
    path.push_back(0.0);
    return path;
  }
  const std::size_t count = options.n_lambdas;
  path.reserve(count + 1);
  if (count == 1) {
    path.push_back(top);
  } else {
    const double log_step =
        std::log(options.lambda_min_ratio) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      path.push_back(top * std::exp(log_step * static_cast<double>(i)));
    }
    path.back() = top * options.lambda_min_ratio;
  }
  if (options.append_zero_penalty && X.cols() < X.rows()) path.push_back(0.0);
  return path;
}

std::vector<LassoFit> fit_lasso_path(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y,
                                     const LassoOptions& options) {
  const std::vector<double> penalties = lambda_path(X, y, options);
  return fit_lasso_path(X, y, penalties, options);
}

std::vector<LassoFit> fit_lasso_path(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y,
                                     std::span<const double> penalties,
                                     const LassoOptions& options) {
  check_design(X, y);
  const Eigen::Index m = X.rows();
  const Eigen::Index q = X.cols();
  const double dm = static_cast<double>(m);

  const Standardization std_ = Standardization::fit(X);
  std::vector<LassoFit> fits;
  fits.reserve(penalties.size());

  if (is_constant(y)) {
    for (double t : penalties) {
      fits.push_back(make_fit(std_, Eigen::VectorXd::Zero(q), y(0), t));
    }
    return fits;
  }

  const Eigen::MatrixXd Xs = std_.apply(X);
  const double y_mean = y.mean();
  Eigen::VectorXd residual = y.array() - y_mean;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd col_sq(q);
  for (Eigen::Index j = 0; j < q; ++j) col_sq(j) = Xs.col(j).squaredNorm() / dm;

  for (std::size_t idx = 0; idx < penalties.size(); ++idx) {
    const double t = penalties[idx];
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw std::invalid_argument("penalties must be finite and nonnegative");
    }
    std::vector<double> trace;
    std::size_t sweep = 0;
    for (;;) {
      if (sweep == options.max_sweeps) {
        throw ConvergenceError(
            "lasso did not converge at penalty index " + std::to_string(idx) +
                " within " + std::to_string(options.max_sweeps) + " sweeps",
            idx);
      }
      ++sweep;
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (col_sq(j) == 0.0) continue;
        const double grad = Xs.col(j).dot(residual) / dm + col_sq(j) * beta(j);
        const double updated = soft_threshold(grad, t) / col_sq(j);
        const double delta = updated - beta(j);
        if (delta != 0.0) {
          residual.noalias() -= delta * Xs.col(j);
          beta(j) = updated;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (options.record_objective) {
        trace.push_back(residual.squaredNorm() / (2.0 * dm) +
                        t * beta.lpNorm<1>());
      }
      if (max_change < options.tolerance) break;
    }
    LassoFit fit = make_fit(std_, beta, y_mean, t);
    fit.sweeps = sweep;
    fit.objective_trace = std::move(trace);
    fits.push_back(std::move(fit));
  }
  return fits;
}

std::vector<int> assign_cv_folds(std::size_t m, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("fold count must be >= 1");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x4356ULL));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> labels(m);
  for (std::size_t pos = 0; pos < m; ++pos) {
    labels[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return labels;
}

CvCurve cv_curve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                 std::uint64_t seed, const LassoOptions& options,
                 PenaltyRule rule) {
  if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  if (X.rows() < k) {
    throw std::invalid_argument("cross-validation needs at least k rows");
  }
  check_design(X, y);

  CvCurve curve;
  curve.penalties = lambda_path(X, y, options);
  const std::size_t L = curve.penalties.size();
  const std::vector<int> folds =
      assign_cv_folds(static_cast<std::size_t>(X.rows()), k, seed);

  std::vector<std::vector<double>> fold_mse(k, std::vector<double>(L, 0.0));
  std::vector<double> pooled(L, 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      (folds[i] == f ? test : train).push_back(i);
    }
    const Eigen::MatrixXd Xtr = X(train, Eigen::all);
    const Eigen::VectorXd ytr = y(train);
    const Eigen::MatrixXd Xte = X(test, Eigen::all);
    const Eigen::VectorXd yte = y(test);

    if (train.size() < 2) {
      const double sse = (yte.array() - ytr.mean()).square().sum();
      for (std::size_t l = 0; l < L; ++l) {
        fold_mse[f][l] = sse / static_cast<double>(test.size());
        pooled[l] += sse;
      }
      continue;
    }

    const std::vector<LassoFit> fits =
        fit_lasso_path(Xtr, ytr, curve.penalties, options);
    for (std::size_t l = 0; l < L; ++l) {
      const double sse = (yte - fits[l].predict(Xte)).squaredNorm();
      fold_mse[f][l] = sse / static_cast<double>(test.size());
      pooled[l] += sse;
    }
  }

  const double dm = static_cast<double>(X.rows());
  curve.mean_error.resize(L);
  curve.standard_error.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    curve.mean_error[l] = pooled[l] / dm;
    double mu = 0.0;
    for (int f = 0; f < k; ++f) mu += fold_mse[f][l];
    mu /= k;
    double ss = 0.0;
    for (int f = 0; f < k; ++f) ss += (fold_mse[f][l] - mu) * (fold_mse[f][l] - mu);
    curve.standard_error[l] = std::sqrt(ss / (k - 1) / k);
  }

  // First minimum on a descending path is the largest penalty among ties.
  std::size_t best = 0;
  for (std::size_t l = 1; l < L; ++l) {
    if (curve.mean_error[l] < curve.mean_error[best]) best = l;
  }
  if (rule == PenaltyRule::kOneStandardError) {
    const double limit = curve.mean_error[best] + curve.standard_error[best];
    for (std::size_t l = 0; l <= best; ++l) {
      if (curve.mean_error[l] <= limit) {
        best = l;
        break;
      }
    }
  }
  curve.selected = best;
  return curve;
}

LassoFit cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                   std::uint64_t seed, const LassoOptions& options,
                   PenaltyRule rule) {
  const CvCurve curve = cv_curve(X, y, k, seed, options, rule);
  const std::span<const double> prefix(curve.penalties.data(),
                                       curve.selected + 1);
  std::vector<LassoFit> fits = fit_lasso_path(X, y, prefix, options);
  LassoFit fit = std::move(fits.back());
  fit.cv_error = curve.mean_error[curve.selected];
  return fit;
}

BasisRow ControlFunction::basis(const FeatureRow& row) const {
  FeatureRow shifted = row;
  if (!covariate_center.empty()) {
    if (covariate_center.size() != row.covariates.size()) {
      throw std::invalid_argument("control function: covariate count mismatch");
    }
    for (std::size_t i = 0; i < shifted.covariates.size(); ++i) {
      shifted.covariates[i] -= covariate_center[i];
    }
  }
  return expand_basis(shifted, include_prediction);
}

double ControlFunction::operator()(const BasisRow& row) const {
  if (row.empty() || static_cast<Eigen::Index>(row.size()) !=
                         fit.coefficients.size() + 1) {
    throw std::invalid_argument("control function: basis layout mismatch");
  }
  double out = fit.intercept;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    out += fit.coefficients(j) * row[j + 1];
  }
  return out;
}

ControlFunction ControlFunction::constant(double value, bool include_prediction,
                                          std::string region,
                                          std::vector<double> covariate_center) {
  ControlFunction f;
  const auto q = static_cast<Eigen::Index>(
      basis_size(covariate_center.size(), include_prediction) - 1);
  f.fit.intercept = value;
  f.fit.coefficients = Eigen::VectorXd::Zero(q);
  f.fit.scaled_coefficients = Eigen::VectorXd::Zero(q);
  f.include_prediction = include_prediction;
  f.region = std::move(region);
  f.covariate_center = std::move(covariate_center);
  return f;
}

}  // namespace zoneppi
