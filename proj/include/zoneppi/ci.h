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

#ifndef ZONEPPI_CI_H_
#define ZONEPPI_CI_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "zoneppi/estimators.h"
#include "zoneppi/features.h"
#include "zoneppi/lasso.h"

namespace zoneppi {

enum class CiMethod { kBca, kPercentile, kClt, kBootstrapT };

std::string_view to_string(CiMethod method);
// Accepts bca, percentile (or pct), clt, t.
CiMethod parse_ci_method(std::string_view tag);

struct CiDiagnostics {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  double z0 = kNaN;
  double acceleration = kNaN;
  double lower_level = kNaN;
  double upper_level = kNaN;
  std::size_t dropped = 0;  // bootstrap-t replicates with zero SE
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  CiMethod method = CiMethod::kBca;
  std::size_t B = 0;  // 0 for clt
  CiDiagnostics diagnostics;

  double width() const { return upper - lower; }
  bool contains(double value) const { return lower <= value && value <= upper; }
};

// A zone's data after evaluating a fixed control function: everything the
// estimators need. f vectors may be empty for lbl.
struct ZoneSample {
  std::vector<double> y;
  std::vector<double> f_labeled;
  std::vector<double> f_unlabeled;

  std::size_t n() const { return y.size(); }
  std::size_t N() const { return f_unlabeled.size(); }
};

struct LabeledRow {
  double y = 0.0;
  BasisRow basis;
};

ZoneSample evaluate_control(std::span<const LabeledRow> labeled,
                            std::span<const BasisRow> unlabeled,
                            const ControlFunction& f);

EstimateResult estimate(const ZoneSample& sample, EstimatorKind kind);

struct BootstrapDraw {
  double theta = 0.0;
  double se = 0.0;
};

// B nonparametric replicates: n labeled pairs and N unlabeled controls are
// resampled with replacement and the estimate recomputed with f held fixed.
// Replicate b uses the stream derive_seed(seed, b), so results do not depend
// on thread count, and estimators sharing a seed share resampled indices.
// A replicate on which the estimator fails falls back to lambda = 0.
std::vector<BootstrapDraw> bootstrap_draws(const ZoneSample& sample,
                                           EstimatorKind kind, std::size_t B,
                                           std::uint64_t seed,
                                           unsigned threads = 1);
std::vector<double> bootstrap_estimates(const ZoneSample& sample,
                                        EstimatorKind kind, std::size_t B,
                                        std::uint64_t seed,
                                        unsigned threads = 1);
std::vector<double> bootstrap_estimates(std::span<const LabeledRow> labeled,
                                        std::span<const BasisRow> unlabeled,
                                        const ControlFunction& f,
                                        EstimatorKind kind, std::size_t B,
                                        std::uint64_t seed);

// n + N leave-one-out estimates: labeled deletions first, then unlabeled.
// Requires n >= 3.
std::vector<double> jackknife_estimates(const ZoneSample& sample,
                                        EstimatorKind kind);

// Bias-corrected and accelerated interval. The bias-correction proportion is
// clamped to [1/(2B), 1 - 1/(2B)]; acceleration is 0 when the jackknife has
// no spread. Endpoints are type-7 quantiles of the bootstrap sample.
ConfidenceInterval bca_interval(double theta_hat, std::span<const double> boots,
                                std::span<const double> jackknife,
                                double alpha);
ConfidenceInterval percentile_interval(std::span<const double> boots,
                                       double alpha);
ConfidenceInterval clt_interval(const EstimateResult& result, double alpha);
ConfidenceInterval bootstrap_t_interval(double theta_hat, double se_hat,
                                        std::span<const BootstrapDraw> draws,
                                        double alpha);

// Point estimate plus interval by the requested method.
ConfidenceInterval zone_interval(const ZoneSample& sample,
                                 const EstimateResult& point, CiMethod method,
                                 double alpha, std::size_t B,
                                 std::uint64_t seed, unsigned threads = 1);

}  // namespace zoneppi

#endif  // ZONEPPI_CI_H_
