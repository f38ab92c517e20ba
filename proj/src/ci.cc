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

#include "zoneppi/ci.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "zoneppi/parallel.h"
#include "zoneppi/random.h"
#include "zoneppi/stats.h"

namespace zoneppi {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
}

void check_bootstrap_size(std::size_t B) {
  if (B < 100) {
    throw std::invalid_argument("bootstrap intervals need B >= 100, got " +
                                std::to_string(B));
  }
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

EstimateResult estimate_or_fallback(const ZoneSample& s, EstimatorKind kind) {
  try {
    return estimate(s, kind);
  } catch (const std::invalid_argument&) {
    EstimateResult r = estimate(s, EstimatorKind::kLbl);
    r.estimator = kind;
    return r;
  }
}

}  // namespace

std::string_view to_string(CiMethod method) {
  switch (method) {
    case CiMethod::kBca: return "bca";
    case CiMethod::kPercentile: return "percentile";
    case CiMethod::kClt: return "clt";
    case CiMethod::kBootstrapT: return "t";
  }
  return "unknown";
}

CiMethod parse_ci_method(std::string_view tag) {
  if (tag == "bca") return CiMethod::kBca;
  if (tag == "percentile" || tag == "pct") return CiMethod::kPercentile;
  if (tag == "clt") return CiMethod::kClt;
  if (tag == "t") return CiMethod::kBootstrapT;
  throw std::invalid_argument("unknown interval method '" + std::string(tag) +
                              "'");
}

ZoneSample evaluate_control(std::span<const LabeledRow> labeled,
                            std::span<const BasisRow> unlabeled,
                            const ControlFunction& f) {
  ZoneSample s;
  s.y.reserve(labeled.size());
  s.f_labeled.reserve(labeled.size());
  s.f_unlabeled.reserve(unlabeled.size());
  for (const auto& row : labeled) {
    s.y.push_back(row.y);
    s.f_labeled.push_back(f(row.basis));
  }
  for (const auto& row : unlabeled) s.f_unlabeled.push_back(f(row));
  return s;
}

EstimateResult estimate(const ZoneSample& sample, EstimatorKind kind) {
  return ppi_estimate(sample.y, sample.f_labeled, sample.f_unlabeled, kind);
}

std::vector<BootstrapDraw> bootstrap_draws(const ZoneSample& sample,
                                           EstimatorKind kind, std::size_t B,
                                           std::uint64_t seed,
                                           unsigned threads) {
  if (B < 1) throw std::invalid_argument("bootstrap needs B >= 1");
  const std::size_t n = sample.n();
  const std::size_t N = sample.N();
  if (n < 2) throw std::invalid_argument("bootstrap needs at least 2 labeled");
  const bool has_f = sample.f_labeled.size() == n;

  std::vector<BootstrapDraw> out(B);
  parallel_for(B, threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    ZoneSample rs;
    rs.y.resize(n);
    if (has_f) rs.f_labeled.resize(n);
    rs.f_unlabeled.resize(N);
    std::uniform_int_distribution<std::size_t> pick_l(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = pick_l(rng);
      rs.y[i] = sample.y[k];
      if (has_f) rs.f_labeled[i] = sample.f_labeled[k];
    }
    if (N > 0) {
      std::uniform_int_distribution<std::size_t> pick_u(0, N - 1);
      for (std::size_t i = 0; i < N; ++i) {
        rs.f_unlabeled[i] = sample.f_unlabeled[pick_u(rng)];
      }
    }
    const EstimateResult r = estimate_or_fallback(rs, kind);
    out[b] = {r.theta_hat, r.se_plugin};
  });
  return out;
}

std::vector<double> bootstrap_estimates(const ZoneSample& sample,
                                        EstimatorKind kind, std::size_t B,
                                        std::uint64_t seed, unsigned threads) {
  const auto draws = bootstrap_draws(sample, kind, B, seed, threads);
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d.theta);
  return out;
}

std::vector<double> bootstrap_estimates(std::span<const LabeledRow> labeled,
                                        std::span<const BasisRow> unlabeled,
                                        const ControlFunction& f,
                                        EstimatorKind kind, std::size_t B,
                                        std::uint64_t seed) {
  return bootstrap_estimates(evaluate_control(labeled, unlabeled, f), kind, B,
                             seed);
}

std::vector<double> jackknife_estimates(const ZoneSample& sample,
                                        EstimatorKind kind) {
  const std::size_t n = sample.n();
  const std::size_t N = sample.N();
  if (n < 3) throw std::invalid_argument("jackknife needs n >= 3");
  const bool has_f = sample.f_labeled.size() == n;
  if (kind != EstimatorKind::kLbl && N < 1) {
    throw std::invalid_argument("jackknife needs N >= 1");
  }

  std::vector<double> out;
  out.reserve(n + N);

  ZoneSample drop_l;
  drop_l.f_unlabeled = sample.f_unlabeled;
  drop_l.y.resize(n - 1);
  if (has_f) drop_l.f_labeled.resize(n - 1);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t i = 0, k = 0; i < n; ++i) {
      if (i == m) continue;
      drop_l.y[k] = sample.y[i];
      if (has_f) drop_l.f_labeled[k] = sample.f_labeled[i];
      ++k;
    }
    out.push_back(estimate(drop_l, kind).theta_hat);
  }

  if (kind == EstimatorKind::kLbl) {
    const double full = mean(sample.y);
    out.insert(out.end(), N, full);
    return out;
  }

  ZoneSample drop_u;
  drop_u.y = sample.y;
  drop_u.f_labeled = sample.f_labeled;
  drop_u.f_unlabeled.resize(N - 1);
  for (std::size_t m = 0; m < N; ++m) {
    if (N == 1) {
      throw std::invalid_argument("jackknife cannot delete the only unlabeled");
    }
    for (std::size_t i = 0, k = 0; i < N; ++i) {
      if (i != m) drop_u.f_unlabeled[k++] = sample.f_unlabeled[i];
    }
    out.push_back(estimate(drop_u, kind).theta_hat);
  }
  return out;
}

ConfidenceInterval bca_interval(double theta_hat, std::span<const double> boots,
                                std::span<const double> jackknife,
                                double alpha) {
  check_alpha(alpha);
  check_bootstrap_size(boots.size());
  if (jackknife.empty()) throw std::invalid_argument("empty jackknife sample");

  const double B = static_cast<double>(boots.size());
  const auto below = std::count_if(boots.begin(), boots.end(),
                                   [&](double v) { return v <= theta_hat; });
  const double prop =
      std::clamp(static_cast<double>(below) / B, 0.5 / B, 1.0 - 0.5 / B);
  const double z0 = normal_quantile(prop);

  const double jbar = mean(jackknife);
  double s2 = 0.0, s3 = 0.0;
  for (double v : jackknife) {
    const double u = jbar - v;
    s2 += u * u;
    s3 += u * u * u;
  }
  const double accel = s2 > 0.0 ? s3 / (6.0 * std::pow(s2, 1.5)) : 0.0;

  auto adjusted_level = [&](double z_alpha, bool lower) {
    const double z = z0 + z_alpha;
    const double denom = 1.0 - accel * z;
    if (!(denom > 0.0)) return lower ? 0.0 : 1.0;
    return normal_cdf(z0 + z / denom);
  };
  ConfidenceInterval ci;
  ci.method = CiMethod::kBca;
  ci.alpha = alpha;
  ci.B = boots.size();
  ci.diagnostics.z0 = z0;
  ci.diagnostics.acceleration = accel;
  if (z0 == 0.0 && accel == 0.0) {
    // Plain percentile levels; avoids the cdf(quantile(p)) round trip.
    ci.diagnostics.lower_level = alpha / 2.0;
    ci.diagnostics.upper_level = 1.0 - alpha / 2.0;
  } else {
    ci.diagnostics.lower_level =
        adjusted_level(normal_quantile(alpha / 2.0), true);
    ci.diagnostics.upper_level =
        adjusted_level(normal_quantile(1.0 - alpha / 2.0), false);
  }

  const std::vector<double> sorted = sorted_copy(boots);
  ci.lower = quantile_sorted(sorted, ci.diagnostics.lower_level);
  ci.upper = quantile_sorted(sorted, ci.diagnostics.upper_level);
  if (ci.lower > ci.upper) std::swap(ci.lower, ci.upper);
  return ci;
}

ConfidenceInterval percentile_interval(std::span<const double> boots,
                                       double alpha) {
  check_alpha(alpha);
  check_bootstrap_size(boots.size());
  const std::vector<double> sorted = sorted_copy(boots);
  ConfidenceInterval ci;
  ci.method = CiMethod::kPercentile;
  ci.alpha = alpha;
  ci.B = boots.size();
  ci.diagnostics.lower_level = alpha / 2.0;
  ci.diagnostics.upper_level = 1.0 - alpha / 2.0;
  ci.lower = quantile_sorted(sorted, alpha / 2.0);
  ci.upper = quantile_sorted(sorted, 1.0 - alpha / 2.0);
  return ci;
}

ConfidenceInterval clt_interval(const EstimateResult& result, double alpha) {
  check_alpha(alpha);
  if (!std::isfinite(result.se_plugin) || result.se_plugin < 0.0) {
    throw std::invalid_argument("clt interval needs a finite standard error");
  }
  const double half = normal_quantile(1.0 - alpha / 2.0) * result.se_plugin;
  ConfidenceInterval ci;
  ci.method = CiMethod::kClt;
  ci.alpha = alpha;
  ci.B = 0;
  ci.lower = result.theta_hat - half;
  ci.upper = result.theta_hat + half;
  return ci;
}

ConfidenceInterval bootstrap_t_interval(double theta_hat, double se_hat,
                                        std::span<const BootstrapDraw> draws,
                                        double alpha) {
  check_alpha(alpha);
  check_bootstrap_size(draws.size());
  std::vector<double> t;
  t.reserve(draws.size());
  for (const auto& d : draws) {
    if (d.se > 0.0 && std::isfinite(d.se)) t.push_back((d.theta - theta_hat) / d.se);
  }
  if (t.empty()) {
    throw std::invalid_argument("bootstrap-t: every replicate has zero SE");
  }
  std::sort(t.begin(), t.end());
  ConfidenceInterval ci;
  ci.method = CiMethod::kBootstrapT;
  ci.alpha = alpha;
  ci.B = draws.size();
  ci.diagnostics.dropped = draws.size() - t.size();
  ci.diagnostics.lower_level = alpha / 2.0;
  ci.diagnostics.upper_level = 1.0 - alpha / 2.0;
  ci.lower = theta_hat - quantile_sorted(t, 1.0 - alpha / 2.0) * se_hat;
  ci.upper = theta_hat - quantile_sorted(t, alpha / 2.0) * se_hat;
  if (ci.lower > ci.upper) std::swap(ci.lower, ci.upper);
  return ci;
}

ConfidenceInterval zone_interval(const ZoneSample& sample,
                                 const EstimateResult& point, CiMethod method,
                                 double alpha, std::size_t B,
                                 std::uint64_t seed, unsigned threads) {
  switch (method) {
    case CiMethod::kClt:
      return clt_interval(point, alpha);
    case CiMethod::kPercentile:
      return percentile_interval(
          bootstrap_estimates(sample, point.estimator, B, seed, threads), alpha);
    case CiMethod::kBca:
      return bca_interval(
          point.theta_hat,
          bootstrap_estimates(sample, point.estimator, B, seed, threads),
          jackknife_estimates(sample, point.estimator), alpha);
    case CiMethod::kBootstrapT: {
      const auto draws =
          bootstrap_draws(sample, point.estimator, B, seed, threads);
      return bootstrap_t_interval(point.theta_hat, point.se_plugin, draws,
                                  alpha);
    }
  }
  throw std::invalid_argument("unknown interval method");
}

}  // namespace zoneppi
