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

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "zoneppi/ci.h"
#include "zoneppi/random.h"
#include "zoneppi/stats.h"

using namespace zoneppi;

namespace {

ZoneSample gaussian_sample(std::size_t n, std::size_t N, double rho, Rng& rng,
                           double mu = 0.0) {
  std::normal_distribution<double> g;
  ZoneSample s;
  const double e = std::sqrt(1 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    s.y.push_back(mu + g(rng));
    s.f_labeled.push_back(rho * (s.y.back() - mu) + e * g(rng));
  }
  for (std::size_t i = 0; i < N; ++i) s.f_unlabeled.push_back(rho * g(rng) + e * g(rng));
  return s;
}

std::vector<double> symmetric_values(std::size_t half, double center) {
  std::vector<double> v;
  for (std::size_t i = 1; i <= half; ++i) {
    const double d = std::sqrt(static_cast<double>(i));
    v.push_back(center - d);
    v.push_back(center + d);
  }
  return v;
}

}  // namespace

TEST_SUITE("ci") {

TEST_CASE("method tags") {
  CHECK(parse_ci_method("bca") == CiMethod::kBca);
  CHECK(parse_ci_method("pct") == CiMethod::kPercentile);
  CHECK(parse_ci_method("percentile") == CiMethod::kPercentile);
  CHECK(parse_ci_method("clt") == CiMethod::kClt);
  CHECK(parse_ci_method("t") == CiMethod::kBootstrapT);
  CHECK_THROWS_AS(parse_ci_method("wald"), std::invalid_argument);
}

TEST_CASE("bootstrap replicates are deterministic") {
  ZoneSample s{{1, 2, 3}, {0.5, 1.0, 1.5}, {1.0, 2.0}};
  const auto a = bootstrap_estimates(s, EstimatorKind::kPpipp, 1, 9);
  const auto b = bootstrap_estimates(s, EstimatorKind::kPpipp, 1, 9);
  REQUIRE(a.size() == 1);
  CHECK(a == b);
  const auto many = bootstrap_estimates(s, EstimatorKind::kPpipp, 500, 9);
  CHECK(many == bootstrap_estimates(s, EstimatorKind::kPpipp, 500, 9, 4));
  CHECK(many[0] == a[0]);
  CHECK(many != bootstrap_estimates(s, EstimatorKind::kPpipp, 500, 10));
}

TEST_CASE("basis-row overload evaluates the control once") {
  LassoFit fit;
  fit.intercept = 0.5;
  fit.coefficients = Eigen::VectorXd::Zero(6);
  fit.coefficients(0) = 1.0;
  fit.scaled_coefficients = fit.coefficients;
  const ControlFunction f{fit, true, "R", {0, 0}};
  std::vector<LabeledRow> lab;
  std::vector<BasisRow> unl;
  Rng rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 10; ++i) {
    const double y = g(rng);
    lab.push_back({y, expand_basis({y + g(rng), {g(rng), g(rng)}}, true)});
  }
  for (int i = 0; i < 30; ++i) unl.push_back(expand_basis({g(rng), {g(rng), g(rng)}}, true));
  const ZoneSample s = evaluate_control(lab, unl, f);
  CHECK(s.f_labeled[0] == doctest::Approx(0.5 + lab[0].basis[1]));
  CHECK(bootstrap_estimates(lab, unl, f, EstimatorKind::kPpipp, 200, 3) ==
        bootstrap_estimates(s, EstimatorKind::kPpipp, 200, 3));
}

TEST_CASE("constant yields under lbl") {
  ZoneSample s{{2.5, 2.5, 2.5, 2.5}, {}, {0, 0}};
  for (double v : bootstrap_estimates(s, EstimatorKind::kLbl, 200, 1)) CHECK(v == 2.5);
}

TEST_CASE("constant control resamples reduce to labeled means") {
  ZoneSample s{{1, 2}, {0, 0}, {0}};
  for (double v : bootstrap_estimates(s, EstimatorKind::kPpipp, 200, 2)) {
    CHECK((v == 1.0 || v == 2.0 || v == 1.5));
  }
}

TEST_CASE("bootstrap spread tracks the plug-in SE") {
  Rng rng(3);
  const auto s = gaussian_sample(60, 240, 0.6, rng);
  const auto boots = bootstrap_estimates(s, EstimatorKind::kPpipp, 1000, 4);
  const double sd = std::sqrt(sample_variance(boots));
  const double se = estimate(s, EstimatorKind::kPpipp).se_plugin;
  CHECK(std::abs(sd / se - 1.0) < 0.15);
}

TEST_CASE("jackknife leaves one out") {
  ZoneSample s{{1, 2, 3}, {}, {0, 0}};
  const auto j = jackknife_estimates(s, EstimatorKind::kLbl);
  CHECK(j == std::vector<double>{2.5, 2.0, 1.5, 2.0, 2.0});
  CHECK_THROWS_AS(jackknife_estimates(ZoneSample{{1, 2}, {1, 2}, {1}}, EstimatorKind::kPpipp),
                  std::invalid_argument);

  Rng rng(5);
  const auto g = gaussian_sample(8, 5, 0.5, rng);
  const auto jk = jackknife_estimates(g, EstimatorKind::kPpipp);
  REQUIRE(jk.size() == 13);
  ZoneSample drop = g;
  drop.y.erase(drop.y.begin() + 3);
  drop.f_labeled.erase(drop.f_labeled.begin() + 3);
  CHECK(jk[3] == doctest::Approx(estimate(drop, EstimatorKind::kPpipp).theta_hat).epsilon(1e-13));
  drop = g;
  drop.f_unlabeled.erase(drop.f_unlabeled.begin() + 2);
  CHECK(jk[10] == doctest::Approx(estimate(drop, EstimatorKind::kPpipp).theta_hat).epsilon(1e-13));
}

TEST_CASE("symmetric jackknife has zero acceleration") {
  ZoneSample s{{1, 2, 3, 4, 5, 6, 7}, {}, {0}};
  const auto jk = jackknife_estimates(s, EstimatorKind::kLbl);
  const auto boots = symmetric_values(500, 4.0);
  const auto ci = bca_interval(4.0, boots, jk, 0.05);
  CHECK(std::abs(ci.diagnostics.acceleration) < 1e-12);
}

TEST_CASE("BCa reduces to percentile without bias or skew") {
  const auto boots = symmetric_values(500, 1.0);
  const std::vector<double> jk = {1, 2, 3, 4, 5, 6, 7};
  const auto bca = bca_interval(1.0, boots, jk, 0.1);
  const auto pct = percentile_interval(boots, 0.1);
  CHECK(bca.diagnostics.z0 == 0.0);
  CHECK(bca.diagnostics.acceleration == 0.0);
  CHECK(bca.lower == doctest::Approx(pct.lower).epsilon(1e-12));
  CHECK(bca.upper == doctest::Approx(pct.upper).epsilon(1e-12));
  CHECK(bca.diagnostics.lower_level == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("bias correction") {
  std::vector<double> boots(1000);
  std::iota(boots.begin(), boots.end(), 0.0);
  const std::vector<double> jk(5, 1.0);
  CHECK(bca_interval(499.5, boots, jk, 0.05).diagnostics.z0 == 0.0);
  const auto clamped = bca_interval(-1.0, boots, jk, 0.05);
  CHECK(clamped.diagnostics.z0 == doctest::Approx(-3.2905).epsilon(1e-4));
  CHECK(clamped.diagnostics.z0 == normal_quantile(1.0 / 2000));
  CHECK(bca_interval(2000.0, boots, jk, 0.05).diagnostics.z0 == normal_quantile(1999.0 / 2000));
  CHECK(clamped.diagnostics.acceleration == 0.0);
}

TEST_CASE("BCa argument validation") {
  const std::vector<double> boots(100, 1.0), jk(4, 1.0);
  CHECK_THROWS_AS(bca_interval(1.0, boots, jk, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bca_interval(1.0, boots, jk, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bca_interval(1.0, std::vector<double>(99, 1.0), jk, 0.05),
                  std::invalid_argument);
  const auto ci = bca_interval(1.0, boots, jk, 0.05);
  CHECK(ci.lower == 1.0);
  CHECK(ci.upper == 1.0);
}

TEST_CASE("BCa endpoints stay inside the bootstrap range") {
  Rng rng(7);
  std::gamma_distribution<double> gam(0.7, 2.0);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> boots(100 + t), jk(5 + t % 40);
    for (auto& v : boots) v = gam(rng);
    for (auto& v : jk) v = gam(rng) * (t % 2 ? 1 : -1);
    const double theta = 1.4 + g(rng);
    const auto ci = bca_interval(theta, boots, jk, 0.01 + 0.002 * t);
    const auto [lo, hi] = std::minmax_element(boots.begin(), boots.end());
    CHECK(ci.lower >= *lo);
    CHECK(ci.upper <= *hi);
    CHECK(ci.lower <= ci.upper);
  }
}

TEST_CASE("normal-approximation interval") {
  EstimateResult r;
  r.theta_hat = 2.0;
  r.se_plugin = 1.0;
  auto ci = clt_interval(r, 0.05);
  CHECK(ci.lower == doctest::Approx(0.0400).epsilon(1e-4));
  CHECK(ci.upper == doctest::Approx(3.9600).epsilon(1e-4));
  CHECK(ci.B == 0);
  ci = clt_interval(r, 0.32);
  CHECK(ci.upper - 2.0 == doctest::Approx(0.9945).epsilon(1e-4));
  r.se_plugin = 0.0;
  ci = clt_interval(r, 0.05);
  CHECK(ci.lower == 2.0);
  CHECK(ci.upper == 2.0);
  r.se_plugin = std::nan("");
  CHECK_THROWS_AS(clt_interval(r, 0.05), std::invalid_argument);
}

TEST_CASE("bootstrap-t interval") {
  std::vector<BootstrapDraw> draws;
  for (double v : symmetric_values(100, 0.0)) draws.push_back({3.0 + v, 2.0});
  auto ci = bootstrap_t_interval(3.0, 2.0, draws, 0.1);
  std::vector<double> t;
  for (const auto& d : draws) t.push_back((d.theta - 3.0) / 2.0);
  std::sort(t.begin(), t.end());
  CHECK(ci.lower == doctest::Approx(3.0 - quantile_sorted(t, 0.95) * 2.0));
  CHECK(ci.upper == doctest::Approx(3.0 - quantile_sorted(t, 0.05) * 2.0));
  CHECK(ci.upper - 3.0 == doctest::Approx(3.0 - ci.lower));
  CHECK(ci.diagnostics.dropped == 0);

  std::vector<BootstrapDraw> some(100, {1.0, 1.0});
  for (std::size_t i = 0; i < some.size(); ++i) some[i].theta = static_cast<double>(i);
  some[7].se = 0.0;
  CHECK(bootstrap_t_interval(50.0, 1.0, some, 0.05).diagnostics.dropped == 1);
  std::vector<BootstrapDraw> none(100, {1.0, 0.0});
  CHECK_THROWS_AS(bootstrap_t_interval(1.0, 1.0, none, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_t_interval(1.0, 1.0, std::vector<BootstrapDraw>(99, {1.0, 1.0}), 0.05),
                  std::invalid_argument);
}

TEST_CASE("intervals nest as alpha shrinks") {
  Rng rng(8);
  const auto s = gaussian_sample(30, 90, 0.5, rng);
  const auto point = estimate(s, EstimatorKind::kPpipp);
  const auto boots = bootstrap_estimates(s, EstimatorKind::kPpipp, 1000, 3);
  double prev_lo = -1e300, prev_hi = 1e300;
  for (double a : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const auto clt = clt_interval(point, a);
    const auto pct = percentile_interval(boots, a);
    const auto clt_wide = clt_interval(point, a / 2);
    const auto pct_wide = percentile_interval(boots, a / 2);
    CHECK(clt_wide.lower <= clt.lower);
    CHECK(clt_wide.upper >= clt.upper);
    CHECK(pct_wide.lower <= pct.lower);
    CHECK(pct_wide.upper >= pct.upper);
    CHECK(pct.lower >= prev_lo);
    CHECK(pct.upper <= prev_hi);
    prev_lo = pct.lower;
    prev_hi = pct.upper;
  }
}

TEST_CASE("zone_interval dispatch is seed-stable") {
  Rng rng(9);
  const auto s = gaussian_sample(25, 75, 0.5, rng);
  const auto point = estimate(s, EstimatorKind::kPpipp);
  for (auto m : {CiMethod::kBca, CiMethod::kPercentile, CiMethod::kClt, CiMethod::kBootstrapT}) {
    const auto a = zone_interval(s, point, m, 0.05, 300, 11);
    const auto b = zone_interval(s, point, m, 0.05, 300, 11, 3);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.method == m);
    CHECK(a.contains(point.theta_hat));
  }
}

TEST_CASE("labeled-mean BCa coverage on Gaussian zones") {
  Rng rng(10);
  int covered = 0;
  const int datasets = 500;
  for (int d = 0; d < datasets; ++d) {
    const auto s = gaussian_sample(50, 200, 0.0, rng, 3.0);
    const auto point = estimate(s, EstimatorKind::kLbl);
    const auto ci = zone_interval(s, point, CiMethod::kBca, 0.05, 1000,
                                  derive_seed(77, static_cast<std::uint64_t>(d)));
    covered += ci.contains(3.0) ? 1 : 0;
  }
  const double coverage = static_cast<double>(covered) / datasets;
  CHECK(coverage >= 0.92);
  CHECK(coverage <= 0.975);
}

}  // TEST_SUITE
