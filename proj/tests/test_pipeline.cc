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
#include <random>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_util.h"
#include "zoneppi/error.h"
#include "zoneppi/pipeline.h"
#include "zoneppi/stats.h"
#include "zoneppi/synth.h"

using namespace zoneppi;

namespace {

ZoneDataset sized_zone(const std::string& id, std::size_t n) {
  return testing::gaussian_zone(id, n, 0, 1.0, 1);
}

std::vector<std::size_t> fold_sizes(const std::vector<int>& labels, int K) {
  std::vector<std::size_t> s(static_cast<std::size_t>(K), 0);
  for (int k : labels) ++s[static_cast<std::size_t>(k)];
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<FieldRecord> flatten(const std::vector<ZoneDataset>& zones) {
  std::vector<FieldRecord> out;
  for (const auto& z : zones) {
    out.insert(out.end(), z.labeled.begin(), z.labeled.end());
    out.insert(out.end(), z.unlabeled.begin(), z.unlabeled.end());
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("folds are dealt evenly within each zone") {
  const std::vector<ZoneDataset> zones = {sized_zone("a", 20), sized_zone("b", 21),
                                          sized_zone("c", 3)};
  const auto f = assign_folds(zones, 5, 7);
  CHECK(fold_sizes(f.labels[0], 5) == std::vector<std::size_t>{4, 4, 4, 4, 4});
  CHECK(fold_sizes(f.labels[1], 5) == std::vector<std::size_t>{4, 4, 4, 4, 5});
  CHECK(fold_sizes(f.labels[2], 5) == std::vector<std::size_t>{0, 0, 1, 1, 1});
  CHECK(assign_folds(zones, 5, 7).labels == f.labels);
  CHECK(assign_folds(zones, 5, 8).labels != f.labels);
  const auto g = f.global_fold_sizes();
  std::size_t total = 0;
  for (auto s : g) total += s;
  CHECK(total == 44);
  CHECK_THROWS_AS(assign_folds(zones, 1, 7), std::invalid_argument);
}

TEST_CASE("column mode passes predictions through") {
  std::vector<ZoneDataset> zones = {testing::gaussian_zone("a", 10, 4, 0.5, 2)};
  const auto cf = cross_fit_predictions(zones, assign_folds(zones, 5, 1), nullptr);
  for (std::size_t i = 0; i < 10; ++i) CHECK(cf.predictions[0].labeled[i] == *zones[0].labeled[i].prediction);
  for (std::size_t i = 0; i < 4; ++i) CHECK(cf.predictions[0].unlabeled[i] == *zones[0].unlabeled[i].prediction);
  CHECK(cf.training_sets.empty());
  zones[0].unlabeled[2].prediction.reset();
  CHECK_THROWS_AS(cross_fit_predictions(zones, assign_folds(zones, 5, 1), nullptr), DatasetError);
}

TEST_CASE("mean trainer: fold-complement means") {
  std::vector<ZoneDataset> zones = {testing::gaussian_zone("toy", 10, 3, 0.5, 3)};
  for (auto& f : zones[0].labeled) f.features = {0.0};
  for (auto& f : zones[0].unlabeled) f.features = {0.0};
  const auto folds = assign_folds(zones, 5, 4);
  const MeanTrainer trainer;
  const auto cf = cross_fit_predictions(zones, folds, &trainer);
  std::vector<double> complement(5);
  for (int k = 0; k < 5; ++k) {
    double s = 0;
    int c = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      if (folds.labels[0][i] != k) {
        s += *zones[0].labeled[i].yield;
        ++c;
      }
    }
    complement[static_cast<std::size_t>(k)] = s / c;
  }
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(cf.predictions[0].labeled[i] ==
          doctest::Approx(complement[static_cast<std::size_t>(folds.labels[0][i])]).epsilon(1e-14));
  }
  const double avg = mean(complement);
  for (double p : cf.predictions[0].unlabeled) CHECK(p == doctest::Approx(avg).epsilon(1e-14));
}

TEST_CASE("cross-fitting hygiene and fold union") {
  std::vector<ZoneDataset> zones;
  for (int z = 0; z < 4; ++z) {
    zones.push_back(testing::gaussian_zone("z" + std::to_string(z), 12 + z, 5, 0.5, 4));
    for (auto& f : zones.back().labeled) f.features = {f.latitude, 1.0};
    for (auto& f : zones.back().unlabeled) f.features = {f.latitude, 1.0};
  }
  const auto folds = assign_folds(zones, 5, 9);
  const LinearTrainer trainer;
  const auto cf = cross_fit_predictions(zones, folds, &trainer);
  REQUIRE(cf.training_sets.size() == 5);
  std::set<FieldIndex> union_of_holdouts;
  for (int k = 0; k < 5; ++k) {
    const auto& train = cf.training_sets[static_cast<std::size_t>(k)];
    const std::set<FieldIndex> train_set(train.begin(), train.end());
    for (std::size_t z = 0; z < zones.size(); ++z) {
      for (std::size_t i = 0; i < zones[z].n(); ++i) {
        const bool held_out = folds.labels[z][i] == k;
        CHECK(held_out != static_cast<bool>(train_set.count({z, i})));
        if (held_out) CHECK(union_of_holdouts.insert({z, i}).second);
      }
    }
  }
  std::size_t labeled = 0;
  for (const auto& z : zones) labeled += z.n();
  CHECK(union_of_holdouts.size() == labeled);

  zones[1].labeled[0].features.clear();
  CHECK_THROWS_AS(cross_fit_predictions(zones, folds, &trainer), DatasetError);
}

TEST_CASE("linear trainer on noiseless features") {
  Rng rng(5);
  std::normal_distribution<double> g;
  ZoneDataset z;
  z.zone_id = "lin";
  z.study_region = "A";
  for (std::size_t i = 0; i < 500; ++i) {
    FieldRecord f = testing::field("lin", i, 0.0, 0.0);
    f.features = {g(rng), g(rng), g(rng)};
    f.yield = 1.0 + 2.0 * f.features[0] - f.features[1] + 0.5 * f.features[2];
    z.labeled.push_back(f);
  }
  const std::vector<ZoneDataset> zones = {z};
  const LinearTrainer trainer;
  const auto cf = cross_fit_predictions(zones, assign_folds(zones, 5, 1), &trainer);
  std::vector<double> y;
  for (const auto& f : z.labeled) y.push_back(*f.yield);
  CHECK(r_squared_within(y, cf.predictions[0].labeled) >= 0.99);
}

TEST_CASE("one control function per pooling unit") {
  std::vector<ZoneDataset> zones = {testing::gaussian_zone("z1", 30, 10, 0.5, 6, "A"),
                                    testing::gaussian_zone("z2", 30, 10, 0.5, 6, "A"),
                                    testing::gaussian_zone("z3", 30, 10, 0.5, 6, "B")};
  const auto cf = cross_fit_predictions(zones, assign_folds(zones, 5, 1), nullptr);
  CHECK(learn_control_functions(zones, cf.predictions, PoolingScale::kGlobal, true, 1).units.size() == 1);
  const auto reg = learn_control_functions(zones, cf.predictions, PoolingScale::kRegion, true, 1);
  CHECK(reg.units.size() == 2);
  CHECK(reg.units.count("A") == 1);
  CHECK(&reg.for_zone(zones[1]) == &reg.units.at("A"));
  CHECK(learn_control_functions(zones, cf.predictions, PoolingScale::kZone, false, 1).units.size() == 3);
  CHECK(pooling_unit(zones[2], PoolingScale::kRegion) == "B");
  CHECK(pooling_unit(zones[2], PoolingScale::kZone) == "z3");
  CHECK(pooling_unit(zones[2], PoolingScale::kGlobal) == "global");
  // Informative predictions get a positive coefficient.
  CHECK(reg.units.at("A").fit.coefficients(0) > 0.5);
  CHECK(reg.units.at("A").fit.coefficients.size() == 6);
}

TEST_CASE("constant yields and tiny units give constant controls") {
  std::vector<ZoneDataset> zones = {testing::gaussian_zone("z1", 30, 10, 0.5, 7, "A"),
                                    testing::gaussian_zone("z2", 6, 10, 0.5, 7, "B")};
  for (auto& f : zones[0].labeled) f.yield = 3.25;
  const auto cf = cross_fit_predictions(zones, assign_folds(zones, 5, 1), nullptr);
  const auto set = learn_control_functions(zones, cf.predictions, PoolingScale::kRegion, true, 1);
  const auto& a = set.units.at("A");
  CHECK(a.fit.coefficients.isZero(0.0));
  CHECK(a.evaluate({7.0, {1.0, 2.0}}) == 3.25);
  const auto& b = set.units.at("B");
  CHECK(b.fit.coefficients.isZero(0.0));
  REQUIRE(set.warnings.size() == 1);
  CHECK(set.warnings[0].find("B") != std::string::npos);
}

TEST_CASE("config validation and JSON") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  c.folds = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.bootstrap_samples = 50;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.ci_method = CiMethod::kClt;
  CHECK_NOTHROW(c.validate());

  c = {};
  c.pooling_scale = PoolingScale::kZone;
  c.estimator = EstimatorKind::kAipw;
  c.seed = 99;
  const nlohmann::json j = c;
  const auto back = j.get<PipelineConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.pooling_scale == PoolingScale::kZone);
  CHECK_THROWS_AS(nlohmann::json({{"fold", 3}}).get<PipelineConfig>(), std::invalid_argument);
  CHECK(nlohmann::json({{"folds", 3}}).get<PipelineConfig>().folds == 3);
}

TEST_CASE("labeled-mean baseline path") {
  SynthConfig s;
  s.n_zones = 6;
  s.unlabeled_multiplier = 2;
  s.seed = 3;
  const auto records = generate(s);
  PipelineConfig c;
  c.estimator = EstimatorKind::kLbl;
  c.ci_method = CiMethod::kClt;
  const auto r = run_pipeline(records, c);
  REQUIRE(r.reports.size() == 6);
  for (std::size_t z = 0; z < 6; ++z) {
    double sum = 0;
    for (const auto& f : r.eligibility.zones[z].labeled) sum += *f.yield;
    CHECK(r.reports[z].estimate.theta_hat ==
          doctest::Approx(sum / static_cast<double>(r.eligibility.zones[z].n())).epsilon(1e-14));
    CHECK(r.reports[z].estimate.lambda_hat == 0.0);
    CHECK(r.reports[z].pooling_unit.empty());
  }
}

TEST_CASE("29-zone run, determinism and thread independence") {
  SynthConfig s;
  s.unlabeled_multiplier = 3;
  s.seed = 11;
  const auto records = generate(s);
  PipelineConfig c;
  c.bootstrap_samples = 200;
  c.seed = 5;
  const auto a = run_pipeline(records, c);
  CHECK(a.reports.size() == 29);
  for (const auto& rep : a.reports) {
    CHECK(std::isfinite(rep.ci.lower));
    CHECK(std::isfinite(rep.ci.upper));
    CHECK(rep.re_theoretical >= 1.0);
    CHECK(rep.ci.lower <= rep.ci.upper);
  }
  c.threads = 4;
  const auto b = run_pipeline(records, c);
  CHECK(reports_to_json(a).dump() == reports_to_json(b).dump());
  std::ostringstream ca, cb;
  write_reports_csv(ca, a);
  write_reports_csv(cb, b);
  CHECK(ca.str() == cb.str());
  CHECK(ca.str().rfind("zone_id,region,estimator,theta_hat,lambda_hat,se_plugin,ci_lower,"
                       "ci_upper,n,N,r2_within,re_theoretical\n", 0) == 0);
}

TEST_CASE("zones without unlabeled fields fall back with a warning") {
  std::vector<ZoneDataset> zones = {testing::gaussian_zone("z1", 25, 50, 0.5, 8),
                                    testing::gaussian_zone("z2", 25, 0, 0.5, 8)};
  PipelineConfig c;
  c.ci_method = CiMethod::kClt;
  c.pooling_scale = PoolingScale::kGlobal;
  const auto r = run_pipeline(flatten(zones), c);
  REQUIRE(r.reports.size() == 2);
  CHECK(r.reports[1].estimate.lambda_hat == 0.0);
  CHECK_FALSE(r.reports[1].warnings.empty());
  CHECK(r.reports[0].warnings.empty());
}

TEST_CASE("power tuning beats the covariate-only control on informative data") {
  double sq_pp = 0, sq_np = 0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    SynthConfig s;
    s.n_zones = 20;
    s.fields_per_zone_min = s.fields_per_zone_max = 100;
    s.target_r2 = 0.6;
    s.seed = 100 + rep;
    auto records = generate(s);
    // Hide all but 25 yields per zone; the truth is the full-zone mean.
    std::map<std::string, std::pair<double, int>> truth;
    std::map<std::string, int> seen;
    for (auto& f : records) {
      truth[f.zone_id].first += *f.yield;
      truth[f.zone_id].second += 1;
      if (seen[f.zone_id]++ >= 25) f.yield.reset();
    }
    PipelineConfig c;
    c.ci_method = CiMethod::kClt;
    c.seed = rep;
    const auto pp = run_pipeline(records, c);
    c.estimator = EstimatorKind::kNophoto;
    const auto np = run_pipeline(records, c);
    REQUIRE(pp.reports.size() == 20);
    for (std::size_t z = 0; z < 20; ++z) {
      const auto& t = truth.at(pp.reports[z].zone_id);
      const double theta = t.first / t.second;
      sq_pp += std::pow(pp.reports[z].estimate.theta_hat - theta, 2);
      sq_np += std::pow(np.reports[z].estimate.theta_hat - theta, 2);
    }
  }
  CHECK(sq_pp < sq_np);
}

TEST_CASE("enum tags") {
  for (auto s : {PoolingScale::kZone, PoolingScale::kRegion, PoolingScale::kGlobal}) {
    CHECK(parse_pooling_scale(to_string(s)) == s);
  }
  CHECK(parse_predictor_mode("linear") == PredictorMode::kLinear);
  CHECK_THROWS_AS(parse_pooling_scale("country"), std::invalid_argument);
}

}  // TEST_SUITE
