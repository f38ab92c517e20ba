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

#ifndef ZONEPPI_EVAL_H_
#define ZONEPPI_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "zoneppi/ci.h"
#include "zoneppi/data.h"
#include "zoneppi/estimators.h"
#include "zoneppi/pipeline.h"

namespace zoneppi {

// How squared errors (and widths) are combined into a relative efficiency.
// kRatioOfAverages: sum(lbl) / sum(estimator) over all replicates.
// kAverageOfRatios: mean of per-replicate ratios.
enum class RatioMode { kRatioOfAverages, kAverageOfRatios };
enum class GroupBy { kAll, kRegion };

std::string_view to_string(RatioMode mode);
RatioMode parse_ratio_mode(std::string_view tag);
std::string_view to_string(GroupBy group_by);
GroupBy parse_group_by(std::string_view tag);

struct EvalConfig {
  int reps_per_zone = 10;
  double unlabeled_multiplier = 4.0;
  std::vector<EstimatorKind> estimators = {
      EstimatorKind::kLbl, EstimatorKind::kPpipp, EstimatorKind::kPpi,
      EstimatorKind::kAipw, EstimatorKind::kNophoto};
  CiMethod ci_method = CiMethod::kBca;
  double alpha = 0.05;
  int bootstrap_samples = 1000;
  std::uint64_t seed = 0;
  bool refit_control_per_rep = true;
  RatioMode ratio_mode = RatioMode::kRatioOfAverages;
  GroupBy group_by = GroupBy::kAll;
  int band_bootstrap_samples = 1000;
  unsigned threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const EvalConfig& c);
void from_json(const nlohmann::json& j, EvalConfig& c);

// Mean yield over the zone's original labeled fields: the estimand of every
// replicate drawn from that zone.
double zone_estimand(const ZoneDataset& zone);

// Indices into ZoneDataset::labeled. The labeled draw has size n (the zone's
// labeled count); the unlabeled draw, independent of it, has size
// round(unlabeled_multiplier * n). Keyed on (seed, zone_id, rep).
struct Replicate {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  double theta = 0.0;

  std::size_t n() const { return labeled.size(); }
  std::size_t N() const { return unlabeled.size(); }
};

Replicate make_replicate(const ZoneDataset& zone, const EvalConfig& config,
                         int rep);

struct Band {
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
};

// One zone's contribution to a group ratio. The group statistic is
// (sum numerator / sum denominator)^exponent.
struct ZoneRatio {
  double numerator = 0.0;
  double denominator = 0.0;
};

double group_ratio(std::span<const ZoneRatio> zones, double exponent = 1.0);

// BCa interval (level 1 - alpha) for the group statistic with zones as the
// resampling unit.
// Throws std::invalid_argument for fewer than 3 zones.
Band re_uncertainty_band(std::span<const ZoneRatio> zones, std::size_t B,
                         double alpha, std::uint64_t seed,
                         double exponent = 1.0);

struct RepOutcome {
  bool ok = false;
  double theta_hat = 0.0;
  double sq_error = 0.0;
  double width = 0.0;
  bool covered = false;
};

// Per-zone, per-estimator replicate outcomes; reps[k] pairs with the lbl
// baseline's reps[k].
struct ZoneOutcomes {
  std::string zone_id;
  std::string group;
  std::size_t n = 0;
  double r2_within = 0.0;
  std::vector<RepOutcome> baseline;
  std::vector<std::vector<RepOutcome>> by_estimator;  // EvalConfig order
};

struct ZoneEss {
  std::string zone_id;
  std::string group;
  EstimatorKind estimator = EstimatorKind::kLbl;
  std::size_t n = 0;
  double mse_ess = std::numeric_limits<double>::quiet_NaN();
  double ci_ess = std::numeric_limits<double>::quiet_NaN();
  std::size_t reps_used = 0;
};

// n times the MSE- and width-based efficiency of `estimator` against the lbl
// baseline for one zone. Replicates whose estimator error or width is zero
// are skipped (counted in `skipped`).
ZoneEss effective_sample_sizes(const ZoneOutcomes& zone,
                               std::size_t estimator_index,
                               EstimatorKind estimator, RatioMode mode,
                               std::size_t* skipped = nullptr);

struct GroupMetrics {
  std::string group;
  EstimatorKind estimator = EstimatorKind::kLbl;
  std::size_t zones = 0;
  std::size_t replicates = 0;  // used in the ratios
  std::size_t failed = 0;
  double mse = 0.0;
  double mean_width = 0.0;
  double mse_re = std::numeric_limits<double>::quiet_NaN();
  double ci_re = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
  Band mse_re_band;
  Band ci_re_band;
  // Zone average of 1 / (1 - r2 * N / (N + n)) with N = multiplier * n.
  double theoretical_re = std::numeric_limits<double>::quiet_NaN();
};

struct EvaluationReport {
  std::vector<GroupMetrics> groups;
  std::vector<ZoneEss> zones;
  std::vector<ZoneOutcomes> outcomes;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  void write_group_csv(std::ostream& out) const;
  void write_zone_csv(std::ostream& out) const;
};

// Bootstrap evaluation: for every zone and replicate, resample labeled and
// unlabeled fields from the zone's labeled fields, refit control functions
// (when configured) on the resampled data at the pipeline's pooling scale,
// and score every estimator against the zone estimand. Predictions come from
// the pipeline's predictor (input column or cross-fitted linear model) and
// are not retrained across replicates. zones must carry study regions.
EvaluationReport run_evaluation(std::span<const ZoneDataset> zones,
                                const PipelineConfig& pipeline,
                                const EvalConfig& config);

}  // namespace zoneppi

#endif  // ZONEPPI_EVAL_H_
