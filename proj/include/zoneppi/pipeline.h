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

#ifndef ZONEPPI_PIPELINE_H_
#define ZONEPPI_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "zoneppi/ci.h"
#include "zoneppi/data.h"
#include "zoneppi/estimators.h"
#include "zoneppi/lasso.h"

namespace zoneppi {

enum class PoolingScale { kZone, kRegion, kGlobal };
enum class PredictorMode { kColumn, kLinear };

std::string_view to_string(PoolingScale scale);
PoolingScale parse_pooling_scale(std::string_view tag);
std::string_view to_string(PredictorMode mode);
PredictorMode parse_predictor_mode(std::string_view tag);

struct PipelineConfig {
  int folds = 5;  // cross-fitting folds for the predictor
  PoolingScale pooling_scale = PoolingScale::kRegion;
  EstimatorKind estimator = EstimatorKind::kPpipp;
  CiMethod ci_method = CiMethod::kBca;
  double alpha = 0.05;
  int bootstrap_samples = 1000;
  int min_zone_size = 20;
  std::uint64_t seed = 0;
  PredictorMode predictor = PredictorMode::kColumn;
  int cv_folds = 5;  // LASSO penalty selection
  unsigned threads = 1;

  // Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, PipelineConfig& c);

// Fold label per labeled field, per zone (indices align with
// ZoneDataset::labeled). The global fold k is the union over zones.
struct FoldAssignment {
  int K = 0;
  std::vector<std::vector<int>> labels;

  std::vector<std::size_t> global_fold_sizes() const;
};

// Within each zone, labeled indices are shuffled with a stream keyed on
// (seed, zone_id) and dealt round-robin, so zone fold sizes differ by <= 1.
FoldAssignment assign_folds(std::span<const ZoneDataset> zones, int K,
                            std::uint64_t seed);

// Maps a feature vector to a prediction.
using PredictFn = std::function<double(std::span<const double>)>;

class PredictorTrainer {
 public:
  virtual ~PredictorTrainer() = default;
  // features: one row per training field.
  virtual PredictFn train(const Eigen::MatrixXd& features,
                          const Eigen::VectorXd& y) const = 0;
};

// Ordinary least squares with intercept (column-pivoted QR, so rank
// deficiency is tolerated).
class LinearTrainer final : public PredictorTrainer {
 public:
  PredictFn train(const Eigen::MatrixXd& features,
                  const Eigen::VectorXd& y) const override;
};

// Predicts the training mean everywhere.
class MeanTrainer final : public PredictorTrainer {
 public:
  PredictFn train(const Eigen::MatrixXd& features,
                  const Eigen::VectorXd& y) const override;
};

struct ZonePredictions {
  std::vector<double> labeled;    // aligned with ZoneDataset::labeled
  std::vector<double> unlabeled;  // aligned with ZoneDataset::unlabeled
};

// (zone index, labeled index) pairs.
using FieldIndex = std::pair<std::size_t, std::size_t>;

struct CrossFitResult {
  std::vector<ZonePredictions> predictions;
  // Training set of each of the K models; empty in column mode.
  std::vector<std::vector<FieldIndex>> training_sets;
};

// Column mode (trainer == nullptr) reads the prediction column and throws
// DatasetError if any field lacks one. Otherwise each labeled field in fold k
// is predicted by the model trained on the other folds and every unlabeled
// field gets the average of all K models; throws DatasetError if a field has
// no feature vector.
CrossFitResult cross_fit_predictions(std::span<const ZoneDataset> zones,
                                     const FoldAssignment& folds,
                                     const PredictorTrainer* trainer);

// Pooling unit key of a zone at the given scale.
std::string pooling_unit(const ZoneDataset& zone, PoolingScale scale);

struct ControlFunctionSet {
  PoolingScale scale = PoolingScale::kRegion;
  bool include_prediction = true;
  std::map<std::string, ControlFunction> units;
  std::vector<std::string> warnings;

  const ControlFunction& for_zone(const ZoneDataset& zone) const;
};

struct ControlLearningOptions {
  int cv_folds = 5;
  unsigned threads = 1;
  LassoOptions lasso;
};

// One cross-validated LASSO per pooling unit on (psi(W), Y) over all labeled
// fields in the unit. Covariates are centered at the unit's labeled mean
// before expansion. A unit with fewer than cv_folds + 2 labeled fields gets a
// constant control function and a warning. Each unit's CV stream is keyed on
// (cv_seed, unit name).
ControlFunctionSet learn_control_functions(
    std::span<const ZoneDataset> zones,
    std::span<const ZonePredictions> predictions, PoolingScale scale,
    bool include_prediction, std::uint64_t cv_seed,
    const ControlLearningOptions& options = {});

FeatureRow feature_row(const FieldRecord& field, double prediction);

// Control-function values for one zone's labeled and unlabeled fields.
ZoneSample zone_sample(const ZoneDataset& zone, const ZonePredictions& preds,
                       const ControlFunction* f);

struct ZoneReport {
  std::string zone_id;
  std::string study_region;
  std::string pooling_unit;  // key into PipelineResult::controls; empty for lbl
  EstimateResult estimate;
  ConfidenceInterval ci;
  double r2_within = 0.0;
  double re_theoretical = 1.0;
  std::vector<std::string> warnings;
};

struct PipelineResult {
  EligibilityResult eligibility;  // zones carry their study regions
  CrossFitResult cross_fit;
  ControlFunctionSet controls;
  std::vector<ZoneReport> reports;  // sorted by zone_id
  std::vector<std::string> warnings;
};

// Eligibility filtering followed by study-region assignment.
EligibilityResult prepare_zones(std::span<const FieldRecord> records,
                                const PipelineConfig& config);

// filter -> region assignment -> folds -> cross-fit predictions -> control
// functions -> per-zone estimate and interval. Deterministic given
// config.seed, independent of config.threads.
PipelineResult run_pipeline(std::span<const FieldRecord> records,
                            const PipelineConfig& config);

// JSON array of zone reports, including the control function each zone used.
nlohmann::json reports_to_json(const PipelineResult& result);
void write_reports_csv(std::ostream& out, const PipelineResult& result);

nlohmann::json to_json(const ControlFunction& f);
nlohmann::json to_json(const ConfidenceInterval& ci);

}  // namespace zoneppi

#endif  // ZONEPPI_PIPELINE_H_
