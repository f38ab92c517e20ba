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

#include "zoneppi/pipeline.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "zoneppi/csv.h"
#include "zoneppi/error.h"
#include "zoneppi/parallel.h"
#include "zoneppi/random.h"
#include "zoneppi/stats.h"

namespace zoneppi {
namespace {

constexpr std::uint64_t kRegionStream = 0x52454749ULL;
constexpr std::uint64_t kFoldStream = 0x464f4c44ULL;
constexpr std::uint64_t kCvStream = 0x43565345ULL;
constexpr std::uint64_t kCiStream = 0x43494e54ULL;

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

std::string_view to_string(PoolingScale scale) {
  switch (scale) {
    case PoolingScale::kZone: return "zone";
    case PoolingScale::kRegion: return "region";
    case PoolingScale::kGlobal: return "global";
  }
  return "unknown";
}

PoolingScale parse_pooling_scale(std::string_view tag) {
  if (tag == "zone") return PoolingScale::kZone;
  if (tag == "region") return PoolingScale::kRegion;
  if (tag == "global") return PoolingScale::kGlobal;
  throw std::invalid_argument("unknown pooling scale '" + std::string(tag) + "'");
}

std::string_view to_string(PredictorMode mode) {
  return mode == PredictorMode::kColumn ? "column" : "linear";
}

PredictorMode parse_predictor_mode(std::string_view tag) {
  if (tag == "column") return PredictorMode::kColumn;
  if (tag == "linear") return PredictorMode::kLinear;
  throw std::invalid_argument("unknown predictor '" + std::string(tag) + "'");
}

void PipelineConfig::validate() const {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (cv_folds < 2) throw std::invalid_argument("cv_folds must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (ci_method != CiMethod::kClt && bootstrap_samples < 100) {
    throw std::invalid_argument("bootstrap_samples must be >= 100");
  }
  if (min_zone_size < 1) throw std::invalid_argument("min_zone_size must be >= 1");
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"folds", c.folds},
       {"pooling_scale", to_string(c.pooling_scale)},
       {"estimator", to_string(c.estimator)},
       {"ci_method", to_string(c.ci_method)},
       {"alpha", c.alpha},
       {"bootstrap_samples", c.bootstrap_samples},
       {"min_zone_size", c.min_zone_size},
       {"seed", c.seed},
       {"predictor", to_string(c.predictor)},
       {"cv_folds", c.cv_folds},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  static const std::set<std::string> known = {
      "folds", "pooling_scale", "estimator", "ci_method", "alpha",
      "bootstrap_samples", "min_zone_size", "seed", "predictor", "cv_folds",
      "threads"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument("unknown pipeline config key '" + key + "'");
    }
  }
  read_field(j, "folds", c.folds);
  read_field(j, "alpha", c.alpha);
  read_field(j, "bootstrap_samples", c.bootstrap_samples);
  read_field(j, "min_zone_size", c.min_zone_size);
  read_field(j, "seed", c.seed);
  read_field(j, "cv_folds", c.cv_folds);
  read_field(j, "threads", c.threads);
  if (j.contains("pooling_scale")) {
    c.pooling_scale = parse_pooling_scale(j["pooling_scale"].get<std::string>());
  }
  if (j.contains("estimator")) {
    c.estimator = parse_estimator(j["estimator"].get<std::string>());
  }
  if (j.contains("ci_method")) {
    c.ci_method = parse_ci_method(j["ci_method"].get<std::string>());
  }
  if (j.contains("predictor")) {
    c.predictor = parse_predictor_mode(j["predictor"].get<std::string>());
  }
}

std::vector<std::size_t> FoldAssignment::global_fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(K), 0);
  for (const auto& zone : labels) {
    for (int k : zone) ++sizes[static_cast<std::size_t>(k)];
  }
  return sizes;
}

FoldAssignment assign_folds(std::span<const ZoneDataset> zones, int K,
                            std::uint64_t seed) {
  if (K < 2) throw std::invalid_argument("fold count must be >= 2");
  FoldAssignment out;
  out.K = K;
  out.labels.reserve(zones.size());
  for (const auto& zone : zones) {
    std::vector<std::size_t> order(zone.n());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, hash_string(zone.zone_id)));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> labels(zone.n());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      labels[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(K));
    }
    out.labels.push_back(std::move(labels));
  }
  return out;
}

PredictFn LinearTrainer::train(const Eigen::MatrixXd& features,
                               const Eigen::VectorXd& y) const {
  if (features.rows() != y.size() || features.rows() < 1) {
    throw std::invalid_argument("linear trainer: bad training set");
  }
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(features.cols()) = features;
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
  return [beta](std::span<const double> x) {
    if (static_cast<Eigen::Index>(x.size()) + 1 != beta.size()) {
      throw std::invalid_argument("linear predictor: feature length mismatch");
    }
    double out = beta(0);
    for (std::size_t j = 0; j < x.size(); ++j) out += beta(j + 1) * x[j];
    return out;
  };
}

PredictFn MeanTrainer::train(const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& y) const {
  (void)features;
  if (y.size() < 1) throw std::invalid_argument("mean trainer: empty training set");
  const double m = y.mean();
  return [m](std::span<const double>) { return m; };
}

CrossFitResult cross_fit_predictions(std::span<const ZoneDataset> zones,
                                     const FoldAssignment& folds,
                                     const PredictorTrainer* trainer) {
  if (folds.labels.size() != zones.size()) {
    throw std::invalid_argument("fold assignment does not match zones");
  }
  CrossFitResult out;
  out.predictions.resize(zones.size());

  if (trainer == nullptr) {
    for (std::size_t z = 0; z < zones.size(); ++z) {
      auto copy = [&](const std::vector<FieldRecord>& fields,
                      std::vector<double>& dst) {
        dst.reserve(fields.size());
        for (const auto& f : fields) {
          if (!f.prediction) {
            throw DatasetError("field '" + f.field_id + "' in zone '" +
                               f.zone_id + "' has no prediction");
          }
          dst.push_back(*f.prediction);
        }
      };
      copy(zones[z].labeled, out.predictions[z].labeled);
      copy(zones[z].unlabeled, out.predictions[z].unlabeled);
    }
    return out;
  }

  std::size_t dim = 0;
  bool have_dim = false;
  auto check_features = [&](const FieldRecord& f) {
    if (f.features.empty()) {
      throw DatasetError("field '" + f.field_id + "' in zone '" + f.zone_id +
                         "' has no feature vector");
    }
    if (!have_dim) {
      dim = f.features.size();
      have_dim = true;
    } else if (f.features.size() != dim) {
      throw DatasetError("inconsistent feature dimension at field '" +
                         f.field_id + "'");
    }
  };
  for (const auto& zone : zones) {
    for (const auto& f : zone.labeled) check_features(f);
    for (const auto& f : zone.unlabeled) check_features(f);
  }

  const int K = folds.K;
  for (std::size_t z = 0; z < zones.size(); ++z) {
    out.predictions[z].labeled.assign(zones[z].n(), 0.0);
    out.predictions[z].unlabeled.assign(zones[z].N(), 0.0);
  }
  out.training_sets.resize(static_cast<std::size_t>(K));

  for (int k = 0; k < K; ++k) {
    auto& train_set = out.training_sets[static_cast<std::size_t>(k)];
    for (std::size_t z = 0; z < zones.size(); ++z) {
      for (std::size_t i = 0; i < zones[z].n(); ++i) {
        if (folds.labels[z][i] != k) train_set.emplace_back(z, i);
      }
    }
    if (train_set.empty()) {
      throw DatasetError("cross-fitting fold " + std::to_string(k) +
                         " has an empty training set");
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(train_set.size()),
                      static_cast<Eigen::Index>(dim));
    Eigen::VectorXd y(static_cast<Eigen::Index>(train_set.size()));
    for (std::size_t r = 0; r < train_set.size(); ++r) {
      const auto& field = zones[train_set[r].first].labeled[train_set[r].second];
      for (std::size_t c = 0; c < dim; ++c) {
        X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            field.features[c];
      }
      y(static_cast<Eigen::Index>(r)) = *field.yield;
    }
    const PredictFn model = trainer->train(X, y);

    for (std::size_t z = 0; z < zones.size(); ++z) {
      for (std::size_t i = 0; i < zones[z].n(); ++i) {
        if (folds.labels[z][i] == k) {
          out.predictions[z].labeled[i] = model(zones[z].labeled[i].features);
        }
      }
      for (std::size_t i = 0; i < zones[z].N(); ++i) {
        out.predictions[z].unlabeled[i] +=
            model(zones[z].unlabeled[i].features) / static_cast<double>(K);
      }
    }
  }
  return out;
}

std::string pooling_unit(const ZoneDataset& zone, PoolingScale scale) {
  switch (scale) {
    case PoolingScale::kZone: return zone.zone_id;
    case PoolingScale::kRegion: return zone.study_region;
    case PoolingScale::kGlobal: return "global";
  }
  return {};
}

const ControlFunction& ControlFunctionSet::for_zone(const ZoneDataset& zone) const {
  const auto it = units.find(pooling_unit(zone, scale));
  if (it == units.end()) {
    throw std::out_of_range("no control function for zone '" + zone.zone_id + "'");
  }
  return it->second;
}

FeatureRow feature_row(const FieldRecord& field, double prediction) {
  return FeatureRow{prediction, {field.latitude, field.longitude}};
}

ControlFunctionSet learn_control_functions(
    std::span<const ZoneDataset> zones,
    std::span<const ZonePredictions> predictions, PoolingScale scale,
    bool include_prediction, std::uint64_t cv_seed,
    const ControlLearningOptions& options) {
  if (predictions.size() != zones.size()) {
    throw std::invalid_argument("predictions do not match zones");
  }
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t z = 0; z < zones.size(); ++z) {
    members[pooling_unit(zones[z], scale)].push_back(z);
  }
  std::vector<std::string> names;
  for (const auto& [name, idx] : members) names.push_back(name);

  std::vector<ControlFunction> fitted(names.size());
  std::vector<std::string> notes(names.size());
  parallel_for(names.size(), options.threads, [&](std::size_t u) {
    const auto& zone_ids = members.at(names[u]);
    std::vector<const FieldRecord*> fields;
    std::vector<double> preds;
    for (std::size_t z : zone_ids) {
      for (std::size_t i = 0; i < zones[z].n(); ++i) {
        fields.push_back(&zones[z].labeled[i]);
        preds.push_back(predictions[z].labeled[i]);
      }
    }
    const std::size_t m = fields.size();
    std::vector<double> center(2, 0.0);
    for (const auto* f : fields) {
      center[0] += f->latitude;
      center[1] += f->longitude;
    }
    if (m > 0) {
      center[0] /= static_cast<double>(m);
      center[1] /= static_cast<double>(m);
    }

    if (m < static_cast<std::size_t>(options.cv_folds) + 2) {
      double ybar = 0.0;
      for (const auto* f : fields) ybar += *f->yield;
      if (m > 0) ybar /= static_cast<double>(m);
      fitted[u] = ControlFunction::constant(ybar, include_prediction, names[u],
                                            center);
      notes[u] = "pooling unit '" + names[u] + "' has " + std::to_string(m) +
                 " labeled fields; using a constant control function";
      return;
    }

    ControlFunction f;
    f.include_prediction = include_prediction;
    f.region = names[u];
    f.covariate_center = center;
    const auto q = static_cast<Eigen::Index>(basis_size(2, include_prediction) - 1);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(m), q);
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) {
      const BasisRow row = f.basis(feature_row(*fields[r], preds[r]));
      for (Eigen::Index c = 0; c < q; ++c) {
        X(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c) + 1];
      }
      y(static_cast<Eigen::Index>(r)) = *fields[r]->yield;
    }
    try {
      f.fit = cv_select(X, y, options.cv_folds,
                        derive_seed(cv_seed, hash_string(names[u])),
                        options.lasso);
    } catch (const std::exception& e) {
      throw Error("control function for pooling unit '" + names[u] +
                  "': " + e.what());
    }
    fitted[u] = std::move(f);
  });

  ControlFunctionSet out;
  out.scale = scale;
  out.include_prediction = include_prediction;
  for (std::size_t u = 0; u < names.size(); ++u) {
    out.units.emplace(names[u], std::move(fitted[u]));
    if (!notes[u].empty()) out.warnings.push_back(std::move(notes[u]));
  }
  return out;
}

ZoneSample zone_sample(const ZoneDataset& zone, const ZonePredictions& preds,
                       const ControlFunction* f) {
  ZoneSample s;
  s.y.reserve(zone.n());
  for (const auto& field : zone.labeled) s.y.push_back(*field.yield);
  if (f == nullptr) {
    s.f_unlabeled.assign(zone.N(), 0.0);
    return s;
  }
  s.f_labeled.reserve(zone.n());
  s.f_unlabeled.reserve(zone.N());
  for (std::size_t i = 0; i < zone.n(); ++i) {
    s.f_labeled.push_back(f->evaluate(feature_row(zone.labeled[i], preds.labeled[i])));
  }
  for (std::size_t i = 0; i < zone.N(); ++i) {
    s.f_unlabeled.push_back(
        f->evaluate(feature_row(zone.unlabeled[i], preds.unlabeled[i])));
  }
  return s;
}

EligibilityResult prepare_zones(std::span<const FieldRecord> records,
                                const PipelineConfig& config) {
  EligibilityResult e = filter_eligible_zones(records, config.min_zone_size);
  e.zones = assign_study_regions(std::move(e.zones),
                                 derive_seed(config.seed, kRegionStream));
  return e;
}

PipelineResult run_pipeline(std::span<const FieldRecord> records,
                            const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  result.eligibility = prepare_zones(records, config);
  auto& zones = result.eligibility.zones;
  if (zones.empty()) {
    result.warnings.push_back("no eligible zones");
    return result;
  }

  const FoldAssignment folds =
      assign_folds(zones, config.folds, derive_seed(config.seed, kFoldStream));
  const LinearTrainer linear;
  result.cross_fit = cross_fit_predictions(
      zones, folds,
      config.predictor == PredictorMode::kLinear ? &linear : nullptr);
  const auto& preds = result.cross_fit.predictions;

  const EstimatorKind kind = config.estimator;
  const bool needs_control = uses_control_function(kind);
  if (needs_control) {
    ControlLearningOptions opts;
    opts.cv_folds = config.cv_folds;
    opts.threads = config.threads;
    result.controls = learn_control_functions(
        zones, preds, config.pooling_scale, uses_prediction(kind),
        derive_seed(config.seed, kCvStream), opts);
    result.warnings.insert(result.warnings.end(),
                           result.controls.warnings.begin(),
                           result.controls.warnings.end());
  }

  result.reports.resize(zones.size());
  parallel_for(zones.size(), config.threads, [&](std::size_t z) {
    const ZoneDataset& zone = zones[z];
    ZoneReport& report = result.reports[z];
    report.zone_id = zone.zone_id;
    report.study_region = zone.study_region;
    try {
      const ControlFunction* f = nullptr;
      if (needs_control) {
        report.pooling_unit = pooling_unit(zone, config.pooling_scale);
        f = &result.controls.for_zone(zone);
      }
      const ZoneSample sample = zone_sample(zone, preds[z], f);
      EstimatorKind zone_kind = kind;
      if (needs_control && zone.N() == 0) {
        report.warnings.push_back(
            "zone has no unlabeled fields; reporting the labeled mean");
        zone_kind = EstimatorKind::kLbl;
      }
      report.estimate = estimate(sample, zone_kind);
      report.estimate.zone_id = zone.zone_id;
      report.ci = zone_interval(
          sample, report.estimate, config.ci_method, config.alpha,
          static_cast<std::size_t>(config.bootstrap_samples),
          derive_seed(config.seed, kCiStream, hash_string(zone.zone_id)));

      std::vector<double> y(sample.y);
      report.r2_within = r_squared_within(y, preds[z].labeled);
      report.re_theoretical =
          theoretical_re(report.r2_within, zone.n(), zone.N());
    } catch (const std::exception& e) {
      throw Error("zone '" + zone.zone_id + "' (region '" + zone.study_region +
                  "'): " + e.what());
    }
  });
  return result;
}

nlohmann::json to_json(const ControlFunction& f) {
  std::vector<double> coef(f.fit.coefficients.data(),
                           f.fit.coefficients.data() + f.fit.coefficients.size());
  return {{"unit", f.region},
          {"include_prediction", f.include_prediction},
          {"covariate_center", f.covariate_center},
          {"intercept", f.fit.intercept},
          {"coefficients", coef},
          {"penalty", f.fit.penalty},
          {"cv_error", f.fit.cv_error}};
}

nlohmann::json to_json(const ConfidenceInterval& ci) {
  return {{"method", to_string(ci.method)},
          {"alpha", ci.alpha},
          {"B", ci.B},
          {"lower", ci.lower},
          {"upper", ci.upper},
          {"diagnostics",
           {{"z0", ci.diagnostics.z0},
            {"acceleration", ci.diagnostics.acceleration},
            {"lower_level", ci.diagnostics.lower_level},
            {"upper_level", ci.diagnostics.upper_level},
            {"dropped", ci.diagnostics.dropped}}}};
}

nlohmann::json reports_to_json(const PipelineResult& result) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : result.reports) {
    nlohmann::json control = nullptr;
    if (!r.pooling_unit.empty()) {
      if (auto it = result.controls.units.find(r.pooling_unit);
          it != result.controls.units.end()) {
        control = to_json(it->second);
      }
    }
    out.push_back({{"zone_id", r.zone_id},
                   {"study_region", r.study_region},
                   {"estimator", to_string(r.estimate.estimator)},
                   {"theta_hat", r.estimate.theta_hat},
                   {"lambda_hat", r.estimate.lambda_hat},
                   {"se_plugin", r.estimate.se_plugin},
                   {"n", r.estimate.n},
                   {"N", r.estimate.N},
                   {"ci", to_json(r.ci)},
                   {"r2_within", r.r2_within},
                   {"re_theoretical", r.re_theoretical},
                   {"control_function", std::move(control)},
                   {"warnings", r.warnings}});
  }
  return out;
}

void write_reports_csv(std::ostream& out, const PipelineResult& result) {
  csv::write_row(out, {"zone_id", "region", "estimator", "theta_hat",
                       "lambda_hat", "se_plugin", "ci_lower", "ci_upper", "n",
                       "N", "r2_within", "re_theoretical"});
  for (const auto& r : result.reports) {
    csv::write_row(out, {r.zone_id, r.study_region,
                         std::string(to_string(r.estimate.estimator)),
                         format_double(r.estimate.theta_hat),
                         format_double(r.estimate.lambda_hat),
                         format_double(r.estimate.se_plugin),
                         format_double(r.ci.lower), format_double(r.ci.upper),
                         std::to_string(r.estimate.n),
                         std::to_string(r.estimate.N),
                         format_double(r.r2_within),
                         format_double(r.re_theoretical)});
  }
}

}  // namespace zoneppi
