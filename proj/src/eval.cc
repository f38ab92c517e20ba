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

#include "zoneppi/eval.h"

#include <algorithm>
#include <cmath>
#include <map>
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

constexpr std::uint64_t kReplicateStream = 0x5245504cULL;
constexpr std::uint64_t kFoldStream = 0x464f4c44ULL;
constexpr std::uint64_t kCvStream = 0x43565345ULL;
constexpr std::uint64_t kCiStream = 0x43494e54ULL;
constexpr std::uint64_t kBandStream = 0x42414e44ULL;

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

std::size_t unlabeled_size(const EvalConfig& config, std::size_t n) {
  return static_cast<std::size_t>(
      std::llround(config.unlabeled_multiplier * static_cast<double>(n)));
}

RepOutcome score(const ZoneSample& sample, EstimatorKind kind, double theta,
                 const EvalConfig& config, std::uint64_t ci_seed) {
  RepOutcome out;
  try {
    const EstimateResult est = estimate(sample, kind);
    const ConfidenceInterval ci = zone_interval(
        sample, est, config.ci_method, config.alpha,
        static_cast<std::size_t>(config.bootstrap_samples), ci_seed);
    out.theta_hat = est.theta_hat;
    out.sq_error = (est.theta_hat - theta) * (est.theta_hat - theta);
    out.width = ci.width();
    out.covered = ci.contains(theta);
    out.ok = std::isfinite(out.sq_error) && std::isfinite(out.width);
  } catch (const std::exception&) {
    out.ok = false;
  }
  return out;
}

nlohmann::json band_json(const Band& b) {
  return {{"lower", b.lower}, {"upper", b.upper}};
}

}  // namespace

std::string_view to_string(RatioMode mode) {
  return mode == RatioMode::kRatioOfAverages ? "ratio_of_averages"
                                             : "average_of_ratios";
}

RatioMode parse_ratio_mode(std::string_view tag) {
  if (tag == "ratio_of_averages") return RatioMode::kRatioOfAverages;
  if (tag == "average_of_ratios") return RatioMode::kAverageOfRatios;
  throw std::invalid_argument("unknown ratio mode '" + std::string(tag) + "'");
}

std::string_view to_string(GroupBy group_by) {
  return group_by == GroupBy::kAll ? "all" : "region";
}

GroupBy parse_group_by(std::string_view tag) {
  if (tag == "all") return GroupBy::kAll;
  if (tag == "region") return GroupBy::kRegion;
  throw std::invalid_argument("unknown grouping '" + std::string(tag) + "'");
}

void EvalConfig::validate() const {
  if (reps_per_zone < 1) throw std::invalid_argument("reps_per_zone must be >= 1");
  if (!(unlabeled_multiplier > 0.0)) {
    throw std::invalid_argument("unlabeled_multiplier must be > 0");
  }
  if (estimators.empty()) throw std::invalid_argument("no estimators requested");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (ci_method != CiMethod::kClt && bootstrap_samples < 100) {
    throw std::invalid_argument("bootstrap_samples must be >= 100");
  }
  if (band_bootstrap_samples < 100) {
    throw std::invalid_argument("band_bootstrap_samples must be >= 100");
  }
}

void to_json(nlohmann::json& j, const EvalConfig& c) {
  std::vector<std::string> est;
  for (auto k : c.estimators) est.emplace_back(to_string(k));
  j = {{"reps_per_zone", c.reps_per_zone},
       {"unlabeled_multiplier", c.unlabeled_multiplier},
       {"estimators", est},
       {"ci_method", to_string(c.ci_method)},
       {"alpha", c.alpha},
       {"bootstrap_samples", c.bootstrap_samples},
       {"seed", c.seed},
       {"refit_control_per_rep", c.refit_control_per_rep},
       {"ratio_mode", to_string(c.ratio_mode)},
       {"group_by", to_string(c.group_by)},
       {"band_bootstrap_samples", c.band_bootstrap_samples},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, EvalConfig& c) {
  static const std::set<std::string> known = {
      "reps_per_zone", "unlabeled_multiplier", "estimators", "ci_method",
      "alpha", "bootstrap_samples", "seed", "refit_control_per_rep",
      "ratio_mode", "group_by", "band_bootstrap_samples", "threads"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument("unknown eval config key '" + key + "'");
    }
  }
  read_field(j, "reps_per_zone", c.reps_per_zone);
  read_field(j, "unlabeled_multiplier", c.unlabeled_multiplier);
  read_field(j, "alpha", c.alpha);
  read_field(j, "bootstrap_samples", c.bootstrap_samples);
  read_field(j, "seed", c.seed);
  read_field(j, "refit_control_per_rep", c.refit_control_per_rep);
  read_field(j, "band_bootstrap_samples", c.band_bootstrap_samples);
  read_field(j, "threads", c.threads);
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& tag : j["estimators"]) {
      c.estimators.push_back(parse_estimator(tag.get<std::string>()));
    }
  }
  if (j.contains("ci_method")) {
    c.ci_method = parse_ci_method(j["ci_method"].get<std::string>());
  }
  if (j.contains("ratio_mode")) {
    c.ratio_mode = parse_ratio_mode(j["ratio_mode"].get<std::string>());
  }
  if (j.contains("group_by")) {
    c.group_by = parse_group_by(j["group_by"].get<std::string>());
  }
}

double zone_estimand(const ZoneDataset& zone) {
  if (zone.labeled.empty()) throw std::invalid_argument("zone has no labeled fields");
  double sum = 0.0;
  for (const auto& f : zone.labeled) sum += *f.yield;
  return sum / static_cast<double>(zone.labeled.size());
}

Replicate make_replicate(const ZoneDataset& zone, const EvalConfig& config,
                         int rep) {
  const std::size_t n = zone.n();
  if (n == 0) throw std::invalid_argument("zone has no labeled fields");
  Replicate r;
  r.theta = zone_estimand(zone);
  Rng rng(derive_seed(config.seed, kReplicateStream, hash_string(zone.zone_id),
                      static_cast<std::uint64_t>(rep)));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  r.labeled.resize(n);
  for (auto& i : r.labeled) i = pick(rng);
  r.unlabeled.resize(unlabeled_size(config, n));
  for (auto& i : r.unlabeled) i = pick(rng);
  return r;
}

double group_ratio(std::span<const ZoneRatio> zones, double exponent) {
  double num = 0.0, den = 0.0;
  for (const auto& z : zones) {
    num += z.numerator;
    den += z.denominator;
  }
  const double ratio = num / den;
  return exponent == 1.0 ? ratio : std::pow(ratio, exponent);
}

Band re_uncertainty_band(std::span<const ZoneRatio> zones, std::size_t B,
                         double alpha, std::uint64_t seed, double exponent) {
  const std::size_t Z = zones.size();
  if (Z < 3) throw std::invalid_argument("uncertainty band needs >= 3 zones");
  const double point = group_ratio(zones, exponent);

  std::vector<double> boots(B);
  std::vector<ZoneRatio> draw(Z);
  std::uniform_int_distribution<std::size_t> pick(0, Z - 1);
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng(derive_seed(seed, b));
    for (auto& d : draw) d = zones[pick(rng)];
    boots[b] = group_ratio(draw, exponent);
  }

  std::vector<double> jack(Z);
  std::vector<ZoneRatio> rest(Z - 1);
  for (std::size_t m = 0; m < Z; ++m) {
    for (std::size_t i = 0, k = 0; i < Z; ++i) {
      if (i != m) rest[k++] = zones[i];
    }
    jack[m] = group_ratio(rest, exponent);
  }

  const ConfidenceInterval ci = bca_interval(point, boots, jack, alpha);
  return {ci.lower, ci.upper};
}

ZoneEss effective_sample_sizes(const ZoneOutcomes& zone,
                               std::size_t estimator_index,
                               EstimatorKind estimator, RatioMode mode,
                               std::size_t* skipped) {
  ZoneEss ess;
  ess.zone_id = zone.zone_id;
  ess.group = zone.group;
  ess.estimator = estimator;
  ess.n = zone.n;
  const auto& est = zone.by_estimator.at(estimator_index);

  double sq_l = 0.0, sq_e = 0.0, w_l = 0.0, w_e = 0.0;
  double mse_ratio_sum = 0.0, ci_ratio_sum = 0.0;
  std::size_t used = 0, skip = 0;
  for (std::size_t r = 0; r < est.size() && r < zone.baseline.size(); ++r) {
    const auto& a = zone.baseline[r];
    const auto& b = est[r];
    if (!a.ok || !b.ok) continue;
    if (b.sq_error == 0.0 || b.width == 0.0) {
      ++skip;
      continue;
    }
    sq_l += a.sq_error;
    sq_e += b.sq_error;
    w_l += a.width;
    w_e += b.width;
    mse_ratio_sum += a.sq_error / b.sq_error;
    ci_ratio_sum += (a.width / b.width) * (a.width / b.width);
    ++used;
  }
  if (skipped) *skipped = skip;
  ess.reps_used = used;
  if (used == 0) return ess;
  const double n = static_cast<double>(zone.n);
  if (mode == RatioMode::kRatioOfAverages) {
    ess.mse_ess = n * sq_l / sq_e;
    ess.ci_ess = n * (w_l / w_e) * (w_l / w_e);
  } else {
    ess.mse_ess = n * mse_ratio_sum / static_cast<double>(used);
    ess.ci_ess = n * ci_ratio_sum / static_cast<double>(used);
  }
  return ess;
}

EvaluationReport run_evaluation(std::span<const ZoneDataset> zones,
                                const PipelineConfig& pipeline,
                                const EvalConfig& config) {
  pipeline.validate();
  config.validate();
  EvaluationReport report;
  if (zones.empty()) {
    report.warnings.push_back("no zones to evaluate");
    return report;
  }

  std::vector<EstimatorKind> kinds;
  for (auto k : config.estimators) {
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  const bool need_full = std::any_of(kinds.begin(), kinds.end(), uses_prediction);
  const bool need_nophoto =
      std::find(kinds.begin(), kinds.end(), EstimatorKind::kNophoto) != kinds.end();

  // Predictions are produced once and reused by every replicate.
  const FoldAssignment folds = assign_folds(
      zones, pipeline.folds, derive_seed(pipeline.seed, kFoldStream));
  const LinearTrainer linear;
  const CrossFitResult cross_fit = cross_fit_predictions(
      zones, folds,
      pipeline.predictor == PredictorMode::kLinear ? &linear : nullptr);
  const auto& preds = cross_fit.predictions;

  const std::size_t Z = zones.size();
  report.outcomes.resize(Z);
  for (std::size_t z = 0; z < Z; ++z) {
    auto& o = report.outcomes[z];
    o.zone_id = zones[z].zone_id;
    o.group = config.group_by == GroupBy::kAll ? "all" : zones[z].study_region;
    o.n = zones[z].n();
    std::vector<double> y;
    for (const auto& f : zones[z].labeled) y.push_back(*f.yield);
    o.r2_within = r_squared_within(y, preds[z].labeled);
    o.baseline.resize(static_cast<std::size_t>(config.reps_per_zone));
    o.by_estimator.assign(kinds.size(), std::vector<RepOutcome>(
                                            static_cast<std::size_t>(config.reps_per_zone)));
  }

  ControlLearningOptions learn_opts;
  learn_opts.cv_folds = pipeline.cv_folds;
  learn_opts.threads = config.threads;
  auto learn = [&](std::span<const ZoneDataset> zs,
                   std::span<const ZonePredictions> ps, bool full,
                   std::uint64_t seed) {
    return learn_control_functions(zs, ps, pipeline.pooling_scale, full, seed,
                                   learn_opts);
  };

  ControlFunctionSet fixed_full, fixed_nophoto;
  if (!config.refit_control_per_rep) {
    const std::uint64_t s = derive_seed(config.seed, kCvStream);
    if (need_full) fixed_full = learn(zones, preds, true, s);
    if (need_nophoto) fixed_nophoto = learn(zones, preds, false, s);
  }

  std::set<std::string> warnings;
  for (int rep = 0; rep < config.reps_per_zone; ++rep) try {
    std::vector<ZoneDataset> rz(Z);
    std::vector<ZonePredictions> rp(Z);
    std::vector<double> theta(Z);
    for (std::size_t z = 0; z < Z; ++z) {
      const Replicate r = make_replicate(zones[z], config, rep);
      theta[z] = r.theta;
      rz[z].zone_id = zones[z].zone_id;
      rz[z].study_region = zones[z].study_region;
      for (std::size_t i : r.labeled) {
        rz[z].labeled.push_back(zones[z].labeled[i]);
        rp[z].labeled.push_back(preds[z].labeled[i]);
      }
      for (std::size_t i : r.unlabeled) {
        FieldRecord f = zones[z].labeled[i];
        f.yield.reset();
        rz[z].unlabeled.push_back(std::move(f));
        rp[z].unlabeled.push_back(preds[z].labeled[i]);
      }
    }

    ControlFunctionSet full, nophoto;
    if (config.refit_control_per_rep) {
      const std::uint64_t s =
          derive_seed(config.seed, kCvStream, static_cast<std::uint64_t>(rep));
      if (need_full) full = learn(rz, rp, true, s);
      if (need_nophoto) nophoto = learn(rz, rp, false, s);
      for (const auto& w : full.warnings) warnings.insert(w);
      for (const auto& w : nophoto.warnings) warnings.insert(w);
    }
    const ControlFunctionSet& cf_full = config.refit_control_per_rep ? full : fixed_full;
    const ControlFunctionSet& cf_nophoto =
        config.refit_control_per_rep ? nophoto : fixed_nophoto;

    const auto r_index = static_cast<std::size_t>(rep);
    parallel_for(Z, config.threads, [&](std::size_t z) {
      const std::uint64_t ci_seed =
          derive_seed(config.seed, kCiStream, hash_string(zones[z].zone_id),
                      static_cast<std::uint64_t>(rep));
      const ZoneSample base = zone_sample(rz[z], rp[z], nullptr);
      auto& o = report.outcomes[z];
      o.baseline[r_index] = score(base, EstimatorKind::kLbl, theta[z], config, ci_seed);

      ZoneSample s_full, s_nophoto;
      if (need_full) s_full = zone_sample(rz[z], rp[z], &cf_full.for_zone(rz[z]));
      if (need_nophoto) {
        s_nophoto = zone_sample(rz[z], rp[z], &cf_nophoto.for_zone(rz[z]));
      }
      for (std::size_t e = 0; e < kinds.size(); ++e) {
        const EstimatorKind k = kinds[e];
        if (k == EstimatorKind::kLbl) {
          o.by_estimator[e][r_index] = o.baseline[r_index];
          continue;
        }
        const ZoneSample& s = k == EstimatorKind::kNophoto ? s_nophoto : s_full;
        o.by_estimator[e][r_index] = score(s, k, theta[z], config, ci_seed);
      }
    });
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("replicate " + std::to_string(rep) + ": " + e.what(),
                           e.lambda_index());
  } catch (const DatasetError& e) {
    throw DatasetError("replicate " + std::to_string(rep) + ": " + e.what());
  } catch (const Error& e) {
    throw Error("replicate " + std::to_string(rep) + ": " + e.what());
  }

  // Aggregate by group in name order.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t z = 0; z < Z; ++z) groups[report.outcomes[z].group].push_back(z);

  for (const auto& [name, members] : groups) {
    double theory = 0.0;
    for (std::size_t z : members) {
      const std::size_t n = zones[z].n();
      theory += theoretical_re(report.outcomes[z].r2_within, n, unlabeled_size(config, n));
    }
    theory /= static_cast<double>(members.size());

    for (std::size_t e = 0; e < kinds.size(); ++e) {
      GroupMetrics g;
      g.group = name;
      g.estimator = kinds[e];
      g.zones = members.size();
      g.theoretical_re = theory;

      double sq_l = 0.0, sq_e = 0.0, w_l = 0.0, w_e = 0.0;
      double mse_ratio = 0.0, ci_ratio = 0.0;
      std::size_t ratio_count = 0, covered = 0;
      std::vector<ZoneRatio> mse_parts, ci_parts;
      for (std::size_t z : members) {
        const auto& o = report.outcomes[z];
        ZoneRatio mse_part, ci_part;
        std::size_t zone_used = 0;
        for (std::size_t r = 0; r < o.baseline.size(); ++r) {
          const auto& a = o.baseline[r];
          const auto& b = o.by_estimator[e][r];
          if (!a.ok || !b.ok) {
            ++g.failed;
            continue;
          }
          ++g.replicates;
          ++zone_used;
          sq_l += a.sq_error;
          sq_e += b.sq_error;
          w_l += a.width;
          w_e += b.width;
          covered += b.covered ? 1 : 0;
          if (config.ratio_mode == RatioMode::kRatioOfAverages) {
            mse_part.numerator += a.sq_error;
            mse_part.denominator += b.sq_error;
            ci_part.numerator += a.width;
            ci_part.denominator += b.width;
          } else if (b.sq_error > 0.0 && b.width > 0.0) {
            const double mr = a.sq_error / b.sq_error;
            const double cr = (a.width / b.width) * (a.width / b.width);
            mse_ratio += mr;
            ci_ratio += cr;
            ++ratio_count;
            mse_part.numerator += mr;
            mse_part.denominator += 1.0;
            ci_part.numerator += cr;
            ci_part.denominator += 1.0;
          }
        }
        if (zone_used > 0 && mse_part.denominator > 0.0) {
          mse_parts.push_back(mse_part);
          ci_parts.push_back(ci_part);
        }
      }
      if (g.replicates > 0) {
        const double reps = static_cast<double>(g.replicates);
        g.mse = sq_e / reps;
        g.mean_width = w_e / reps;
        g.coverage = static_cast<double>(covered) / reps;
        if (config.ratio_mode == RatioMode::kRatioOfAverages) {
          g.mse_re = sq_l / sq_e;
          g.ci_re = (w_l / w_e) * (w_l / w_e);
        } else if (ratio_count > 0) {
          g.mse_re = mse_ratio / static_cast<double>(ratio_count);
          g.ci_re = ci_ratio / static_cast<double>(ratio_count);
        }
      }

      const double ci_exponent =
          config.ratio_mode == RatioMode::kRatioOfAverages ? 2.0 : 1.0;
      if (mse_parts.size() >= 3) {
        const auto B = static_cast<std::size_t>(config.band_bootstrap_samples);
        const std::uint64_t s = derive_seed(config.seed, kBandStream,
                                            hash_string(name), e);
        g.mse_re_band = re_uncertainty_band(mse_parts, B, config.alpha, derive_seed(s, 1));
        g.ci_re_band =
            re_uncertainty_band(ci_parts, B, config.alpha, derive_seed(s, 2), ci_exponent);
      } else {
        warnings.insert("group '" + name +
                        "' has fewer than 3 usable zones; no uncertainty band");
      }
      report.groups.push_back(g);
    }
  }

  for (std::size_t z = 0; z < Z; ++z) {
    for (std::size_t e = 0; e < kinds.size(); ++e) {
      std::size_t skipped = 0;
      report.zones.push_back(effective_sample_sizes(
          report.outcomes[z], e, kinds[e], config.ratio_mode, &skipped));
      if (skipped > 0 && kinds[e] != EstimatorKind::kLbl) {
        warnings.insert("zone '" + report.outcomes[z].zone_id + "', " +
                        std::string(to_string(kinds[e])) + ": " +
                        std::to_string(skipped) +
                        " replicate(s) with zero error or width skipped in "
                        "effective sample size");
      }
    }
  }
  report.warnings.assign(warnings.begin(), warnings.end());
  return report;
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& m : groups) {
    g.push_back({{"group", m.group},
                 {"estimator", zoneppi::to_string(m.estimator)},
                 {"zones", m.zones},
                 {"replicates", m.replicates},
                 {"failed", m.failed},
                 {"mse", m.mse},
                 {"mean_width", m.mean_width},
                 {"mse_relative_efficiency", m.mse_re},
                 {"mse_re_band", band_json(m.mse_re_band)},
                 {"ci_relative_efficiency", m.ci_re},
                 {"ci_re_band", band_json(m.ci_re_band)},
                 {"coverage", m.coverage},
                 {"theoretical_re", m.theoretical_re}});
  }
  nlohmann::json z = nlohmann::json::array();
  for (const auto& e : zones) {
    z.push_back({{"zone_id", e.zone_id},
                 {"group", e.group},
                 {"estimator", zoneppi::to_string(e.estimator)},
                 {"n", e.n},
                 {"mse_ess", e.mse_ess},
                 {"ci_ess", e.ci_ess},
                 {"reps_used", e.reps_used}});
  }
  return {{"groups", std::move(g)}, {"zones", std::move(z)}, {"warnings", warnings}};
}

void EvaluationReport::write_group_csv(std::ostream& out) const {
  csv::write_row(out, {"group", "estimator", "zones", "replicates", "failed",
                       "mse_re", "mse_re_lower", "mse_re_upper", "ci_re",
                       "ci_re_lower", "ci_re_upper", "coverage", "mse",
                       "mean_width", "theoretical_re"});
  for (const auto& m : groups) {
    csv::write_row(out, {m.group, std::string(zoneppi::to_string(m.estimator)),
                         std::to_string(m.zones), std::to_string(m.replicates),
                         std::to_string(m.failed), format_double(m.mse_re),
                         format_double(m.mse_re_band.lower),
                         format_double(m.mse_re_band.upper),
                         format_double(m.ci_re),
                         format_double(m.ci_re_band.lower),
                         format_double(m.ci_re_band.upper),
                         format_double(m.coverage), format_double(m.mse),
                         format_double(m.mean_width),
                         format_double(m.theoretical_re)});
  }
}

void EvaluationReport::write_zone_csv(std::ostream& out) const {
  csv::write_row(out, {"zone_id", "group", "estimator", "n", "mse_ess",
                       "ci_ess", "reps_used"});
  for (const auto& e : zones) {
    csv::write_row(out, {e.zone_id, e.group,
                         std::string(zoneppi::to_string(e.estimator)),
                         std::to_string(e.n), format_double(e.mse_ess),
                         format_double(e.ci_ess), std::to_string(e.reps_used)});
  }
}

}  // namespace zoneppi
