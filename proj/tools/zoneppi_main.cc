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

// zoneppi command-line driver: simulate, estimate, evaluate, theory.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "zoneppi/data.h"
#include "zoneppi/error.h"
#include "zoneppi/estimators.h"
#include "zoneppi/eval.h"
#include "zoneppi/pipeline.h"
#include "zoneppi/random.h"
#include "zoneppi/synth.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zoneppi;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags that were given on the command line are applied after the config
// file has been read.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name, T initial,
                   std::function<void(const T&)> apply,
                   const std::string& help) {
    auto value = std::make_shared<T>(std::move(initial));
    CLI::Option* opt = app->add_option(name, *value, help)->capture_default_str();
    items_.push_back({opt, [value, apply] { apply(*value); }});
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& name,
                        std::function<void()> apply, const std::string& help) {
    CLI::Option* opt = app->add_flag(name, help);
    items_.push_back({opt, std::move(apply)});
    return opt;
  }

  void apply() const {
    for (const auto& [opt, fn] : items_) {
      if (opt->count() > 0) fn();
    }
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void()>>> items_;
};

struct Configs {
  PipelineConfig pipeline;
  EvalConfig eval;
  SynthConfig synth;
};

void load_config(const std::string& path, Configs& c) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "pipeline") {
        from_json(value, c.pipeline);
      } else if (key == "eval") {
        from_json(value, c.eval);
      } else if (key == "synth") {
        from_json(value, c.synth);
      } else {
        throw std::invalid_argument("unknown section '" + key + "'");
      }
    } catch (const std::exception& e) {
      throw UsageError("config file '" + path + "': " + e.what());
    }
  }
}

void emit_error(std::string_view kind, const std::string& message,
                json extra = json::object()) {
  json j = {{"error", kind}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << '\n';
}

std::vector<std::string> names_of(std::initializer_list<std::string_view> v) {
  return {v.begin(), v.end()};
}

void add_seed(Overrides& ov, CLI::App* app, Configs& c) {
  ov.add<std::uint64_t>(app, "--seed", 0, [&c](const std::uint64_t& s) {
    c.pipeline.seed = s;
    c.eval.seed = s;
    c.synth.seed = s;
  }, "Master random seed");
}

void add_threads(Overrides& ov, CLI::App* app, Configs& c) {
  ov.add<unsigned>(app, "--threads", 1, [&c](const unsigned& t) {
    c.pipeline.threads = t;
    c.eval.threads = t;
  }, "Worker threads (0 = hardware concurrency)");
}

void add_pipeline_options(Overrides& ov, CLI::App* app, Configs& c,
                          bool with_estimation) {
  const PipelineConfig d;
  auto& p = c.pipeline;
  ov.add<int>(app, "--folds", d.folds, [&p](const int& v) { p.folds = v; },
              "Cross-fitting folds for the linear predictor");
  ov.add<std::string>(app, "--pool-scale", std::string(to_string(d.pooling_scale)),
                      [&p](const std::string& v) { p.pooling_scale = parse_pooling_scale(v); },
                      "Control-function pooling unit")
      ->check(CLI::IsMember(names_of({"zone", "region", "global"})));
  ov.add<int>(app, "--min-zone-size", d.min_zone_size,
              [&p](const int& v) { p.min_zone_size = v; },
              "Minimum labeled fields for a zone to be kept");
  ov.add<std::string>(app, "--predictor", std::string(to_string(d.predictor)),
                      [&p](const std::string& v) { p.predictor = parse_predictor_mode(v); },
                      "Prediction source")
      ->check(CLI::IsMember(names_of({"column", "linear"})));
  ov.add<int>(app, "--cv-folds", d.cv_folds, [&p](const int& v) { p.cv_folds = v; },
              "LASSO cross-validation folds");
  if (!with_estimation) return;
  ov.add<std::string>(app, "--ci", std::string(to_string(d.ci_method)),
                      [&c](const std::string& v) {
                        c.pipeline.ci_method = parse_ci_method(v);
                        c.eval.ci_method = c.pipeline.ci_method;
                      },
                      "Interval method")
      ->check(CLI::IsMember(names_of({"bca", "percentile", "pct", "clt", "t"})));
  ov.add<double>(app, "--alpha", d.alpha, [&c](const double& v) {
    c.pipeline.alpha = v;
    c.eval.alpha = v;
  }, "Interval miscoverage level");
  ov.add<int>(app, "--bootstrap-samples", d.bootstrap_samples, [&c](const int& v) {
    c.pipeline.bootstrap_samples = v;
    c.eval.bootstrap_samples = v;
  }, "Bootstrap replicates per interval");
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DatasetError("cannot create output directory '" + dir + "'");
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<FieldRecord> read_input(const std::string& path) {
  LoadResult loaded = load_dataset(path);
  if (!loaded.rejected.empty()) {
    json rows = json::array();
    for (const auto& r : loaded.rejected) {
      rows.push_back({{"line", r.line}, {"message", r.message}});
    }
    std::cerr << json{{"warning", "rejected rows"}, {"rows", rows}}.dump() << '\n';
  }
  return std::move(loaded.records);
}

void report_eligibility(const EligibilityResult& e) {
  if (!e.dropped.empty()) std::cerr << e.summary().dump() << '\n';
}

void report_warnings(const std::vector<std::string>& warnings) {
  if (!warnings.empty()) std::cerr << json{{"warnings", warnings}}.dump() << '\n';
}

// Reports must not depend on the worker count.
json report_config(const auto& config) {
  json j = config;
  j.erase("threads");
  return j;
}

std::string fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

int run_simulate(const Configs& c, const std::string& output,
                 const std::string& output_dir) {
  c.synth.validate();
  const auto records = generate(c.synth);
  if (!output.empty()) {
    auto out = open_out(output);
    write_dataset(out, records);
  } else if (!output_dir.empty()) {
    auto out = open_out(ensure_dir(output_dir) / "synthetic.csv");
    write_dataset(out, records);
  } else {
    write_dataset(std::cout, records);
  }
  return 0;
}

int run_estimate(const Configs& c, const std::string& input,
                 const std::string& output_dir) {
  const auto records = read_input(input);
  const PipelineResult result = run_pipeline(records, c.pipeline);
  report_eligibility(result.eligibility);
  report_warnings(result.warnings);
  const fs::path dir = ensure_dir(output_dir);
  {
    auto out = open_out(dir / "zone_estimates.json");
    out << json{{"config", report_config(c.pipeline)}, {"zones", reports_to_json(result)},
                {"warnings", result.warnings}}
               .dump(2)
        << '\n';
  }
  auto out = open_out(dir / "zone_estimates.csv");
  write_reports_csv(out, result);
  return 0;
}

int run_evaluate(const Configs& c, const std::string& input,
                 const std::string& output_dir) {
  c.pipeline.validate();
  c.eval.validate();
  const auto records = read_input(input);
  const EligibilityResult e = prepare_zones(records, c.pipeline);
  report_eligibility(e);
  const EvaluationReport report = run_evaluation(e.zones, c.pipeline, c.eval);
  report_warnings(report.warnings);
  const fs::path dir = ensure_dir(output_dir);
  {
    json j = report.to_json();
    j["config"] = {{"pipeline", report_config(c.pipeline)},
                   {"eval", report_config(c.eval)}};
    auto out = open_out(dir / "evaluation.json");
    out << j.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "evaluation_groups.csv");
    report.write_group_csv(out);
  }
  auto out = open_out(dir / "evaluation_zones.csv");
  report.write_zone_csv(out);
  return 0;
}

int run_theory(const Configs& c, const std::string& input) {
  c.pipeline.validate();
  if (!(c.eval.unlabeled_multiplier > 0.0)) {
    throw std::invalid_argument("unlabeled_multiplier must be > 0");
  }
  const auto records = read_input(input);
  const EligibilityResult e = prepare_zones(records, c.pipeline);
  report_eligibility(e);
  const FoldAssignment folds = assign_folds(
      e.zones, c.pipeline.folds, derive_seed(c.pipeline.seed, 0x464f4c44ULL));
  const LinearTrainer linear;
  const CrossFitResult cf = cross_fit_predictions(
      e.zones, folds,
      c.pipeline.predictor == PredictorMode::kLinear ? &linear : nullptr);

  std::map<std::string, std::pair<double, std::size_t>> groups;
  std::cout << "zone_id,study_region,n,N,r2_within,theoretical_re\n";
  for (std::size_t z = 0; z < e.zones.size(); ++z) {
    const auto& zone = e.zones[z];
    std::vector<double> y;
    for (const auto& f : zone.labeled) y.push_back(*f.yield);
    const double r2 = r_squared_within(y, cf.predictions[z].labeled);
    const std::size_t n = zone.n();
    const auto N = static_cast<std::size_t>(
        std::llround(c.eval.unlabeled_multiplier * static_cast<double>(n)));
    const double re = theoretical_re(r2, n, N);
    std::cout << zone.zone_id << ',' << zone.study_region << ',' << n << ','
              << N << ',' << fixed4(r2) << ',' << fixed4(re) << '\n';
    const std::string g =
        c.eval.group_by == GroupBy::kAll ? "all" : zone.study_region;
    groups[g].first += re;
    groups[g].second += 1;
  }
  std::cout << "\ngroup,zones,theoretical_re\n";
  for (const auto& [g, acc] : groups) {
    std::cout << g << ',' << acc.second << ','
              << fixed4(acc.first / static_cast<double>(acc.second)) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zoneppi: prediction-powered zone-level yield estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "zoneppi 0.1.0");

  Configs c;
  Overrides ov;
  std::string config_path, input, output, sim_dir;
  std::string output_dir = "zoneppi_out";

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "JSON config file with optional pipeline/eval/synth sections")
        ->check(CLI::ExistingFile);
  };

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
  {
    const SynthConfig d;
    auto& s = c.synth;
    add_config(sim);
    add_seed(ov, sim, c);
    sim->add_option("--output", output, "Output CSV path (default: stdout)");
    sim->add_option("--output-dir", sim_dir,
                    "Directory for synthetic.csv when --output is not given");
    ov.add<int>(sim, "--n-zones", d.n_zones, [&s](const int& v) { s.n_zones = v; },
                "Number of zones");
    ov.add<std::string>(
        sim, "--fields-per-zone",
        std::to_string(d.fields_per_zone_min) + ":" + std::to_string(d.fields_per_zone_max),
        [&s](const std::string& v) {
          const auto colon = v.find(':');
          try {
            s.fields_per_zone_min = std::stoi(v.substr(0, colon));
            s.fields_per_zone_max = colon == std::string::npos
                                        ? s.fields_per_zone_min
                                        : std::stoi(v.substr(colon + 1));
          } catch (const std::exception&) {
            throw UsageError("--fields-per-zone expects N or MIN:MAX, got '" + v + "'");
          }
        },
        "Labeled fields per zone, N or MIN:MAX");
    ov.add<double>(sim, "--unlabeled-multiplier", d.unlabeled_multiplier,
                   [&s](const double& v) { s.unlabeled_multiplier = v; },
                   "Unlabeled fields per zone as a multiple of labeled");
    ov.add<double>(sim, "--zero-inflation", d.zero_inflation,
                   [&s](const double& v) { s.zero_inflation = v; },
                   "Probability of an exact zero yield");
    ov.add<double>(sim, "--yield-shape", d.yield_shape,
                   [&s](const double& v) { s.yield_shape = v; }, "Gamma shape");
    ov.add<double>(sim, "--yield-scale", d.yield_scale,
                   [&s](const double& v) { s.yield_scale = v; }, "Gamma scale");
    ov.add<double>(sim, "--target-r2", d.target_r2,
                   [&s](const double& v) { s.target_r2 = v; },
                   "Target within-zone R^2 of predictions");
    ov.add<double>(sim, "--spatial-trend", d.spatial_trend,
                   [&s](const double& v) { s.spatial_trend = v; },
                   "Yield shift per unit of standardized latitude");
    ov.add<double>(sim, "--zone-effect-sd", d.zone_effect_sd,
                   [&s](const double& v) { s.zone_effect_sd = v; },
                   "Standard deviation of the zone yield shift");
    ov.add<int>(sim, "--n-regions", d.n_regions,
                [&s](const int& v) { s.n_regions = v; }, "Number of admin1 regions");
    ov.add<double>(sim, "--admin1-mixing", d.admin1_mixing,
                   [&s](const double& v) { s.admin1_mixing = v; },
                   "Share of fields recorded under a neighbouring admin1");
    ov.add<int>(sim, "--feature-dim", d.feature_dim,
                [&s](const int& v) { s.feature_dim = v; }, "Feature columns per field");
  }

  // estimate
  CLI::App* est = app.add_subcommand("estimate", "Per-zone estimates and intervals");
  {
    add_config(est);
    add_seed(ov, est, c);
    add_threads(ov, est, c);
    est->add_option("--input", input, "Input CSV")->required();
    est->add_option("--output-dir", output_dir, "Report directory")->capture_default_str();
    ov.add<std::string>(est, "--estimator", "ppipp",
                        [&c](const std::string& v) { c.pipeline.estimator = parse_estimator(v); },
                        "Estimator")
        ->check(CLI::IsMember(names_of({"lbl", "ppipp", "ppi", "aipw", "nophoto"})));
    add_pipeline_options(ov, est, c, true);
  }

  // evaluate
  CLI::App* eva = app.add_subcommand("evaluate", "Bootstrap evaluation of estimators");
  {
    const EvalConfig d;
    auto& e = c.eval;
    add_config(eva);
    add_seed(ov, eva, c);
    add_threads(ov, eva, c);
    eva->add_option("--input", input, "Input CSV")->required();
    eva->add_option("--output-dir", output_dir, "Report directory")->capture_default_str();
    add_pipeline_options(ov, eva, c, true);
    ov.add<std::vector<std::string>>(
        eva, "--estimator", {"lbl", "ppipp", "ppi", "aipw", "nophoto"},
        [&e](const std::vector<std::string>& v) {
          e.estimators.clear();
          for (const auto& tag : v) e.estimators.push_back(parse_estimator(tag));
        },
        "Estimators to compare (repeatable)")
        ->check(CLI::IsMember(names_of({"lbl", "ppipp", "ppi", "aipw", "nophoto"})));
    ov.add<int>(eva, "--reps-per-zone", d.reps_per_zone,
                [&e](const int& v) { e.reps_per_zone = v; }, "Replicates per zone");
    ov.add<double>(eva, "--unlabeled-multiplier", d.unlabeled_multiplier,
                   [&e](const double& v) { e.unlabeled_multiplier = v; },
                   "Unlabeled resample size as a multiple of n");
    ov.add_flag(eva, "--no-refit-control", [&e] { e.refit_control_per_rep = false; },
                "Fit control functions once on the original data (default: refit per replicate)");
    ov.add<std::string>(eva, "--ratio-mode", std::string(to_string(d.ratio_mode)),
                        [&e](const std::string& v) { e.ratio_mode = parse_ratio_mode(v); },
                        "Relative-efficiency aggregation")
        ->check(CLI::IsMember(names_of({"ratio_of_averages", "average_of_ratios"})));
    ov.add<std::string>(eva, "--group-by", std::string(to_string(d.group_by)),
                        [&e](const std::string& v) { e.group_by = parse_group_by(v); },
                        "Zone grouping for metrics")
        ->check(CLI::IsMember(names_of({"all", "region"})));
    ov.add<int>(eva, "--band-bootstrap-samples", d.band_bootstrap_samples,
                [&e](const int& v) { e.band_bootstrap_samples = v; },
                "Zone bootstrap replicates for efficiency bands");
  }

  // theory
  CLI::App* th = app.add_subcommand("theory", "Theoretical relative efficiency per zone");
  {
    const EvalConfig d;
    auto& e = c.eval;
    add_config(th);
    add_seed(ov, th, c);
    th->add_option("--input", input, "Input CSV")->required();
    add_pipeline_options(ov, th, c, false);
    ov.add<double>(th, "--unlabeled-multiplier", d.unlabeled_multiplier,
                   [&e](const double& v) { e.unlabeled_multiplier = v; },
                   "N as a multiple of n");
    ov.add<std::string>(th, "--group-by", std::string(to_string(d.group_by)),
                        [&e](const std::string& v) { e.group_by = parse_group_by(v); },
                        "Zone grouping for the averaged efficiency")
        ->check(CLI::IsMember(names_of({"all", "region"})));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    emit_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (!config_path.empty()) load_config(config_path, c);
    ov.apply();
  } catch (const UsageError& e) {
    emit_error("usage", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    emit_error("usage", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    emit_error("data", e.what());
    return kExitData;
  }

  try {
    if (sim->parsed()) return run_simulate(c, output, sim_dir);
    if (est->parsed()) return run_estimate(c, input, output_dir);
    if (eva->parsed()) return run_evaluate(c, input, output_dir);
    return run_theory(c, input);
  } catch (const std::invalid_argument& e) {
    emit_error("usage", e.what());
    return kExitUsage;
  } catch (const SchemaError& e) {
    emit_error("schema", e.what());
  } catch (const DatasetError& e) {
    emit_error("dataset", e.what());
  } catch (const ConvergenceError& e) {
    emit_error("convergence", e.what(), {{"lambda_index", e.lambda_index()}});
  } catch (const std::exception& e) {
    emit_error("runtime", e.what());
  }
  return kExitData;
}
