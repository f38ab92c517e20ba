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

#include "zoneppi/synth.h"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "zoneppi/random.h"

namespace zoneppi {
namespace {

constexpr double kFieldSpreadDeg = 0.05;
constexpr double kGridSpacingDeg = 0.8;
constexpr double kGridJitterDeg = 0.2;

std::string numbered(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

void SynthConfig::validate() const {
  if (n_zones < 1) throw std::invalid_argument("n_zones must be >= 1");
  if (fields_per_zone_min < 1 || fields_per_zone_max < fields_per_zone_min) {
    throw std::invalid_argument("fields_per_zone range is invalid");
  }
  if (!(unlabeled_multiplier >= 0.0)) {
    throw std::invalid_argument("unlabeled_multiplier must be >= 0");
  }
  if (!(zero_inflation >= 0.0 && zero_inflation < 1.0)) {
    throw std::invalid_argument("zero_inflation must lie in [0, 1)");
  }
  if (!(yield_shape > 0.0) || !(yield_scale > 0.0)) {
    throw std::invalid_argument("yield shape and scale must be positive");
  }
  if (!(target_r2 >= 0.0 && target_r2 < 1.0)) {
    throw std::invalid_argument("target_r2 must lie in [0, 1)");
  }
  if (!std::isfinite(spatial_trend)) {
    throw std::invalid_argument("spatial_trend must be finite");
  }
  if (!(zone_effect_sd >= 0.0)) {
    throw std::invalid_argument("zone_effect_sd must be >= 0");
  }
  if (n_regions < 1) throw std::invalid_argument("n_regions must be >= 1");
  if (!(admin1_mixing >= 0.0 && admin1_mixing <= 0.5)) {
    throw std::invalid_argument("admin1_mixing must lie in [0, 0.5]");
  }
  if (feature_dim < 0) throw std::invalid_argument("feature_dim must be >= 0");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"n_zones", c.n_zones},
       {"fields_per_zone_min", c.fields_per_zone_min},
       {"fields_per_zone_max", c.fields_per_zone_max},
       {"unlabeled_multiplier", c.unlabeled_multiplier},
       {"zero_inflation", c.zero_inflation},
       {"yield_shape", c.yield_shape},
       {"yield_scale", c.yield_scale},
       {"target_r2", c.target_r2},
       {"spatial_trend", c.spatial_trend},
       {"zone_effect_sd", c.zone_effect_sd},
       {"n_regions", c.n_regions},
       {"admin1_mixing", c.admin1_mixing},
       {"feature_dim", c.feature_dim},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  static const std::set<std::string> known = {
      "n_zones", "fields_per_zone_min", "fields_per_zone_max",
      "unlabeled_multiplier", "zero_inflation", "yield_shape", "yield_scale",
      "target_r2", "spatial_trend", "zone_effect_sd", "n_regions",
      "admin1_mixing", "feature_dim", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument("unknown synth config key '" + key + "'");
    }
  }
  read_field(j, "n_zones", c.n_zones);
  read_field(j, "fields_per_zone_min", c.fields_per_zone_min);
  read_field(j, "fields_per_zone_max", c.fields_per_zone_max);
  read_field(j, "unlabeled_multiplier", c.unlabeled_multiplier);
  read_field(j, "zero_inflation", c.zero_inflation);
  read_field(j, "yield_shape", c.yield_shape);
  read_field(j, "yield_scale", c.yield_scale);
  read_field(j, "target_r2", c.target_r2);
  read_field(j, "spatial_trend", c.spatial_trend);
  read_field(j, "zone_effect_sd", c.zone_effect_sd);
  read_field(j, "n_regions", c.n_regions);
  read_field(j, "admin1_mixing", c.admin1_mixing);
  read_field(j, "feature_dim", c.feature_dim);
  read_field(j, "seed", c.seed);
}

std::vector<FieldRecord> generate(const SynthConfig& config) {
  config.validate();
  const int Z = config.n_zones;
  const int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(Z))));

  // Zone layout on a jittered grid.
  Rng layout_rng(derive_seed(config.seed, 0x4c41594fULL));
  std::uniform_real_distribution<double> jitter(-kGridJitterDeg, kGridJitterDeg);
  std::normal_distribution<double> zone_effect(0.0, 1.0);
  std::vector<double> center_lat(Z), center_lon(Z), effect(Z);
  for (int z = 0; z < Z; ++z) {
    center_lat[z] = 6.0 + kGridSpacingDeg * (z / grid_cols) + jitter(layout_rng);
    center_lon[z] = 3.0 + kGridSpacingDeg * (z % grid_cols) + jitter(layout_rng);
    effect[z] = config.zone_effect_sd * zone_effect(layout_rng);
  }
  double lat_mean = 0.0;
  for (double v : center_lat) lat_mean += v;
  lat_mean /= Z;
  double lat_sd = 0.0;
  for (double v : center_lat) lat_sd += (v - lat_mean) * (v - lat_mean);
  lat_sd = Z > 1 ? std::sqrt(lat_sd / (Z - 1)) : 1.0;
  if (!(lat_sd > 0.0)) lat_sd = 1.0;

  std::vector<FieldRecord> out;
  for (int z = 0; z < Z; ++z) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(z) + 1));
    const std::string zone_id = numbered("Z", z + 1, 3);
    const int region = static_cast<int>(static_cast<long long>(z) *
                                        config.n_regions / Z);
    const int neighbour = (region + 1) % config.n_regions;

    std::uniform_int_distribution<int> size_dist(config.fields_per_zone_min,
                                                 config.fields_per_zone_max);
    const int n = size_dist(rng);
    const int N = static_cast<int>(std::lround(config.unlabeled_multiplier * n));
    const int total = n + N;

    std::normal_distribution<double> spread(0.0, kFieldSpreadDeg);
    std::bernoulli_distribution zero_draw(config.zero_inflation);
    std::bernoulli_distribution mix_draw(config.n_regions > 1 ? config.admin1_mixing
                                                              : 0.0);
    std::gamma_distribution<double> gamma(config.yield_shape, config.yield_scale);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    std::vector<FieldRecord> fields(static_cast<std::size_t>(total));
    std::vector<double> yields(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) {
      auto& f = fields[static_cast<std::size_t>(i)];
      f.field_id = zone_id + numbered("-F", i + 1, 4);
      f.zone_id = zone_id;
      f.admin1 = numbered("R", mix_draw(rng) ? neighbour + 1 : region + 1, 2);
      f.latitude = center_lat[z] + spread(rng);
      f.longitude = center_lon[z] + spread(rng);
      const bool zero = zero_draw(rng);
      const double g = gamma(rng);
      double y = 0.0;
      if (!zero) {
        y = std::max(0.0, g + config.spatial_trend * (f.latitude - lat_mean) / lat_sd +
                              effect[z]);
      }
      yields[static_cast<std::size_t>(i)] = y;
    }

    double ybar = 0.0;
    for (double y : yields) ybar += y;
    ybar /= total;
    double var = 0.0;
    for (double y : yields) var += (y - ybar) * (y - ybar);
    var = total > 1 ? var / (total - 1) : 0.0;

    for (int i = 0; i < total; ++i) {
      auto& f = fields[static_cast<std::size_t>(i)];
      const double y = yields[static_cast<std::size_t>(i)];
      const double eps = unit_normal(rng);
      double pred;
      if (config.target_r2 == 0.0) {
        pred = ybar + std::sqrt(var) * eps;
      } else {
        pred = y + std::sqrt(var * (1.0 - config.target_r2) / config.target_r2) * eps;
      }
      f.prediction = pred;
      if (config.feature_dim > 0) {
        f.features.push_back(pred);
        for (int d = 1; d < config.feature_dim; ++d) {
          f.features.push_back(unit_normal(rng));
        }
      }
      if (i < n) f.yield = y;
    }
    for (auto& f : fields) out.push_back(std::move(f));
  }
  return out;
}

}  // namespace zoneppi
