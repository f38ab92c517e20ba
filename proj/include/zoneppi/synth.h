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

#ifndef ZONEPPI_SYNTH_H_
#define ZONEPPI_SYNTH_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "zoneppi/data.h"

namespace zoneppi {

// Synthetic multi-zone field data. Nonzero yields follow
// Gamma(yield_shape, yield_scale) shifted by spatial_trend * standardized
// latitude and truncated at 0; a zero_inflation share are exact zeros.
// Predictions are yield + Gaussian noise whose variance makes the squared
// within-zone correlation target_r2 in expectation. target_r2 = 0 yields
// predictions independent of the yields.
struct SynthConfig {
  int n_zones = 29;
  int fields_per_zone_min = 20;
  int fields_per_zone_max = 40;
  // Extra unlabeled fields per zone, as a multiple of its labeled count.
  double unlabeled_multiplier = 0.0;
  double zero_inflation = 0.1;
  double yield_shape = 2.0;
  double yield_scale = 1.0;
  double target_r2 = 0.198;
  double spatial_trend = 0.3;
  // Zone-level random shift of the yield level (standard deviation).
  double zone_effect_sd = 0.3;
  int n_regions = 4;
  // Share of a zone's fields recorded under a neighbouring admin1.
  double admin1_mixing = 0.1;
  int feature_dim = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

// Pure function of config: equal configs give identical records.
std::vector<FieldRecord> generate(const SynthConfig& config);

}  // namespace zoneppi

#endif  // ZONEPPI_SYNTH_H_
