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

#ifndef ZONEPPI_FEATURES_H_
#define ZONEPPI_FEATURES_H_

#include <cstddef>
#include <vector>

namespace zoneppi {

// Control-function input: a prediction plus covariates (latitude, longitude).
struct FeatureRow {
  double prediction = 0.0;
  std::vector<double> covariates;
};

// Regression basis. Layout for p covariates:
//   [1, prediction, x_1..x_p, x_1^2..x_p^2, x_i*x_j for i < j in row-major
//    order]
// The prediction column is dropped when include_prediction is false. With
// p = 2 this is [1, yhat, lat, lon, lat^2, lon^2, lat*lon].
using BasisRow = std::vector<double>;

std::size_t basis_size(std::size_t num_covariates, bool include_prediction);

// Throws std::invalid_argument on non-finite input.
BasisRow expand_basis(const FeatureRow& row, bool include_prediction);

}  // namespace zoneppi

#endif  // ZONEPPI_FEATURES_H_
