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

#include "zoneppi/features.h"

#include <cmath>
#include <stdexcept>

namespace zoneppi {

std::size_t basis_size(std::size_t p, bool include_prediction) {
  return 1 + (include_prediction ? 1 : 0) + p + p * (p + 1) / 2;
}

BasisRow expand_basis(const FeatureRow& row, bool include_prediction) {
  const auto& x = row.covariates;
  if (include_prediction && !std::isfinite(row.prediction)) {
    throw std::invalid_argument("non-finite prediction in basis expansion");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite covariate in basis expansion");
    }
  }

  BasisRow out;
  out.reserve(basis_size(x.size(), include_prediction));
  out.push_back(1.0);
  if (include_prediction) out.push_back(row.prediction);
  for (double v : x) out.push_back(v);
  for (double v : x) out.push_back(v * v);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) out.push_back(x[i] * x[j]);
  }
  return out;
}

}  // namespace zoneppi
