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

#ifndef ZONEPPI_TESTS_TEST_UTIL_H_
#define ZONEPPI_TESTS_TEST_UTIL_H_

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "zoneppi/data.h"
#include "zoneppi/random.h"

namespace zoneppi::testing {

inline FieldRecord field(const std::string& zone, std::size_t i,
                         std::optional<double> y, double pred,
                         const std::string& admin1 = "A") {
  FieldRecord f;
  f.field_id = zone + "-" + std::to_string(i);
  f.zone_id = zone;
  f.admin1 = admin1;
  f.latitude = 10.0 + 0.01 * static_cast<double>(i % 7);
  f.longitude = 5.0 + 0.01 * static_cast<double>(i % 5);
  f.yield = y;
  f.prediction = pred;
  return f;
}

// A zone with n labeled and N unlabeled fields; prediction = yield + noise.
inline ZoneDataset gaussian_zone(const std::string& id, std::size_t n,
                                 std::size_t N, double noise_sd,
                                 std::uint64_t seed,
                                 const std::string& region = "A") {
  Rng rng(derive_seed(seed, hash_string(id)));
  std::normal_distribution<double> g;
  ZoneDataset z;
  z.zone_id = id;
  z.study_region = region;
  for (std::size_t i = 0; i < n + N; ++i) {
    const double y = 2.0 + g(rng);
    FieldRecord f = field(id, i, y, y + noise_sd * g(rng), region);
    f.latitude += 0.1 * g(rng);
    f.longitude += 0.1 * g(rng);
    if (i >= n) {
      f.yield.reset();
      z.unlabeled.push_back(f);
    } else {
      z.labeled.push_back(f);
    }
  }
  return z;
}

}  // namespace zoneppi::testing

#endif  // ZONEPPI_TESTS_TEST_UTIL_H_
