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

#ifndef ZONEPPI_STATS_H_
#define ZONEPPI_STATS_H_

#include <span>
#include <string>

namespace zoneppi {

double mean(std::span<const double> x);

// Divisor (count - 1). Requires at least two values.
double sample_variance(std::span<const double> x);
double sample_covariance(std::span<const double> x, std::span<const double> y);

// Standard normal CDF and quantile.
double normal_cdf(double z);
double normal_quantile(double p);

// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
// p is clamped to [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

// Shortest decimal representation that round-trips through strtod.
std::string format_double(double value);

}  // namespace zoneppi

#endif  // ZONEPPI_STATS_H_
