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

#ifndef ZONEPPI_RANDOM_H_
#define ZONEPPI_RANDOM_H_

#include <cstdint>
#include <limits>
#include <string_view>

namespace zoneppi {

// SplitMix64 output function. Used both as the generator step and to derive
// independent substream seeds from structured keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for the substream identified by (seed, key...). Order of keys matters.
template <typename... Keys>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Keys... keys) {
  std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
  ((h = mix64(h ^ (static_cast<std::uint64_t>(keys) + 0x9E3779B97F4A7C15ULL))),
   ...);
  return h;
}

// SplitMix64 generator satisfying UniformRandomBitGenerator. Seeding is O(1),
// which matters when every bootstrap replicate gets its own stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

}  // namespace zoneppi

#endif  // ZONEPPI_RANDOM_H_
