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

#ifndef ZONEPPI_DATA_H_
#define ZONEPPI_DATA_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace zoneppi {

// One field. A field without a yield is unlabeled; a yield of exactly zero is
// a labeled zero. `features` is empty when the dataset carries none.
struct FieldRecord {
  std::string field_id;
  std::string zone_id;
  std::string admin1;
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<double> yield;
  std::optional<double> prediction;
  std::vector<double> features;

  bool labeled() const { return yield.has_value(); }
  friend bool operator==(const FieldRecord&, const FieldRecord&) = default;
};

// Column names. Feature columns are `<feature_prefix><k>` for k = 0..d-1.
struct Schema {
  std::string field_id = "field_id";
  std::string zone_id = "zone_id";
  std::string admin1 = "admin1";
  std::string latitude = "latitude";
  std::string longitude = "longitude";
  std::string yield = "yield";
  std::string prediction = "prediction";
  std::string feature_prefix = "feat_";
};

struct RowDiagnostic {
  std::size_t line = 0;  // 1-based physical line; the header is line 1
  std::string message;
};

struct LoadResult {
  std::vector<FieldRecord> records;
  std::vector<RowDiagnostic> rejected;
  std::size_t feature_dim = 0;
};

// Throws SchemaError when a required column is missing and DatasetError when
// the file is unreadable or holds no valid records. Rows that violate record
// invariants are skipped and listed in `rejected`.
LoadResult load_dataset(const std::filesystem::path& path,
                        const Schema& schema = {});
LoadResult parse_dataset(std::istream& in, const Schema& schema = {});

// Writes the same schema load_dataset reads. Numbers use the shortest
// round-trip representation, so write -> load is lossless.
void write_dataset(std::ostream& out, std::span<const FieldRecord> records,
                   const Schema& schema = {});

// A zone's fields split by label status; the unit of estimation.
struct ZoneDataset {
  std::string zone_id;
  std::string study_region;
  std::vector<FieldRecord> labeled;
  std::vector<FieldRecord> unlabeled;

  std::size_t n() const { return labeled.size(); }
  std::size_t N() const { return unlabeled.size(); }
};

struct DroppedZone {
  std::string zone_id;
  std::size_t labeled_count = 0;
  std::size_t unlabeled_count = 0;
};

struct EligibilityResult {
  std::vector<ZoneDataset> zones;  // sorted by zone_id
  std::vector<DroppedZone> dropped;
  std::size_t min_zone_size = 0;

  std::size_t retained_labeled() const;
  std::size_t dropped_labeled() const;
  nlohmann::json summary() const;
};

// Keeps zones with at least `min_zone_size` labeled fields. Only labeled
// fields count toward eligibility.
EligibilityResult filter_eligible_zones(std::span<const FieldRecord> records,
                                        int min_zone_size);

// Sets each zone's study_region to the plurality admin1 over all of its
// fields. Ties are broken by a draw keyed on (seed, zone_id), so the result
// depends only on zone contents and seed.
std::vector<ZoneDataset> assign_study_regions(std::vector<ZoneDataset> zones,
                                              std::uint64_t seed);

}  // namespace zoneppi

#endif  // ZONEPPI_DATA_H_
