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

#include "zoneppi/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "zoneppi/csv.h"
#include "zoneppi/error.h"
#include "zoneppi/random.h"
#include "zoneppi/stats.h"

namespace zoneppi {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

// Empty cell -> nullopt; unparsable or non-finite -> throws with `what`.
std::optional<double> parse_number(std::string_view cell, const char* what) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw std::invalid_argument(std::string("non-numeric ") + what + " '" +
                                std::string(cell) + "'");
  }
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string("non-finite ") + what);
  }
  return value;
}

struct ColumnMap {
  int field_id = -1, zone_id = -1, admin1 = -1, latitude = -1, longitude = -1;
  int yield = -1, prediction = -1;
  std::vector<int> features;  // ordered by feature index
};

ColumnMap map_columns(const std::vector<std::string>& header,
                      const Schema& schema) {
  ColumnMap cols;
  std::map<std::size_t, int> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string_view name = trim(header[i]);
    if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.remove_prefix(3);
    const int idx = static_cast<int>(i);
    if (name == schema.field_id) cols.field_id = idx;
    else if (name == schema.zone_id) cols.zone_id = idx;
    else if (name == schema.admin1) cols.admin1 = idx;
    else if (name == schema.latitude) cols.latitude = idx;
    else if (name == schema.longitude) cols.longitude = idx;
    else if (name == schema.yield) cols.yield = idx;
    else if (name == schema.prediction) cols.prediction = idx;
    else if (!schema.feature_prefix.empty() &&
             name.starts_with(schema.feature_prefix)) {
      const std::string_view suffix = name.substr(schema.feature_prefix.size());
      std::size_t k = 0;
      const auto [ptr, ec] =
          std::from_chars(suffix.data(), suffix.data() + suffix.size(), k);
      if (ec == std::errc() && ptr == suffix.data() + suffix.size() &&
          !suffix.empty()) {
        if (!feature_cols.emplace(k, idx).second) {
          throw SchemaError("duplicate feature column '" + std::string(name) + "'");
        }
      }
    }
  }

  std::vector<std::string> missing;
  if (cols.field_id < 0) missing.push_back(schema.field_id);
  if (cols.zone_id < 0) missing.push_back(schema.zone_id);
  if (cols.admin1 < 0) missing.push_back(schema.admin1);
  if (cols.latitude < 0) missing.push_back(schema.latitude);
  if (cols.longitude < 0) missing.push_back(schema.longitude);
  if (!missing.empty()) {
    std::string msg = "missing required column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw SchemaError(msg);
  }

  std::size_t expected = 0;
  for (const auto& [k, idx] : feature_cols) {
    if (k != expected++) {
      throw SchemaError("feature columns must be numbered contiguously from " +
                        schema.feature_prefix + "0");
    }
    cols.features.push_back(idx);
  }
  return cols;
}

FieldRecord parse_record(const std::vector<std::string>& row,
                         const ColumnMap& cols) {
  auto cell = [&](int idx) -> std::string_view {
    if (idx < 0 || static_cast<std::size_t>(idx) >= row.size()) return {};
    return row[idx];
  };
  auto required_text = [&](int idx, const char* what) {
    const std::string_view v = trim(cell(idx));
    if (v.empty()) throw std::invalid_argument(std::string("empty ") + what);
    return std::string(v);
  };

  FieldRecord rec;
  rec.field_id = required_text(cols.field_id, "field_id");
  rec.zone_id = required_text(cols.zone_id, "zone_id");
  rec.admin1 = required_text(cols.admin1, "admin1");

  const auto lat = parse_number(cell(cols.latitude), "latitude");
  const auto lon = parse_number(cell(cols.longitude), "longitude");
  if (!lat || !lon) throw std::invalid_argument("missing coordinate");
  rec.latitude = *lat;
  rec.longitude = *lon;

  rec.yield = parse_number(cell(cols.yield), "yield");
  if (rec.yield && *rec.yield < 0.0) {
    throw std::invalid_argument("negative yield " + format_double(*rec.yield));
  }
  rec.prediction = parse_number(cell(cols.prediction), "prediction");

  std::size_t present = 0;
  std::vector<double> features;
  features.reserve(cols.features.size());
  for (int idx : cols.features) {
    const auto v = parse_number(cell(idx), "feature");
    if (v) {
      ++present;
      features.push_back(*v);
    }
  }
  if (present == cols.features.size()) {
    rec.features = std::move(features);
  } else if (present != 0) {
    throw std::invalid_argument("partially missing feature vector");
  }
  return rec;
}

}  // namespace

LoadResult load_dataset(const std::filesystem::path& path,
                        const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open '" + path.string() + "'");
  return parse_dataset(in, schema);
}

LoadResult parse_dataset(std::istream& in, const Schema& schema) {
  std::size_t line = 0;
  const auto header = csv::read_row(in, line);
  if (!header || (header->size() == 1 && trim((*header)[0]).empty())) {
    throw DatasetError("empty file: header row required");
  }
  const ColumnMap cols = map_columns(*header, schema);

  LoadResult result;
  result.feature_dim = cols.features.size();
  std::unordered_set<std::string> seen_ids;
  for (;;) {
    const std::size_t row_line = line + 1;
    const auto row = csv::read_row(in, line);
    if (!row) break;
    if (row->size() == 1 && trim((*row)[0]).empty()) continue;  // blank line
    try {
      FieldRecord rec = parse_record(*row, cols);
      if (!seen_ids.insert(rec.field_id).second) {
        throw std::invalid_argument("duplicate field_id '" + rec.field_id + "'");
      }
      result.records.push_back(std::move(rec));
    } catch (const std::invalid_argument& e) {
      result.rejected.push_back({row_line, e.what()});
    }
  }
  if (result.records.empty()) {
    std::string msg = "no records";
    if (!result.rejected.empty()) {
      msg += " (" + std::to_string(result.rejected.size()) +
             " rows rejected; first at line " +
             std::to_string(result.rejected.front().line) + ": " +
             result.rejected.front().message + ")";
    }
    throw DatasetError(msg);
  }
  return result;
}

void write_dataset(std::ostream& out, std::span<const FieldRecord> records,
                   const Schema& schema) {
  std::size_t dim = 0;
  for (const auto& r : records) dim = std::max(dim, r.features.size());

  std::vector<std::string> header = {schema.field_id, schema.zone_id,
                                     schema.admin1,   schema.latitude,
                                     schema.longitude, schema.yield,
                                     schema.prediction};
  for (std::size_t k = 0; k < dim; ++k) {
    header.push_back(schema.feature_prefix + std::to_string(k));
  }
  csv::write_row(out, header);

  std::vector<std::string> row;
  for (const auto& r : records) {
    if (!r.features.empty() && r.features.size() != dim) {
      throw std::invalid_argument("inconsistent feature dimension for field '" +
                                  r.field_id + "'");
    }
    row.clear();
    row.push_back(r.field_id);
    row.push_back(r.zone_id);
    row.push_back(r.admin1);
    row.push_back(format_double(r.latitude));
    row.push_back(format_double(r.longitude));
    row.push_back(r.yield ? format_double(*r.yield) : "");
    row.push_back(r.prediction ? format_double(*r.prediction) : "");
    for (std::size_t k = 0; k < dim; ++k) {
      row.push_back(r.features.empty() ? "" : format_double(r.features[k]));
    }
    csv::write_row(out, row);
  }
}

std::size_t EligibilityResult::retained_labeled() const {
  std::size_t total = 0;
  for (const auto& z : zones) total += z.n();
  return total;
}

std::size_t EligibilityResult::dropped_labeled() const {
  std::size_t total = 0;
  for (const auto& z : dropped) total += z.labeled_count;
  return total;
}

nlohmann::json EligibilityResult::summary() const {
  nlohmann::json dropped_json = nlohmann::json::array();
  for (const auto& z : dropped) {
    dropped_json.push_back({{"zone_id", z.zone_id},
                            {"labeled", z.labeled_count},
                            {"unlabeled", z.unlabeled_count}});
  }
  return {{"min_zone_size", min_zone_size},
          {"zones_retained", zones.size()},
          {"labeled_retained", retained_labeled()},
          {"zones_dropped", dropped.size()},
          {"labeled_dropped", dropped_labeled()},
          {"dropped", std::move(dropped_json)}};
}

EligibilityResult filter_eligible_zones(std::span<const FieldRecord> records,
                                        int min_zone_size) {
  if (min_zone_size < 1) {
    throw std::invalid_argument("min_zone_size must be >= 1");
  }
  std::map<std::string, ZoneDataset> by_zone;
  for (const auto& rec : records) {
    auto& zone = by_zone[rec.zone_id];
    zone.zone_id = rec.zone_id;
    (rec.labeled() ? zone.labeled : zone.unlabeled).push_back(rec);
  }

  EligibilityResult result;
  result.min_zone_size = static_cast<std::size_t>(min_zone_size);
  for (auto& [id, zone] : by_zone) {
    if (zone.n() >= result.min_zone_size) {
      result.zones.push_back(std::move(zone));
    } else {
      result.dropped.push_back({id, zone.n(), zone.N()});
    }
  }
  return result;
}

std::vector<ZoneDataset> assign_study_regions(std::vector<ZoneDataset> zones,
                                              std::uint64_t seed) {
  for (auto& zone : zones) {
    std::map<std::string, std::size_t> counts;  // ordered -> stable tie list
    for (const auto& f : zone.labeled) ++counts[f.admin1];
    for (const auto& f : zone.unlabeled) ++counts[f.admin1];
    if (counts.empty()) continue;

    std::size_t best = 0;
    for (const auto& [name, c] : counts) best = std::max(best, c);
    std::vector<std::string> tied;
    for (const auto& [name, c] : counts) {
      if (c == best) tied.push_back(name);
    }
    if (tied.size() == 1) {
      zone.study_region = tied.front();
    } else {
      Rng rng(derive_seed(seed, hash_string(zone.zone_id)));
      std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
      zone.study_region = tied[pick(rng)];
    }
  }
  return zones;
}

}  // namespace zoneppi
