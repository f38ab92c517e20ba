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

#include <stdexcept>
#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_util.h"
#include "zoneppi/data.h"
#include "zoneppi/error.h"

using namespace zoneppi;

namespace {

const char* kHeader = "field_id,zone_id,admin1,latitude,longitude,yield,prediction\n";

LoadResult parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

std::vector<FieldRecord> zone_records(const std::string& zone, int labeled,
                                      int unlabeled = 0) {
  std::vector<FieldRecord> out;
  for (int i = 0; i < labeled + unlabeled; ++i) {
    out.push_back(testing::field(zone, static_cast<std::size_t>(i),
                                 i < labeled ? std::optional<double>(1.0 + i) : std::nullopt,
                                 1.0));
  }
  return out;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("parses labeled, unlabeled and zero-yield rows") {
  const auto r = parse(std::string(kHeader) +
                       "f1,z,A,1.5,2.5,0,0.1\n"
                       "f2,z,A,1.5,2.5,,0.2\n"
                       "f3,z,B,1.5,2.5,3.25,\n");
  REQUIRE(r.records.size() == 3);
  CHECK(r.rejected.empty());
  CHECK(r.records[0].labeled());
  CHECK(*r.records[0].yield == 0.0);
  CHECK_FALSE(r.records[1].labeled());
  CHECK_FALSE(r.records[2].prediction.has_value());
  CHECK(r.feature_dim == 0);
}

TEST_CASE("header only is a dataset error") {
  try {
    parse(kHeader);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("no records") != std::string::npos);
  }
  CHECK_THROWS_AS(parse(""), DatasetError);
}

TEST_CASE("negative yield is rejected with its line number") {
  const auto r = parse(std::string(kHeader) +
                       "f1,z,A,1,2,1.0,1\n"
                       "f2,z,A,1,2,-1,1\n");
  REQUIRE(r.records.size() == 1);
  REQUIRE(r.rejected.size() == 1);
  CHECK(r.rejected[0].line == 3);
  CHECK(r.rejected[0].message.find("yield") != std::string::npos);
}

TEST_CASE("row-level problems are collected, not fatal") {
  const auto r = parse(std::string(kHeader) +
                       "f1,z,A,abc,2,1,1\n"
                       "f2,z,A,1,2,x,1\n"
                       "f3,z,A,1,2,1,1\n"
                       "f3,z,A,1,2,1,1\n"
                       ",z,A,1,2,1,1\n"
                       "f5,z,A,nan,2,1,1\n");
  CHECK(r.records.size() == 1);
  CHECK(r.rejected.size() == 5);
  std::vector<std::size_t> lines;
  for (const auto& d : r.rejected) lines.push_back(d.line);
  CHECK(lines == std::vector<std::size_t>{2, 3, 5, 6, 7});
}

TEST_CASE("missing required column is a schema error") {
  CHECK_THROWS_AS(parse("field_id,zone_id,latitude,longitude\nf,z,1,2\n"), SchemaError);
}

TEST_CASE("feature columns must be contiguous and complete") {
  CHECK_THROWS_AS(parse("field_id,zone_id,admin1,latitude,longitude,feat_0,feat_2\n"
                        "f,z,A,1,2,1,2\n"),
                  SchemaError);
  const auto r = parse(
      "field_id,zone_id,admin1,latitude,longitude,yield,feat_0,feat_1\n"
      "f1,z,A,1,2,1,0.5,0.25\n"
      "f2,z,A,1,2,1,0.5,\n"
      "f3,z,A,1,2,1,,\n");
  CHECK(r.feature_dim == 2);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].features == std::vector<double>{0.5, 0.25});
  CHECK(r.records[1].features.empty());
  CHECK(r.rejected.size() == 1);
}

TEST_CASE("custom schema names") {
  Schema s;
  s.yield = "crop_cut";
  s.zone_id = "zone";
  std::istringstream in("field_id,zone,admin1,latitude,longitude,crop_cut\nf,z9,A,1,2,4\n");
  const auto r = parse_dataset(in, s);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].zone_id == "z9");
  CHECK(*r.records[0].yield == 4.0);
}

TEST_CASE("write then load round-trips records") {
  Rng rng(11);
  std::normal_distribution<double> g;
  std::vector<FieldRecord> recs;
  for (int i = 0; i < 50; ++i) {
    FieldRecord f = testing::field(i % 2 ? "zone,\"odd\"" : "even", i,
                                   i % 3 ? std::optional<double>(std::abs(g(rng))) : std::nullopt,
                                   g(rng), "Adm 1");
    f.latitude = g(rng) * 10;
    f.longitude = g(rng) * 100;
    f.features = {g(rng), g(rng) * 1e-9};
    recs.push_back(f);
  }
  std::stringstream buf;
  write_dataset(buf, recs);
  const auto back = parse_dataset(buf);
  CHECK(back.rejected.empty());
  CHECK(back.records == recs);
}

TEST_CASE("eligibility counts labeled fields") {
  std::vector<FieldRecord> recs;
  for (auto& r : zone_records("z19", 19, 30)) recs.push_back(r);
  for (auto& r : zone_records("z20", 20)) recs.push_back(r);
  for (auto& r : zone_records("z25", 25, 3)) recs.push_back(r);
  const auto e = filter_eligible_zones(recs, 20);
  REQUIRE(e.zones.size() == 2);
  CHECK(e.zones[0].zone_id == "z20");
  CHECK(e.zones[1].zone_id == "z25");
  CHECK(e.zones[1].N() == 3);
  REQUIRE(e.dropped.size() == 1);
  CHECK(e.dropped[0].zone_id == "z19");
  CHECK(e.retained_labeled() + e.dropped_labeled() == 64);
  CHECK(e.summary()["dropped"].size() == 1);

  const auto all = filter_eligible_zones(recs, 1);
  CHECK(all.zones.size() == 3);
  CHECK(all.dropped.empty());
  CHECK_THROWS_AS(filter_eligible_zones(recs, 0), std::invalid_argument);
  CHECK(filter_eligible_zones({}, 20).zones.empty());
}

TEST_CASE("eligibility invariants on random inputs") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FieldRecord> recs;
    std::size_t labeled = 0;
    for (int z = 0; z < 8; ++z) {
      const int n = static_cast<int>(rng() % 40), N = static_cast<int>(rng() % 10);
      labeled += static_cast<std::size_t>(n);
      for (auto& r : zone_records("z" + std::to_string(z), n, N)) recs.push_back(r);
    }
    const int min_size = 1 + static_cast<int>(rng() % 30);
    const auto e = filter_eligible_zones(recs, min_size);
    for (const auto& z : e.zones) CHECK(z.n() >= static_cast<std::size_t>(min_size));
    CHECK(e.retained_labeled() + e.dropped_labeled() == labeled);
  }
}

TEST_CASE("study region by plurality of all fields") {
  auto make = [](std::map<std::string, int> counts, int labeled_first) {
    ZoneDataset z;
    z.zone_id = "z";
    int i = 0;
    for (const auto& [admin, c] : counts) {
      for (int k = 0; k < c; ++k, ++i) {
        auto f = testing::field("z", i, 1.0, 1.0, admin);
        if (i >= labeled_first) {
          f.yield.reset();
          z.unlabeled.push_back(f);
        } else {
          z.labeled.push_back(f);
        }
      }
    }
    return std::vector<ZoneDataset>{z};
  };
  CHECK(assign_study_regions(make({{"A", 12}, {"B", 8}}, 20), 1)[0].study_region == "A");
  // Unlabeled fields count toward the plurality.
  CHECK(assign_study_regions(make({{"A", 5}, {"B", 8}}, 6), 1)[0].study_region == "B");
  CHECK(assign_study_regions(make({{"Q", 7}}, 7), 1)[0].study_region == "Q");

  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto tie = make({{"A", 10}, {"B", 10}}, 20);
    const auto r1 = assign_study_regions(tie, seed)[0].study_region;
    const auto r2 = assign_study_regions(tie, seed)[0].study_region;
    CHECK(r1 == r2);
    CHECK((r1 == "A" || r1 == "B"));
    seen.insert(r1);
  }
  CHECK(seen.size() == 2);
}

}  // TEST_SUITE
