// Copyright 2026 The fingerloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "fingerloc/dataset.h"
#include "test_util.h"

using namespace fingerloc;
using namespace fingerloc::dataset;

namespace {

DatasetDescriptor tiny_descriptor() {
  DatasetDescriptor d;
  d.name = "tiny";
  d.ap_count = 3;
  return d;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("descriptor validation lists every problem") {
  DatasetDescriptor d;
  d.ap_count = 0;
  d.rssi_min = 0;
  d.rssi_max = -10;
  d.missing_sentinel = -5;
  CHECK(d.problems().size() >= 2);
  CHECK_THROWS_AS(d.validate(), ConfigError);
  CHECK(DatasetDescriptor::uji().problems().empty());
  CHECK(DatasetDescriptor::uts().problems().empty());
  CHECK(DatasetDescriptor::uji().ap_count == 520);
  CHECK(DatasetDescriptor::uts().ap_count == 589);
}

TEST_CASE("descriptor file round trip") {
  fingerloc::testing::TempDir dir("descriptor");
  auto d = DatasetDescriptor::uts();
  d.floor_offset = 3;
  d.save(dir / "uts.descriptor");
  auto back = DatasetDescriptor::load(dir / "uts.descriptor");
  CHECK(back.name == d.name);
  CHECK(back.ap_count == d.ap_count);
  CHECK(back.rssi_min == d.rssi_min);
  CHECK(back.floor_offset == 3);
  CHECK(back.building_column.empty());
  CHECK(back.longitude_column == d.longitude_column);
}

TEST_CASE("load_dataset") {
  fingerloc::testing::TempDir dir("csv");
  const auto d = tiny_descriptor();

  write_file(dir / "ok.csv",
             "WAP001,WAP002,WAP003,LONGITUDE,LATITUDE,FLOOR,BUILDINGID,USERID\n"
             "-50,100,-104,1.5,2.5,0,1,7\n"
             "100,100,0,-3,4,2,0,7\n");
  auto recs = load_dataset(dir / "ok.csv", d);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].rssi == std::vector<int>{-50, 100, -104});
  CHECK(recs[0].longitude == 1.5);
  CHECK(recs[0].building == 1);
  CHECK(recs[1].floor == 2);

  write_file(dir / "empty.csv", "WAP001,WAP002,WAP003,LONGITUDE,LATITUDE,FLOOR,BUILDINGID\n");
  CHECK(load_dataset(dir / "empty.csv", d).empty());

  write_file(dir / "missing.csv", "WAP001,WAP002,WAP003,LONGITUDE,FLOOR,BUILDINGID\n");
  try {
    load_dataset(dir / "missing.csv", d);
    FAIL("expected a descriptor error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("LATITUDE") != std::string::npos);
  }

  write_file(dir / "bad.csv",
             "WAP001,WAP002,WAP003,LONGITUDE,LATITUDE,FLOOR,BUILDINGID\n"
             "-50,100,-104,1.5,2.5,0,1\n"
             "-50,abc,-104,1.5,2.5,0,1\n");
  try {
    load_dataset(dir / "bad.csv", d);
    FAIL("expected a parse error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }

  auto single = d;
  single.building_column = "";
  write_file(dir / "single.csv", "WAP001,WAP002,WAP003,LONGITUDE,LATITUDE,FLOOR\n1,2,3,0,0,0\n");
  CHECK_THROWS_AS(load_dataset(dir / "single.csv", d), DataError);
  auto s = load_dataset(dir / "single.csv", single);
  REQUIRE(s.size() == 1);
  CHECK(s[0].building == 0);
}

TEST_CASE("normalize_rssi") {
  auto d = DatasetDescriptor::uji();
  std::vector<int> raw(520, 100);
  raw[0] = -104;
  raw[1] = 0;
  raw[2] = -50;
  auto x = normalize_rssi(raw, d);
  CHECK(x[0] == doctest::Approx(1.0 / 105.0).epsilon(1e-6));
  CHECK(x[1] == 1.0f);
  CHECK(x[3] == 0.0f);
  CHECK(x[2] == doctest::Approx(55.0 / 105.0).epsilon(1e-6));

  raw[4] = -105;
  CHECK_THROWS_AS(normalize_rssi(raw, d), DataError);
  raw[4] = 5;
  CHECK_THROWS_AS(normalize_rssi(raw, d), DataError);
  CHECK_THROWS_AS(normalize_rssi(std::vector<int>(3, 0), d), DataError);

  // Monotone over the whole valid range, everything in [0, 1].
  std::vector<int> ramp(520, 100);
  for (int v = -104, i = 0; v <= 0; ++v, ++i) ramp[static_cast<size_t>(i)] = v;
  auto y = normalize_rssi(ramp, d);
  for (size_t i = 0; i + 1 < 105; ++i) CHECK(y[i] < y[i + 1]);
  for (float v : y) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("coordinate scaler") {
  const std::vector<Coord> two{{0, 0}, {2, 2}};
  auto s = fit_coord_scaler(two);
  CHECK(s.mu() == Coord{1, 1});
  CHECK(s.sigma() == Coord{1, 1});
  CHECK(s.transform({1, 1}) == Coord{0, 0});

  const std::vector<Coord> constant{{5, 5}, {5, 5}, {5, 5}};
  CHECK_THROWS_AS(fit_coord_scaler(constant), DataError);

  CoordScaler manual({10, 20}, {3, 4});
  CHECK(manual.inverse_transform({2, -1}) == Coord{16, 16});

  CHECK_THROWS_AS(CoordScaler().transform({0, 0}), DataError);

  Rng rng(3);
  std::vector<Coord> coords;
  for (int i = 0; i < 2000; ++i) {
    coords.push_back({-7700.0 + 400.0 * uniform_unit(rng), 4864700.0 + 300.0 * uniform_unit(rng)});
  }
  auto fitted = fit_coord_scaler(coords);
  double worst = 0.0;
  for (const auto& c : coords) {
    auto back = fitted.inverse_transform(fitted.transform(c));
    worst = std::max({worst, std::abs(back[0] - c[0]), std::abs(back[1] - c[1])});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("floor offset and encoder") {
  const std::vector<int> plain{0, 1, 2};
  CHECK(offset_floors(plain).floors == plain);
  CHECK(offset_floors(plain).offset == 0);
  const std::vector<int> neg{-2, -2, 0};
  CHECK(offset_floors(neg).floors == std::vector<int>{0, 0, 2});
  CHECK(offset_floors(neg).offset == 2);
  std::vector<int> uts;
  for (int f = -3; f <= 13; ++f) uts.push_back(f);
  auto shifted = offset_floors(uts);
  CHECK(shifted.floors.front() == 0);
  CHECK(shifted.floors.back() == 16);

  const std::vector<int> seen{0, 4, 2, 4};
  auto enc = FloorEncoder::fit(seen);
  CHECK(enc.num_classes() == 3);
  CHECK(enc.encode(4) == 2);
  CHECK(enc.decode(1) == 2);
  CHECK_THROWS_AS(enc.encode(3), DataError);
}

TEST_CASE("validation split by sampling point") {
  SUBCASE("ten points, one held out") {
    std::vector<int32_t> spids;
    for (int32_t p = 0; p < 10; ++p) {
      for (int r = 0; r < 3 + p; ++r) spids.push_back(p);
    }
    auto split = split_validation(spids, 0.10, 42);
    REQUIRE(split.held_out_points.size() == 1);
    const int32_t held = split.held_out_points[0];
    CHECK(split.validation.size() == static_cast<size_t>(3 + held));
    for (size_t i : split.validation) CHECK(spids[i] == held);
    CHECK(split.train.size() + split.validation.size() == spids.size());

    auto again = split_validation(spids, 0.10, 42);
    CHECK(again.train == split.train);
    CHECK(again.validation == split.validation);
  }
  SUBCASE("rounding half up and no separated points") {
    Rng rng(5);
    std::vector<int32_t> spids;
    for (int i = 0; i < 9000; ++i) spids.push_back(static_cast<int32_t>(uniform_index(rng, 933)));
    std::set<int32_t> distinct(spids.begin(), spids.end());
    REQUIRE(distinct.size() == 933);
    auto split = split_validation(spids, 0.10, 7);
    CHECK(split.held_out_points.size() == 93);
    std::set<int32_t> train_points, val_points;
    for (size_t i : split.train) train_points.insert(spids[i]);
    for (size_t i : split.validation) val_points.insert(spids[i]);
    for (int32_t p : val_points) CHECK(train_points.count(p) == 0);
    CHECK(val_points.size() == 93);
  }
  SUBCASE("errors") {
    const std::vector<int32_t> few{0, 1, 2};
    CHECK_THROWS_AS(split_validation(few, 0.10, 1), DataError);
    CHECK_THROWS_AS(split_validation(few, 0.0, 1), DataError);
    const std::vector<int32_t> unassigned{0, -1};
    CHECK_THROWS_AS(split_validation(unassigned, 0.5, 1), DataError);
  }
}
