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

#include "fingerloc/synthetic.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fingerloc/error.h"
#include "fingerloc/rng.h"

namespace fingerloc::synthetic {

namespace {

struct AccessPoint {
  double x = 0.0;
  double y = 0.0;
  int building = 0;
  int floor = 0;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  int building = 0;
  int floor = 0;
};

// Box-Muller on our own uniform source, so the data do not depend on the
// standard library's normal_distribution.
double gaussian(Rng& rng) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double building_x0(const Spec& s, int b) {
  return static_cast<double>(b) * (s.building_width + s.building_gap);
}

Position random_position(const Spec& s, Rng& rng) {
  Position p;
  p.building = static_cast<int>(uniform_index(rng, s.buildings));
  p.floor = static_cast<int>(uniform_index(rng, s.floors));
  p.x = building_x0(s, p.building) + s.building_width * uniform_unit(rng);
  p.y = s.building_depth * uniform_unit(rng);
  return p;
}

dataset::RawRecord measure(const Spec& s, const dataset::DatasetDescriptor& d,
                           const std::vector<AccessPoint>& aps, const Position& p, Rng& rng) {
  dataset::RawRecord r;
  r.rssi.reserve(aps.size());
  for (const auto& ap : aps) {
    const double floor_h = 3.5 * std::abs(ap.floor - p.floor);
    const double dist = std::max(
        1.0, std::sqrt((ap.x - p.x) * (ap.x - p.x) + (ap.y - p.y) * (ap.y - p.y) + floor_h * floor_h));
    double v = s.tx_power - 10.0 * s.path_loss_exponent * std::log10(dist) -
               s.floor_loss * std::abs(ap.floor - p.floor) + s.noise_db * gaussian(rng);
    if (ap.building != p.building) v -= s.wall_loss;
    const int q = static_cast<int>(std::lround(v));
    r.rssi.push_back(q < d.rssi_min ? d.missing_sentinel : std::min(q, d.rssi_max));
  }
  // Round to centimeters so labels survive a CSV round trip unchanged.
  r.longitude = std::round((s.origin_longitude + p.x) * 100.0) / 100.0;
  r.latitude = std::round((s.origin_latitude + p.y) * 100.0) / 100.0;
  r.floor = p.floor + s.floor_base;
  r.building = p.building;
  return r;
}

}  // namespace

Dataset generate(const Spec& spec) {
  if (spec.ap_count == 0 || spec.buildings == 0 || spec.floors == 0 ||
      spec.points_per_floor == 0 || spec.records_per_point == 0) {
    throw ConfigError("synthetic spec: counts must be positive");
  }
  Rng rng(spec.seed);
  Dataset out;
  auto& d = out.descriptor;
  d.name = "synthetic";
  d.ap_count = spec.ap_count;
  d.missing_sentinel = 100;
  d.rssi_min = -104;
  d.rssi_max = 0;
  if (spec.buildings == 1) d.building_column = "";
  d.train_file = "train.csv";
  d.test_file = "test.csv";

  std::vector<AccessPoint> aps(spec.ap_count);
  for (size_t i = 0; i < aps.size(); ++i) {
    auto& ap = aps[i];
    ap.building = static_cast<int>(i % spec.buildings);
    ap.floor = static_cast<int>((i / spec.buildings) % spec.floors);
    ap.x = building_x0(spec, ap.building) + spec.building_width * uniform_unit(rng);
    ap.y = spec.building_depth * uniform_unit(rng);
  }

  for (size_t b = 0; b < spec.buildings; ++b) {
    for (size_t f = 0; f < spec.floors; ++f) {
      for (size_t k = 0; k < spec.points_per_floor; ++k) {
        Position p;
        p.building = static_cast<int>(b);
        p.floor = static_cast<int>(f);
        p.x = building_x0(spec, p.building) + spec.building_width * uniform_unit(rng);
        p.y = spec.building_depth * uniform_unit(rng);
        for (size_t r = 0; r < spec.records_per_point; ++r) {
          out.train.push_back(measure(spec, d, aps, p, rng));
        }
      }
    }
  }
  for (size_t t = 0; t < spec.test_records; ++t) {
    out.test.push_back(measure(spec, d, aps, random_position(spec, rng), rng));
  }
  return out;
}

}  // namespace fingerloc::synthetic
