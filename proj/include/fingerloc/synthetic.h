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

#ifndef FINGERLOC_SYNTHETIC_H_
#define FINGERLOC_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "fingerloc/dataset.h"

// Log-distance path-loss simulator producing UJI-shaped fingerprint data:
// several buildings side by side, several floors each, access points
// scattered through every floor, survey records repeated at fixed
// sampling points, and test records at fresh random positions.
namespace fingerloc::synthetic {

struct Spec {
  size_t ap_count = 48;
  size_t buildings = 2;
  size_t floors = 3;
  size_t points_per_floor = 24;
  size_t records_per_point = 4;
  size_t test_records = 200;
  double building_width = 60.0;   // meters along longitude
  double building_depth = 40.0;   // meters along latitude
  double building_gap = 30.0;
  double origin_longitude = -7600.0;
  double origin_latitude = 4864800.0;
  double tx_power = -30.0;        // dBm at 1 m
  double path_loss_exponent = 2.6;
  double floor_loss = 14.0;       // dB per floor crossed
  double wall_loss = 25.0;        // dB when the AP is in another building
  double noise_db = 2.5;
  int floor_base = 0;             // label of the lowest floor (negative for UTS-like data)
  uint64_t seed = 1;
};

struct Dataset {
  dataset::DatasetDescriptor descriptor;
  std::vector<dataset::RawRecord> train;
  std::vector<dataset::RawRecord> test;
};

Dataset generate(const Spec& spec);

}  // namespace fingerloc::synthetic

#endif  // FINGERLOC_SYNTHETIC_H_
