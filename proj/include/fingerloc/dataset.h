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

#ifndef FINGERLOC_DATASET_H_
#define FINGERLOC_DATASET_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fingerloc/numeric/tensor.h"

namespace fingerloc::dataset {

using Coord = std::array<double, 2>;  // (longitude, latitude)
using FeatureMatrix = numeric::Tensor<float>;

// Describes one CSV fingerprint dataset: AP columns, valid RSSI range and
// the names of the label columns.
struct DatasetDescriptor {
  std::string name = "custom";
  size_t ap_count = 0;
  int missing_sentinel = 100;
  int rssi_min = -104;  // X_min
  int rssi_max = 0;     // X_max
  int floor_offset = 0;
  std::string wap_prefix = "WAP";
  std::string longitude_column = "LONGITUDE";
  std::string latitude_column = "LATITUDE";
  std::string floor_column = "FLOOR";
  std::string building_column = "BUILDINGID";  // empty: single building, label 0
  std::string train_file;
  std::string test_file;

  // Lists every problem, empty when valid.
  std::vector<std::string> problems() const;
  void validate() const;

  static DatasetDescriptor uji();
  static DatasetDescriptor uts();

  // key=value text; see configs/*.descriptor for the documented schema.
  static DatasetDescriptor load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct RawRecord {
  std::vector<int> rssi;
  double longitude = 0.0;
  double latitude = 0.0;
  int floor = 0;
  int building = 0;
};

struct FingerprintRecord {
  std::vector<float> features;
  Coord coords_std{};
  int32_t floor = 0;
  int32_t building = 0;
  std::optional<int32_t> spid;
};

enum class LabelColumns { kRequired, kOptional };

// Reads a headed CSV. Unknown columns are ignored. With kOptional, absent
// label columns read as 0 (for unlabeled online input).
std::vector<RawRecord> load_dataset(const std::filesystem::path& path,
                                    const DatasetDescriptor& descriptor,
                                    LabelColumns labels = LabelColumns::kRequired);

// Writes records as a headed CSV that load_dataset reads back unchanged.
// WAP columns are numbered from 1 with three digits ("WAP001").
void write_dataset(const std::filesystem::path& path, std::span<const RawRecord> records,
                   const DatasetDescriptor& descriptor);

// Maps the sentinel to 0 and X to (X - (X_min - 1)) / (X_max - (X_min - 1)).
std::vector<float> normalize_rssi(std::span<const int> raw, const DatasetDescriptor& d);

class CoordScaler {
 public:
  CoordScaler() = default;
  CoordScaler(Coord mu, Coord sigma);

  const Coord& mu() const { return mu_; }
  const Coord& sigma() const { return sigma_; }
  bool fitted() const { return fitted_; }

  Coord transform(const Coord& c) const;
  Coord inverse_transform(const Coord& c_std) const;

 private:
  void require_fitted() const;

  Coord mu_{};
  Coord sigma_{};
  bool fitted_ = false;
};

// Per-axis mean and population standard deviation.
CoordScaler fit_coord_scaler(std::span<const Coord> train_coords);

struct FloorOffset {
  std::vector<int> floors;
  int offset = 0;  // amount added to every label
};
FloorOffset offset_floors(std::span<const int> floors);

// Dense class indices for the distinct floor labels seen in training.
class FloorEncoder {
 public:
  FloorEncoder() = default;
  explicit FloorEncoder(std::vector<int> labels);

  static FloorEncoder fit(std::span<const int> floors);

  size_t num_classes() const { return labels_.size(); }
  int32_t encode(int floor) const;
  int decode(int32_t cls) const { return labels_.at(static_cast<size_t>(cls)); }
  const std::vector<int>& labels() const { return labels_; }

 private:
  std::vector<int> labels_;
};

// Columnar storage of preprocessed records.
struct RecordSet {
  FeatureMatrix features;          // [n x ap_count], values in [0, 1]
  std::vector<Coord> coords;       // original units
  std::vector<Coord> coords_std;   // standardized
  std::vector<int32_t> floor;      // class index
  std::vector<int32_t> building;
  std::vector<int32_t> spid;       // -1 when the record has no sampling point

  size_t size() const { return coords.size(); }
  RecordSet subset(std::span<const size_t> rows) const;
  FingerprintRecord record(size_t i) const;
};

struct Split {
  std::vector<size_t> train;
  std::vector<size_t> validation;
  std::vector<int32_t> held_out_points;
};

// Holds out round-half-up(ratio * #points) whole sampling points.
Split split_validation(std::span<const int32_t> spids, double ratio, uint64_t seed);

}  // namespace fingerloc::dataset

#endif  // FINGERLOC_DATASET_H_
