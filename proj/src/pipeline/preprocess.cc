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

#include <algorithm>
#include <sstream>

#include "fingerloc/error.h"
#include "fingerloc/io.h"
#include "fingerloc/pipeline.h"
#include "fingerloc/rng.h"

namespace fingerloc::pipeline {

namespace fs = std::filesystem;
using dataset::Coord;
using dataset::RecordSet;

namespace {

constexpr uint64_t kSplitStream = 0x5b1;

std::string join_ints(std::span<const int> v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out.empty() ? "-" : out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  if (s == "-") return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> flatten(std::span<const Coord> c) {
  std::vector<double> out;
  out.reserve(2 * c.size());
  for (const Coord& x : c) {
    out.push_back(x[0]);
    out.push_back(x[1]);
  }
  return out;
}

std::vector<Coord> unflatten(const std::vector<double>& v) {
  std::vector<Coord> out(v.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) out[i] = {v[2 * i], v[2 * i + 1]};
  return out;
}

void write_records(io::BlobWriter& w, io::Manifest& m, const std::string& prefix,
                   const RecordSet& r) {
  const size_t n = r.size();
  m.add_section(w.write<float>(prefix + ".features", {n, r.features.cols()},
                               std::span<const float>(r.features.values())));
  m.add_section(w.write<double>(prefix + ".coords", {n, 2}, flatten(r.coords)));
  m.add_section(w.write<double>(prefix + ".coords_std", {n, 2}, flatten(r.coords_std)));
  m.add_section(w.write<int32_t>(prefix + ".floor", {n}, r.floor));
  m.add_section(w.write<int32_t>(prefix + ".building", {n}, r.building));
  m.add_section(w.write<int32_t>(prefix + ".spid", {n}, r.spid));
}

RecordSet read_records(const fs::path& dir, const io::Manifest& m, const std::string& prefix) {
  RecordSet r;
  const io::Section& fs_ = m.section(prefix + ".features");
  if (fs_.shape.size() != 2) throw DataError("preprocessed cache: bad feature shape");
  r.features = numeric::Tensor<float>::from(fs_.shape, io::read_section<float>(dir, fs_));
  r.coords = unflatten(io::read_section<double>(dir, m.section(prefix + ".coords")));
  r.coords_std = unflatten(io::read_section<double>(dir, m.section(prefix + ".coords_std")));
  r.floor = io::read_section<int32_t>(dir, m.section(prefix + ".floor"));
  r.building = io::read_section<int32_t>(dir, m.section(prefix + ".building"));
  r.spid = io::read_section<int32_t>(dir, m.section(prefix + ".spid"));
  const size_t n = r.features.rows();
  if (r.coords.size() != n || r.coords_std.size() != n || r.floor.size() != n ||
      r.building.size() != n || r.spid.size() != n) {
    throw DataError("preprocessed cache: column lengths of '" + prefix + "' disagree");
  }
  return r;
}

}  // namespace

RecordSet encode_records(std::span<const dataset::RawRecord> raw,
                         const dataset::DatasetDescriptor& d, int floor_offset,
                         const dataset::FloorEncoder& floors, const dataset::CoordScaler& scaler) {
  RecordSet r;
  r.features = dataset::FeatureMatrix(raw.size(), d.ap_count);
  for (size_t i = 0; i < raw.size(); ++i) {
    const std::vector<float> f = dataset::normalize_rssi(raw[i].rssi, d);
    std::copy(f.begin(), f.end(), r.features.row(i).begin());
    const Coord c{raw[i].longitude, raw[i].latitude};
    r.coords.push_back(c);
    r.coords_std.push_back(scaler.transform(c));
    r.floor.push_back(floors.encode(raw[i].floor + floor_offset));
    r.building.push_back(raw[i].building);
    r.spid.push_back(-1);
  }
  return r;
}

Preprocessed preprocess(const dataset::DatasetDescriptor& d,
                        std::span<const dataset::RawRecord> train_raw, double validation_ratio,
                        uint64_t seed) {
  d.validate();
  if (train_raw.empty()) throw DataError("training data contain no records");
  Preprocessed p;
  p.descriptor = d;

  std::vector<int> floors;
  floors.reserve(train_raw.size());
  int max_building = 0;
  for (const auto& r : train_raw) {
    floors.push_back(r.floor);
    if (r.building < 0) throw DataError("negative building label " + std::to_string(r.building));
    max_building = std::max(max_building, r.building);
  }
  const dataset::FloorOffset off = dataset::offset_floors(floors);
  p.floor_offset = d.floor_offset != 0 ? d.floor_offset : off.offset;
  for (int& f : floors) f += p.floor_offset;
  p.floors = dataset::FloorEncoder::fit(floors);
  p.num_buildings = static_cast<size_t>(max_building) + 1;

  // Features and sampling points over the whole training file.
  dataset::FeatureMatrix features(train_raw.size(), d.ap_count);
  std::vector<graph::PositionLabel> positions;
  positions.reserve(train_raw.size());
  for (size_t i = 0; i < train_raw.size(); ++i) {
    const auto f = dataset::normalize_rssi(train_raw[i].rssi, d);
    std::copy(f.begin(), f.end(), features.row(i).begin());
    positions.push_back({train_raw[i].longitude, train_raw[i].latitude, train_raw[i].floor,
                         train_raw[i].building});
  }
  graph::Aggregation agg = graph::aggregate_sampling_points(features, positions);
  p.point_labels = std::move(agg.labels);

  const dataset::Split split =
      dataset::split_validation(agg.record_spids, validation_ratio, derive_seed(seed, {kSplitStream}));
  std::vector<Coord> train_coords;
  train_coords.reserve(split.train.size());
  for (size_t i : split.train) train_coords.push_back({train_raw[i].longitude, train_raw[i].latitude});
  p.scaler = dataset::fit_coord_scaler(train_coords);

  RecordSet all;
  all.features = std::move(features);
  for (size_t i = 0; i < train_raw.size(); ++i) {
    const Coord c{train_raw[i].longitude, train_raw[i].latitude};
    all.coords.push_back(c);
    all.coords_std.push_back(p.scaler.transform(c));
    all.floor.push_back(p.floors.encode(train_raw[i].floor + p.floor_offset));
    all.building.push_back(train_raw[i].building);
    all.spid.push_back(agg.record_spids[i]);
  }
  p.train = all.subset(split.train);
  p.validation = all.subset(split.validation);
  return p;
}

Preprocessed preprocess(const PipelineConfig& config) {
  config.validate();
  const auto raw = dataset::load_dataset(config.data_dir / config.descriptor.train_file,
                                         config.descriptor);
  return preprocess(config.descriptor, raw, config.validation_ratio, config.seed);
}

void save_preprocessed(const Preprocessed& p, const fs::path& dir) {
  fs::create_directories(dir);
  p.descriptor.save(dir / "descriptor.ini");
  io::Manifest m("preprocessed");
  m.set("floor_offset", std::to_string(p.floor_offset));
  m.set("floor_labels", join_ints(p.floors.labels()));
  m.set("num_buildings", std::to_string(p.num_buildings));
  m.set("scaler_mu", io::exact(p.scaler.mu()[0]) + "," + io::exact(p.scaler.mu()[1]));
  m.set("scaler_sigma", io::exact(p.scaler.sigma()[0]) + "," + io::exact(p.scaler.sigma()[1]));
  io::BlobWriter w(dir / "preprocessed.bin", "preprocessed.bin");
  write_records(w, m, "train", p.train);
  write_records(w, m, "validation", p.validation);
  std::vector<double> point_xy;
  std::vector<int32_t> point_fb;
  for (const auto& l : p.point_labels) {
    point_xy.push_back(l.longitude);
    point_xy.push_back(l.latitude);
    point_fb.push_back(l.floor);
    point_fb.push_back(l.building);
  }
  const size_t np = p.point_labels.size();
  m.add_section(w.write<double>("points.coords", {np, 2}, point_xy));
  m.add_section(w.write<int32_t>("points.floor_building", {np, 2}, point_fb));
  w.close();
  m.save(dir / "preprocessed.manifest");
}

Preprocessed load_preprocessed(const fs::path& dir) {
  const io::Manifest m = io::Manifest::load(dir / "preprocessed.manifest", "preprocessed");
  Preprocessed p;
  p.descriptor = dataset::DatasetDescriptor::load(dir / "descriptor.ini");
  auto pair = [&](const std::string& key) {
    const std::string& v = m.get(key);
    const auto comma = v.find(',');
    if (comma == std::string::npos) throw DataError("preprocessed cache: malformed " + key);
    return Coord{std::stod(v.substr(0, comma)), std::stod(v.substr(comma + 1))};
  };
  try {
    p.floor_offset = std::stoi(m.get("floor_offset"));
    p.floors = dataset::FloorEncoder(split_ints(m.get("floor_labels")));
    p.num_buildings = std::stoul(m.get("num_buildings"));
    p.scaler = dataset::CoordScaler(pair("scaler_mu"), pair("scaler_sigma"));
  } catch (const std::logic_error& e) {
    throw DataError(std::string("preprocessed cache: malformed field: ") + e.what());
  }
  p.train = read_records(dir, m, "train");
  p.validation = read_records(dir, m, "validation");
  const auto xy = io::read_section<double>(dir, m.section("points.coords"));
  const auto fb = io::read_section<int32_t>(dir, m.section("points.floor_building"));
  if (xy.size() != fb.size()) throw DataError("preprocessed cache: point sections disagree");
  for (size_t i = 0; i < xy.size() / 2; ++i) {
    p.point_labels.push_back({xy[2 * i], xy[2 * i + 1], fb[2 * i], fb[2 * i + 1]});
  }
  return p;
}

}  // namespace fingerloc::pipeline
