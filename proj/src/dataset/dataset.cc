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

#include "fingerloc/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fingerloc/error.h"
#include "fingerloc/io.h"
#include "fingerloc/rng.h"

namespace fingerloc::dataset {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) || s[b] == '"')) ++b;
  while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                       : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_number(std::string_view cell, size_t row, const std::string& column) {
  std::string_view s = cell;
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("parse error at data row " + std::to_string(row) + ", column '" + column +
                    "': '" + std::string(cell) + "' is not a number");
  }
  return v;
}

int parse_integer(std::string_view cell, size_t row, const std::string& column) {
  const double v = parse_number(cell, row, column);
  if (v != std::floor(v)) {
    throw DataError("parse error at data row " + std::to_string(row) + ", column '" + column +
                    "': expected an integer, got '" + std::string(cell) + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::string> DatasetDescriptor::problems() const {
  std::vector<std::string> out;
  if (ap_count == 0) out.push_back("ap_count must be positive");
  if (rssi_min >= rssi_max) {
    out.push_back("rssi_min (" + std::to_string(rssi_min) + ") must be below rssi_max (" +
                  std::to_string(rssi_max) + ")");
  }
  if (missing_sentinel >= rssi_min && missing_sentinel <= rssi_max) {
    out.push_back("missing_sentinel " + std::to_string(missing_sentinel) +
                  " lies inside the valid range [" + std::to_string(rssi_min) + ", " +
                  std::to_string(rssi_max) + "]");
  }
  if (wap_prefix.empty()) out.push_back("wap_prefix must not be empty");
  if (longitude_column.empty()) out.push_back("longitude_column must not be empty");
  if (latitude_column.empty()) out.push_back("latitude_column must not be empty");
  if (floor_column.empty()) out.push_back("floor_column must not be empty");
  return out;
}

void DatasetDescriptor::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid dataset descriptor '" + name + "':";
  for (const auto& s : p) msg += "\n  - " + s;
  throw ConfigError(msg);
}

DatasetDescriptor DatasetDescriptor::uji() {
  DatasetDescriptor d;
  d.name = "uji";
  d.ap_count = 520;
  d.missing_sentinel = 100;
  d.rssi_min = -104;
  d.rssi_max = 0;
  d.train_file = "trainingData.csv";
  d.test_file = "validationData.csv";
  return d;
}

DatasetDescriptor DatasetDescriptor::uts() {
  DatasetDescriptor d;
  d.name = "uts";
  d.ap_count = 589;
  d.missing_sentinel = 100;
  d.rssi_min = -110;
  d.rssi_max = 0;
  d.longitude_column = "Pos_x";
  d.latitude_column = "Pos_y";
  d.floor_column = "Floor_ID";
  d.building_column = "";
  d.train_file = "UTS_training.csv";
  d.test_file = "UTS_test.csv";
  return d;
}

DatasetDescriptor DatasetDescriptor::load(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read descriptor " + path.string() + ": " + e.message());
  }
  DatasetDescriptor d;
  d.building_column.clear();
  std::vector<std::string> errors;
  auto get_int = [&](const char* key, int& out, bool required) {
    auto v = tree.get_optional<std::string>(key);
    if (!v) {
      if (required) errors.push_back(std::string("missing key '") + key + "'");
      return;
    }
    try {
      size_t pos = 0;
      out = std::stoi(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument(*v);
    } catch (const std::exception&) {
      errors.push_back(std::string("key '") + key + "' is not an integer: " + *v);
    }
  };
  int ap = 0;
  get_int("ap_count", ap, true);
  d.ap_count = ap > 0 ? static_cast<size_t>(ap) : 0;
  get_int("missing_sentinel", d.missing_sentinel, true);
  get_int("rssi_min", d.rssi_min, true);
  get_int("rssi_max", d.rssi_max, true);
  get_int("floor_offset", d.floor_offset, false);
  d.name = tree.get<std::string>("name", "custom");
  d.wap_prefix = tree.get<std::string>("wap_prefix", "WAP");
  d.longitude_column = tree.get<std::string>("longitude_column", "");
  d.latitude_column = tree.get<std::string>("latitude_column", "");
  d.floor_column = tree.get<std::string>("floor_column", "");
  d.building_column = tree.get<std::string>("building_column", "");
  d.train_file = tree.get<std::string>("train_file", "");
  d.test_file = tree.get<std::string>("test_file", "");
  for (const auto& p : d.problems()) errors.push_back(p);
  if (!errors.empty()) {
    std::string msg = "invalid dataset descriptor " + path.string() + ":";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return d;
}

void DatasetDescriptor::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "name = " << name << '\n'
      << "ap_count = " << ap_count << '\n'
      << "missing_sentinel = " << missing_sentinel << '\n'
      << "rssi_min = " << rssi_min << '\n'
      << "rssi_max = " << rssi_max << '\n'
      << "floor_offset = " << floor_offset << '\n'
      << "wap_prefix = " << wap_prefix << '\n'
      << "longitude_column = " << longitude_column << '\n'
      << "latitude_column = " << latitude_column << '\n'
      << "floor_column = " << floor_column << '\n'
      << "building_column = " << building_column << '\n'
      << "train_file = " << train_file << '\n'
      << "test_file = " << test_file << '\n';
}

std::vector<RawRecord> load_dataset(const std::filesystem::path& path,
                                    const DatasetDescriptor& descriptor, LabelColumns labels) {
  descriptor.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset file " + path.string() + " is empty");

  const auto header = split_commas(line);
  std::map<std::string, size_t> index;
  std::vector<size_t> wap_cols;
  for (size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    index[name] = i;
    if (name.rfind(descriptor.wap_prefix, 0) == 0) wap_cols.push_back(i);
  }
  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw DataError("descriptor error: column '" + name + "' not found in " + path.string());
    }
    return it->second;
  };
  auto label_column = [&](const std::string& name) -> std::optional<size_t> {
    if (name.empty()) return std::nullopt;
    if (labels == LabelColumns::kOptional && !index.contains(name)) return std::nullopt;
    return column(name);
  };
  const std::optional<size_t> lon = label_column(descriptor.longitude_column);
  const std::optional<size_t> lat = label_column(descriptor.latitude_column);
  const std::optional<size_t> flr = label_column(descriptor.floor_column);
  const std::optional<size_t> bld = label_column(descriptor.building_column);
  if (wap_cols.size() != descriptor.ap_count) {
    throw DataError("descriptor error: found " + std::to_string(wap_cols.size()) + " '" +
                    descriptor.wap_prefix + "' columns in " + path.string() + ", expected " +
                    std::to_string(descriptor.ap_count));
  }

  std::vector<RawRecord> records;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() < header.size()) {
      throw DataError("parse error at data row " + std::to_string(row) + ": " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    RawRecord r;
    r.rssi.reserve(wap_cols.size());
    for (size_t c : wap_cols) r.rssi.push_back(parse_integer(cells[c], row, trim(header[c])));
    if (lon) r.longitude = parse_number(cells[*lon], row, descriptor.longitude_column);
    if (lat) r.latitude = parse_number(cells[*lat], row, descriptor.latitude_column);
    if (flr) r.floor = parse_integer(cells[*flr], row, descriptor.floor_column);
    r.building = bld ? parse_integer(cells[*bld], row, descriptor.building_column) : 0;
    records.push_back(std::move(r));
  }
  return records;
}

void write_dataset(const std::filesystem::path& path, std::span<const RawRecord> records,
                   const DatasetDescriptor& descriptor) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (size_t i = 0; i < descriptor.ap_count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%s%03zu", descriptor.wap_prefix.c_str(), i + 1);
    out << name << ',';
  }
  out << descriptor.longitude_column << ',' << descriptor.latitude_column << ','
      << descriptor.floor_column;
  if (!descriptor.building_column.empty()) out << ',' << descriptor.building_column;
  out << '\n';
  for (const auto& r : records) {
    if (r.rssi.size() != descriptor.ap_count) {
      throw DataError("write_dataset: record has " + std::to_string(r.rssi.size()) +
                      " RSSI values, expected " + std::to_string(descriptor.ap_count));
    }
    for (int v : r.rssi) out << v << ',';
    out << io::exact(r.longitude) << ',' << io::exact(r.latitude) << ',' << r.floor;
    if (!descriptor.building_column.empty()) out << ',' << r.building;
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<float> normalize_rssi(std::span<const int> raw, const DatasetDescriptor& d) {
  if (raw.size() != d.ap_count) {
    throw DataError("normalize_rssi: " + std::to_string(raw.size()) + " values, expected " +
                    std::to_string(d.ap_count));
  }
  const double floor_value = static_cast<double>(d.rssi_min) - 1.0;
  const double span = static_cast<double>(d.rssi_max) - floor_value;
  std::vector<float> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    double x;
    if (raw[i] == d.missing_sentinel) {
      x = floor_value;
    } else if (raw[i] < d.rssi_min || raw[i] > d.rssi_max) {
      throw DataError("RSSI value " + std::to_string(raw[i]) + " at AP index " +
                      std::to_string(i) + " is outside the valid range [" +
                      std::to_string(d.rssi_min) + ", " + std::to_string(d.rssi_max) + "]");
    } else {
      x = raw[i];
    }
    out[i] = static_cast<float>((x - floor_value) / span);
  }
  return out;
}

CoordScaler::CoordScaler(Coord mu, Coord sigma) : mu_(mu), sigma_(sigma), fitted_(true) {
  if (!(sigma[0] > 0.0) || !(sigma[1] > 0.0)) {
    throw DataError("degenerate coordinate scaler: sigma must be positive on both axes");
  }
}

void CoordScaler::require_fitted() const {
  if (!fitted_) throw DataError("coordinate scaler used before fitting");
}

Coord CoordScaler::transform(const Coord& c) const {
  require_fitted();
  return {(c[0] - mu_[0]) / sigma_[0], (c[1] - mu_[1]) / sigma_[1]};
}

Coord CoordScaler::inverse_transform(const Coord& c_std) const {
  require_fitted();
  return {c_std[0] * sigma_[0] + mu_[0], c_std[1] * sigma_[1] + mu_[1]};
}

CoordScaler fit_coord_scaler(std::span<const Coord> train_coords) {
  if (train_coords.size() < 2) {
    throw DataError("degenerate coordinate scaler: need at least two coordinates");
  }
  Coord mu{};
  Coord sigma{};
  const double n = static_cast<double>(train_coords.size());
  for (int axis = 0; axis < 2; ++axis) {
    double s = 0.0;
    for (const Coord& c : train_coords) s += c[axis];
    mu[axis] = s / n;
    double ss = 0.0;
    for (const Coord& c : train_coords) ss += (c[axis] - mu[axis]) * (c[axis] - mu[axis]);
    sigma[axis] = std::sqrt(ss / n);
    if (!(sigma[axis] > 0.0)) {
      throw DataError(std::string("degenerate coordinate scaler: ") +
                      (axis == 0 ? "longitude" : "latitude") + " is constant");
    }
  }
  return CoordScaler(mu, sigma);
}

FloorOffset offset_floors(std::span<const int> floors) {
  FloorOffset r;
  r.floors.assign(floors.begin(), floors.end());
  if (floors.empty()) return r;
  const int lo = *std::min_element(floors.begin(), floors.end());
  if (lo < 0) {
    r.offset = -lo;
    for (int& f : r.floors) f += r.offset;
  }
  return r;
}

FloorEncoder::FloorEncoder(std::vector<int> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

FloorEncoder FloorEncoder::fit(std::span<const int> floors) {
  return FloorEncoder(std::vector<int>(floors.begin(), floors.end()));
}

int32_t FloorEncoder::encode(int floor) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), floor);
  if (it == labels_.end() || *it != floor) {
    throw DataError("floor label " + std::to_string(floor) + " was not seen in training data");
  }
  return static_cast<int32_t>(it - labels_.begin());
}

RecordSet RecordSet::subset(std::span<const size_t> rows) const {
  RecordSet out;
  out.features = numeric::gather_rows<float, size_t>(features, rows);
  for (size_t r : rows) {
    out.coords.push_back(coords[r]);
    out.coords_std.push_back(coords_std[r]);
    out.floor.push_back(floor[r]);
    out.building.push_back(building[r]);
    out.spid.push_back(spid[r]);
  }
  return out;
}

FingerprintRecord RecordSet::record(size_t i) const {
  FingerprintRecord r;
  auto row = features.row(i);
  r.features.assign(row.begin(), row.end());
  r.coords_std = coords_std[i];
  r.floor = floor[i];
  r.building = building[i];
  if (spid[i] >= 0) r.spid = spid[i];
  return r;
}

Split split_validation(std::span<const int32_t> spids, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DataError("split ratio must lie strictly between 0 and 1");
  }
  std::vector<int32_t> points;
  for (int32_t s : spids) {
    if (s < 0) throw DataError("split_validation: every record needs a sampling point ID");
    points.push_back(s);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const auto count =
      static_cast<size_t>(std::floor(ratio * static_cast<double>(points.size()) + 0.5));
  if (count == 0) {
    throw DataError("split error: ratio " + std::to_string(ratio) + " of " +
                    std::to_string(points.size()) + " sampling points selects none");
  }
  if (count >= points.size()) {
    throw DataError("split error: ratio selects every sampling point");
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` entries become the held-out set.
  for (size_t i = 0; i < count; ++i) {
    const size_t j = i + uniform_index(rng, points.size() - i);
    std::swap(points[i], points[j]);
  }
  Split split;
  split.held_out_points.assign(points.begin(), points.begin() + static_cast<long>(count));
  std::sort(split.held_out_points.begin(), split.held_out_points.end());
  for (size_t i = 0; i < spids.size(); ++i) {
    if (std::binary_search(split.held_out_points.begin(), split.held_out_points.end(),
                           spids[i])) {
      split.validation.push_back(i);
    } else {
      split.train.push_back(i);
    }
  }
  return split;
}

}  // namespace fingerloc::dataset
