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

#include "fingerloc/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fingerloc/error.h"
#include "fingerloc/io.h"

namespace fingerloc::evaluation {

LocationError location_error(std::span<const Coord> pred, std::span<const Coord> truth) {
  if (pred.size() != truth.size()) {
    throw ShapeError("location error: " + std::to_string(pred.size()) + " predictions for " +
                     std::to_string(truth.size()) + " records");
  }
  LocationError out;
  out.errors.resize(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    out.errors[i] = std::hypot(pred[i][0] - truth[i][0], pred[i][1] - truth[i][1]);
  }
  std::sort(out.errors.begin(), out.errors.end());
  double sum = 0.0;
  for (double e : out.errors) sum += e;
  out.mle = out.errors.empty() ? 0.0 : sum / static_cast<double>(out.errors.size());
  return out;
}

LocationError mean_location_error(std::span<const Coord> pred_std, std::span<const Coord> true_std,
                                  const dataset::CoordScaler& scaler) {
  if (pred_std.size() != true_std.size()) {
    throw ShapeError("location error: prediction and truth lengths differ");
  }
  std::vector<Coord> p(pred_std.size());
  std::vector<Coord> t(true_std.size());
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = scaler.inverse_transform(pred_std[i]);
    t[i] = scaler.inverse_transform(true_std[i]);
  }
  return location_error(p, t);
}

template <typename T>
std::vector<int32_t> argmax_rows(const numeric::Tensor<T>& logits) {
  std::vector<int32_t> out(logits.rows());
  for (size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    out[r] = static_cast<int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(std::span<const int32_t> predicted, std::span<const int32_t> labels) {
  if (predicted.size() != labels.size()) throw ShapeError("accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  size_t hit = 0;
  for (size_t i = 0; i < labels.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

template <typename T>
double classification_accuracy(const numeric::Tensor<T>& logits, std::span<const int32_t> labels) {
  for (int32_t l : labels) {
    if (l < 0 || static_cast<size_t>(l) >= logits.cols()) {
      throw DataError("label " + std::to_string(l) + " out of range");
    }
  }
  return accuracy(argmax_rows(logits), labels);
}

Confusion confusion_matrix(std::span<const int32_t> predicted, std::span<const int32_t> labels,
                           size_t num_classes) {
  if (predicted.size() != labels.size()) throw ShapeError("confusion: length mismatch");
  Confusion c(num_classes, std::vector<int64_t>(num_classes, 0));
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<size_t>(labels[i]) >= num_classes || predicted[i] < 0 ||
        static_cast<size_t>(predicted[i]) >= num_classes) {
      throw DataError("confusion: class index out of range at record " + std::to_string(i));
    }
    ++c[static_cast<size_t>(labels[i])][static_cast<size_t>(predicted[i])];
  }
  return c;
}

template <typename T>
Confusion confusion_matrix(const numeric::Tensor<T>& logits, std::span<const int32_t> labels,
                           size_t num_classes) {
  return confusion_matrix(argmax_rows(logits), labels, num_classes);
}

std::vector<std::pair<double, double>> cdf_points(std::span<const double> errors) {
  if (errors.empty()) throw DataError("cdf of an empty error list");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    out[i] = {sorted[i], static_cast<double>(i + 1) / n};
  }
  return out;
}

std::string MetricsReport::summary() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  const char* sep = "";
  if (building_accuracy) {
    os << "building=" << 100.0 * *building_accuracy << "%";
    sep = " ";
  }
  if (floor_accuracy) {
    os << sep << "floor=" << 100.0 * *floor_accuracy << "%";
    sep = " ";
  }
  if (mle_meters) {
    os.precision(3);
    os << sep << "mle=" << *mle_meters << " m";
  }
  return os.str();
}

MetricsReport make_report(std::span<const int32_t> pred_building,
                          std::span<const int32_t> true_building,
                          std::span<const int32_t> pred_floor, std::span<const int32_t> true_floor,
                          size_t num_floor_classes, std::span<const Coord> pred_coords,
                          std::span<const Coord> true_coords) {
  MetricsReport r;
  if (!true_building.empty()) {
    r.records = true_building.size();
    r.building_accuracy = accuracy(pred_building, true_building);
  }
  if (!true_floor.empty()) {
    r.records = true_floor.size();
    r.floor_accuracy = accuracy(pred_floor, true_floor);
    r.floor_confusion = confusion_matrix(pred_floor, true_floor, num_floor_classes);
  }
  if (!true_coords.empty()) {
    r.records = true_coords.size();
    LocationError e = location_error(pred_coords, true_coords);
    r.mle_meters = e.mle;
    r.errors = std::move(e.errors);
  }
  return r;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_metrics(const std::filesystem::path& path, const MetricsReport& report,
                   const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out = open_out(path);
  out << "records=" << report.records << '\n';
  if (report.building_accuracy) out << "building_accuracy=" << io::exact(*report.building_accuracy) << '\n';
  if (report.floor_accuracy) out << "floor_accuracy=" << io::exact(*report.floor_accuracy) << '\n';
  if (report.mle_meters) out << "mle_m=" << io::exact(*report.mle_meters) << '\n';
  for (const auto& [k, v] : extra) out << k << '=' << v << '\n';
}

void write_confusion_csv(const std::filesystem::path& path, const Confusion& confusion) {
  std::ofstream out = open_out(path);
  out << "truth";
  for (size_t p = 0; p < confusion.size(); ++p) out << ",pred" << p;
  out << '\n';
  for (size_t t = 0; t < confusion.size(); ++t) {
    out << t;
    for (int64_t v : confusion[t]) out << ',' << v;
    out << '\n';
  }
}

void write_cdf_csv(const std::filesystem::path& path, std::span<const double> errors) {
  std::ofstream out = open_out(path);
  out << "error_m,fraction\n";
  if (errors.empty()) return;
  for (const auto& [e, f] : cdf_points(errors)) out << io::exact(e) << ',' << io::exact(f) << '\n';
}

void write_report(const std::filesystem::path& dir, const std::string& prefix,
                  const MetricsReport& report,
                  const std::vector<std::pair<std::string, std::string>>& extra) {
  std::filesystem::create_directories(dir);
  write_metrics(dir / (prefix + "_metrics.txt"), report, extra);
  if (!report.floor_confusion.empty()) {
    write_confusion_csv(dir / (prefix + "_floor_confusion.csv"), report.floor_confusion);
  }
  if (!report.errors.empty()) write_cdf_csv(dir / (prefix + "_cdf.csv"), report.errors);
}

template std::vector<int32_t> argmax_rows<float>(const numeric::Tensor<float>&);
template std::vector<int32_t> argmax_rows<double>(const numeric::Tensor<double>&);
template double classification_accuracy<float>(const numeric::Tensor<float>&,
                                               std::span<const int32_t>);
template double classification_accuracy<double>(const numeric::Tensor<double>&,
                                                std::span<const int32_t>);
template Confusion confusion_matrix<float>(const numeric::Tensor<float>&, std::span<const int32_t>,
                                           size_t);
template Confusion confusion_matrix<double>(const numeric::Tensor<double>&,
                                            std::span<const int32_t>, size_t);

}  // namespace fingerloc::evaluation
