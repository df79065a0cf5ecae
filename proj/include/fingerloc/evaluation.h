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

#ifndef FINGERLOC_EVALUATION_H_
#define FINGERLOC_EVALUATION_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fingerloc/dataset.h"
#include "fingerloc/numeric/tensor.h"

namespace fingerloc::evaluation {

using dataset::Coord;

struct LocationError {
  double mle = 0.0;
  std::vector<double> errors;  // ascending, meters
};

// Euclidean errors between coordinates already in meters. The mean is
// taken over the sorted list so every caller gets the same bits.
LocationError location_error(std::span<const Coord> pred, std::span<const Coord> truth);

// Inverse-transforms both sides with the scaler, then as above.
LocationError mean_location_error(std::span<const Coord> pred_std, std::span<const Coord> true_std,
                                  const dataset::CoordScaler& scaler);

// Row-wise argmax; ties go to the lowest index.
template <typename T>
std::vector<int32_t> argmax_rows(const numeric::Tensor<T>& logits);

double accuracy(std::span<const int32_t> predicted, std::span<const int32_t> labels);

template <typename T>
double classification_accuracy(const numeric::Tensor<T>& logits, std::span<const int32_t> labels);

using Confusion = std::vector<std::vector<int64_t>>;  // [truth][predicted]

Confusion confusion_matrix(std::span<const int32_t> predicted, std::span<const int32_t> labels,
                           size_t num_classes);

template <typename T>
Confusion confusion_matrix(const numeric::Tensor<T>& logits, std::span<const int32_t> labels,
                           size_t num_classes);

// (error, i / n) for the i-th smallest error, i = 1..n.
std::vector<std::pair<double, double>> cdf_points(std::span<const double> errors);

struct MetricsReport {
  size_t records = 0;
  std::optional<double> building_accuracy;
  std::optional<double> floor_accuracy;
  std::optional<double> mle_meters;
  std::vector<double> errors;
  Confusion floor_confusion;

  // "building=…% floor=…% mle=… m"
  std::string summary() const;
};

// Builds a report from predictions and truth. Any of the three parts may be
// skipped by passing empty spans.
MetricsReport make_report(std::span<const int32_t> pred_building,
                          std::span<const int32_t> true_building,
                          std::span<const int32_t> pred_floor, std::span<const int32_t> true_floor,
                          size_t num_floor_classes, std::span<const Coord> pred_coords,
                          std::span<const Coord> true_coords);

// Files: key=value metrics (exact doubles), confusion CSV ("truth,pred0,…"),
// CDF CSV ("error_m,fraction").
void write_metrics(const std::filesystem::path& path, const MetricsReport& report,
                   const std::vector<std::pair<std::string, std::string>>& extra = {});
void write_confusion_csv(const std::filesystem::path& path, const Confusion& confusion);
void write_cdf_csv(const std::filesystem::path& path, std::span<const double> errors);
void write_report(const std::filesystem::path& dir, const std::string& prefix,
                  const MetricsReport& report,
                  const std::vector<std::pair<std::string, std::string>>& extra = {});

}  // namespace fingerloc::evaluation

#endif  // FINGERLOC_EVALUATION_H_
