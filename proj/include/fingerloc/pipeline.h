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

#ifndef FINGERLOC_PIPELINE_H_
#define FINGERLOC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fingerloc/dataset.h"
#include "fingerloc/evaluation.h"
#include "fingerloc/graph.h"
#include "fingerloc/models/networks.h"
#include "fingerloc/models/training.h"

namespace fingerloc::pipeline {

// Flat key=value configuration with one [section] per module. The schema
// is documented in configs/default.ini.
struct PipelineConfig {
  // [dataset]
  std::string preset = "uji";               // uji | uts | custom
  std::filesystem::path descriptor_file;    // required for custom
  std::filesystem::path data_dir;
  dataset::DatasetDescriptor descriptor = dataset::DatasetDescriptor::uji();
  // [split]
  double validation_ratio = 0.10;
  // [graph]
  graph::KnnConfig knn;
  double floor_scale = 2.0;
  // [model]
  size_t gnn_hidden = 256;
  std::vector<size_t> mlp_hidden{64, 32};
  double dropout = 0.5;
  double leaky_slope = 0.01;
  size_t coarse_layers = 2;
  size_t sfe_depth = 3;
  size_t hgnn_pos_layers = 1;
  size_t hgnn_rssi_layers = 2;
  // [train]
  double learning_rate = 0.0005;
  size_t batch_size = 256;
  size_t eval_chunk = 128;
  // [coarse]
  size_t regressor_epochs = 100;
  size_t classifier_epochs = 100;
  size_t patience = 10;
  double beta = 0.1;
  size_t phase2_epochs = 50;
  // [sfe]
  size_t sfe_epochs = 50;
  double l1_lambda = 1e-5;
  double sfe_floor_weight = 1.0;
  // [hgnn]
  size_t hgnn_epochs = 100;
  // [adapter]
  double adapter_fraction = 0.10;
  size_t adapter_epochs = 50;
  double adapter_learning_rate = 0.001;
  // [run]
  uint64_t seed = 1;

  static PipelineConfig defaults_for(const std::string& preset);

  // Reads the file over the defaults; relative paths resolve against the
  // file's directory. Every problem is collected into one ConfigError.
  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_text() const;
  // Text of one section, used for stage keys.
  std::string section_text(const std::string& section) const;

  std::vector<std::string> problems() const;
  void validate() const;
};

// Everything derived from the raw CSVs before any model is trained.
struct Preprocessed {
  dataset::DatasetDescriptor descriptor;
  int floor_offset = 0;
  dataset::FloorEncoder floors;
  size_t num_buildings = 1;
  dataset::CoordScaler scaler;
  std::vector<graph::PositionLabel> point_labels;  // indexed by SPID
  dataset::RecordSet train;
  dataset::RecordSet validation;
};

// Turns raw records into a RecordSet with the given encoders. Floors are
// shifted by `floor_offset` before encoding.
dataset::RecordSet encode_records(std::span<const dataset::RawRecord> raw,
                                  const dataset::DatasetDescriptor& d, int floor_offset,
                                  const dataset::FloorEncoder& floors,
                                  const dataset::CoordScaler& scaler);

Preprocessed preprocess(const dataset::DatasetDescriptor& d,
                        std::span<const dataset::RawRecord> train_raw, double validation_ratio,
                        uint64_t seed);
Preprocessed preprocess(const PipelineConfig& config);

// Cache layout: "<dir>/preprocessed.manifest" plus blobs.
void save_preprocessed(const Preprocessed& p, const std::filesystem::path& dir);
Preprocessed load_preprocessed(const std::filesystem::path& dir);

// The two task-directed graph pairs feeding one heterogeneous GNN.
struct TaskGraphs {
  graph::FingerGraph rssi_train, rssi_val;
  graph::FingerGraph pos_train, pos_val;
  graph::HeteroGraph hetero_train, hetero_val;
};

// Shared so that ablation states can reuse the upstream models.
struct Models {
  std::shared_ptr<models::CoarseLocalizer<float>> regressor;
  std::shared_ptr<models::CoarseLocalizer<float>> classifier;
  std::shared_ptr<models::StackedFeatureEncoder<float>> sfe_coord;
  std::shared_ptr<models::StackedFeatureEncoder<float>> sfe_floor;
  std::shared_ptr<models::HeteroGnn<float>> hgnn_coord;
  std::shared_ptr<models::HeteroGnn<float>> hgnn_floor;
};

enum class Ablation { kFull, kPosOnly, kRssiOnly, kSharedOnly, kParallelOnly, kNoSfe };
std::string to_string(Ablation mode);
Ablation ablation_from_string(const std::string& s);
std::vector<Ablation> ablation_modes();  // every mode except kFull

struct PipelineState {
  PipelineConfig config;
  Ablation mode = Ablation::kFull;
  Preprocessed data;
  std::shared_ptr<const dataset::FeatureMatrix> train_nodes;  // train rows
  std::shared_ptr<const dataset::FeatureMatrix> val_nodes;    // train rows, then validation rows
  graph::FingerGraph universal_train, universal_val;
  graph::PredictedPositions val_predictions;  // coarse output for validation nodes
  // KNN search vectors of the training records for the two RSSI graphs:
  // encoder output, or the raw features when the encoders are ablated.
  std::shared_ptr<const dataset::FeatureMatrix> coord_search, floor_search;
  TaskGraphs coord, floor;
  Models models;
  evaluation::MetricsReport validation;
};

// Last step of an offline run; later stages are left untouched.
enum class Through { kPreprocess, kUniversalGraphs, kCoarse, kEncoders, kTaskGraphs, kAll };

struct RunOptions {
  std::filesystem::path out_dir;  // empty: nothing persisted
  bool resume = true;             // reuse stages whose keys match the run manifest
  bool train = true;              // false: every stage must already be complete
  Ablation mode = Ablation::kFull;
  Through through = Through::kAll;
};

// Offline workflow: preprocess, universal graphs, coarse models, validation
// position estimates, feature encoders, task graphs, heterogeneous GNNs.
// Each stage records its artifacts and key in run_manifest.txt.
PipelineState run_offline(const PipelineConfig& config, const RunOptions& options);
PipelineState run_offline(const PipelineConfig& config, Preprocessed data,
                          const RunOptions& options);

// Rebuilds a trained state from a finished run directory without training.
PipelineState load_state(const std::filesystem::path& run_dir);

struct Prediction {
  int32_t building = 0;
  int floor = 0;  // original label
  double longitude = 0.0;
  double latitude = 0.0;
};

struct OnlineGraphs {
  graph::FingerGraph universal;
  graph::PredictedPositions coarse;
  graph::HeteroGraph coord;
  graph::HeteroGraph floor;
};

struct OnlineResult {
  std::vector<Prediction> final_predictions;
  std::vector<Prediction> coarse_predictions;  // homogeneous GraphSAGE outputs
  OnlineGraphs graphs;
};

// Online data are preprocessed with the training descriptor, scaler and
// floor encoder. Every record is inferred as the only non-training node, so
// results do not depend on which records are submitted together.
OnlineResult run_online(const PipelineState& state, const dataset::FeatureMatrix& features,
                        const models::OnlineAdapter<float>* adapter = nullptr);
OnlineResult run_online(const PipelineState& state, std::span<const dataset::RawRecord> records,
                        const models::OnlineAdapter<float>* adapter = nullptr);

// Metrics of predictions against labeled records (original units).
evaluation::MetricsReport evaluate(const PipelineState& state,
                                   std::span<const Prediction> predictions,
                                   std::span<const dataset::RawRecord> truth);
evaluation::MetricsReport evaluate(std::span<const Prediction> predictions,
                                   std::span<const dataset::RawRecord> truth,
                                   size_t num_floor_classes, std::span<const int> floor_labels,
                                   bool with_building);

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> rows);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

struct AdapterReport {
  size_t fit_records = 0;
  size_t report_records = 0;
  evaluation::MetricsReport unadapted;
  evaluation::MetricsReport adapted;
  bool main_parameters_unchanged = false;
  std::vector<float> weights;
};

// Splits the online records: a `fraction` sample fits the adapter against
// its true coordinates, the rest is reported with and without it.
AdapterReport run_adapter(PipelineState& state, std::span<const dataset::RawRecord> online);

// Trains the heterogeneous GNNs again under an ablation mode, reusing the
// preprocessing, coarse models and encoders of `full`.
PipelineState run_ablation(const PipelineState& full, Ablation mode, const RunOptions& options);

// Test metrics of the homogeneous GraphSAGE localizers (coarse
// architecture on the single raw-RSSI graph).
evaluation::MetricsReport run_baseline_graphsage(const PipelineState& state,
                                                 std::span<const dataset::RawRecord> test);

// Loads the configured test CSV.
std::vector<dataset::RawRecord> load_test_records(const PipelineConfig& config);

}  // namespace fingerloc::pipeline

#endif  // FINGERLOC_PIPELINE_H_
