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

#ifndef FINGERLOC_MODELS_TRAINING_H_
#define FINGERLOC_MODELS_TRAINING_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fingerloc/dataset.h"
#include "fingerloc/graph.h"
#include "fingerloc/models/networks.h"
#include "fingerloc/numeric/adam.h"

namespace fingerloc::models {

using dataset::Coord;
using dataset::FeatureMatrix;

// Per-node labels, indexed by node id. Only target nodes are ever read.
struct NodeLabels {
  std::vector<Coord> coords_std;
  std::vector<int32_t> floor;
  std::vector<int32_t> building;
};

struct TrainOptions {
  size_t epochs = 100;
  size_t batch_size = 256;
  numeric::AdamOptions adam;
  uint64_t seed = 0;
  size_t eval_chunk = 128;  // seeds per isolated-inference plan
  std::string stage = "train";
};

struct ClassifierOptions : TrainOptions {
  double beta = 0.1;          // building weight in the mixed loss
  size_t patience = 10;       // epochs without floor-accuracy gain
  size_t phase2_epochs = 50;  // building-head-only epochs
};

struct SfeOptions : TrainOptions {
  double l1_lambda = 1e-5;
  double floor_weight = 1.0;
};

struct AdapterOptions {
  size_t epochs = 50;
  size_t batch_size = 256;
  numeric::AdamOptions adam{0.001};
  uint64_t seed = 0;
};

struct EpochRecord {
  size_t epoch = 0;
  int phase = 1;
  double train_loss = 0.0;
  double val_metric = 0.0;  // MLE in meters or accuracy, per task
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  size_t best_epoch = 0;
  double best_metric = 0.0;
  size_t phase1_epochs = 0;
};

struct LabeledGraph {
  const graph::FingerGraph* graph = nullptr;
  const NodeLabels* labels = nullptr;
};

struct LabeledHetero {
  const graph::HeteroGraph* graph = nullptr;
  const NodeLabels* labels = nullptr;
};

// Coarse localizer. Training graphs use mini-batches of target nodes over
// full neighborhoods; validation runs isolated inference on the target
// nodes of the validation graph. The best-validation weights are restored.
TrainHistory train_coarse_regressor(CoarseLocalizer<float>& model, const LabeledGraph& train,
                                    const LabeledGraph& val, const TrainOptions& options,
                                    const dataset::CoordScaler& scaler);

// Phase 1: (1 - beta) floor CE + beta building CE until the validation floor
// accuracy stops improving. Phase 2: everything but the building head is
// frozen and the building head trains on building CE alone.
TrainHistory train_coarse_classifier(CoarseLocalizer<float>& model, const LabeledGraph& train,
                                     const LabeledGraph& val, const ClassifierOptions& options);

// Isolated inference for the listed nodes (each evaluated as the only
// non-training node). Output rows follow `nodes`.
CoarseOutput<float> coarse_predict(const CoarseLocalizer<float>& model,
                                   const graph::FingerGraph& g, std::span<const uint32_t> nodes,
                                   size_t chunk = 128);

struct SfeData {
  const FeatureMatrix* features = nullptr;
  std::span<const Coord> coords_std;
  std::span<const int32_t> floor;
};

TrainHistory train_sfe(StackedFeatureEncoder<float>& model, const SfeData& train,
                       const SfeData& val, const SfeOptions& options,
                       const dataset::CoordScaler& scaler);

enum class HgnnTask { kCoordinate, kFloor };

TrainHistory train_hgnn(HeteroGnn<float>& model, HgnnTask task, const LabeledHetero& train,
                        const LabeledHetero& val, const TrainOptions& options,
                        const dataset::CoordScaler& scaler);

// Isolated inference; the adapter, when given, scales the input features of
// non-training nodes.
Tensor<float> hgnn_predict(const HeteroGnn<float>& model, const graph::HeteroGraph& g,
                           std::span<const uint32_t> nodes,
                           const OnlineAdapter<float>* adapter = nullptr, size_t chunk = 128);

// Fits the adapter on `fit_nodes` by coordinate MSE through the frozen
// model. Model parameter values are never written.
TrainHistory train_adapter(OnlineAdapter<float>& adapter, HeteroGnn<float>& model,
                           const graph::HeteroGraph& g, std::span<const uint32_t> fit_nodes,
                           std::span<const Coord> fit_coords_std, const AdapterOptions& options);

}  // namespace fingerloc::models

#endif  // FINGERLOC_MODELS_TRAINING_H_
