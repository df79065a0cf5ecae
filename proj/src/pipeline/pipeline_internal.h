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

#ifndef FINGERLOC_SRC_PIPELINE_INTERNAL_H_
#define FINGERLOC_SRC_PIPELINE_INTERNAL_H_

#include <cstdint>
#include <memory>
#include <span>

#include "fingerloc/pipeline.h"

namespace fingerloc::pipeline::detail {

// Independent random streams, one per consumer.
enum class Stream : uint64_t {
  kUniversalGraph = 1,
  kRegressor,
  kClassifier,
  kSfe,
  kRssiGraph,
  kPosGraph,
  kHgnn,
  kAdapter,
};

uint64_t stream_seed(const PipelineConfig& c, Stream s, uint64_t sub);

models::CoarseConfig coarse_config(const PipelineConfig& c, const Preprocessed& d,
                                   models::CoarseTask task);
models::SfeConfig sfe_config(const PipelineConfig& c, const Preprocessed& d, models::SfeTask task);
models::HgnnConfig hgnn_config(const PipelineConfig& c, const Preprocessed& d,
                               models::HgnnTask task, Ablation mode);

// Rows of `a` followed by rows of `b`.
std::shared_ptr<const dataset::FeatureMatrix> stack_features(const dataset::FeatureMatrix& a,
                                                             const dataset::FeatureMatrix& b);

// RSSI graph of one task. Targets (validation or online) are searched in
// the task's feature space; `raw_targets` is null for the training role.
graph::FingerGraph rssi_graph(const PipelineState& s, models::HgnnTask task, graph::GraphRole role,
                              std::shared_ptr<const dataset::FeatureMatrix> nodes,
                              const dataset::FeatureMatrix* raw_targets,
                              std::span<const int32_t> target_spids,
                              const graph::FingerGraph* train_graph);

graph::FingerGraph pos_graph(const PipelineState& s, models::HgnnTask task, graph::GraphRole role,
                             std::shared_ptr<const dataset::FeatureMatrix> nodes,
                             const graph::PredictedPositions* predicted,
                             const graph::FingerGraph* train_graph);

graph::HeteroGraph combine(const graph::FingerGraph& rssi, const graph::FingerGraph& pos,
                           Ablation mode);

// Coarse coordinates and floors for `nodes` of a universal graph.
graph::PredictedPositions coarse_positions(const PipelineState& s, const graph::FingerGraph& g,
                                           std::span<const uint32_t> nodes);

}  // namespace fingerloc::pipeline::detail

#endif  // FINGERLOC_SRC_PIPELINE_INTERNAL_H_
