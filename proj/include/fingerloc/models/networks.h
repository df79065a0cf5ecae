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

#ifndef FINGERLOC_MODELS_NETWORKS_H_
#define FINGERLOC_MODELS_NETWORKS_H_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fingerloc/models/layers.h"

namespace fingerloc::models {

// Inputs of one GNN stack: the plan, the rows of plan.cached[0] and the
// cached level tables (see GnnStack::forward).
template <typename T>
struct StackInput {
  const graph::ComputationPlan* plan = nullptr;
  Tensor<T> x0;
  std::vector<const Tensor<T>*> tables;
};

// ---------------------------------------------------------------------------
// Coarse localizer: GraphSAGE trunk with a regression head or floor and
// building classification heads.

enum class CoarseTask { kRegression, kClassification };

struct CoarseConfig {
  CoarseTask task = CoarseTask::kRegression;
  size_t in_dim = 0;
  std::vector<size_t> gnn_dims{256, 256};
  std::vector<size_t> head_hidden{64, 32};
  size_t trunk_dim = 64;
  size_t num_floors = 0;
  size_t num_buildings = 1;
  double dropout = 0.5;
  double slope = 0.01;

  bool has_building_head() const {
    return task == CoarseTask::kClassification && num_buildings > 1;
  }
  std::string fingerprint() const;
};

template <typename T>
struct CoarseOutput {
  Tensor<T> coords;           // regression
  Tensor<T> floor_logits;     // classification
  Tensor<T> building_logits;  // classification with more than one building
};

template <typename T>
struct CoarseCache {
  StackCache<T> gnn;
  MlpCache<T> reg;
  MlpCache<T> trunk;
  MlpCache<T> floor;
  MlpCache<T> building;
};

template <typename T>
class CoarseLocalizer {
 public:
  CoarseLocalizer(CoarseConfig config, uint64_t seed);

  const CoarseConfig& config() const { return config_; }
  const GnnStack<T>& gnn() const { return stack_; }

  CoarseOutput<T> forward(const StackInput<T>& in, bool training, Rng* rng,
                          CoarseCache<T>* cache) const;
  // Gradients for unused outputs may be empty. With propagate=false only the
  // heads receive gradients (building head only, if the others are empty).
  void backward(const CoarseCache<T>& cache, const CoarseOutput<T>& grad, bool propagate = true);

  ParamList<T> parameters();
  ParamList<T> gnn_parameters();
  ParamList<T> building_head_parameters();

 private:
  CoarseConfig config_;
  std::vector<std::unique_ptr<SageMeanLayer<T>>> layers_;
  GnnStack<T> stack_;
  Mlp<T> reg_head_;
  Mlp<T> trunk_;
  Mlp<T> floor_head_;
  Mlp<T> building_head_;
};

// ---------------------------------------------------------------------------
// Stacked feature encoder: iso-dimensional ReLU layers trained through an
// auxiliary MLP; only the encoder is used afterwards.

enum class SfeTask { kCoordinate, kCoordinateFloor };

struct SfeConfig {
  SfeTask task = SfeTask::kCoordinate;
  size_t ap_count = 0;
  size_t depth = 3;
  std::vector<size_t> head_hidden{64, 32};
  size_t num_floors = 0;
  double dropout = 0.5;
  double slope = 0.01;

  size_t aux_outputs() const { return task == SfeTask::kCoordinate ? 2 : 2 + num_floors; }
  std::string fingerprint() const;
};

template <typename T>
struct SfeOutput {
  Tensor<T> coords;
  Tensor<T> floor_logits;  // empty for the coordinate task
};

template <typename T>
struct SfeCache {
  std::vector<Tensor<T>> inputs;
  std::vector<Tensor<T>> pre;
  MlpCache<T> aux;
};

template <typename T>
class StackedFeatureEncoder {
 public:
  StackedFeatureEncoder(SfeConfig config, uint64_t seed);

  const SfeConfig& config() const { return config_; }

  // Encoder output only, inference mode.
  Tensor<T> transform(const Tensor<T>& x) const;

  SfeOutput<T> forward(const Tensor<T>& x, bool training, Rng* rng, SfeCache<T>* cache) const;
  void backward(const SfeCache<T>& cache, const SfeOutput<T>& grad);

  ParamList<T> parameters();
  // Weight matrices of the encoder layers (the L1-penalised set).
  ParamList<T> encoder_weights();

 private:
  Tensor<T> encode(const Tensor<T>& x, SfeCache<T>* cache) const;

  SfeConfig config_;
  std::vector<Dense<T>> encoder_;
  Mlp<T> aux_;
};

// ---------------------------------------------------------------------------
// Heterogeneous GNN: a shared graph layer applied to both edge views,
// parallel stacks per view, concatenation, fusion and an MLP head.

struct HgnnConfig {
  size_t in_dim = 0;
  size_t hidden = 256;
  size_t pos_layers = 1;   // parallel stack on position edges
  size_t rssi_layers = 2;  // parallel stack on RSSI edges
  bool use_shared = true;
  bool use_parallel = true;
  std::vector<size_t> head_hidden{64, 32};
  size_t out_dim = 2;
  double dropout = 0.5;
  double slope = 0.01;

  size_t pos_depth() const { return (use_shared ? 1 : 0) + (use_parallel ? pos_layers : 0); }
  size_t rssi_depth() const { return (use_shared ? 1 : 0) + (use_parallel ? rssi_layers : 0); }
  std::string fingerprint() const;
};

template <typename T>
struct HgnnCache {
  StackCache<T> pos;
  StackCache<T> rssi;
  Tensor<T> pos_out;   // pre-fusion branch outputs
  Tensor<T> rssi_out;
  Tensor<T> fused_in;
  Tensor<T> fused_pre;
  MlpCache<T> head;
};

template <typename T>
class HeteroGnn {
 public:
  HeteroGnn(HgnnConfig config, uint64_t seed);

  const HgnnConfig& config() const { return config_; }
  const GnnStack<T>& pos_stack() const { return pos_stack_; }
  const GnnStack<T>& rssi_stack() const { return rssi_stack_; }

  Tensor<T> forward(const StackInput<T>& pos, const StackInput<T>& rssi, bool training, Rng* rng,
                    HgnnCache<T>* cache) const;
  // Returns gradients for the two x0 inputs when need_dx0.
  std::pair<Tensor<T>, Tensor<T>> backward(const HgnnCache<T>& cache, const Tensor<T>& dy,
                                           bool need_dx0 = false);

  ParamList<T> parameters();
  ParamList<T> shared_parameters();
  ParamList<T> pos_parameters();
  ParamList<T> rssi_parameters();

 private:
  HgnnConfig config_;
  std::unique_ptr<SageMeanLayer<T>> shared_;
  std::vector<std::unique_ptr<SageMeanLayer<T>>> pos_layers_;
  std::vector<std::unique_ptr<SageMeanLayer<T>>> rssi_layers_;
  GnnStack<T> pos_stack_;
  GnnStack<T> rssi_stack_;
  Dense<T> fusion_;
  Mlp<T> head_;
};

// ---------------------------------------------------------------------------
// Online adapter: elementwise input weights, initialised to one.

template <typename T>
class OnlineAdapter {
 public:
  explicit OnlineAdapter(size_t ap_count);

  size_t ap_count() const { return w_.value.size(); }
  Tensor<T> apply(const Tensor<T>& x) const;
  // Accumulates dL/dw for input x and output gradient dy.
  void backward(const Tensor<T>& x, const Tensor<T>& dy);

  Parameter<T>& weight() { return w_; }
  const Parameter<T>& weight() const { return w_; }
  ParamList<T> parameters() { return {&w_}; }

 private:
  Parameter<T> w_;
};

}  // namespace fingerloc::models

#endif  // FINGERLOC_MODELS_NETWORKS_H_
