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

#ifndef FINGERLOC_MODELS_LAYERS_H_
#define FINGERLOC_MODELS_LAYERS_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fingerloc/numeric/ops.h"
#include "fingerloc/rng.h"
#include "fingerloc/sampler.h"

namespace fingerloc::models {

using numeric::Neighborhoods;
using numeric::Parameter;
using numeric::Tensor;

template <typename T>
using ParamList = std::vector<Parameter<T>*>;

// Fully connected layer, y = x W + b.
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, size_t in, size_t out, Rng& rng, bool bias = true);

  size_t in_dim() const { return w_.value.shape()[0]; }
  size_t out_dim() const { return w_.value.shape()[1]; }

  Tensor<T> forward(const Tensor<T>& x) const;
  // Accumulates parameter gradients; `x` is the forward input.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool need_dx);

  void collect(ParamList<T>& out);
  Parameter<T>& weight() { return w_; }
  const Parameter<T>& weight() const { return w_; }
  Parameter<T>* bias() { return has_bias_ ? &b_ : nullptr; }

 private:
  Parameter<T> w_;
  Parameter<T> b_;
  bool has_bias_ = true;
};

struct MlpOptions {
  std::vector<size_t> dims;     // in, hidden..., out
  double dropout = 0.5;
  double slope = 0.01;          // LeakyReLU negative slope
  bool activate_output = false; // apply LeakyReLU + dropout after the last layer too
};

template <typename T>
struct MlpCache {
  std::vector<Tensor<T>> inputs;  // input of each dense layer
  std::vector<Tensor<T>> pre;     // pre-activation of each activated layer
  std::vector<std::vector<T>> masks;
};

// Dense layers with LeakyReLU and dropout after every hidden layer.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, MlpOptions options, Rng& rng);

  size_t in_dim() const { return options_.dims.front(); }
  size_t out_dim() const { return options_.dims.back(); }
  const MlpOptions& options() const { return options_; }

  Tensor<T> forward(const Tensor<T>& x, bool training, Rng* rng, MlpCache<T>* cache) const;
  Tensor<T> backward(const MlpCache<T>& cache, const Tensor<T>& dy, bool need_dx);

  void collect(ParamList<T>& out);

 private:
  bool activated(size_t i) const {
    return i + 1 < layers_.size() || options_.activate_output;
  }

  MlpOptions options_;
  std::vector<Dense<T>> layers_;
};

template <typename T>
struct GraphLayerCache {
  const Neighborhoods* block = nullptr;
  std::vector<Tensor<T>> saved;
};

// One message-passing layer over a block: src rows in, one row per
// destination out. Implementations must treat rows independently of batch
// composition so that inference is reproducible.
template <typename T>
class GraphLayer {
 public:
  virtual ~GraphLayer() = default;
  virtual size_t in_dim() const = 0;
  virtual size_t out_dim() const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, const Neighborhoods& block,
                            GraphLayerCache<T>* cache) const = 0;
  virtual Tensor<T> backward(const GraphLayerCache<T>& cache, const Tensor<T>& dy,
                             bool need_dx) = 0;
  virtual void collect(ParamList<T>& out) = 0;
};

// h_v = ReLU(mean(h_u : u in {v} + N(v)) W).
template <typename T>
class SageMeanLayer final : public GraphLayer<T> {
 public:
  SageMeanLayer(const std::string& name, size_t in, size_t out, Rng& rng);

  size_t in_dim() const override { return w_.value.shape()[0]; }
  size_t out_dim() const override { return w_.value.shape()[1]; }
  Tensor<T> forward(const Tensor<T>& x, const Neighborhoods& block,
                    GraphLayerCache<T>* cache) const override;
  Tensor<T> backward(const GraphLayerCache<T>& cache, const Tensor<T>& dy,
                     bool need_dx) override;
  void collect(ParamList<T>& out) override { out.push_back(&w_); }

  Parameter<T>& weight() { return w_; }

 private:
  Parameter<T> w_;
};

template <typename T>
struct StackCache {
  std::vector<GraphLayerCache<T>> layers;
  std::vector<std::vector<T>> masks;
  std::vector<size_t> fresh_rows;  // rows of layer l's input produced by layer l-1
};

// A sequence of graph layers evaluated over a ComputationPlan. Layers are
// borrowed; one layer object may appear in several stacks.
template <typename T>
class GnnStack {
 public:
  GnnStack() = default;
  GnnStack(std::vector<GraphLayer<T>*> layers, double dropout)
      : layers_(std::move(layers)), dropout_(dropout) {}

  size_t depth() const { return layers_.size(); }
  size_t out_dim() const { return layers_.back()->out_dim(); }
  size_t in_dim() const { return layers_.front()->in_dim(); }

  // x0 holds the rows of plan.cached[0]. tables[l] (l >= 1) supplies the
  // level-l rows of plan.cached[l] by global node id; it may be null when
  // the plan has no cached rows at that level.
  Tensor<T> forward(const graph::ComputationPlan& plan, const Tensor<T>& x0,
                    std::span<const Tensor<T>* const> tables, bool training, Rng* rng,
                    StackCache<T>* cache) const;
  // Returns the gradient for x0 when need_dx0, else an empty tensor.
  Tensor<T> backward(const StackCache<T>& cache, const Tensor<T>& dy, bool need_dx0);

  // Level tables h^0..h^{L-1} over training nodes [0, num_train) of the
  // training-only subgraph, in inference mode. Entry 0 is left empty (the
  // caller owns the raw features).
  std::vector<Tensor<T>> train_levels(const graph::Adjacency& adj, size_t num_train,
                                      const Tensor<T>& features) const;

 private:
  std::vector<GraphLayer<T>*> layers_;
  double dropout_ = 0.0;
};

}  // namespace fingerloc::models

#endif  // FINGERLOC_MODELS_LAYERS_H_
