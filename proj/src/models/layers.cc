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

#include "fingerloc/models/layers.h"

#include "fingerloc/error.h"

namespace fingerloc::models {

template <typename T>
Dense<T>::Dense(const std::string& name, size_t in, size_t out, Rng& rng, bool bias)
    : w_(name + ".weight", numeric::glorot_uniform<T>(in, out, rng)),
      b_(name + ".bias", Tensor<T>(std::vector<size_t>{bias ? out : size_t{0}})),
      has_bias_(bias) {}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x) const {
  return numeric::linear_forward(x, w_.value, has_bias_ ? &b_.value : nullptr);
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& x, const Tensor<T>& dy, bool need_dx) {
  return numeric::linear_backward(x, w_.value, dy, w_.grad, has_bias_ ? &b_.grad : nullptr,
                                  need_dx);
}

template <typename T>
void Dense<T>::collect(ParamList<T>& out) {
  out.push_back(&w_);
  if (has_bias_) out.push_back(&b_);
}

template <typename T>
Mlp<T>::Mlp(const std::string& name, MlpOptions options, Rng& rng)
    : options_(std::move(options)) {
  if (options_.dims.size() < 2) throw ConfigError("mlp '" + name + "' needs at least 2 dims");
  for (size_t i = 0; i + 1 < options_.dims.size(); ++i) {
    layers_.emplace_back(name + "." + std::to_string(i), options_.dims[i], options_.dims[i + 1],
                         rng);
  }
}

template <typename T>
Tensor<T> Mlp<T>::forward(const Tensor<T>& x, bool training, Rng* rng,
                          MlpCache<T>* cache) const {
  if (cache) *cache = {};
  const T slope = static_cast<T>(options_.slope);
  Tensor<T> h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    Tensor<T> z = layers_[i].forward(h);
    if (cache) cache->inputs.push_back(std::move(h));
    if (!activated(i)) {
      h = std::move(z);
      continue;
    }
    Tensor<T> a = numeric::leaky_relu_forward(z, slope);
    if (cache) cache->pre.push_back(std::move(z));
    if (training && options_.dropout > 0.0) {
      auto d = numeric::dropout_forward(a, options_.dropout, true, *rng);
      h = std::move(d.out);
      if (cache) cache->masks.push_back(std::move(d.mask));
    } else {
      h = std::move(a);
      if (cache) cache->masks.emplace_back();
    }
  }
  return h;
}

template <typename T>
Tensor<T> Mlp<T>::backward(const MlpCache<T>& cache, const Tensor<T>& dy, bool need_dx) {
  const T slope = static_cast<T>(options_.slope);
  Tensor<T> g = dy;
  for (size_t i = layers_.size(); i-- > 0;) {
    if (activated(i)) {
      if (!cache.masks[i].empty()) g = numeric::dropout_backward(cache.masks[i], g);
      g = numeric::leaky_relu_backward(cache.pre[i], g, slope);
    }
    g = layers_[i].backward(cache.inputs[i], g, need_dx || i > 0);
  }
  return g;
}

template <typename T>
void Mlp<T>::collect(ParamList<T>& out) {
  for (auto& l : layers_) l.collect(out);
}

template <typename T>
SageMeanLayer<T>::SageMeanLayer(const std::string& name, size_t in, size_t out, Rng& rng)
    : w_(name + ".weight", numeric::glorot_uniform<T>(in, out, rng)) {}

template <typename T>
Tensor<T> SageMeanLayer<T>::forward(const Tensor<T>& x, const Neighborhoods& block,
                                    GraphLayerCache<T>* cache) const {
  if (x.rows() != block.num_src) {
    throw ShapeError("graph layer: " + std::to_string(x.rows()) + " input rows for a block with " +
                     std::to_string(block.num_src) + " sources");
  }
  Tensor<T> agg = numeric::mean_aggregate(x, block);
  Tensor<T> pre = numeric::linear_forward<T>(agg, w_.value, nullptr);
  Tensor<T> out = numeric::relu_forward(pre);
  if (cache) {
    cache->block = &block;
    cache->saved = {std::move(agg), std::move(pre)};
  }
  return out;
}

template <typename T>
Tensor<T> SageMeanLayer<T>::backward(const GraphLayerCache<T>& cache, const Tensor<T>& dy,
                                     bool need_dx) {
  const Tensor<T>& agg = cache.saved[0];
  const Tensor<T>& pre = cache.saved[1];
  Tensor<T> dpre = numeric::relu_backward(pre, dy);
  Tensor<T> dagg = numeric::linear_backward<T>(agg, w_.value, dpre, w_.grad, nullptr, need_dx);
  if (!need_dx) return {};
  return numeric::mean_aggregate_backward(*cache.block, dagg);
}

template <typename T>
Tensor<T> GnnStack<T>::forward(const graph::ComputationPlan& plan, const Tensor<T>& x0,
                               std::span<const Tensor<T>* const> tables, bool training,
                               Rng* rng, StackCache<T>* cache) const {
  if (plan.depth() != layers_.size()) {
    throw ShapeError("plan depth " + std::to_string(plan.depth()) + " does not match " +
                     std::to_string(layers_.size()) + " graph layers");
  }
  if (cache) {
    cache->layers.assign(layers_.size(), {});
    cache->masks.assign(layers_.size(), {});
    cache->fresh_rows.assign(layers_.size(), 0);
  }
  Tensor<T> x = x0;
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0 && !plan.cached[l].empty()) {
      if (l >= tables.size() || tables[l] == nullptr) {
        throw ShapeError("plan needs cached level-" + std::to_string(l) + " rows but none given");
      }
      x = numeric::concat_rows(x, numeric::gather_rows<T, uint32_t>(*tables[l], plan.cached[l]));
    }
    if (cache) cache->fresh_rows[l] = plan.fresh[l].size();
    Tensor<T> y = layers_[l]->forward(x, plan.blocks[l], cache ? &cache->layers[l] : nullptr);
    if (l + 1 < layers_.size() && training && dropout_ > 0.0) {
      auto d = numeric::dropout_forward(y, dropout_, true, *rng);
      y = std::move(d.out);
      if (cache) cache->masks[l] = std::move(d.mask);
    }
    x = std::move(y);
  }
  return x;
}

template <typename T>
Tensor<T> GnnStack<T>::backward(const StackCache<T>& cache, const Tensor<T>& dy,
                                bool need_dx0) {
  Tensor<T> g = dy;
  for (size_t l = layers_.size(); l-- > 0;) {
    if (!cache.masks[l].empty()) g = numeric::dropout_backward(cache.masks[l], g);
    const bool need = l > 0 || need_dx0;
    g = layers_[l]->backward(cache.layers[l], g, need);
    if (l > 0 && g.rows() != cache.fresh_rows[l]) g = numeric::head_rows(g, cache.fresh_rows[l]);
  }
  return g;
}

template <typename T>
std::vector<Tensor<T>> GnnStack<T>::train_levels(const graph::Adjacency& adj, size_t num_train,
                                                 const Tensor<T>& features) const {
  std::vector<Tensor<T>> levels(layers_.size());
  if (layers_.size() < 2) return levels;
  const Neighborhoods block = graph::train_only_block(adj, num_train);
  Tensor<T> x = features.rows() == num_train ? features : numeric::head_rows(features, num_train);
  for (size_t l = 0; l + 1 < layers_.size(); ++l) {
    x = layers_[l]->forward(x, block, nullptr);
    levels[l + 1] = x;
  }
  return levels;
}

template class Dense<float>;
template class Dense<double>;
template class Mlp<float>;
template class Mlp<double>;
template class SageMeanLayer<float>;
template class SageMeanLayer<double>;
template class GnnStack<float>;
template class GnnStack<double>;

}  // namespace fingerloc::models
