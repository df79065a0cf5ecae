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

#include "fingerloc/models/networks.h"

#include <sstream>

#include "fingerloc/error.h"

namespace fingerloc::models {

namespace {

std::string join(const std::vector<size_t>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

template <typename T>
std::vector<size_t> with_ends(size_t in, const std::vector<size_t>& hidden, size_t out) {
  std::vector<size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

template <typename T>
void add_into(Tensor<T>& acc, const Tensor<T>& g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  auto a = acc.values();
  auto b = g.values();
  for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

std::string CoarseConfig::fingerprint() const {
  std::ostringstream os;
  os << "coarse task=" << (task == CoarseTask::kRegression ? "regression" : "classification")
     << " in=" << in_dim << " gnn=" << join(gnn_dims) << " head=" << join(head_hidden)
     << " trunk=" << trunk_dim << " floors=" << num_floors << " buildings=" << num_buildings
     << " dropout=" << dropout << " slope=" << slope;
  return os.str();
}

std::string SfeConfig::fingerprint() const {
  std::ostringstream os;
  os << "sfe task=" << (task == SfeTask::kCoordinate ? "coordinate" : "coordinate+floor")
     << " ap=" << ap_count << " depth=" << depth << " head=" << join(head_hidden)
     << " floors=" << num_floors << " dropout=" << dropout << " slope=" << slope;
  return os.str();
}

std::string HgnnConfig::fingerprint() const {
  std::ostringstream os;
  os << "hgnn in=" << in_dim << " hidden=" << hidden << " pos_layers=" << pos_layers
     << " rssi_layers=" << rssi_layers << " shared=" << use_shared
     << " parallel=" << use_parallel << " head=" << join(head_hidden) << " out=" << out_dim
     << " dropout=" << dropout << " slope=" << slope;
  return os.str();
}

// ---------------------------------------------------------------------------

template <typename T>
CoarseLocalizer<T>::CoarseLocalizer(CoarseConfig config, uint64_t seed)
    : config_(std::move(config)) {
  if (config_.in_dim == 0 || config_.gnn_dims.empty()) {
    throw ConfigError("coarse model needs an input width and at least one graph layer");
  }
  if (config_.task == CoarseTask::kClassification && config_.num_floors < 1) {
    throw ConfigError("coarse classifier needs at least one floor class");
  }
  Rng rng(seed);
  std::vector<GraphLayer<T>*> ptrs;
  size_t in = config_.in_dim;
  for (size_t i = 0; i < config_.gnn_dims.size(); ++i) {
    layers_.push_back(std::make_unique<SageMeanLayer<T>>("gnn." + std::to_string(i), in,
                                                         config_.gnn_dims[i], rng));
    ptrs.push_back(layers_.back().get());
    in = config_.gnn_dims[i];
  }
  stack_ = GnnStack<T>(std::move(ptrs), config_.dropout);
  if (config_.task == CoarseTask::kRegression) {
    reg_head_ = Mlp<T>("reg", {with_ends<T>(in, config_.head_hidden, 2), config_.dropout,
                               config_.slope, false},
                       rng);
    return;
  }
  trunk_ = Mlp<T>("trunk", {{in, config_.trunk_dim}, config_.dropout, config_.slope, true}, rng);
  std::vector<size_t> head_hidden(config_.head_hidden.begin() + 1, config_.head_hidden.end());
  floor_head_ = Mlp<T>(
      "floor",
      {with_ends<T>(config_.trunk_dim, head_hidden, config_.num_floors), config_.dropout,
       config_.slope, false},
      rng);
  if (config_.has_building_head()) {
    building_head_ = Mlp<T>(
        "building",
        {with_ends<T>(config_.trunk_dim, head_hidden, config_.num_buildings), config_.dropout,
         config_.slope, false},
        rng);
  }
}

template <typename T>
CoarseOutput<T> CoarseLocalizer<T>::forward(const StackInput<T>& in, bool training, Rng* rng,
                                            CoarseCache<T>* cache) const {
  Tensor<T> emb = stack_.forward(*in.plan, in.x0, in.tables, training, rng,
                                 cache ? &cache->gnn : nullptr);
  CoarseOutput<T> out;
  if (config_.task == CoarseTask::kRegression) {
    out.coords = reg_head_.forward(emb, training, rng, cache ? &cache->reg : nullptr);
    return out;
  }
  Tensor<T> t = trunk_.forward(emb, training, rng, cache ? &cache->trunk : nullptr);
  out.floor_logits = floor_head_.forward(t, training, rng, cache ? &cache->floor : nullptr);
  if (config_.has_building_head()) {
    out.building_logits =
        building_head_.forward(t, training, rng, cache ? &cache->building : nullptr);
  }
  return out;
}

template <typename T>
void CoarseLocalizer<T>::backward(const CoarseCache<T>& cache, const CoarseOutput<T>& grad,
                                  bool propagate) {
  Tensor<T> demb;
  if (config_.task == CoarseTask::kRegression) {
    if (grad.coords.empty()) throw ShapeError("coarse regressor backward needs a coordinate gradient");
    demb = reg_head_.backward(cache.reg, grad.coords, propagate);
  } else {
    Tensor<T> dt;
    if (!grad.floor_logits.empty()) {
      add_into(dt, floor_head_.backward(cache.floor, grad.floor_logits, propagate));
    }
    if (!grad.building_logits.empty()) {
      if (!config_.has_building_head()) throw ShapeError("model has no building head");
      add_into(dt, building_head_.backward(cache.building, grad.building_logits, propagate));
    }
    if (!propagate || dt.empty()) return;
    demb = trunk_.backward(cache.trunk, dt, true);
  }
  if (propagate) stack_.backward(cache.gnn, demb, false);
}

template <typename T>
ParamList<T> CoarseLocalizer<T>::gnn_parameters() {
  ParamList<T> out;
  for (auto& l : layers_) l->collect(out);
  return out;
}

template <typename T>
ParamList<T> CoarseLocalizer<T>::building_head_parameters() {
  ParamList<T> out;
  if (config_.has_building_head()) building_head_.collect(out);
  return out;
}

template <typename T>
ParamList<T> CoarseLocalizer<T>::parameters() {
  ParamList<T> out = gnn_parameters();
  if (config_.task == CoarseTask::kRegression) {
    reg_head_.collect(out);
  } else {
    trunk_.collect(out);
    floor_head_.collect(out);
    if (config_.has_building_head()) building_head_.collect(out);
  }
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
StackedFeatureEncoder<T>::StackedFeatureEncoder(SfeConfig config, uint64_t seed)
    : config_(std::move(config)) {
  if (config_.ap_count == 0 || config_.depth == 0) {
    throw ConfigError("feature encoder needs a positive width and depth");
  }
  if (config_.task == SfeTask::kCoordinateFloor && config_.num_floors < 1) {
    throw ConfigError("coordinate+floor encoder needs at least one floor class");
  }
  Rng rng(seed);
  for (size_t i = 0; i < config_.depth; ++i) {
    encoder_.emplace_back("encoder." + std::to_string(i), config_.ap_count, config_.ap_count, rng);
  }
  aux_ = Mlp<T>("aux",
                {with_ends<T>(config_.ap_count, config_.head_hidden, config_.aux_outputs()),
                 config_.dropout, config_.slope, false},
                rng);
}

template <typename T>
Tensor<T> StackedFeatureEncoder<T>::encode(const Tensor<T>& x, SfeCache<T>* cache) const {
  Tensor<T> h = x;
  for (const auto& layer : encoder_) {
    Tensor<T> z = layer.forward(h);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      h = numeric::relu_forward(z);
      cache->pre.push_back(std::move(z));
    } else {
      h = numeric::relu_forward(z);
    }
  }
  return h;
}

template <typename T>
Tensor<T> StackedFeatureEncoder<T>::transform(const Tensor<T>& x) const {
  return encode(x, nullptr);
}

template <typename T>
SfeOutput<T> StackedFeatureEncoder<T>::forward(const Tensor<T>& x, bool training, Rng* rng,
                                               SfeCache<T>* cache) const {
  if (cache) *cache = {};
  Tensor<T> enc = encode(x, cache);
  Tensor<T> y = aux_.forward(enc, training, rng, cache ? &cache->aux : nullptr);
  SfeOutput<T> out;
  if (config_.task == SfeTask::kCoordinate) {
    out.coords = std::move(y);
  } else {
    std::tie(out.coords, out.floor_logits) = numeric::split_cols(y, 2);
  }
  return out;
}

template <typename T>
void StackedFeatureEncoder<T>::backward(const SfeCache<T>& cache, const SfeOutput<T>& grad) {
  Tensor<T> dy = config_.task == SfeTask::kCoordinate
                     ? grad.coords
                     : numeric::concat_cols(grad.coords, grad.floor_logits);
  Tensor<T> g = aux_.backward(cache.aux, dy, true);
  for (size_t i = encoder_.size(); i-- > 0;) {
    g = numeric::relu_backward(cache.pre[i], g);
    g = encoder_[i].backward(cache.inputs[i], g, i > 0);
  }
}

template <typename T>
ParamList<T> StackedFeatureEncoder<T>::parameters() {
  ParamList<T> out;
  for (auto& l : encoder_) l.collect(out);
  aux_.collect(out);
  return out;
}

template <typename T>
ParamList<T> StackedFeatureEncoder<T>::encoder_weights() {
  ParamList<T> out;
  for (auto& l : encoder_) out.push_back(&l.weight());
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
HeteroGnn<T>::HeteroGnn(HgnnConfig config, uint64_t seed) : config_(std::move(config)) {
  if (config_.in_dim == 0 || config_.hidden == 0) {
    throw ConfigError("hetero GNN needs positive input and hidden widths");
  }
  if (config_.pos_depth() == 0 || config_.rssi_depth() == 0) {
    throw ConfigError("hetero GNN needs the shared layer, the parallel stacks, or both");
  }
  Rng rng(seed);
  const size_t h = config_.hidden;
  std::vector<GraphLayer<T>*> pos;
  std::vector<GraphLayer<T>*> rssi;
  if (config_.use_shared) {
    shared_ = std::make_unique<SageMeanLayer<T>>("shared", config_.in_dim, h, rng);
    pos.push_back(shared_.get());
    rssi.push_back(shared_.get());
  }
  if (config_.use_parallel) {
    size_t in = config_.use_shared ? h : config_.in_dim;
    for (size_t i = 0; i < config_.pos_layers; ++i, in = h) {
      pos_layers_.push_back(
          std::make_unique<SageMeanLayer<T>>("pos." + std::to_string(i), in, h, rng));
      pos.push_back(pos_layers_.back().get());
    }
    in = config_.use_shared ? h : config_.in_dim;
    for (size_t i = 0; i < config_.rssi_layers; ++i, in = h) {
      rssi_layers_.push_back(
          std::make_unique<SageMeanLayer<T>>("rssi." + std::to_string(i), in, h, rng));
      rssi.push_back(rssi_layers_.back().get());
    }
  }
  pos_stack_ = GnnStack<T>(std::move(pos), config_.dropout);
  rssi_stack_ = GnnStack<T>(std::move(rssi), config_.dropout);
  fusion_ = Dense<T>("fusion", 2 * h, h, rng);
  head_ = Mlp<T>("head",
                 {with_ends<T>(h, config_.head_hidden, config_.out_dim), config_.dropout,
                  config_.slope, false},
                 rng);
}

template <typename T>
Tensor<T> HeteroGnn<T>::forward(const StackInput<T>& pos, const StackInput<T>& rssi,
                                bool training, Rng* rng, HgnnCache<T>* cache) const {
  if (pos.plan->seeds().size() != rssi.plan->seeds().size() ||
      !std::equal(pos.plan->seeds().begin(), pos.plan->seeds().end(),
                  rssi.plan->seeds().begin())) {
    throw ShapeError("hetero GNN: the two edge views must share seed nodes");
  }
  Tensor<T> p = pos_stack_.forward(*pos.plan, pos.x0, pos.tables, training, rng,
                                   cache ? &cache->pos : nullptr);
  Tensor<T> r = rssi_stack_.forward(*rssi.plan, rssi.x0, rssi.tables, training, rng,
                                    cache ? &cache->rssi : nullptr);
  Tensor<T> cat = numeric::concat_cols(p, r);
  Tensor<T> pre = fusion_.forward(cat);
  Tensor<T> fused = numeric::relu_forward(pre);
  Tensor<T> out = head_.forward(fused, training, rng, cache ? &cache->head : nullptr);
  if (cache) {
    cache->pos_out = std::move(p);
    cache->rssi_out = std::move(r);
    cache->fused_in = std::move(cat);
    cache->fused_pre = std::move(pre);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> HeteroGnn<T>::backward(const HgnnCache<T>& cache,
                                                       const Tensor<T>& dy, bool need_dx0) {
  Tensor<T> dfused = head_.backward(cache.head, dy, true);
  Tensor<T> dpre = numeric::relu_backward(cache.fused_pre, dfused);
  Tensor<T> dcat = fusion_.backward(cache.fused_in, dpre, true);
  auto [dp, dr] = numeric::split_cols(dcat, config_.hidden);
  Tensor<T> dx_pos = pos_stack_.backward(cache.pos, dp, need_dx0);
  Tensor<T> dx_rssi = rssi_stack_.backward(cache.rssi, dr, need_dx0);
  return {std::move(dx_pos), std::move(dx_rssi)};
}

template <typename T>
ParamList<T> HeteroGnn<T>::shared_parameters() {
  ParamList<T> out;
  if (shared_) shared_->collect(out);
  return out;
}

template <typename T>
ParamList<T> HeteroGnn<T>::pos_parameters() {
  ParamList<T> out;
  for (auto& l : pos_layers_) l->collect(out);
  return out;
}

template <typename T>
ParamList<T> HeteroGnn<T>::rssi_parameters() {
  ParamList<T> out;
  for (auto& l : rssi_layers_) l->collect(out);
  return out;
}

template <typename T>
ParamList<T> HeteroGnn<T>::parameters() {
  ParamList<T> out = shared_parameters();
  for (auto* p : pos_parameters()) out.push_back(p);
  for (auto* p : rssi_parameters()) out.push_back(p);
  fusion_.collect(out);
  head_.collect(out);
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
OnlineAdapter<T>::OnlineAdapter(size_t ap_count)
    : w_("adapter.weight", Tensor<T>(std::vector<size_t>{ap_count}, T{1})) {}

template <typename T>
Tensor<T> OnlineAdapter<T>::apply(const Tensor<T>& x) const {
  if (x.cols() != w_.value.size()) throw ShapeError("adapter: feature width mismatch");
  Tensor<T> out = x;
  for (size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (size_t c = 0; c < row.size(); ++c) row[c] *= w_.value[c];
  }
  return out;
}

template <typename T>
void OnlineAdapter<T>::backward(const Tensor<T>& x, const Tensor<T>& dy) {
  if (!x.same_shape(dy)) throw ShapeError("adapter backward: shape mismatch");
  const size_t cols = x.cols();
  for (size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (size_t r = 0; r < x.rows(); ++r) s += static_cast<double>(x(r, c)) * dy(r, c);
    w_.grad[c] = static_cast<T>(static_cast<double>(w_.grad[c]) + s);
  }
}

template class CoarseLocalizer<float>;
template class CoarseLocalizer<double>;
template class StackedFeatureEncoder<float>;
template class StackedFeatureEncoder<double>;
template class HeteroGnn<float>;
template class HeteroGnn<double>;
template class OnlineAdapter<float>;
template class OnlineAdapter<double>;

}  // namespace fingerloc::models
