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

#include "fingerloc/models/training.h"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "fingerloc/error.h"
#include "fingerloc/evaluation.h"
#include "fingerloc/models/checkpoint.h"
#include "fingerloc/sampler.h"

namespace fingerloc::models {

namespace {

using graph::Adjacency;
using graph::ComputationPlan;

std::vector<uint32_t> shuffled(std::span<const uint32_t> nodes, Rng& rng) {
  std::vector<uint32_t> out(nodes.begin(), nodes.end());
  for (size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[uniform_index(rng, i)]);
  }
  return out;
}

Tensor<float> coord_rows(std::span<const Coord> coords, std::span<const uint32_t> nodes) {
  Tensor<float> t(nodes.size(), 2);
  for (size_t i = 0; i < nodes.size(); ++i) {
    t(i, 0) = static_cast<float>(coords[nodes[i]][0]);
    t(i, 1) = static_cast<float>(coords[nodes[i]][1]);
  }
  return t;
}

std::vector<int32_t> label_rows(std::span<const int32_t> labels, std::span<const uint32_t> nodes) {
  std::vector<int32_t> out(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) out[i] = labels[nodes[i]];
  return out;
}

std::vector<Coord> to_coords(const Tensor<float>& t) {
  std::vector<Coord> out(t.rows());
  for (size_t i = 0; i < t.rows(); ++i) out[i] = {t(i, 0), t(i, 1)};
  return out;
}

std::vector<Coord> coord_list(std::span<const Coord> coords, std::span<const uint32_t> nodes) {
  std::vector<Coord> out(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) out[i] = coords[nodes[i]];
  return out;
}

void check_finite(double loss, const std::string& stage, size_t epoch, size_t batch) {
  if (!std::isfinite(loss)) {
    throw DivergenceError(stage + ": non-finite loss " + std::to_string(loss) + " at epoch " +
                          std::to_string(epoch) + ", batch " + std::to_string(batch));
  }
}

void zero(const ParamList<float>& params) {
  for (auto* p : params) p->zero_grad();
}

void scale(Tensor<float>& t, double s) {
  for (auto& v : t.values()) v = static_cast<float>(v * s);
}

void require_labels(const NodeLabels& labels, size_t nodes, bool coords, bool floor,
                    bool building) {
  if ((coords && labels.coords_std.size() < nodes) || (floor && labels.floor.size() < nodes) ||
      (building && labels.building.size() < nodes)) {
    throw DataError("node labels do not cover every graph node");
  }
}

// Full-neighborhood mini-batch input over a training graph.
StackInput<float> batch_input(const ComputationPlan& plan, const FeatureMatrix& features) {
  StackInput<float> in;
  in.plan = &plan;
  in.x0 = numeric::gather_rows<float, uint32_t>(features, plan.cached[0]);
  return in;
}

// Isolated inference state for one GNN stack over one edge set.
class IsolatedContext {
 public:
  IsolatedContext(const GnnStack<float>& stack, Adjacency adj, size_t num_train,
                  const FeatureMatrix& features)
      : stack_(&stack), adj_(std::move(adj)), num_train_(num_train), features_(&features) {
    levels_ = stack_->train_levels(adj_, num_train_, *features_);
  }

  ComputationPlan plan(std::span<const uint32_t> seeds) const {
    return graph::make_isolated_plan(adj_, num_train_, seeds, stack_->depth());
  }

  StackInput<float> input(const ComputationPlan& plan, const OnlineAdapter<float>* adapter) const {
    StackInput<float> in;
    in.plan = &plan;
    in.x0 = numeric::gather_rows<float, uint32_t>(*features_, plan.cached[0]);
    if (adapter != nullptr) {
      for (size_t i = 0; i < plan.cached[0].size(); ++i) {
        if (plan.cached[0][i] < num_train_) continue;
        auto row = in.x0.row(i);
        for (size_t c = 0; c < row.size(); ++c) row[c] *= adapter->weight().value[c];
      }
    }
    in.tables.resize(stack_->depth(), nullptr);
    for (size_t l = 1; l < stack_->depth(); ++l) in.tables[l] = &levels_[l];
    return in;
  }

  size_t num_train() const { return num_train_; }

 private:
  const GnnStack<float>* stack_;
  Adjacency adj_;
  size_t num_train_;
  const FeatureMatrix* features_;
  std::vector<Tensor<float>> levels_;
};

template <typename F>
void for_chunks(std::span<const uint32_t> nodes, size_t chunk, F&& f) {
  chunk = std::max<size_t>(chunk, 1);
  for (size_t b = 0; b < nodes.size(); b += chunk) {
    f(nodes.subspan(b, std::min(chunk, nodes.size() - b)), b);
  }
}

Tensor<float> stack_rows(std::vector<Tensor<float>>& parts, size_t cols) {
  size_t rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Tensor<float> out(rows, cols);
  size_t r = 0;
  for (const auto& p : parts) {
    std::copy(p.values().begin(), p.values().end(), out.row(r).begin());
    r += p.rows();
  }
  return out;
}

double val_mle(const Tensor<float>& pred, const NodeLabels& labels,
               std::span<const uint32_t> nodes, const dataset::CoordScaler& scaler) {
  return evaluation::mean_location_error(to_coords(pred), coord_list(labels.coords_std, nodes),
                                         scaler)
      .mle;
}

}  // namespace

CoarseOutput<float> coarse_predict(const CoarseLocalizer<float>& model,
                                   const graph::FingerGraph& g, std::span<const uint32_t> nodes,
                                   size_t chunk) {
  IsolatedContext ctx(model.gnn(), g.adjacency(), g.num_train, *g.node_features);
  std::vector<Tensor<float>> coords;
  std::vector<Tensor<float>> floors;
  std::vector<Tensor<float>> buildings;
  for_chunks(nodes, chunk, [&](std::span<const uint32_t> seeds, size_t) {
    const ComputationPlan plan = ctx.plan(seeds);
    CoarseOutput<float> out = model.forward(ctx.input(plan, nullptr), false, nullptr, nullptr);
    coords.push_back(std::move(out.coords));
    floors.push_back(std::move(out.floor_logits));
    buildings.push_back(std::move(out.building_logits));
  });
  CoarseOutput<float> out;
  const CoarseConfig& c = model.config();
  if (c.task == CoarseTask::kRegression) {
    out.coords = stack_rows(coords, 2);
  } else {
    out.floor_logits = stack_rows(floors, c.num_floors);
    if (c.has_building_head()) out.building_logits = stack_rows(buildings, c.num_buildings);
  }
  return out;
}

TrainHistory train_coarse_regressor(CoarseLocalizer<float>& model, const LabeledGraph& train,
                                    const LabeledGraph& val, const TrainOptions& options,
                                    const dataset::CoordScaler& scaler) {
  if (model.config().task != CoarseTask::kRegression) {
    throw ConfigError("train_coarse_regressor needs a regression model");
  }
  require_labels(*train.labels, train.graph->num_nodes(), true, false, false);
  require_labels(*val.labels, val.graph->num_nodes(), true, false, false);
  const FeatureMatrix& features = *train.graph->node_features;
  const Adjacency adj = train.graph->adjacency();
  const std::vector<uint32_t> targets = train.graph->target_nodes();
  const std::vector<uint32_t> val_targets = val.graph->target_nodes();
  ParamList<float> params = model.parameters();
  numeric::Adam<float> opt(params, options.adam);
  Rng rng(options.seed);

  TrainHistory h;
  h.best_metric = std::numeric_limits<double>::infinity();
  std::vector<Tensor<float>> best = snapshot(params);
  for (size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const std::vector<uint32_t> order = shuffled(targets, rng);
    double loss_sum = 0.0;
    size_t batches = 0;
    for_chunks(order, options.batch_size, [&](std::span<const uint32_t> seeds, size_t) {
      zero(params);
      const ComputationPlan plan = graph::make_batch_plan(adj, seeds, model.gnn().depth());
      CoarseCache<float> cache;
      CoarseOutput<float> out = model.forward(batch_input(plan, features), true, &rng, &cache);
      auto loss = numeric::mse(out.coords, coord_rows(train.labels->coords_std, seeds));
      check_finite(loss.loss, options.stage, epoch, batches);
      CoarseOutput<float> grad;
      grad.coords = std::move(loss.grad);
      model.backward(cache, grad);
      opt.step();
      loss_sum += loss.loss;
      ++batches;
    });
    const CoarseOutput<float> pred = coarse_predict(model, *val.graph, val_targets,
                                                    options.eval_chunk);
    const double mle = val_mle(pred.coords, *val.labels, val_targets, scaler);
    h.epochs.push_back({epoch, 1, loss_sum / static_cast<double>(std::max<size_t>(batches, 1)), mle});
    spdlog::debug("{} epoch {} loss {:.5f} val mle {:.3f} m", options.stage, epoch,
                  h.epochs.back().train_loss, mle);
    if (mle < h.best_metric) {
      h.best_metric = mle;
      h.best_epoch = epoch;
      best = snapshot(params);
    }
  }
  restore(params, best);
  h.phase1_epochs = h.epochs.size();
  spdlog::info("{}: best validation MLE {:.3f} m at epoch {}", options.stage, h.best_metric,
               h.best_epoch);
  return h;
}

TrainHistory train_coarse_classifier(CoarseLocalizer<float>& model, const LabeledGraph& train,
                                     const LabeledGraph& val, const ClassifierOptions& options) {
  const CoarseConfig& config = model.config();
  if (config.task != CoarseTask::kClassification) {
    throw ConfigError("train_coarse_classifier needs a classification model");
  }
  const bool buildings = config.has_building_head();
  require_labels(*train.labels, train.graph->num_nodes(), false, true, buildings);
  require_labels(*val.labels, val.graph->num_nodes(), false, true, buildings);
  const FeatureMatrix& features = *train.graph->node_features;
  const Adjacency adj = train.graph->adjacency();
  const std::vector<uint32_t> targets = train.graph->target_nodes();
  const std::vector<uint32_t> val_targets = val.graph->target_nodes();
  const std::vector<int32_t> val_floor = label_rows(val.labels->floor, val_targets);
  const std::vector<int32_t> val_building =
      buildings ? label_rows(val.labels->building, val_targets) : std::vector<int32_t>{};
  const double beta = buildings ? options.beta : 0.0;
  Rng rng(options.seed);
  TrainHistory h;

  // Phase 1: mixed loss over the whole model.
  {
    ParamList<float> params = model.parameters();
    numeric::Adam<float> opt(params, options.adam);
    std::vector<Tensor<float>> best = snapshot(params);
    h.best_metric = -1.0;
    for (size_t epoch = 1; epoch <= options.epochs; ++epoch) {
      const std::vector<uint32_t> order = shuffled(targets, rng);
      double loss_sum = 0.0;
      size_t batches = 0;
      for_chunks(order, options.batch_size, [&](std::span<const uint32_t> seeds, size_t) {
        zero(params);
        const ComputationPlan plan = graph::make_batch_plan(adj, seeds, model.gnn().depth());
        CoarseCache<float> cache;
        CoarseOutput<float> out = model.forward(batch_input(plan, features), true, &rng, &cache);
        auto lf = numeric::cross_entropy(out.floor_logits, label_rows(train.labels->floor, seeds));
        CoarseOutput<float> grad;
        double loss = (1.0 - beta) * lf.loss;
        scale(lf.grad, 1.0 - beta);
        grad.floor_logits = std::move(lf.grad);
        if (buildings) {
          auto lb = numeric::cross_entropy(out.building_logits,
                                           label_rows(train.labels->building, seeds));
          loss += beta * lb.loss;
          scale(lb.grad, beta);
          grad.building_logits = std::move(lb.grad);
        }
        check_finite(loss, options.stage, epoch, batches);
        model.backward(cache, grad);
        opt.step();
        loss_sum += loss;
        ++batches;
      });
      const CoarseOutput<float> pred =
          coarse_predict(model, *val.graph, val_targets, options.eval_chunk);
      const double acc = evaluation::classification_accuracy(pred.floor_logits, val_floor);
      h.epochs.push_back({epoch, 1, loss_sum / static_cast<double>(std::max<size_t>(batches, 1)), acc});
      spdlog::debug("{} phase 1 epoch {} loss {:.5f} val floor {:.4f}", options.stage, epoch,
                    h.epochs.back().train_loss, acc);
      if (acc > h.best_metric) {
        h.best_metric = acc;
        h.best_epoch = epoch;
        best = snapshot(params);
      } else if (epoch - h.best_epoch >= options.patience) {
        break;
      }
    }
    restore(params, best);
    h.phase1_epochs = h.epochs.size();
    spdlog::info("{}: phase 1 best validation floor accuracy {:.4f} at epoch {}", options.stage,
                 h.best_metric, h.best_epoch);
  }
  if (!buildings || options.phase2_epochs == 0) return h;

  // Phase 2: building head alone.
  ParamList<float> all = model.parameters();
  ParamList<float> head = model.building_head_parameters();
  numeric::Adam<float> opt(head, options.adam);
  std::vector<Tensor<float>> best = snapshot(head);
  double best_acc = evaluation::classification_accuracy(
      coarse_predict(model, *val.graph, val_targets, options.eval_chunk).building_logits,
      val_building);
  size_t best_epoch = 0;
  for (size_t epoch = 1; epoch <= options.phase2_epochs; ++epoch) {
    const std::vector<uint32_t> order = shuffled(targets, rng);
    double loss_sum = 0.0;
    size_t batches = 0;
    for_chunks(order, options.batch_size, [&](std::span<const uint32_t> seeds, size_t) {
      zero(all);
      const ComputationPlan plan = graph::make_batch_plan(adj, seeds, model.gnn().depth());
      CoarseCache<float> cache;
      CoarseOutput<float> out = model.forward(batch_input(plan, features), true, &rng, &cache);
      auto lb =
          numeric::cross_entropy(out.building_logits, label_rows(train.labels->building, seeds));
      check_finite(lb.loss, options.stage + " phase 2", epoch, batches);
      CoarseOutput<float> grad;
      grad.building_logits = std::move(lb.grad);
      model.backward(cache, grad, false);
      opt.step();
      loss_sum += lb.loss;
      ++batches;
    });
    const double acc = evaluation::classification_accuracy(
        coarse_predict(model, *val.graph, val_targets, options.eval_chunk).building_logits,
        val_building);
    h.epochs.push_back({epoch, 2, loss_sum / static_cast<double>(std::max<size_t>(batches, 1)), acc});
    spdlog::debug("{} phase 2 epoch {} loss {:.5f} val building {:.4f}", options.stage, epoch,
                  h.epochs.back().train_loss, acc);
    if (acc > best_acc) {
      best_acc = acc;
      best_epoch = epoch;
      best = snapshot(head);
    } else if (epoch - best_epoch >= options.patience) {
      break;
    }
  }
  restore(head, best);
  zero(all);
  spdlog::info("{}: phase 2 validation building accuracy {:.4f}", options.stage, best_acc);
  return h;
}

TrainHistory train_sfe(StackedFeatureEncoder<float>& model, const SfeData& train,
                       const SfeData& val, const SfeOptions& options,
                       const dataset::CoordScaler& scaler) {
  const bool floors = model.config().task == SfeTask::kCoordinateFloor;
  const size_t n = train.features->rows();
  if (train.coords_std.size() != n || (floors && train.floor.size() != n)) {
    throw DataError("feature encoder: labels do not match training rows");
  }
  ParamList<float> params = model.parameters();
  ParamList<float> weights = model.encoder_weights();
  numeric::Adam<float> opt(params, options.adam);
  Rng rng(options.seed);
  std::vector<uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0u);
  std::vector<uint32_t> val_rows(val.features ? val.features->rows() : 0);
  std::iota(val_rows.begin(), val_rows.end(), 0u);

  TrainHistory h;
  for (size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const std::vector<uint32_t> order = shuffled(rows, rng);
    double loss_sum = 0.0;
    size_t batches = 0;
    for_chunks(order, options.batch_size, [&](std::span<const uint32_t> ids, size_t) {
      zero(params);
      const Tensor<float> x = numeric::gather_rows<float, uint32_t>(*train.features, ids);
      SfeCache<float> cache;
      SfeOutput<float> out = model.forward(x, true, &rng, &cache);
      auto lc = numeric::mse(out.coords, coord_rows(train.coords_std, ids));
      double loss = lc.loss;
      SfeOutput<float> grad;
      grad.coords = std::move(lc.grad);
      if (floors) {
        auto lf = numeric::cross_entropy(out.floor_logits, label_rows(train.floor, ids));
        loss += options.floor_weight * lf.loss;
        scale(lf.grad, options.floor_weight);
        grad.floor_logits = std::move(lf.grad);
      }
      model.backward(cache, grad);
      loss += numeric::l1_penalty<float>(weights, options.l1_lambda, true);
      check_finite(loss, options.stage, epoch, batches);
      opt.step();
      loss_sum += loss;
      ++batches;
    });
    double metric = 0.0;
    if (!val_rows.empty()) {
      const SfeOutput<float> out = model.forward(*val.features, false, nullptr, nullptr);
      std::vector<Coord> truth(val.coords_std.begin(), val.coords_std.end());
      metric = evaluation::mean_location_error(to_coords(out.coords), truth, scaler).mle;
    }
    h.epochs.push_back({epoch, 1, loss_sum / static_cast<double>(std::max<size_t>(batches, 1)),
                        metric});
    spdlog::debug("{} epoch {} loss {:.5f} val aux mle {:.3f} m", options.stage, epoch,
                  h.epochs.back().train_loss, metric);
  }
  h.best_epoch = h.epochs.size();
  h.best_metric = h.epochs.empty() ? 0.0 : h.epochs.back().val_metric;
  h.phase1_epochs = h.epochs.size();
  spdlog::info("{}: final auxiliary validation MLE {:.3f} m", options.stage, h.best_metric);
  return h;
}

namespace {

struct HeteroContexts {
  IsolatedContext pos;
  IsolatedContext rssi;

  HeteroContexts(const HeteroGnn<float>& model, const graph::HeteroGraph& g)
      : pos(model.pos_stack(), graph::make_adjacency(g.num_nodes(), g.pos_edges), g.num_train,
            *g.node_features),
        rssi(model.rssi_stack(), graph::make_adjacency(g.num_nodes(), g.rssi_edges), g.num_train,
             *g.node_features) {}
};

}  // namespace

Tensor<float> hgnn_predict(const HeteroGnn<float>& model, const graph::HeteroGraph& g,
                           std::span<const uint32_t> nodes, const OnlineAdapter<float>* adapter,
                           size_t chunk) {
  const HeteroContexts ctx(model, g);
  std::vector<Tensor<float>> parts;
  for_chunks(nodes, chunk, [&](std::span<const uint32_t> seeds, size_t) {
    const ComputationPlan pp = ctx.pos.plan(seeds);
    const ComputationPlan rp = ctx.rssi.plan(seeds);
    parts.push_back(model.forward(ctx.pos.input(pp, adapter), ctx.rssi.input(rp, adapter), false,
                                  nullptr, nullptr));
  });
  return stack_rows(parts, model.config().out_dim);
}

TrainHistory train_hgnn(HeteroGnn<float>& model, HgnnTask task, const LabeledHetero& train,
                        const LabeledHetero& val, const TrainOptions& options,
                        const dataset::CoordScaler& scaler) {
  const bool coords = task == HgnnTask::kCoordinate;
  require_labels(*train.labels, train.graph->num_nodes(), coords, !coords, false);
  require_labels(*val.labels, val.graph->num_nodes(), coords, !coords, false);
  const FeatureMatrix& features = *train.graph->node_features;
  const graph::HeteroGraph& tg = *train.graph;
  const Adjacency pos_adj = graph::make_adjacency(tg.num_nodes(), tg.pos_edges);
  const Adjacency rssi_adj = graph::make_adjacency(tg.num_nodes(), tg.rssi_edges);
  const std::vector<uint32_t> targets = tg.target_nodes();
  const std::vector<uint32_t> val_targets = val.graph->target_nodes();
  const std::vector<int32_t> val_floor =
      coords ? std::vector<int32_t>{} : label_rows(val.labels->floor, val_targets);
  ParamList<float> params = model.parameters();
  numeric::Adam<float> opt(params, options.adam);
  Rng rng(options.seed);

  TrainHistory h;
  h.best_metric = coords ? std::numeric_limits<double>::infinity() : -1.0;
  std::vector<Tensor<float>> best = snapshot(params);
  for (size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const std::vector<uint32_t> order = shuffled(targets, rng);
    double loss_sum = 0.0;
    size_t batches = 0;
    for_chunks(order, options.batch_size, [&](std::span<const uint32_t> seeds, size_t) {
      zero(params);
      const ComputationPlan pp = graph::make_batch_plan(pos_adj, seeds, model.pos_stack().depth());
      const ComputationPlan rp =
          graph::make_batch_plan(rssi_adj, seeds, model.rssi_stack().depth());
      HgnnCache<float> cache;
      Tensor<float> out = model.forward(batch_input(pp, features), batch_input(rp, features), true,
                                        &rng, &cache);
      auto loss = coords ? numeric::mse(out, coord_rows(train.labels->coords_std, seeds))
                         : numeric::cross_entropy(out, label_rows(train.labels->floor, seeds));
      check_finite(loss.loss, options.stage, epoch, batches);
      model.backward(cache, loss.grad);
      opt.step();
      loss_sum += loss.loss;
      ++batches;
    });
    const Tensor<float> pred = hgnn_predict(model, *val.graph, val_targets, nullptr,
                                            options.eval_chunk);
    const double metric = coords ? val_mle(pred, *val.labels, val_targets, scaler)
                                 : evaluation::classification_accuracy(pred, val_floor);
    h.epochs.push_back({epoch, 1, loss_sum / static_cast<double>(std::max<size_t>(batches, 1)),
                        metric});
    spdlog::debug("{} epoch {} loss {:.5f} val {:.4f}", options.stage, epoch,
                  h.epochs.back().train_loss, metric);
    if (coords ? metric < h.best_metric : metric > h.best_metric) {
      h.best_metric = metric;
      h.best_epoch = epoch;
      best = snapshot(params);
    }
  }
  restore(params, best);
  h.phase1_epochs = h.epochs.size();
  spdlog::info("{}: best validation {} {:.4f} at epoch {}", options.stage,
               coords ? "MLE (m)" : "floor accuracy", h.best_metric, h.best_epoch);
  return h;
}

TrainHistory train_adapter(OnlineAdapter<float>& adapter, HeteroGnn<float>& model,
                           const graph::HeteroGraph& g, std::span<const uint32_t> fit_nodes,
                           std::span<const Coord> fit_coords_std, const AdapterOptions& options) {
  if (fit_nodes.empty()) throw DataError("adapter: the online fitting subset is empty");
  if (fit_nodes.size() != fit_coords_std.size()) {
    throw ShapeError("adapter: fitting nodes and coordinates differ in count");
  }
  if (model.config().out_dim != 2) throw ConfigError("adapter needs the coordinate model");
  for (uint32_t v : fit_nodes) {
    if (v < g.num_train) throw DataError("adapter: fitting nodes must be online nodes");
  }
  const HeteroContexts ctx(model, g);
  ParamList<float> frozen = model.parameters();
  ParamList<float> params = adapter.parameters();
  numeric::Adam<float> opt(params, options.adam);
  Rng rng(options.seed);
  std::vector<uint32_t> index(fit_nodes.size());
  std::iota(index.begin(), index.end(), 0u);

  auto accumulate = [&](const ComputationPlan& plan, const Tensor<float>& dx) {
    const FeatureMatrix& features = *g.node_features;
    for (size_t i = 0; i < plan.cached[0].size(); ++i) {
      const uint32_t v = plan.cached[0][i];
      if (v < g.num_train) continue;
      auto x = features.row(v);
      auto d = dx.row(i);
      for (size_t c = 0; c < x.size(); ++c) {
        adapter.weight().grad[c] += x[c] * d[c];
      }
    }
  };

  TrainHistory h;
  for (size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const std::vector<uint32_t> order = shuffled(index, rng);
    double loss_sum = 0.0;
    size_t batches = 0;
    for_chunks(order, options.batch_size, [&](std::span<const uint32_t> ids, size_t) {
      adapter.weight().zero_grad();
      std::vector<uint32_t> seeds(ids.size());
      Tensor<float> target(ids.size(), 2);
      for (size_t i = 0; i < ids.size(); ++i) {
        seeds[i] = fit_nodes[ids[i]];
        target(i, 0) = static_cast<float>(fit_coords_std[ids[i]][0]);
        target(i, 1) = static_cast<float>(fit_coords_std[ids[i]][1]);
      }
      const ComputationPlan pp = ctx.pos.plan(seeds);
      const ComputationPlan rp = ctx.rssi.plan(seeds);
      HgnnCache<float> cache;
      Tensor<float> out = model.forward(ctx.pos.input(pp, &adapter), ctx.rssi.input(rp, &adapter),
                                        false, nullptr, &cache);
      auto loss = numeric::mse(out, target);
      check_finite(loss.loss, "adapter", epoch, batches);
      auto [dpos, drssi] = model.backward(cache, loss.grad, true);
      accumulate(pp, dpos);
      accumulate(rp, drssi);
      opt.step();
      loss_sum += loss.loss;
      ++batches;
    });
    h.epochs.push_back({epoch, 1, loss_sum / static_cast<double>(batches), 0.0});
    spdlog::debug("adapter epoch {} loss {:.5f}", epoch, h.epochs.back().train_loss);
  }
  zero(frozen);
  h.best_epoch = h.epochs.size();
  h.phase1_epochs = h.epochs.size();
  return h;
}

}  // namespace fingerloc::models
