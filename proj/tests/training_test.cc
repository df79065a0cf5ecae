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

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fingerloc/models/training.h"
#include "fingerloc/pipeline.h"
#include "pipeline_fixture.h"
#include "test_util.h"

using namespace fingerloc;
using namespace fingerloc::models;
using pipeline::PipelineState;

namespace {

struct Setup {
  synthetic::Dataset site = testing::small_site(5);
  pipeline::PipelineConfig config = testing::small_config(site, 11);
  PipelineState state;
  NodeLabels train_labels, val_labels;

  Setup() {
    state = pipeline::run_offline(config, testing::small_data(site, config), {});
    const auto& tr = state.data.train;
    const auto& va = state.data.validation;
    train_labels = {tr.coords_std, tr.floor, tr.building};
    val_labels = train_labels;
    val_labels.coords_std.insert(val_labels.coords_std.end(), va.coords_std.begin(),
                                 va.coords_std.end());
    val_labels.floor.insert(val_labels.floor.end(), va.floor.begin(), va.floor.end());
    val_labels.building.insert(val_labels.building.end(), va.building.begin(), va.building.end());
  }

  LabeledGraph train_graph() const { return {&state.universal_train, &train_labels}; }
  LabeledGraph val_graph() const { return {&state.universal_val, &val_labels}; }

  TrainOptions options(size_t epochs) const {
    TrainOptions o;
    o.epochs = epochs;
    o.batch_size = config.batch_size;
    o.adam.lr = config.learning_rate;
    o.seed = 21;
    return o;
  }
};

Setup& setup() {
  static Setup s;
  return s;
}

std::vector<std::vector<float>> snapshot(const ParamList<float>& params) {
  std::vector<std::vector<float>> out;
  for (const auto* p : params) out.emplace_back(p->value.values().begin(), p->value.values().end());
  return out;
}

ParamList<float> without(const ParamList<float>& all, const ParamList<float>& drop) {
  const std::set<const Parameter<float>*> d(drop.begin(), drop.end());
  ParamList<float> out;
  for (auto* p : all) {
    if (!d.contains(p)) out.push_back(p);
  }
  return out;
}

double l1_norm(const ParamList<float>& params) {
  double s = 0.0;
  for (const auto* p : params) {
    for (float v : p->value.values()) s += std::abs(v);
  }
  return s;
}

}  // namespace

TEST_CASE("coarse training loss decreases over the first ten epochs") {
  Setup& s = setup();
  {
    CoarseLocalizer<float> m(s.state.models.regressor->config(), 4);
    const auto h =
        train_coarse_regressor(m, s.train_graph(), s.val_graph(), s.options(10), s.state.data.scaler);
    REQUIRE(h.epochs.size() == 10);
    CHECK(h.epochs[9].train_loss < h.epochs[0].train_loss);
  }
  {
    CoarseLocalizer<float> m(s.state.models.classifier->config(), 4);
    ClassifierOptions o;
    static_cast<TrainOptions&>(o) = s.options(10);
    o.patience = 100;
    o.phase2_epochs = 0;
    const auto h = train_coarse_classifier(m, s.train_graph(), s.val_graph(), o);
    REQUIRE(h.epochs.size() >= 10);
    CHECK(h.epochs[9].train_loss < h.epochs[0].train_loss);
  }
}

TEST_CASE("phase two only moves the building head") {
  Setup& s = setup();
  auto run = [&](size_t phase2) {
    auto m = std::make_unique<CoarseLocalizer<float>>(s.state.models.classifier->config(), 9);
    ClassifierOptions o;
    static_cast<TrainOptions&>(o) = s.options(8);
    o.patience = 3;
    o.phase2_epochs = phase2;
    const auto h = train_coarse_classifier(*m, s.train_graph(), s.val_graph(), o);
    return std::pair{std::move(m), h};
  };
  auto [base, h0] = run(0);
  auto [tuned, h1] = run(6);
  CHECK(h0.phase1_epochs == h1.phase1_epochs);
  CHECK(h1.epochs.size() == h1.phase1_epochs + 6);
  CHECK(h1.epochs.back().phase == 2);

  const auto frozen0 = snapshot(without(base->parameters(), base->building_head_parameters()));
  const auto frozen1 = snapshot(without(tuned->parameters(), tuned->building_head_parameters()));
  CHECK(frozen0 == frozen1);
  CHECK(snapshot(base->gnn_parameters()) == snapshot(tuned->gnn_parameters()));
  CHECK(snapshot(base->building_head_parameters()) != snapshot(tuned->building_head_parameters()));
}

TEST_CASE("l1 penalty shrinks the encoder weights") {
  Setup& s = setup();
  const auto& tr = s.state.data.train;
  const auto& va = s.state.data.validation;
  const SfeData train{&tr.features, tr.coords_std, tr.floor};
  const SfeData val{&va.features, va.coords_std, va.floor};
  auto run = [&](double lambda) {
    StackedFeatureEncoder<float> m(s.state.models.sfe_coord->config(), 13);
    SfeOptions o;
    static_cast<TrainOptions&>(o) = s.options(50);
    o.l1_lambda = lambda;
    train_sfe(m, train, val, o, s.state.data.scaler);
    return l1_norm(m.encoder_weights());
  };
  const double plain = run(0.0);
  const double penalized = run(1e-4);
  CHECK(penalized < plain);
}

TEST_CASE("adapter training never writes model parameters") {
  Setup& s = setup();
  HeteroGnn<float>& model = *s.state.models.hgnn_coord;
  const auto before = snapshot(model.parameters());
  const auto& g = s.state.coord.hetero_val;
  const auto nodes = g.target_nodes();
  std::vector<Coord> coords(s.state.data.validation.coords_std.begin(),
                            s.state.data.validation.coords_std.end());
  REQUIRE(nodes.size() == coords.size());
  OnlineAdapter<float> adapter(s.state.data.descriptor.ap_count);
  AdapterOptions o;
  o.epochs = 10;
  o.seed = 3;
  const auto h = train_adapter(adapter, model, g, nodes, coords, o);
  CHECK(h.epochs.size() == 10);
  CHECK(snapshot(model.parameters()) == before);
  const auto w = adapter.weight().value.values();
  CHECK(std::any_of(w.begin(), w.end(), [](float v) { return v != 1.0f; }));
}

TEST_CASE("two runs with the same seed agree exactly") {
  Setup& s = setup();
  const PipelineState again = pipeline::run_offline(s.config, testing::small_data(s.site, s.config), {});
  CHECK(again.validation.errors == s.state.validation.errors);
  CHECK(again.validation.floor_confusion == s.state.validation.floor_confusion);
  CHECK(snapshot(again.models.hgnn_coord->parameters()) ==
        snapshot(s.state.models.hgnn_coord->parameters()));

  pipeline::PipelineConfig other = s.config;
  other.seed = s.config.seed + 1;
  const PipelineState diff = pipeline::run_offline(other, testing::small_data(s.site, other), {});
  CHECK(snapshot(diff.models.hgnn_coord->parameters()) !=
        snapshot(s.state.models.hgnn_coord->parameters()));
}
