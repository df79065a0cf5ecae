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
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "fingerloc/graph.h"
#include "fingerloc/models/layers.h"
#include "fingerloc/sampler.h"
#include "test_util.h"

using namespace fingerloc;
using namespace fingerloc::graph;
using numeric::Tensor;

namespace {

FeatureMatrix column(std::initializer_list<float> v) {
  return FeatureMatrix::from({v.size(), 1}, std::vector<float>(v));
}

// Training records clustered around random sampling points, plus targets.
struct Instance {
  FeatureMatrix train;
  std::vector<int32_t> train_spids;
  FeatureMatrix targets;
  std::vector<int32_t> target_spids;
  std::shared_ptr<FeatureMatrix> all;
};

Instance random_instance(Rng& rng, size_t num_points, size_t dim, size_t num_targets,
                         bool quantized) {
  Instance inst;
  std::vector<std::vector<float>> centers(num_points, std::vector<float>(dim));
  for (auto& c : centers) {
    for (auto& v : c) {
      v = quantized ? 0.5f * static_cast<float>(uniform_index(rng, 3))
                    : static_cast<float>(uniform_unit(rng));
    }
  }
  std::vector<float> rows;
  for (size_t p = 0; p < num_points; ++p) {
    const size_t copies = 1 + uniform_index(rng, 3);
    for (size_t c = 0; c < copies; ++c) {
      for (size_t d = 0; d < dim; ++d) {
        const float noise = quantized ? 0.0f : static_cast<float>(0.01 * uniform_unit(rng));
        rows.push_back(centers[p][d] + noise);
      }
      inst.train_spids.push_back(static_cast<int32_t>(p));
    }
  }
  inst.train = FeatureMatrix::from({inst.train_spids.size(), dim}, rows);
  std::vector<float> trows;
  for (size_t t = 0; t < num_targets; ++t) {
    for (size_t d = 0; d < dim; ++d) trows.push_back(static_cast<float>(uniform_unit(rng)));
    inst.target_spids.push_back(-1);
  }
  inst.targets = FeatureMatrix::from({num_targets, dim}, trows);
  std::vector<float> all(inst.train.values().begin(), inst.train.values().end());
  all.insert(all.end(), trows.begin(), trows.end());
  inst.all = std::make_shared<FeatureMatrix>(
      FeatureMatrix::from({inst.train_spids.size() + num_targets, dim}, all));
  return inst;
}

// Exhaustive oracle: every point sorted by (squared distance, SPID), own
// point dropped, first k kept.
std::vector<int32_t> oracle_points(std::span<const float> q, const SamplingPointSet& pts,
                                   int32_t own, size_t k) {
  std::vector<std::pair<double, int32_t>> all;
  for (size_t p = 0; p < pts.size(); ++p) {
    double s = 0.0;
    for (size_t d = 0; d < pts.dim(); ++d) {
      const double diff = static_cast<double>(q[d]) - static_cast<double>(pts.features(p, d));
      s += diff * diff;
    }
    all.emplace_back(s, pts.spids[p]);
  }
  std::sort(all.begin(), all.end());
  std::vector<int32_t> out;
  // The search looks at k+1 candidates; the own point can only be skipped
  // when it is among them.
  for (size_t i = 0; i < k + 1 && out.size() < k; ++i) {
    if (all[i].second != own) out.push_back(all[i].second);
  }
  return out;
}

// Independent invariant check, written against the raw edge list.
void check_graph(const FingerGraph& g, const KnnConfig& cfg) {
  const size_t n = g.num_nodes();
  std::set<std::pair<uint32_t, uint32_t>> directed;
  for (auto [u, v] : g.edges) {
    REQUIRE(u < v);
    REQUIRE(v < n);
    directed.insert({u, v});
    directed.insert({v, u});
    CHECK_FALSE((!g.train_mask[u] && !g.train_mask[v]));
    if (g.node_spids[u] >= 0) CHECK(g.node_spids[u] != g.node_spids[v]);
  }
  for (auto [u, v] : directed) CHECK(directed.count({v, u}) == 1);
  std::vector<size_t> degree(n, 0);
  for (auto [u, v] : directed) ++degree[u];
  for (size_t v = 0; v < n; ++v) {
    CHECK(g.constructed_degree[v] <= cfg.k * cfg.n);
    if (!g.train_mask[v]) CHECK(degree[v] <= cfg.k * cfg.n);
  }
  if (g.role == GraphRole::kTrain) {
    for (uint8_t m : g.train_mask) CHECK(m == 1);
  }
  CHECK(check_invariants(g, cfg).ok());
}

}  // namespace

TEST_CASE("sampling point aggregation") {
  auto f = column({0.5f, 0.4f, 0.3f});
  const std::vector<PositionLabel> pos{{1, 1, 0, 0}, {1, 1, 0, 0}, {0, 2, 1, 0}};
  auto agg = aggregate_sampling_points(f, pos);
  REQUIRE(agg.points.size() == 2);
  // Labels sort lexicographically: (0,2,...) before (1,1,...).
  CHECK(agg.record_spids == std::vector<int32_t>{1, 1, 0});
  CHECK(agg.points.features(1, 0) == doctest::Approx(0.45f));
  CHECK(agg.points.features(0, 0) == 0.3f);
  CHECK(agg.points.members[1] == std::vector<uint32_t>{0, 1});

  Rng rng(1);
  FeatureMatrix many(5, 4);
  for (auto& v : many.values()) v = static_cast<float>(uniform_unit(rng));
  const std::vector<PositionLabel> same(5, PositionLabel{3, 4, 2, 1});
  auto one = aggregate_sampling_points(many, same);
  REQUIRE(one.points.size() == 1);
  for (size_t c = 0; c < 4; ++c) {
    double s = 0.0;
    for (size_t r = 0; r < 5; ++r) s += many(r, c);
    CHECK(one.points.features(0, c) == doctest::Approx(s / 5).epsilon(1e-6));
  }

  CHECK_THROWS_AS(aggregate_sampling_points(FeatureMatrix(0, 4), {}), DataError);
}

TEST_CASE("knn one-dimensional examples") {
  // Points s1=0.4, s2=0.5, s3=0.9, one record each (records 0, 1, 2).
  auto train = column({0.4f, 0.5f, 0.9f});
  const std::vector<int32_t> spids{1, 2, 3};
  auto pts = build_point_set(train, spids);

  const std::vector<uint64_t> key{0};
  const std::vector<int32_t> own{2};
  auto a = knn_neighbors(column({0.5f}), own, key, pts, {1, 1}, 9);
  CHECK(a.points[0] == std::vector<int32_t>{1});
  CHECK(a.records[0] == std::vector<uint32_t>{0});

  auto b = knn_neighbors(column({0.5f}), {}, key, pts, {2, 1}, 9);
  CHECK(b.points[0] == std::vector<int32_t>{2, 1});
  CHECK(b.records[0] == std::vector<uint32_t>{1, 0});

  CHECK_THROWS_AS(knn_neighbors(column({0.5f}), {}, key, pts, {3, 1}, 9), DataError);
}

TEST_CASE("knn ties go to the lower sampling point") {
  auto train = column({0.2f, 0.6f, 0.6f, 0.2f});
  const std::vector<int32_t> spids{0, 1, 2, 3};
  auto pts = build_point_set(train, spids);
  const std::vector<uint64_t> key{0};
  auto r = knn_neighbors(column({0.4f}), {}, key, pts, {3, 1}, 1);
  // All four are at distance 0.2 (up to float rounding of 0.4 - 0.2 vs 0.6 - 0.4).
  auto expect = oracle_points(column({0.4f}).row(0), pts, -1, 3);
  CHECK(r.points[0] == expect);
  auto s = knn_neighbors(column({0.6f}), {}, key, pts, {1, 1}, 1);
  CHECK(s.points[0] == std::vector<int32_t>{1});
}

TEST_CASE("knn matches the exhaustive oracle on 200 instances") {
  Rng rng(2024);
  size_t checked = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const size_t num_points = 6 + uniform_index(rng, 495);
    const size_t dim = inst % 10 == 0 ? 520 : 1 + uniform_index(rng, 16);
    const bool quantized = inst % 3 == 0;
    const size_t k = 1 + uniform_index(rng, 5);
    const size_t n = 1 + uniform_index(rng, 3);
    Instance data = random_instance(rng, num_points, dim, 20, quantized);
    auto pts = build_point_set(data.train, data.train_spids);
    REQUIRE(pts.size() == num_points);

    // Training targets (own SPID excluded) and unlabeled targets.
    const size_t nt = std::min<size_t>(data.train.rows(), 30);
    std::vector<size_t> rows(nt);
    for (auto& r : rows) r = uniform_index(rng, data.train.rows());
    auto targets = numeric::gather_rows<float, size_t>(data.train, rows);
    std::vector<int32_t> own;
    std::vector<uint64_t> keys;
    for (size_t r : rows) {
      own.push_back(data.train_spids[r]);
      keys.push_back(r);
    }
    const uint64_t seed = 77 + static_cast<uint64_t>(inst);
    auto got = knn_neighbors(targets, own, keys, pts, {k, n}, seed);
    for (size_t t = 0; t < nt; ++t) {
      CHECK(got.points[t] == oracle_points(targets.row(t), pts, own[t], k));
      ++checked;
    }

    std::vector<uint64_t> tkeys(data.targets.rows());
    for (size_t t = 0; t < tkeys.size(); ++t) tkeys[t] = content_key(data.targets.row(t));
    auto online = knn_neighbors(data.targets, {}, tkeys, pts, {k, n}, seed);
    for (size_t t = 0; t < data.targets.rows(); ++t) {
      CHECK(online.points[t] == oracle_points(data.targets.row(t), pts, -1, k));
      ++checked;
      // Records come from the chosen points, at most n per point.
      std::map<int32_t, size_t> per_point;
      for (uint32_t rec : online.records[t]) ++per_point[data.train_spids[rec]];
      for (auto [spid, c] : per_point) {
        CHECK(std::count(online.points[t].begin(), online.points[t].end(), spid) == 1);
        const size_t members = pts.members[static_cast<size_t>(spid)].size();
        CHECK(c == std::min(n, members));
      }
    }
    auto again = knn_neighbors(data.targets, {}, tkeys, pts, {k, n}, seed);
    CHECK(again.records == online.records);
  }
  CHECK(checked > 5000);
}

TEST_CASE("record selection does not depend on batch composition") {
  Rng rng(3);
  Instance data = random_instance(rng, 40, 6, 10, false);
  auto pts = build_point_set(data.train, data.train_spids);
  std::vector<uint64_t> keys(10);
  for (size_t t = 0; t < 10; ++t) keys[t] = content_key(data.targets.row(t));
  auto batch = knn_neighbors(data.targets, {}, keys, pts, {4, 1}, 5);
  for (size_t t = 0; t < 10; ++t) {
    const std::vector<size_t> one{t};
    auto single = knn_neighbors(numeric::gather_rows<float, size_t>(data.targets, one), {},
                                std::span<const uint64_t>(&keys[t], 1), pts, {4, 1}, 5);
    CHECK(single.records[0] == batch.records[t]);
  }
}

TEST_CASE("graph invariants on 1000 random instances") {
  Rng rng(99);
  for (int inst = 0; inst < 1000; ++inst) {
    const size_t num_points = 6 + uniform_index(rng, 60);
    const size_t dim = 1 + uniform_index(rng, 8);
    const KnnConfig cfg{1 + uniform_index(rng, 5), 1 + uniform_index(rng, 2)};
    Instance data = random_instance(rng, num_points, dim, 1 + uniform_index(rng, 25),
                                    inst % 4 == 0);
    const uint64_t seed = static_cast<uint64_t>(inst);

    auto train_features = std::make_shared<FeatureMatrix>(data.train);
    SearchInputs train_search{&data.train, data.train_spids, nullptr, {}};
    FingerGraph train = build_graph(GraphRole::kTrain, train_features, train_search, cfg, seed);
    check_graph(train, cfg);

    SearchInputs val_search{&data.train, data.train_spids, &data.targets, {}};
    const GraphRole role = inst % 2 == 0 ? GraphRole::kValidation : GraphRole::kOnline;
    FingerGraph val = build_graph(role, data.all, val_search, cfg, seed, &train);
    check_graph(val, cfg);
    // Reusing the training graph equals searching again.
    FingerGraph fresh = build_graph(role, data.all, val_search, cfg, seed);
    CHECK(fresh.edges == val.edges);
  }
}

TEST_CASE("position graphs") {
  SUBCASE("zero distance ranks first") {
    PositionLabels train{{{0, 0}, {1, 0}, {0, 2}, {3, 3}, {-1, -1}}, {0, 0, 0, 0, 0}};
    const std::vector<int32_t> spids{0, 1, 2, 3, 4};
    PredictedPositions pred{{{3, 3}}, {0}};
    auto features = std::make_shared<FeatureMatrix>(6, 2);
    auto g = build_pos_graph(GraphRole::kValidation, features, train, spids, &pred,
                             PosTask::kCoordinate, {1, 1}, 2.0, 1);
    REQUIRE(g.edges.size() >= 1);
    CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{3, 5}) != g.edges.end());
    CHECK(g.constructed_degree[5] == 1);
  }
  SUBCASE("floor scale separates floors") {
    PositionLabels train{{{0, 0}, {0, 0}, {5, 5}}, {0, 5, 0}};
    const std::vector<int32_t> spids{0, 1, 2};
    auto vecs = position_vectors(train.coords_std, train.floor, PosTask::kFloor, 2.0);
    CHECK(vecs(1, 2) - vecs(0, 2) == 10.0f);
    PredictedPositions pred{{{0, 0}}, {1}};
    auto features = std::make_shared<FeatureMatrix>(4, 2);
    auto g = build_pos_graph(GraphRole::kOnline, features, train, spids, &pred, PosTask::kFloor,
                             {1, 1}, 2.0, 1);
    CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{0, 3}) != g.edges.end());
    CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{1, 3}) == g.edges.end());
  }
  SUBCASE("missing predictions") {
    PositionLabels train{{{0, 0}, {1, 0}, {2, 2}}, {0, 0, 0}};
    const std::vector<int32_t> spids{0, 1, 2};
    PredictedPositions pred{{{0, 0}}, {0}};
    auto features = std::make_shared<FeatureMatrix>(5, 2);
    CHECK_THROWS_AS(build_pos_graph(GraphRole::kValidation, features, train, spids, &pred,
                                    PosTask::kCoordinate, {1, 1}, 2.0, 1),
                    DataError);
    CHECK_THROWS_AS(build_pos_graph(GraphRole::kValidation, features, train, spids, nullptr,
                                    PosTask::kCoordinate, {1, 1}, 2.0, 1),
                    DataError);
  }
  SUBCASE("random position graphs keep the invariants and match the oracle") {
    Rng rng(8);
    for (int inst = 0; inst < 50; ++inst) {
      PositionLabels train;
      std::vector<int32_t> spids;
      for (int32_t p = 0; p < 40; ++p) {
        const Coord c{uniform_unit(rng) * 4 - 2, uniform_unit(rng) * 4 - 2};
        const int32_t f = static_cast<int32_t>(uniform_index(rng, 4));
        for (int r = 0; r < 2; ++r) {
          train.coords_std.push_back(c);
          train.floor.push_back(f);
          spids.push_back(p);
        }
      }
      PredictedPositions pred;
      for (int t = 0; t < 15; ++t) {
        pred.coords_std.push_back({uniform_unit(rng) * 4 - 2, uniform_unit(rng) * 4 - 2});
        pred.floor.push_back(static_cast<int32_t>(uniform_index(rng, 4)));
      }
      auto features = std::make_shared<FeatureMatrix>(95, 3);
      const KnnConfig cfg{4, 1};
      auto g = build_pos_graph(GraphRole::kValidation, features, train, spids, &pred,
                               PosTask::kFloor, cfg, 2.0, 3);
      check_graph(g, cfg);
      auto train_vecs = position_vectors(train.coords_std, train.floor, PosTask::kFloor, 2.0);
      auto pred_vecs = position_vectors(pred.coords_std, pred.floor, PosTask::kFloor, 2.0);
      auto pts = build_point_set(train_vecs, spids);
      auto adj = g.adjacency();
      for (size_t t = 0; t < 15; ++t) {
        std::vector<int32_t> got;
        for (uint32_t w : adj.of(80 + t)) got.push_back(spids[w]);
        std::sort(got.begin(), got.end());
        auto want = oracle_points(pred_vecs.row(t), pts, -1, 4);
        std::sort(want.begin(), want.end());
        CHECK(got == want);
      }
    }
  }
}

TEST_CASE("hetero graph assembly") {
  Rng rng(4);
  Instance data = random_instance(rng, 10, 3, 0, false);
  auto features = std::make_shared<FeatureMatrix>(data.train);
  SearchInputs s{&data.train, data.train_spids, nullptr, {}};
  auto a = build_graph(GraphRole::kTrain, features, s, {2, 1}, 1);
  auto b = build_graph(GraphRole::kTrain, features, s, {3, 1}, 2);
  auto h = assemble_hetero_graph(a, b);
  CHECK(h.rssi_edges == a.edges);
  CHECK(h.pos_edges == b.edges);
  CHECK(*h.node_features == data.train);
  CHECK(edge_view(h, true).edges == b.edges);

  FingerGraph shorter = b;
  shorter.train_mask.pop_back();
  shorter.target_mask.pop_back();
  CHECK_THROWS_WITH_AS(assemble_hetero_graph(a, shorter), doctest::Contains("alignment"),
                       DataError);
  FingerGraph other_role = b;
  other_role.role = GraphRole::kValidation;
  CHECK_THROWS_AS(assemble_hetero_graph(a, other_role), DataError);
  FingerGraph other_features = b;
  auto changed = std::make_shared<FeatureMatrix>(data.train);
  (*changed)(0, 0) += 1.0f;
  other_features.node_features = changed;
  CHECK_THROWS_AS(assemble_hetero_graph(a, other_features), DataError);
}

TEST_CASE("graph serialization") {
  fingerloc::testing::TempDir dir("graph");
  Rng rng(5);
  Instance data = random_instance(rng, 30, 5, 7, false);
  auto train_features = std::make_shared<FeatureMatrix>(data.train);
  SearchInputs ts{&data.train, data.train_spids, nullptr, {}};
  auto train = build_graph(GraphRole::kTrain, train_features, ts, {4, 1}, 3);
  SearchInputs vs{&data.train, data.train_spids, &data.targets, {}};
  auto val = build_graph(GraphRole::kValidation, data.all, vs, {4, 1}, 3, &train);

  auto same = [](const FingerGraph& x, const FingerGraph& y) {
    CHECK(x.role == y.role);
    CHECK(x.num_train == y.num_train);
    CHECK(x.edges == y.edges);
    CHECK(x.train_mask == y.train_mask);
    CHECK(x.target_mask == y.target_mask);
    CHECK(x.node_spids == y.node_spids);
    CHECK(x.constructed_degree == y.constructed_degree);
    CHECK(*x.node_features == *y.node_features);
  };

  save_graph(val, dir / "val.graph");
  same(load_graph(dir / "val.graph"), val);

  save_features(*data.all, dir / "features");
  save_graph(val, dir / "val_ref.graph", "features");
  same(load_graph(dir / "val_ref.graph"), val);
  same(load_graph(dir / "val_ref.graph", data.all), val);

  auto h = assemble_hetero_graph(val, val);
  save_hetero_graph(h, dir / "h.graph");
  auto back = load_hetero_graph(dir / "h.graph");
  CHECK(back.rssi_edges == h.rssi_edges);
  CHECK(back.pos_edges == h.pos_edges);
  CHECK(*back.node_features == *h.node_features);
  save_hetero_graph(back, dir / "h2.graph");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "h.graph.bin") == slurp(dir / "h2.graph.bin"));

  // Truncated blob.
  {
    const auto blob = dir / "val.graph.bin";
    const auto bytes = slurp(blob);
    std::ofstream out(blob, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
  }
  CHECK_THROWS_AS(load_graph(dir / "val.graph"), DataError);

  // Flipped byte.
  {
    const auto blob = dir / "val_ref.graph.bin";
    auto bytes = slurp(blob);
    bytes[bytes.size() / 2] ^= 0x40;
    std::ofstream out(blob, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_WITH_AS(load_graph(dir / "val_ref.graph"), doctest::Contains("checksum"),
                       DataError);

  // Features that do not match the recorded checksum.
  auto wrong = std::make_shared<FeatureMatrix>(*data.all);
  (*wrong)(0, 0) += 0.5f;
  CHECK_THROWS_AS(load_graph(dir / "val.graph", wrong), DataError);
}

namespace {

// Full pass of a layer stack over an explicit graph: every node's
// neighborhood is itself plus its neighbors in ascending order.
Tensor<double> full_pass(const std::vector<models::SageMeanLayer<double>*>& layers,
                         const Tensor<double>& x, const std::vector<std::vector<uint32_t>>& nbrs) {
  numeric::Neighborhoods nb;
  nb.num_src = nbrs.size();
  for (size_t v = 0; v < nbrs.size(); ++v) {
    nb.members.push_back(static_cast<uint32_t>(v));
    nb.members.insert(nb.members.end(), nbrs[v].begin(), nbrs[v].end());
    nb.offsets.push_back(static_cast<uint32_t>(nb.members.size()));
  }
  Tensor<double> h = x;
  for (auto* l : layers) h = l->forward(h, nb, nullptr);
  return h;
}

}  // namespace

TEST_CASE("isolated plans equal per-seed full passes") {
  Rng rng(6);
  for (size_t depth : {1, 2, 3}) {
    for (int inst = 0; inst < 5; ++inst) {
      Instance data = random_instance(rng, 25, 4, 12, false);
      SearchInputs ts{&data.train, data.train_spids, nullptr, {}};
      auto tf = std::make_shared<FeatureMatrix>(data.train);
      auto train = build_graph(GraphRole::kTrain, tf, ts, {3, 1}, 1);
      SearchInputs vs{&data.train, data.train_spids, &data.targets, {}};
      auto g = build_graph(GraphRole::kValidation, data.all, vs, {3, 1}, 1, &train);
      const auto adj = g.adjacency();
      const size_t nt = g.num_train;
      const Tensor<double> x = data.all->cast<double>();

      std::vector<std::unique_ptr<models::SageMeanLayer<double>>> owned;
      std::vector<models::SageMeanLayer<double>*> layers;
      std::vector<models::GraphLayer<double>*> base;
      size_t in = 4;
      for (size_t l = 0; l < depth; ++l) {
        owned.push_back(std::make_unique<models::SageMeanLayer<double>>("l", in, 6, rng));
        layers.push_back(owned.back().get());
        base.push_back(owned.back().get());
        in = 6;
      }
      models::GnnStack<double> stack(base, 0.0);
      auto levels = stack.train_levels(adj, nt, x);
      std::vector<const Tensor<double>*> tables;
      for (auto& t : levels) tables.push_back(&t);

      auto seeds = g.target_nodes();
      auto plan = make_isolated_plan(adj, nt, seeds, depth);
      auto x0 = numeric::gather_rows<double, uint32_t>(x, plan.cached[0]);
      auto out = stack.forward(plan, x0, tables, false, nullptr, nullptr);
      REQUIRE(out.rows() == seeds.size());

      for (size_t i = 0; i < seeds.size(); ++i) {
        const uint32_t s = seeds[i];
        // The isolated graph: training nodes plus this one seed.
        std::vector<uint32_t> keep(nt);
        std::iota(keep.begin(), keep.end(), 0u);
        keep.push_back(s);
        std::vector<std::vector<uint32_t>> nbrs(keep.size());
        for (size_t v = 0; v < keep.size(); ++v) {
          for (uint32_t w : adj.of(keep[v])) {
            if (w < nt) nbrs[v].push_back(w);
            if (w == s) nbrs[v].push_back(static_cast<uint32_t>(nt));
          }
        }
        auto xi = numeric::gather_rows<double, uint32_t>(x, keep);
        auto full = full_pass(layers, xi, nbrs);
        auto want = full.row(nt);
        auto got = out.row(i);
        CHECK(std::equal(want.begin(), want.end(), got.begin()));
      }

      // Same seed evaluated alone or in a different batch: same bits.
      std::vector<uint32_t> reversed(seeds.rbegin(), seeds.rend());
      auto plan_r = make_isolated_plan(adj, nt, reversed, depth);
      auto out_r = stack.forward(plan_r, numeric::gather_rows<double, uint32_t>(x, plan_r.cached[0]),
                                 tables, false, nullptr, nullptr);
      for (size_t i = 0; i < seeds.size(); ++i) {
        auto a = out.row(i);
        auto b = out_r.row(seeds.size() - 1 - i);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
      }
    }
  }
}

TEST_CASE("batch plans equal full passes on the training graph") {
  Rng rng(7);
  Instance data = random_instance(rng, 30, 4, 0, false);
  SearchInputs ts{&data.train, data.train_spids, nullptr, {}};
  auto tf = std::make_shared<FeatureMatrix>(data.train);
  auto g = build_graph(GraphRole::kTrain, tf, ts, {3, 1}, 1);
  const auto adj = g.adjacency();
  const Tensor<double> x = data.train.cast<double>();
  models::SageMeanLayer<double> l0("a", 4, 5, rng), l1("b", 5, 5, rng);
  models::GnnStack<double> stack({&l0, &l1}, 0.0);
  std::vector<std::vector<uint32_t>> nbrs(g.num_nodes());
  for (size_t v = 0; v < nbrs.size(); ++v) {
    auto a = adj.of(v);
    nbrs[v].assign(a.begin(), a.end());
  }
  auto full = full_pass({&l0, &l1}, x, nbrs);
  const std::vector<uint32_t> seeds{5, 0, 17, 3};
  auto plan = make_batch_plan(adj, seeds, 2);
  CHECK(plan.fresh[0].empty());
  auto out = stack.forward(plan, numeric::gather_rows<double, uint32_t>(x, plan.cached[0]), {},
                           false, nullptr, nullptr);
  for (size_t i = 0; i < seeds.size(); ++i) {
    auto a = out.row(i);
    auto b = full.row(seeds[i]);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}
