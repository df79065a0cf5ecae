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

#include "fingerloc/graph.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <map>
#include <numeric>

#include "fingerloc/error.h"
#include "fingerloc/numeric/kernels.h"
#include "fingerloc/rng.h"

namespace fingerloc::graph {

std::string to_string(GraphRole role) {
  switch (role) {
    case GraphRole::kTrain:
      return "train";
    case GraphRole::kValidation:
      return "validation";
    case GraphRole::kOnline:
      return "online";
  }
  return "unknown";
}

GraphRole role_from_string(const std::string& s) {
  if (s == "train") return GraphRole::kTrain;
  if (s == "validation") return GraphRole::kValidation;
  if (s == "online") return GraphRole::kOnline;
  throw DataError("unknown graph role '" + s + "'");
}

SamplingPointSet build_point_set(const FeatureMatrix& features,
                                 std::span<const int32_t> record_spids) {
  if (features.rows() != record_spids.size()) {
    throw ShapeError("build_point_set: " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(record_spids.size()) + " SPIDs");
  }
  std::map<int32_t, std::vector<uint32_t>> groups;
  for (size_t i = 0; i < record_spids.size(); ++i) {
    if (record_spids[i] < 0) {
      throw DataError("training record " + std::to_string(i) + " has no sampling point");
    }
    groups[record_spids[i]].push_back(static_cast<uint32_t>(i));
  }
  const size_t dim = features.cols();
  SamplingPointSet out;
  out.features = FeatureMatrix(groups.size(), dim);
  std::vector<double> acc(dim);
  size_t p = 0;
  for (auto& [spid, members] : groups) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (uint32_t r : members) {
      auto row = features.row(r);
      for (size_t c = 0; c < dim; ++c) acc[c] += row[c];
    }
    auto dst = out.features.row(p);
    const double inv = 1.0 / static_cast<double>(members.size());
    for (size_t c = 0; c < dim; ++c) dst[c] = static_cast<float>(acc[c] * inv);
    out.spids.push_back(spid);
    out.members.push_back(std::move(members));
    ++p;
  }
  return out;
}

Aggregation aggregate_sampling_points(const FeatureMatrix& features,
                                      std::span<const PositionLabel> positions) {
  if (positions.empty()) throw DataError("aggregate_sampling_points: no records");
  if (features.rows() != positions.size()) {
    throw ShapeError("aggregate_sampling_points: feature rows and labels differ in count");
  }
  std::vector<PositionLabel> labels(positions.begin(), positions.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  Aggregation out;
  out.record_spids.resize(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) {
    auto it = std::lower_bound(labels.begin(), labels.end(), positions[i]);
    out.record_spids[i] = static_cast<int32_t>(it - labels.begin());
  }
  out.points = build_point_set(features, out.record_spids);
  out.labels = std::move(labels);
  return out;
}

uint64_t content_key(std::span<const float> row) {
  uint64_t h = 0x6a09e667f3bcc908ULL;
  for (float v : row) h = splitmix64(h ^ std::bit_cast<uint32_t>(v));
  return h;
}

namespace {

constexpr size_t kQueryChunk = 256;

// Indices of the `count` smallest distances, ordered by (distance, index).
void nearest(std::span<const double> dist, size_t count, std::vector<uint32_t>& idx) {
  idx.resize(dist.size());
  std::iota(idx.begin(), idx.end(), 0u);
  auto less = [&](uint32_t a, uint32_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    less);
  idx.resize(count);
}

}  // namespace

NeighborSets knn_neighbors(const FeatureMatrix& targets, std::span<const int32_t> target_spids,
                           std::span<const uint64_t> target_keys,
                           const SamplingPointSet& points, const KnnConfig& config,
                           uint64_t seed) {
  if (config.k == 0 || config.n == 0) throw ConfigError("knn: k and n must be positive");
  const size_t nt = targets.rows();
  const size_t np = points.size();
  if (np < config.k + 1) {
    throw DataError("insufficient population: " + std::to_string(np) +
                    " sampling points, need at least k+1 = " + std::to_string(config.k + 1));
  }
  if (nt > 0 && targets.cols() != points.dim()) {
    throw ShapeError("knn: targets have " + std::to_string(targets.cols()) +
                     " features, sampling points have " + std::to_string(points.dim()));
  }
  if (!target_spids.empty() && target_spids.size() != nt) {
    throw ShapeError("knn: target SPID count does not match targets");
  }
  if (target_keys.size() != nt) throw ShapeError("knn: target key count does not match targets");

  NeighborSets out;
  out.points.resize(nt);
  out.records.resize(nt);
  const size_t want = config.k + 1;
  std::vector<double> dist;
  for (size_t begin = 0; begin < nt; begin += kQueryChunk) {
    const size_t count = std::min(kQueryChunk, nt - begin);
    dist.assign(count * np, 0.0);
    kernels::parallel::squared_distances(count, np, points.dim(), targets.row(begin).data(),
                                         points.features.data(), dist.data());
#pragma omp parallel for schedule(static)
    for (size_t q = 0; q < count; ++q) {
      const size_t t = begin + q;
      std::vector<uint32_t> idx;
      nearest({dist.data() + q * np, np}, want, idx);
      const int32_t own = target_spids.empty() ? -1 : target_spids[t];
      auto& chosen = out.points[t];
      for (uint32_t p : idx) {
        if (points.spids[p] == own) continue;
        if (chosen.size() == config.k) break;
        chosen.push_back(points.spids[p]);
      }
      auto& recs = out.records[t];
      for (int32_t spid : chosen) {
        const size_t p = static_cast<size_t>(
            std::lower_bound(points.spids.begin(), points.spids.end(), spid) -
            points.spids.begin());
        const auto& members = points.members[p];
        if (members.size() <= config.n) {
          recs.insert(recs.end(), members.begin(), members.end());
          continue;
        }
        std::vector<uint32_t> pool = members;
        Rng rng(derive_seed(seed, {target_keys[t], static_cast<uint64_t>(spid)}));
        for (size_t i = 0; i < config.n; ++i) {
          const size_t j = i + uniform_index(rng, pool.size() - i);
          std::swap(pool[i], pool[j]);
          recs.push_back(pool[i]);
        }
      }
    }
  }
  return out;
}

Adjacency make_adjacency(size_t num_nodes, std::span<const Edge> edges) {
  Adjacency adj;
  std::vector<uint32_t> degree(num_nodes, 0);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) throw DataError("edge endpoint out of range");
    ++degree[u];
    ++degree[v];
  }
  adj.offsets.assign(num_nodes + 1, 0);
  for (size_t i = 0; i < num_nodes; ++i) adj.offsets[i + 1] = adj.offsets[i] + degree[i];
  adj.neighbors.resize(adj.offsets.back());
  std::vector<uint32_t> fill(adj.offsets.begin(), adj.offsets.end() - 1);
  for (const auto& [u, v] : edges) {
    adj.neighbors[fill[u]++] = v;
    adj.neighbors[fill[v]++] = u;
  }
  for (size_t i = 0; i < num_nodes; ++i) {
    std::sort(adj.neighbors.begin() + adj.offsets[i], adj.neighbors.begin() + adj.offsets[i + 1]);
  }
  return adj;
}

namespace {

std::vector<uint32_t> mask_indices(const std::vector<uint8_t>& mask) {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<uint32_t>(i));
  }
  return out;
}

void canonicalize(std::vector<Edge>& edges) {
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

// Links target node ids to the selected training records.
void link(const NeighborSets& sets, size_t node_offset, std::vector<Edge>& edges,
          std::vector<uint32_t>& degree) {
  for (size_t t = 0; t < sets.records.size(); ++t) {
    const auto node = static_cast<uint32_t>(node_offset + t);
    degree[node] = static_cast<uint32_t>(sets.records[t].size());
    for (uint32_t r : sets.records[t]) {
      if (r == node) throw DataError("knn selected a node as its own neighbor");
      edges.emplace_back(std::min(node, r), std::max(node, r));
    }
  }
}

}  // namespace

std::vector<uint32_t> FingerGraph::target_nodes() const { return mask_indices(target_mask); }
std::vector<uint32_t> HeteroGraph::target_nodes() const { return mask_indices(target_mask); }

FingerGraph build_graph(GraphRole role, std::shared_ptr<const FeatureMatrix> node_features,
                        const SearchInputs& search, const KnnConfig& config, uint64_t seed,
                        const FingerGraph* train_graph) {
  if (search.train == nullptr) throw DataError("build_graph: training search vectors missing");
  const size_t n_train = search.train->rows();
  if (search.train_spids.size() != n_train) {
    throw ShapeError("build_graph: training SPID count does not match training rows");
  }
  size_t n_target = 0;
  if (role != GraphRole::kTrain) {
    if (search.targets == nullptr) throw DataError("build_graph: target search vectors missing");
    n_target = search.targets->rows();
    if (!search.target_spids.empty() && search.target_spids.size() != n_target) {
      throw ShapeError("build_graph: target SPID count does not match target rows");
    }
  }
  const size_t total = n_train + n_target;
  if (!node_features || node_features->rows() != total) {
    throw ShapeError("build_graph: node features must have " + std::to_string(total) + " rows");
  }

  FingerGraph g;
  g.role = role;
  g.node_features = std::move(node_features);
  g.num_train = n_train;
  g.train_mask.assign(total, 0);
  g.target_mask.assign(total, 0);
  std::fill(g.train_mask.begin(), g.train_mask.begin() + static_cast<std::ptrdiff_t>(n_train), 1);
  if (role == GraphRole::kTrain) {
    std::fill(g.target_mask.begin(), g.target_mask.end(), 1);
  } else {
    std::fill(g.target_mask.begin() + static_cast<std::ptrdiff_t>(n_train), g.target_mask.end(),
              1);
  }
  g.node_spids.assign(search.train_spids.begin(), search.train_spids.end());
  g.node_spids.resize(total, -1);
  if (!search.target_spids.empty()) {
    std::copy(search.target_spids.begin(), search.target_spids.end(),
              g.node_spids.begin() + static_cast<std::ptrdiff_t>(n_train));
  }
  g.constructed_degree.assign(total, 0);

  const SamplingPointSet points = build_point_set(*search.train, search.train_spids);

  if (train_graph != nullptr && role != GraphRole::kTrain) {
    if (train_graph->role != GraphRole::kTrain || train_graph->num_train != n_train) {
      throw DataError("build_graph: reused training graph does not match the training set");
    }
    g.edges = train_graph->edges;
    std::copy(train_graph->constructed_degree.begin(), train_graph->constructed_degree.end(),
              g.constructed_degree.begin());
  } else {
    std::vector<uint64_t> keys(n_train);
    std::iota(keys.begin(), keys.end(), uint64_t{0});
    const NeighborSets sets =
        knn_neighbors(*search.train, search.train_spids, keys, points, config, seed);
    link(sets, 0, g.edges, g.constructed_degree);
  }

  if (role != GraphRole::kTrain && n_target > 0) {
    std::vector<uint64_t> keys(n_target);
    for (size_t t = 0; t < n_target; ++t) keys[t] = content_key(search.targets->row(t));
    const NeighborSets sets =
        knn_neighbors(*search.targets, search.target_spids, keys, points, config, seed);
    link(sets, n_train, g.edges, g.constructed_degree);
  }
  canonicalize(g.edges);
  return g;
}

FeatureMatrix position_vectors(std::span<const Coord> coords, std::span<const int32_t> floors,
                               PosTask task, double floor_scale) {
  const size_t dim = task == PosTask::kCoordinate ? 2 : 3;
  if (task == PosTask::kFloor && floors.size() != coords.size()) {
    throw ShapeError("position_vectors: floor count does not match coordinate count");
  }
  FeatureMatrix out(coords.size(), dim);
  for (size_t i = 0; i < coords.size(); ++i) {
    out(i, 0) = static_cast<float>(coords[i][0]);
    out(i, 1) = static_cast<float>(coords[i][1]);
    if (dim == 3) out(i, 2) = static_cast<float>(floor_scale * floors[i]);
  }
  return out;
}

FingerGraph build_pos_graph(GraphRole role, std::shared_ptr<const FeatureMatrix> node_features,
                            const PositionLabels& train_positions,
                            std::span<const int32_t> train_spids,
                            const PredictedPositions* target_positions, PosTask task,
                            const KnnConfig& config, double floor_scale, uint64_t seed,
                            const FingerGraph* train_graph) {
  if (!node_features) throw DataError("build_pos_graph: node features missing");
  const size_t n_train = train_positions.coords_std.size();
  const FeatureMatrix train_vecs =
      position_vectors(train_positions.coords_std, train_positions.floor, task, floor_scale);
  FeatureMatrix target_vecs;
  SearchInputs search;
  search.train = &train_vecs;
  search.train_spids = train_spids;
  if (role != GraphRole::kTrain) {
    const size_t n_target = node_features->rows() - std::min(node_features->rows(), n_train);
    const size_t have = target_positions ? target_positions->size() : 0;
    if (have != n_target) {
      throw DataError("build_pos_graph: missing prediction for target node " +
                      std::to_string(n_train + std::min(have, n_target)) + " (" +
                      std::to_string(have) + " predictions for " + std::to_string(n_target) +
                      " targets)");
    }
    target_vecs =
        position_vectors(target_positions->coords_std, target_positions->floor, task, floor_scale);
    search.targets = &target_vecs;
  }
  return build_graph(role, std::move(node_features), search, config, seed, train_graph);
}

HeteroGraph assemble_hetero_graph(const FingerGraph& rssi_graph, const FingerGraph& pos_graph) {
  auto fail = [](const std::string& what) { throw DataError("alignment error: " + what); };
  if (rssi_graph.num_nodes() != pos_graph.num_nodes()) {
    fail("node counts differ (" + std::to_string(rssi_graph.num_nodes()) + " vs " +
         std::to_string(pos_graph.num_nodes()) + ")");
  }
  if (rssi_graph.role != pos_graph.role) fail("roles differ");
  if (rssi_graph.num_train != pos_graph.num_train) fail("training node counts differ");
  if (rssi_graph.train_mask != pos_graph.train_mask) fail("train masks differ");
  if (rssi_graph.target_mask != pos_graph.target_mask) fail("target masks differ");
  if (!rssi_graph.node_features || !pos_graph.node_features) fail("node features missing");
  if (rssi_graph.node_features != pos_graph.node_features &&
      !(*rssi_graph.node_features == *pos_graph.node_features)) {
    fail("node features differ");
  }
  HeteroGraph h;
  h.role = rssi_graph.role;
  h.node_features = rssi_graph.node_features;
  h.num_train = rssi_graph.num_train;
  h.rssi_edges = rssi_graph.edges;
  h.pos_edges = pos_graph.edges;
  h.train_mask = rssi_graph.train_mask;
  h.target_mask = rssi_graph.target_mask;
  h.node_spids = rssi_graph.node_spids;
  return h;
}

FingerGraph edge_view(const HeteroGraph& h, bool pos_edges) {
  FingerGraph g;
  g.role = h.role;
  g.node_features = h.node_features;
  g.num_train = h.num_train;
  g.edges = pos_edges ? h.pos_edges : h.rssi_edges;
  g.train_mask = h.train_mask;
  g.target_mask = h.target_mask;
  g.node_spids = h.node_spids;
  return g;
}

InvariantReport check_invariants(const FingerGraph& g, const KnnConfig& config) {
  InvariantReport r;
  const size_t n = g.num_nodes();
  for (const auto& [u, v] : g.edges) {
    if (u >= n || v >= n) {
      ++r.asymmetric_entries;
      continue;
    }
    if (!g.train_mask[u] && !g.train_mask[v]) ++r.target_target_edges;
    if (g.node_spids.size() == n && g.node_spids[u] >= 0 && g.node_spids[u] == g.node_spids[v]) {
      ++r.same_spid_edges;
    }
  }
  const Adjacency adj = g.adjacency();
  for (size_t u = 0; u < n; ++u) {
    for (uint32_t v : adj.of(u)) {
      auto back = adj.of(v);
      if (!std::binary_search(back.begin(), back.end(), static_cast<uint32_t>(u))) {
        ++r.asymmetric_entries;
      }
    }
  }
  const size_t bound = config.k * config.n;
  for (size_t v = 0; v < n; ++v) {
    if (!g.target_mask[v]) continue;
    const size_t built = v < g.constructed_degree.size() ? g.constructed_degree[v] : 0;
    // Non-training targets only ever gain edges they built themselves.
    const size_t actual = g.train_mask[v] ? built : adj.of(v).size();
    if (built > bound || actual > bound) ++r.degree_violations;
  }
  if (g.role == GraphRole::kTrain) {
    r.non_train_in_train_graph =
        static_cast<size_t>(std::count(g.train_mask.begin(), g.train_mask.end(), uint8_t{0}));
  }
  return r;
}

}  // namespace fingerloc::graph
