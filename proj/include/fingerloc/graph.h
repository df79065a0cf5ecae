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

#ifndef FINGERLOC_GRAPH_H_
#define FINGERLOC_GRAPH_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fingerloc/dataset.h"
#include "fingerloc/numeric/tensor.h"

namespace fingerloc::graph {

using dataset::Coord;
using dataset::FeatureMatrix;

enum class GraphRole : uint8_t { kTrain = 0, kValidation = 1, kOnline = 2 };
std::string to_string(GraphRole role);
GraphRole role_from_string(const std::string& s);

// A sampling point is identified by its exact position label.
struct PositionLabel {
  double longitude = 0.0;
  double latitude = 0.0;
  int floor = 0;
  int building = 0;

  auto operator<=>(const PositionLabel&) const = default;
};

// Sampling points in one search space: mean feature vector per point plus
// the training records that belong to it.
struct SamplingPointSet {
  std::vector<int32_t> spids;                  // ascending
  FeatureMatrix features;                      // [points x dim]
  std::vector<std::vector<uint32_t>> members;  // training record indices per point

  size_t size() const { return spids.size(); }
  size_t dim() const { return features.cols(); }
};

struct Aggregation {
  std::vector<int32_t> record_spids;   // per input record
  std::vector<PositionLabel> labels;   // per SPID
  SamplingPointSet points;
};

// Sorts the distinct position labels, numbers them 0.. in that order, and
// averages the features of each point's records.
Aggregation aggregate_sampling_points(const FeatureMatrix& features,
                                      std::span<const PositionLabel> positions);

// Groups records by SPID and averages `features` within each group.
SamplingPointSet build_point_set(const FeatureMatrix& features,
                                 std::span<const int32_t> record_spids);

struct KnnConfig {
  size_t k = 4;
  size_t n = 1;
};

struct NeighborSets {
  std::vector<std::vector<int32_t>> points;    // selected SPIDs per target, nearest first
  std::vector<std::vector<uint32_t>> records;  // selected training records per target
};

// Constrained KNN. For each target: the K+1 nearest points (ties to the
// lower SPID), minus the target's own point, truncated to K; then up to N
// records drawn uniformly from each kept point. target_spids may be empty;
// negative entries mean "no sampling point". target_keys seed the record
// draw so selections do not depend on batch composition.
NeighborSets knn_neighbors(const FeatureMatrix& targets, std::span<const int32_t> target_spids,
                           std::span<const uint64_t> target_keys,
                           const SamplingPointSet& points, const KnnConfig& config,
                           uint64_t seed);

// Key for the record draw of a non-training target: a hash of its search
// vector. Training targets use their record index.
uint64_t content_key(std::span<const float> row);

using Edge = std::pair<uint32_t, uint32_t>;  // stored once with first < second

// Symmetric CSR adjacency.
struct Adjacency {
  std::vector<uint32_t> offsets{0};
  std::vector<uint32_t> neighbors;

  size_t num_nodes() const { return offsets.size() - 1; }
  std::span<const uint32_t> of(size_t v) const {
    return {neighbors.data() + offsets[v], neighbors.data() + offsets[v + 1]};
  }
};
Adjacency make_adjacency(size_t num_nodes, std::span<const Edge> edges);

// Nodes [0, num_train) are training nodes; the rest are validation or
// online targets. Node features are always the preprocessed RSSI.
struct FingerGraph {
  GraphRole role = GraphRole::kTrain;
  std::shared_ptr<const FeatureMatrix> node_features;
  size_t num_train = 0;
  std::vector<Edge> edges;  // canonical, sorted, unique
  std::vector<uint8_t> train_mask;
  std::vector<uint8_t> target_mask;
  std::vector<int32_t> node_spids;
  std::vector<uint32_t> constructed_degree;  // neighbors selected for each target

  size_t num_nodes() const { return train_mask.size(); }
  Adjacency adjacency() const { return make_adjacency(num_nodes(), edges); }
  std::vector<uint32_t> target_nodes() const;
};

struct HeteroGraph {
  GraphRole role = GraphRole::kTrain;
  std::shared_ptr<const FeatureMatrix> node_features;
  size_t num_train = 0;
  std::vector<Edge> rssi_edges;
  std::vector<Edge> pos_edges;
  std::vector<uint8_t> train_mask;
  std::vector<uint8_t> target_mask;
  std::vector<int32_t> node_spids;

  size_t num_nodes() const { return train_mask.size(); }
  std::vector<uint32_t> target_nodes() const;
};

// Search vectors of the training records and (for validation / online
// roles) of the targets, all in one feature space.
struct SearchInputs {
  const FeatureMatrix* train = nullptr;
  std::span<const int32_t> train_spids;
  const FeatureMatrix* targets = nullptr;
  std::span<const int32_t> target_spids;  // optional
};

// Builds one inductive graph. Training targets link only to training nodes
// of other sampling points; validation / online targets link only to
// training nodes. When `train_graph` is given its training edges are reused
// instead of being searched again.
FingerGraph build_graph(GraphRole role, std::shared_ptr<const FeatureMatrix> node_features,
                        const SearchInputs& search, const KnnConfig& config, uint64_t seed,
                        const FingerGraph* train_graph = nullptr);

enum class PosTask : uint8_t { kCoordinate = 0, kFloor = 1 };

// True labels of training records.
struct PositionLabels {
  std::vector<Coord> coords_std;
  std::vector<int32_t> floor;
};

// Positions estimated for non-training nodes by the coarse localizer. Kept
// a distinct type from PositionLabels so true target labels cannot be
// passed to position-graph construction.
struct PredictedPositions {
  std::vector<Coord> coords_std;
  std::vector<int32_t> floor;

  size_t size() const { return coords_std.size(); }
};

// Search vectors in position space: (x, y) or (x, y, floor_scale * floor).
FeatureMatrix position_vectors(std::span<const Coord> coords, std::span<const int32_t> floors,
                               PosTask task, double floor_scale);

FingerGraph build_pos_graph(GraphRole role, std::shared_ptr<const FeatureMatrix> node_features,
                            const PositionLabels& train_positions,
                            std::span<const int32_t> train_spids,
                            const PredictedPositions* target_positions, PosTask task,
                            const KnnConfig& config, double floor_scale, uint64_t seed,
                            const FingerGraph* train_graph = nullptr);

HeteroGraph assemble_hetero_graph(const FingerGraph& rssi_graph, const FingerGraph& pos_graph);

// Views a hetero graph's edge set as a plain graph (for sharing code paths).
FingerGraph edge_view(const HeteroGraph& g, bool pos_edges);

struct InvariantReport {
  size_t target_target_edges = 0;  // edges joining two non-training nodes
  size_t same_spid_edges = 0;
  size_t asymmetric_entries = 0;   // adjacency entries without their reverse
  size_t degree_violations = 0;    // targets with more than K*N constructed neighbors
  size_t non_train_in_train_graph = 0;

  bool ok() const {
    return target_target_edges == 0 && same_spid_edges == 0 && asymmetric_entries == 0 &&
           degree_violations == 0 && non_train_in_train_graph == 0;
  }
};
InvariantReport check_invariants(const FingerGraph& g, const KnnConfig& config);

// Graph files are a manifest plus a sibling "<name>.bin" blob. Edges are
// stored once per pair in canonical order (u < v) as little-endian u32
// pairs, one section per edge type. Node features are either embedded or
// referenced by a path relative to the manifest; a CRC of the feature bytes
// is always recorded and checked on load.
inline constexpr int kGraphFormat = 1;

uint32_t features_crc(const FeatureMatrix& f);
void save_features(const FeatureMatrix& f, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

void save_graph(const FingerGraph& g, const std::filesystem::path& path,
                const std::string& features_ref = "");
FingerGraph load_graph(const std::filesystem::path& path,
                       std::shared_ptr<const FeatureMatrix> features = nullptr);

void save_hetero_graph(const HeteroGraph& g, const std::filesystem::path& path,
                       const std::string& features_ref = "");
HeteroGraph load_hetero_graph(const std::filesystem::path& path,
                              std::shared_ptr<const FeatureMatrix> features = nullptr);

}  // namespace fingerloc::graph

#endif  // FINGERLOC_GRAPH_H_
