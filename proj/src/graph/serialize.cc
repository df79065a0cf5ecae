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

#include <span>

#include "fingerloc/error.h"
#include "fingerloc/graph.h"
#include "fingerloc/io.h"

namespace fingerloc::graph {

namespace fs = std::filesystem;

uint32_t features_crc(const FeatureMatrix& f) {
  return io::crc32({reinterpret_cast<const uint8_t*>(f.data()), f.size() * sizeof(float)});
}

void save_features(const FeatureMatrix& f, const fs::path& path) {
  io::Manifest m("features");
  const std::string blob = path.filename().string() + ".bin";
  io::BlobWriter w(path.parent_path() / blob, blob);
  m.add_section(w.write<float>("features", f.shape(), f.values()));
  w.close();
  m.save(path);
}

FeatureMatrix load_features(const fs::path& path) {
  const io::Manifest m = io::Manifest::load(path, "features");
  const io::Section& s = m.section("features");
  return FeatureMatrix::from(s.shape, io::read_section<float>(path.parent_path(), s));
}

namespace {

std::vector<uint32_t> flatten(const std::vector<Edge>& edges) {
  std::vector<uint32_t> flat;
  flat.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    flat.push_back(u);
    flat.push_back(v);
  }
  return flat;
}

std::vector<Edge> unflatten(const std::vector<uint32_t>& flat, size_t num_nodes,
                            const std::string& what) {
  if (flat.size() % 2 != 0) throw DataError(what + ": odd edge buffer length");
  std::vector<Edge> edges(flat.size() / 2);
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = {flat[2 * i], flat[2 * i + 1]};
    if (edges[i].first >= edges[i].second || edges[i].second >= num_nodes) {
      throw DataError(what + ": edge " + std::to_string(i) + " is not canonical or out of range");
    }
    if (i > 0 && !(edges[i - 1] < edges[i])) {
      throw DataError(what + ": edges are not sorted and unique");
    }
  }
  return edges;
}

struct Common {
  GraphRole role;
  size_t num_train;
  std::shared_ptr<const FeatureMatrix> features;
  std::vector<uint8_t> train_mask;
  std::vector<uint8_t> target_mask;
  std::vector<int32_t> node_spids;
};

void write_common(io::Manifest& m, io::BlobWriter& w, const Common& c,
                  const std::string& features_ref) {
  m.set("graph_format", std::to_string(kGraphFormat));
  m.set("role", to_string(c.role));
  m.set("num_nodes", std::to_string(c.train_mask.size()));
  m.set("num_train", std::to_string(c.num_train));
  m.set("features_crc", std::to_string(features_crc(*c.features)));
  if (features_ref.empty()) {
    m.add_section(w.write<float>("features", c.features->shape(), c.features->values()));
  } else {
    m.set("features_ref", features_ref);
  }
  m.add_section(w.write<uint8_t>("train_mask", {c.train_mask.size()}, c.train_mask));
  m.add_section(w.write<uint8_t>("target_mask", {c.target_mask.size()}, c.target_mask));
  m.add_section(w.write<int32_t>("node_spids", {c.node_spids.size()}, c.node_spids));
}

Common read_common(const io::Manifest& m, const fs::path& path,
                   std::shared_ptr<const FeatureMatrix> features) {
  const std::string format = m.get("graph_format");
  if (format != std::to_string(kGraphFormat)) {
    throw DataError("graph format version " + format + " is not supported (expected " +
                    std::to_string(kGraphFormat) + ")");
  }
  const fs::path dir = path.parent_path();
  Common c;
  c.role = role_from_string(m.get("role"));
  const size_t num_nodes = std::stoull(m.get("num_nodes"));
  c.num_train = std::stoull(m.get("num_train"));
  const auto crc = static_cast<uint32_t>(std::stoul(m.get("features_crc")));
  if (!features) {
    if (m.has_section("features")) {
      const io::Section& s = m.section("features");
      features = std::make_shared<FeatureMatrix>(
          FeatureMatrix::from(s.shape, io::read_section<float>(dir, s)));
    } else {
      features = std::make_shared<FeatureMatrix>(load_features(dir / m.get("features_ref")));
    }
  }
  if (features->rows() != num_nodes || features_crc(*features) != crc) {
    throw DataError("checksum failure: node features do not match graph " + path.string());
  }
  c.features = std::move(features);
  c.train_mask = io::read_section<uint8_t>(dir, m.section("train_mask"));
  c.target_mask = io::read_section<uint8_t>(dir, m.section("target_mask"));
  c.node_spids = io::read_section<int32_t>(dir, m.section("node_spids"));
  if (c.train_mask.size() != num_nodes || c.target_mask.size() != num_nodes ||
      c.node_spids.size() != num_nodes) {
    throw DataError("graph " + path.string() + ": mask lengths do not match node count");
  }
  return c;
}

std::string blob_name(const fs::path& path) { return path.filename().string() + ".bin"; }

}  // namespace

void save_graph(const FingerGraph& g, const fs::path& path, const std::string& features_ref) {
  io::Manifest m("graph");
  io::BlobWriter w(path.parent_path() / blob_name(path), blob_name(path));
  write_common(m, w, {g.role, g.num_train, g.node_features, g.train_mask, g.target_mask,
                      g.node_spids},
               features_ref);
  m.add_section(w.write<uint32_t>("edges", {g.edges.size(), 2}, flatten(g.edges)));
  m.add_section(w.write<uint32_t>("constructed_degree", {g.constructed_degree.size()},
                                  g.constructed_degree));
  w.close();
  m.save(path);
}

FingerGraph load_graph(const fs::path& path, std::shared_ptr<const FeatureMatrix> features) {
  const io::Manifest m = io::Manifest::load(path, "graph");
  Common c = read_common(m, path, std::move(features));
  const fs::path dir = path.parent_path();
  FingerGraph g;
  g.role = c.role;
  g.num_train = c.num_train;
  g.node_features = std::move(c.features);
  g.train_mask = std::move(c.train_mask);
  g.target_mask = std::move(c.target_mask);
  g.node_spids = std::move(c.node_spids);
  g.edges = unflatten(io::read_section<uint32_t>(dir, m.section("edges")), g.num_nodes(),
                      path.string());
  g.constructed_degree = io::read_section<uint32_t>(dir, m.section("constructed_degree"));
  return g;
}

void save_hetero_graph(const HeteroGraph& g, const fs::path& path,
                       const std::string& features_ref) {
  io::Manifest m("hetero-graph");
  io::BlobWriter w(path.parent_path() / blob_name(path), blob_name(path));
  write_common(m, w, {g.role, g.num_train, g.node_features, g.train_mask, g.target_mask,
                      g.node_spids},
               features_ref);
  m.add_section(w.write<uint32_t>("rssi_edges", {g.rssi_edges.size(), 2}, flatten(g.rssi_edges)));
  m.add_section(w.write<uint32_t>("pos_edges", {g.pos_edges.size(), 2}, flatten(g.pos_edges)));
  w.close();
  m.save(path);
}

HeteroGraph load_hetero_graph(const fs::path& path, std::shared_ptr<const FeatureMatrix> features) {
  const io::Manifest m = io::Manifest::load(path, "hetero-graph");
  Common c = read_common(m, path, std::move(features));
  const fs::path dir = path.parent_path();
  HeteroGraph g;
  g.role = c.role;
  g.num_train = c.num_train;
  g.node_features = std::move(c.features);
  g.train_mask = std::move(c.train_mask);
  g.target_mask = std::move(c.target_mask);
  g.node_spids = std::move(c.node_spids);
  g.rssi_edges = unflatten(io::read_section<uint32_t>(dir, m.section("rssi_edges")),
                           g.num_nodes(), path.string());
  g.pos_edges = unflatten(io::read_section<uint32_t>(dir, m.section("pos_edges")), g.num_nodes(),
                          path.string());
  return g;
}

}  // namespace fingerloc::graph
