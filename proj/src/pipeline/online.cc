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

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fingerloc/error.h"
#include "fingerloc/io.h"
#include "fingerloc/models/checkpoint.h"
#include "fingerloc/pipeline.h"
#include "fingerloc/rng.h"
#include "pipeline_internal.h"

namespace fingerloc::pipeline {

namespace fs = std::filesystem;
using namespace detail;
using graph::GraphRole;
using models::HgnnTask;

namespace {

void require_trained(const PipelineState& s) {
  const Models& m = s.models;
  if (!m.regressor || !m.classifier || !m.hgnn_coord || !m.hgnn_floor || !s.coord_search ||
      !s.floor_search || (s.mode != Ablation::kNoSfe && (!m.sfe_coord || !m.sfe_floor))) {
    throw DataError("pipeline state is not fully trained");
  }
}

dataset::FeatureMatrix normalize_all(std::span<const dataset::RawRecord> records,
                                     const dataset::DatasetDescriptor& d) {
  dataset::FeatureMatrix f(records.size(), d.ap_count);
  for (size_t i = 0; i < records.size(); ++i) {
    const auto row = dataset::normalize_rssi(records[i].rssi, d);
    std::copy(row.begin(), row.end(), f.row(i).begin());
  }
  return f;
}

Prediction to_prediction(const PipelineState& s, dataset::Coord coords_std, int32_t floor_class,
                         int32_t building) {
  const dataset::Coord m = s.data.scaler.inverse_transform(coords_std);
  return {building, s.data.floors.decode(floor_class) - s.data.floor_offset, m[0], m[1]};
}

std::vector<int> original_floor_labels(const Preprocessed& d) {
  std::vector<int> out;
  for (int l : d.floors.labels()) out.push_back(l - d.floor_offset);
  return out;
}

}  // namespace

OnlineResult run_online(const PipelineState& s, const dataset::FeatureMatrix& features,
                        const models::OnlineAdapter<float>* adapter) {
  require_trained(s);
  if (features.cols() != s.data.descriptor.ap_count) {
    throw DataError("descriptor mismatch: online records have " + std::to_string(features.cols()) +
                    " features, the trained pipeline expects " +
                    std::to_string(s.data.descriptor.ap_count));
  }
  const PipelineConfig& c = s.config;
  OnlineResult out;
  if (features.rows() == 0) return out;
  const auto nodes = stack_features(s.data.train.features, features);

  // Branch 1 on the universal graph.
  graph::SearchInputs in{&s.data.train.features, s.data.train.spid, &features, {}};
  out.graphs.universal = graph::build_graph(GraphRole::kOnline, nodes, in, c.knn,
                                            stream_seed(c, Stream::kUniversalGraph, 0),
                                            &s.universal_train);
  const std::vector<uint32_t> targets = out.graphs.universal.target_nodes();
  out.graphs.coarse = coarse_positions(s, out.graphs.universal, targets);
  std::vector<int32_t> building(targets.size(), 0);
  if (s.models.classifier->config().has_building_head()) {
    const auto cls = models::coarse_predict(*s.models.classifier, out.graphs.universal, targets,
                                            c.eval_chunk);
    building = evaluation::argmax_rows(cls.building_logits);
  }

  // Branch 2 and 3: task graphs, then the heterogeneous GNNs.
  for (HgnnTask task : {HgnnTask::kCoordinate, HgnnTask::kFloor}) {
    const bool coords = task == HgnnTask::kCoordinate;
    const TaskGraphs& tg = coords ? s.coord : s.floor;
    const auto rssi = rssi_graph(s, task, GraphRole::kOnline, nodes, &features, {}, &tg.rssi_train);
    const auto pos = pos_graph(s, task, GraphRole::kOnline, nodes, &out.graphs.coarse, &tg.pos_train);
    (coords ? out.graphs.coord : out.graphs.floor) = combine(rssi, pos, s.mode);
  }
  const numeric::Tensor<float> xy = models::hgnn_predict(*s.models.hgnn_coord, out.graphs.coord, targets,
                                                adapter, c.eval_chunk);
  const numeric::Tensor<float> floor_logits = models::hgnn_predict(*s.models.hgnn_floor, out.graphs.floor,
                                                          targets, nullptr, c.eval_chunk);
  const std::vector<int32_t> floors = evaluation::argmax_rows(floor_logits);
  for (size_t i = 0; i < targets.size(); ++i) {
    out.final_predictions.push_back(
        to_prediction(s, {xy(i, 0), xy(i, 1)}, floors[i], building[i]));
    out.coarse_predictions.push_back(
        to_prediction(s, out.graphs.coarse.coords_std[i], out.graphs.coarse.floor[i], building[i]));
  }
  return out;
}

OnlineResult run_online(const PipelineState& s, std::span<const dataset::RawRecord> records,
                        const models::OnlineAdapter<float>* adapter) {
  return run_online(s, normalize_all(records, s.data.descriptor), adapter);
}

evaluation::MetricsReport evaluate(std::span<const Prediction> predictions,
                                   std::span<const dataset::RawRecord> truth,
                                   size_t num_floor_classes, std::span<const int> floor_labels,
                                   bool with_building) {
  if (predictions.size() != truth.size()) {
    throw ShapeError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(truth.size()) + " records");
  }
  auto floor_class = [&](int label) {
    auto it = std::find(floor_labels.begin(), floor_labels.end(), label);
    if (it == floor_labels.end()) {
      throw DataError("floor label " + std::to_string(label) + " is unknown to the trained model");
    }
    return static_cast<int32_t>(it - floor_labels.begin());
  };
  std::vector<int32_t> pb, tb, pf, tf;
  std::vector<dataset::Coord> pc, tc;
  for (size_t i = 0; i < truth.size(); ++i) {
    pb.push_back(predictions[i].building);
    tb.push_back(truth[i].building);
    pf.push_back(floor_class(predictions[i].floor));
    tf.push_back(floor_class(truth[i].floor));
    pc.push_back({predictions[i].longitude, predictions[i].latitude});
    tc.push_back({truth[i].longitude, truth[i].latitude});
  }
  if (!with_building) {
    pb.clear();
    tb.clear();
  }
  return evaluation::make_report(pb, tb, pf, tf, num_floor_classes, pc, tc);
}

evaluation::MetricsReport evaluate(const PipelineState& s, std::span<const Prediction> predictions,
                                   std::span<const dataset::RawRecord> truth) {
  const std::vector<int> labels = original_floor_labels(s.data);
  return evaluate(predictions, truth, labels.size(), labels, s.data.num_buildings > 1);
}

void write_predictions(const fs::path& path, std::span<const Prediction> rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "building,floor,longitude,latitude\n";
  for (const Prediction& p : rows) {
    out << p.building << ',' << p.floor << ',' << io::exact(p.longitude) << ','
        << io::exact(p.latitude) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prediction file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("building,floor,longitude,latitude", 0) != 0) {
    throw DataError(path.string() + " is not a prediction file");
  }
  std::vector<Prediction> out;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::istringstream ss(line);
    std::string b, f, x, y;
    if (!std::getline(ss, b, ',') || !std::getline(ss, f, ',') || !std::getline(ss, x, ',') ||
        !std::getline(ss, y, ',')) {
      throw DataError("parse error at prediction row " + std::to_string(row));
    }
    try {
      out.push_back({std::stoi(b), std::stoi(f), std::stod(x), std::stod(y)});
    } catch (const std::logic_error&) {
      throw DataError("parse error at prediction row " + std::to_string(row));
    }
  }
  return out;
}

AdapterReport run_adapter(PipelineState& s, std::span<const dataset::RawRecord> online) {
  require_trained(s);
  const PipelineConfig& c = s.config;
  const size_t m = online.size();
  const auto fit_count =
      static_cast<size_t>(std::floor(c.adapter_fraction * static_cast<double>(m) + 0.5));
  if (fit_count == 0 || fit_count >= m) {
    throw DataError("adapter: fraction " + io::exact(c.adapter_fraction) + " of " +
                    std::to_string(m) + " online records leaves no fitting batch or no report set");
  }
  Rng rng(stream_seed(c, Stream::kAdapter, 0));
  std::vector<size_t> order(m);
  for (size_t i = 0; i < m; ++i) order[i] = i;
  for (size_t i = 0; i < fit_count; ++i) std::swap(order[i], order[i + uniform_index(rng, m - i)]);
  std::vector<size_t> fit(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(fit_count));
  std::vector<size_t> report(order.begin() + static_cast<std::ptrdiff_t>(fit_count), order.end());
  std::sort(fit.begin(), fit.end());
  std::sort(report.begin(), report.end());

  const OnlineResult base = run_online(s, online);
  const size_t n_train = s.data.train.size();
  std::vector<uint32_t> fit_nodes;
  std::vector<dataset::Coord> fit_coords;
  for (size_t i : fit) {
    fit_nodes.push_back(static_cast<uint32_t>(n_train + i));
    fit_coords.push_back(s.data.scaler.transform({online[i].longitude, online[i].latitude}));
  }

  auto main_params = [&] {
    models::ParamList<float> all;
    for (auto* p : s.models.hgnn_coord->parameters()) all.push_back(p);
    for (auto* p : s.models.hgnn_floor->parameters()) all.push_back(p);
    for (auto* p : s.models.regressor->parameters()) all.push_back(p);
    for (auto* p : s.models.classifier->parameters()) all.push_back(p);
    return all;
  };
  const auto before = models::snapshot(main_params());

  models::OnlineAdapter<float> adapter(s.data.descriptor.ap_count);
  models::AdapterOptions o;
  o.epochs = c.adapter_epochs;
  o.batch_size = c.batch_size;
  o.adam.lr = c.adapter_learning_rate;
  o.seed = stream_seed(c, Stream::kAdapter, 1);
  models::train_adapter(adapter, *s.models.hgnn_coord, base.graphs.coord, fit_nodes, fit_coords, o);

  AdapterReport r;
  r.fit_records = fit.size();
  r.report_records = report.size();
  const auto after = models::snapshot(main_params());
  r.main_parameters_unchanged = before.size() == after.size();
  for (size_t i = 0; r.main_parameters_unchanged && i < before.size(); ++i) {
    r.main_parameters_unchanged =
        before[i].size() == after[i].size() &&
        std::memcmp(before[i].data(), after[i].data(), before[i].size() * sizeof(float)) == 0;
  }
  const auto w = adapter.weight().value.values();
  r.weights.assign(w.begin(), w.end());

  std::vector<uint32_t> report_nodes;
  for (size_t i : report) report_nodes.push_back(static_cast<uint32_t>(n_train + i));
  const numeric::Tensor<float> xy = models::hgnn_predict(*s.models.hgnn_coord, base.graphs.coord,
                                                report_nodes, &adapter, c.eval_chunk);
  std::vector<Prediction> plain, adapted;
  std::vector<dataset::RawRecord> truth;
  for (size_t k = 0; k < report.size(); ++k) {
    const Prediction& p = base.final_predictions[report[k]];
    plain.push_back(p);
    Prediction a = p;
    const dataset::Coord m_xy = s.data.scaler.inverse_transform({xy(k, 0), xy(k, 1)});
    a.longitude = m_xy[0];
    a.latitude = m_xy[1];
    adapted.push_back(a);
    truth.push_back(online[report[k]]);
  }
  r.unadapted = evaluate(s, plain, truth);
  r.adapted = evaluate(s, adapted, truth);
  spdlog::info("adapter: fitted on {} records; report on {}: without {} | with {}", r.fit_records,
               r.report_records, r.unadapted.summary(), r.adapted.summary());
  return r;
}

evaluation::MetricsReport run_baseline_graphsage(const PipelineState& s,
                                                 std::span<const dataset::RawRecord> test) {
  const OnlineResult res = run_online(s, test);
  return evaluate(s, res.coarse_predictions, test);
}

std::vector<dataset::RawRecord> load_test_records(const PipelineConfig& config) {
  if (config.descriptor.test_file.empty()) throw ConfigError("descriptor names no test file");
  return dataset::load_dataset(config.data_dir / config.descriptor.test_file, config.descriptor);
}

}  // namespace fingerloc::pipeline
