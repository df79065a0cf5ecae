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

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "fingerloc/error.h"
#include "fingerloc/io.h"
#include "fingerloc/models/checkpoint.h"
#include "fingerloc/pipeline.h"
#include "fingerloc/rng.h"
#include "pipeline_internal.h"

namespace fingerloc::pipeline {

namespace fs = std::filesystem;
using graph::FingerGraph;
using graph::GraphRole;
using graph::HeteroGraph;
using models::HgnnTask;

std::string to_string(Ablation mode) {
  switch (mode) {
    case Ablation::kFull: return "full";
    case Ablation::kPosOnly: return "pos_only";
    case Ablation::kRssiOnly: return "rssi_only";
    case Ablation::kSharedOnly: return "shared_only";
    case Ablation::kParallelOnly: return "parallel_only";
    case Ablation::kNoSfe: return "no_sfe";
  }
  return "full";
}

Ablation ablation_from_string(const std::string& s) {
  for (Ablation m : {Ablation::kFull, Ablation::kPosOnly, Ablation::kRssiOnly,
                     Ablation::kSharedOnly, Ablation::kParallelOnly, Ablation::kNoSfe}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown ablation mode '" + s +
                    "' (expected pos_only, rssi_only, shared_only, parallel_only or no_sfe)");
}

std::vector<Ablation> ablation_modes() {
  return {Ablation::kPosOnly, Ablation::kRssiOnly, Ablation::kSharedOnly, Ablation::kParallelOnly,
          Ablation::kNoSfe};
}

namespace detail {

uint64_t stream_seed(const PipelineConfig& c, Stream s, uint64_t sub) {
  return derive_seed(c.seed, {static_cast<uint64_t>(s), sub});
}

models::CoarseConfig coarse_config(const PipelineConfig& c, const Preprocessed& d,
                                   models::CoarseTask task) {
  models::CoarseConfig m;
  m.task = task;
  m.in_dim = d.descriptor.ap_count;
  m.gnn_dims.assign(c.coarse_layers, c.gnn_hidden);
  m.head_hidden = c.mlp_hidden;
  m.trunk_dim = c.mlp_hidden.front();
  m.num_floors = d.floors.num_classes();
  m.num_buildings = d.num_buildings;
  m.dropout = c.dropout;
  m.slope = c.leaky_slope;
  return m;
}

models::SfeConfig sfe_config(const PipelineConfig& c, const Preprocessed& d, models::SfeTask task) {
  models::SfeConfig m;
  m.task = task;
  m.ap_count = d.descriptor.ap_count;
  m.depth = c.sfe_depth;
  m.head_hidden = c.mlp_hidden;
  m.num_floors = d.floors.num_classes();
  m.dropout = c.dropout;
  m.slope = c.leaky_slope;
  return m;
}

models::HgnnConfig hgnn_config(const PipelineConfig& c, const Preprocessed& d, HgnnTask task,
                               Ablation mode) {
  models::HgnnConfig m;
  m.in_dim = d.descriptor.ap_count;
  m.hidden = c.gnn_hidden;
  m.pos_layers = c.hgnn_pos_layers;
  m.rssi_layers = c.hgnn_rssi_layers;
  m.use_shared = mode != Ablation::kParallelOnly;
  m.use_parallel = mode != Ablation::kSharedOnly;
  m.head_hidden = c.mlp_hidden;
  m.out_dim = task == HgnnTask::kCoordinate ? 2 : d.floors.num_classes();
  m.dropout = c.dropout;
  m.slope = c.leaky_slope;
  return m;
}

std::shared_ptr<const dataset::FeatureMatrix> stack_features(const dataset::FeatureMatrix& a,
                                                             const dataset::FeatureMatrix& b) {
  auto out = std::make_shared<dataset::FeatureMatrix>(a.rows() + b.rows(), a.cols());
  std::copy(a.values().begin(), a.values().end(), out->values().begin());
  std::copy(b.values().begin(), b.values().end(),
            out->values().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

graph::PositionLabels train_positions(const Preprocessed& d) {
  return {d.train.coords_std, d.train.floor};
}

FingerGraph rssi_graph(const PipelineState& s, HgnnTask task, GraphRole role,
                       std::shared_ptr<const dataset::FeatureMatrix> nodes,
                       const dataset::FeatureMatrix* raw_targets,
                       std::span<const int32_t> target_spids, const FingerGraph* train_graph) {
  const bool coords = task == HgnnTask::kCoordinate;
  const dataset::FeatureMatrix& search_train = coords ? *s.coord_search : *s.floor_search;
  dataset::FeatureMatrix search_targets;
  if (raw_targets != nullptr) {
    if (s.mode == Ablation::kNoSfe) {
      search_targets = *raw_targets;
    } else {
      const auto& sfe = coords ? *s.models.sfe_coord : *s.models.sfe_floor;
      search_targets = sfe.transform(*raw_targets);
    }
  }
  graph::SearchInputs in;
  in.train = &search_train;
  in.train_spids = s.data.train.spid;
  in.targets = raw_targets != nullptr ? &search_targets : nullptr;
  in.target_spids = target_spids;
  return graph::build_graph(role, std::move(nodes), in, s.config.knn,
                            stream_seed(s.config, Stream::kRssiGraph, coords ? 0 : 1), train_graph);
}

FingerGraph pos_graph(const PipelineState& s, HgnnTask task, GraphRole role,
                      std::shared_ptr<const dataset::FeatureMatrix> nodes,
                      const graph::PredictedPositions* predicted, const FingerGraph* train_graph) {
  const bool coords = task == HgnnTask::kCoordinate;
  return graph::build_pos_graph(role, std::move(nodes), train_positions(s.data), s.data.train.spid,
                                predicted, coords ? graph::PosTask::kCoordinate : graph::PosTask::kFloor,
                                s.config.knn, s.config.floor_scale,
                                stream_seed(s.config, Stream::kPosGraph, coords ? 0 : 1),
                                train_graph);
}

HeteroGraph combine(const FingerGraph& rssi, const FingerGraph& pos, Ablation mode) {
  if (mode == Ablation::kPosOnly) return graph::assemble_hetero_graph(pos, pos);
  if (mode == Ablation::kRssiOnly) return graph::assemble_hetero_graph(rssi, rssi);
  return graph::assemble_hetero_graph(rssi, pos);
}

graph::PredictedPositions coarse_positions(const PipelineState& s, const FingerGraph& g,
                                           std::span<const uint32_t> nodes) {
  const auto reg = models::coarse_predict(*s.models.regressor, g, nodes, s.config.eval_chunk);
  const auto cls = models::coarse_predict(*s.models.classifier, g, nodes, s.config.eval_chunk);
  const std::vector<int32_t> floors = evaluation::argmax_rows(cls.floor_logits);
  graph::PredictedPositions p;
  for (size_t i = 0; i < nodes.size(); ++i) {
    p.coords_std.push_back({reg.coords(i, 0), reg.coords(i, 1)});
    p.floor.push_back(floors[i]);
  }
  return p;
}

}  // namespace detail

namespace {

using namespace detail;

std::string hex32(uint32_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

std::string key_of(std::initializer_list<std::string> parts) {
  std::string all;
  for (const auto& p : parts) all += p + '\x1f';
  return hex32(io::crc32({reinterpret_cast<const uint8_t*>(all.data()), all.size()}));
}

// run_manifest.txt: one line per completed stage,
//   stage <name> <key> <artifact>:<crc32> ...
// A stage is reused when its key matches and every artifact still hashes
// to the recorded value.
class RunLog {
 public:
  RunLog(fs::path dir, bool resume) : dir_(std::move(dir)) {
    if (dir_.empty() || !resume) return;
    std::ifstream in(dir_ / "run_manifest.txt");
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ss(line);
      std::string tag, name, key;
      if (!(ss >> tag >> name >> key) || tag != "stage") continue;
      Entry e{key, {}};
      std::string item;
      while (ss >> item) {
        const auto colon = item.rfind(':');
        if (colon == std::string::npos) continue;
        e.artifacts.emplace_back(item.substr(0, colon), item.substr(colon + 1));
      }
      entries_[name] = std::move(e);
    }
  }

  bool persistent() const { return !dir_.empty(); }
  const fs::path& dir() const { return dir_; }

  // An empty key accepts whatever key was recorded.
  bool complete(const std::string& stage, const std::string& key) const {
    auto it = entries_.find(stage);
    if (it == entries_.end() || (!key.empty() && it->second.key != key)) return false;
    for (const auto& [path, crc] : it->second.artifacts) {
      std::error_code ec;
      if (!fs::exists(dir_ / path, ec)) return false;
      if (hex32(io::crc32_file(dir_ / path)) != crc) return false;
    }
    return true;
  }

  void record(const std::string& stage, const std::string& key,
              const std::vector<std::string>& artifacts) {
    if (!persistent()) return;
    Entry e{key, {}};
    for (const auto& a : artifacts) e.artifacts.emplace_back(a, hex32(io::crc32_file(dir_ / a)));
    entries_[stage] = std::move(e);
    std::ofstream out(dir_ / "run_manifest.txt");
    out << "# fingerloc run manifest: stage <name> <key> <artifact>:<crc32>...\n";
    for (const auto& [name, entry] : entries_) {
      out << "stage " << name << ' ' << entry.key;
      for (const auto& [path, crc] : entry.artifacts) out << ' ' << path << ':' << crc;
      out << '\n';
    }
  }

 private:
  struct Entry {
    std::string key;
    std::vector<std::pair<std::string, std::string>> artifacts;
  };
  fs::path dir_;
  std::map<std::string, Entry> entries_;
};

// Checkpoint files of one model: the manifest plus one blob per tensor.
std::vector<std::string> checkpoint_files(const std::string& rel, const models::ParamList<float>& params) {
  std::vector<std::string> out{rel};
  const std::string name = fs::path(rel).filename().string();
  const fs::path dir = fs::path(rel).parent_path();
  for (const auto* p : params) out.push_back((dir / (name + "." + p->name + ".bin")).string());
  return out;
}

class Runner {
 public:
  explicit Runner(const RunOptions& o) : opts_(o), log_(o.out_dir, o.resume) {}

  // Runs `make` unless the stage is complete, in which case `load` restores
  // it. Both must leave the same state behind.
  template <typename Make, typename Load>
  void stage(const std::string& name, const std::string& key, Make&& make, Load&& load) {
    keys_[name] = key;
    // Loading a finished run trusts the recorded keys; inputs such as the
    // raw CSVs need not be present any more.
    if (log_.persistent() && log_.complete(name, opts_.train ? key : std::string())) {
      spdlog::info("stage {}: reusing artifacts", name);
      try {
        load();
        return;
      } catch (const DataError& e) {
        if (!opts_.train) throw;
        spdlog::warn("stage {}: stored artifacts unusable ({}), recomputing", name, e.what());
      }
    }
    if (!opts_.train) {
      throw DataError("stage " + name + " has no complete artifacts in " + opts_.out_dir.string());
    }
    spdlog::info("stage {}: running", name);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> files;
    try {
      files = make();
    } catch (const Error& e) {
      rethrow_with_stage(name, e);
    }
    log_.record(name, key, files);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("stage {}: done in {:.1f} s", name, secs);
  }

  const std::string& key(const std::string& name) const { return keys_.at(name); }
  bool persistent() const { return log_.persistent(); }
  fs::path path(const std::string& rel) const { return log_.dir() / rel; }

 private:
  [[noreturn]] static void rethrow_with_stage(const std::string& name, const Error& e) {
    const std::string msg = "stage " + name + ": " + e.what();
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
    if (dynamic_cast<const DivergenceError*>(&e)) throw DivergenceError(msg);
    if (dynamic_cast<const ShapeError*>(&e)) throw ShapeError(msg);
    throw DataError(msg);
  }

  RunOptions opts_;
  RunLog log_;
  std::map<std::string, std::string> keys_;
};

models::NodeLabels train_labels(const Preprocessed& d) {
  return {d.train.coords_std, d.train.floor, d.train.building};
}

models::NodeLabels val_labels(const Preprocessed& d) {
  models::NodeLabels l = train_labels(d);
  l.coords_std.insert(l.coords_std.end(), d.validation.coords_std.begin(),
                      d.validation.coords_std.end());
  l.floor.insert(l.floor.end(), d.validation.floor.begin(), d.validation.floor.end());
  l.building.insert(l.building.end(), d.validation.building.begin(), d.validation.building.end());
  return l;
}

models::TrainOptions train_options(const PipelineConfig& c, size_t epochs, uint64_t seed,
                                   const std::string& stage) {
  models::TrainOptions o;
  o.epochs = epochs;
  o.batch_size = c.batch_size;
  o.adam.lr = c.learning_rate;
  o.seed = seed;
  o.eval_chunk = c.eval_chunk;
  o.stage = stage;
  return o;
}

void save_model(const fs::path& path, const std::string& kind, const std::string& fingerprint,
                uint64_t seed, const models::ParamList<float>& params,
                const models::TrainHistory& h) {
  fs::create_directories(path.parent_path());
  models::CheckpointInfo info{kind, fingerprint, seed,
                              {{"best_epoch", std::to_string(h.best_epoch)},
                               {"best_metric", io::exact(h.best_metric)},
                               {"epochs_run", std::to_string(h.epochs.size())}}};
  models::save_checkpoint(path, info, params);
  std::ofstream log(path.string() + ".history.csv");
  log << "epoch,phase,train_loss,val_metric\n";
  for (const auto& e : h.epochs) {
    log << e.epoch << ',' << e.phase << ',' << io::exact(e.train_loss) << ','
        << io::exact(e.val_metric) << '\n';
  }
}

std::string section_keys(const PipelineConfig& c, std::initializer_list<const char*> sections) {
  std::string out;
  for (const char* s : sections) out += c.section_text(s);
  return out;
}

void save_graph_pair(Runner& r, const FingerGraph& train, const FingerGraph& val,
                     const std::string& stem, std::vector<std::string>& files) {
  graph::save_graph(train, r.path("graphs/" + stem + "_train.graph"), "train_nodes.features");
  graph::save_graph(val, r.path("graphs/" + stem + "_validation.graph"), "validation_nodes.features");
  for (const char* role : {"_train", "_validation"}) {
    files.push_back("graphs/" + stem + role + ".graph");
    files.push_back("graphs/" + stem + role + ".graph.bin");
  }
}

// Stages after the encoders: task graphs, heterogeneous GNNs, validation.
void run_branch3(PipelineState& s, Runner& r, const std::string& upstream_key, Through through) {
  const PipelineConfig& c = s.config;
  const std::string mode = to_string(s.mode);
  const std::vector<uint32_t> val_targets = s.universal_val.target_nodes();

  for (HgnnTask task : {HgnnTask::kCoordinate, HgnnTask::kFloor}) {
    const bool coords = task == HgnnTask::kCoordinate;
    const std::string tname = coords ? "coordinate" : "floor";
    TaskGraphs& tg = coords ? s.coord : s.floor;
    const std::string gkey = key_of({upstream_key, mode, section_keys(c, {"graph"})});
    r.stage(
        "graphs_" + tname, gkey,
        [&] {
          tg.rssi_train = rssi_graph(s, task, GraphRole::kTrain, s.train_nodes, nullptr, {}, nullptr);
          tg.rssi_val = rssi_graph(s, task, GraphRole::kValidation, s.val_nodes,
                                   &s.data.validation.features, s.data.validation.spid, &tg.rssi_train);
          tg.pos_train = pos_graph(s, task, GraphRole::kTrain, s.train_nodes, nullptr, nullptr);
          tg.pos_val = pos_graph(s, task, GraphRole::kValidation, s.val_nodes, &s.val_predictions,
                                 &tg.pos_train);
          std::vector<std::string> files;
          if (r.persistent()) {
            save_graph_pair(r, tg.rssi_train, tg.rssi_val, "rssi_" + tname, files);
            save_graph_pair(r, tg.pos_train, tg.pos_val, "pos_" + tname, files);
          }
          return files;
        },
        [&] {
          auto load = [&](const std::string& stem, bool train) {
            return graph::load_graph(
                r.path("graphs/" + stem + (train ? "_train.graph" : "_validation.graph")),
                train ? s.train_nodes : s.val_nodes);
          };
          tg.rssi_train = load("rssi_" + tname, true);
          tg.rssi_val = load("rssi_" + tname, false);
          tg.pos_train = load("pos_" + tname, true);
          tg.pos_val = load("pos_" + tname, false);
        });
    tg.hetero_train = combine(tg.rssi_train, tg.pos_train, s.mode);
    tg.hetero_val = combine(tg.rssi_val, tg.pos_val, s.mode);
  }
  if (through == Through::kTaskGraphs) return;

  for (HgnnTask task : {HgnnTask::kCoordinate, HgnnTask::kFloor}) {
    const bool coords = task == HgnnTask::kCoordinate;
    const std::string tname = coords ? "coordinate" : "floor";
    TaskGraphs& tg = coords ? s.coord : s.floor;
    const models::HgnnConfig hc = hgnn_config(c, s.data, task, s.mode);
    const uint64_t init_seed = stream_seed(c, Stream::kHgnn, coords ? 0 : 1);
    auto& model = coords ? s.models.hgnn_coord : s.models.hgnn_floor;
    model = std::make_shared<models::HeteroGnn<float>>(hc, init_seed);
    const std::string ckpt = "checkpoints/hgnn_" + tname + ".ckpt";
    r.stage(
        "hgnn_" + tname,
        key_of({r.key("graphs_" + tname), hc.fingerprint(), section_keys(c, {"train", "hgnn", "run"})}),
        [&] {
          const models::NodeLabels tl = train_labels(s.data);
          const models::NodeLabels vl = val_labels(s.data);
          const auto h = models::train_hgnn(
              *model, task, {&tg.hetero_train, &tl}, {&tg.hetero_val, &vl},
              train_options(c, c.hgnn_epochs, stream_seed(c, Stream::kHgnn, coords ? 2 : 3),
                            "hgnn_" + tname),
              s.data.scaler);
          std::vector<std::string> files;
          if (r.persistent()) {
            save_model(r.path(ckpt), "hgnn_" + tname, hc.fingerprint(), init_seed,
                       model->parameters(), h);
            files = checkpoint_files(ckpt, model->parameters());
          }
          return files;
        },
        [&] {
          models::load_checkpoint(r.path(ckpt), "hgnn_" + tname, hc.fingerprint(),
                                  model->parameters());
        });
  }

  // Validation report: building from the coarse classifier, floor and
  // coordinates from the heterogeneous GNNs, over validation targets only.
  const auto cls = models::coarse_predict(*s.models.classifier, s.universal_val, val_targets,
                                          c.eval_chunk);
  const numeric::Tensor<float> floor_logits =
      models::hgnn_predict(*s.models.hgnn_floor, s.floor.hetero_val, val_targets, nullptr, c.eval_chunk);
  const numeric::Tensor<float> coords =
      models::hgnn_predict(*s.models.hgnn_coord, s.coord.hetero_val, val_targets, nullptr, c.eval_chunk);
  std::vector<int32_t> pred_building(val_targets.size(), 0);
  if (s.models.classifier->config().has_building_head()) {
    pred_building = evaluation::argmax_rows(cls.building_logits);
  }
  std::vector<dataset::Coord> pred_m, true_m;
  for (size_t i = 0; i < val_targets.size(); ++i) {
    pred_m.push_back(s.data.scaler.inverse_transform({coords(i, 0), coords(i, 1)}));
    true_m.push_back(s.data.scaler.inverse_transform(s.data.validation.coords_std[i]));
  }
  s.validation = evaluation::make_report(pred_building, s.data.validation.building,
                                         evaluation::argmax_rows(floor_logits),
                                         s.data.validation.floor, s.data.floors.num_classes(),
                                         pred_m, true_m);
  if (r.persistent()) {
    evaluation::write_report(r.path("metrics"), "validation", s.validation,
                             {{"mode", mode}, {"seed", std::to_string(c.seed)}});
  }
  spdlog::info("validation ({}): {}", mode, s.validation.summary());
}

}  // namespace

PipelineState run_offline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  Preprocessed data;
  return run_offline(config, std::move(data), options);
}

PipelineState run_offline(const PipelineConfig& config, Preprocessed data,
                          const RunOptions& options) {
  config.validate();
  PipelineState s;
  s.config = config;
  s.mode = options.mode;
  const bool have_data = data.train.size() > 0;
  s.data = std::move(data);
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    config.save(options.out_dir / "config.ini");
    std::ofstream(options.out_dir / "seed.txt") << config.seed << '\n';
  }
  Runner r(options);
  const PipelineConfig& c = s.config;

  // Preprocessing. A state handed in from outside is keyed by its content.
  std::string data_key;
  if (have_data) {
    const auto& f = s.data.train.features.values();
    data_key = hex32(io::crc32({reinterpret_cast<const uint8_t*>(f.data()), f.size() * sizeof(float)}));
  } else if (options.train) {
    data_key = hex32(io::crc32_file(c.data_dir / c.descriptor.train_file));
  }
  r.stage(
      "preprocess", key_of({data_key, section_keys(c, {"dataset", "split", "run"})}),
      [&] {
        if (!have_data) s.data = preprocess(c);
        std::vector<std::string> files;
        if (r.persistent()) {
          save_preprocessed(s.data, r.path("preprocessed"));
          files = {"preprocessed/preprocessed.manifest", "preprocessed/preprocessed.bin",
                   "preprocessed/descriptor.ini"};
        }
        return files;
      },
      [&] { s.data = load_preprocessed(r.path("preprocessed")); });
  s.train_nodes = std::make_shared<const dataset::FeatureMatrix>(s.data.train.features);
  s.val_nodes = stack_features(s.data.train.features, s.data.validation.features);
  if (options.through == Through::kPreprocess) return s;

  r.stage(
      "universal_graphs", key_of({r.key("preprocess"), section_keys(c, {"graph", "run"})}),
      [&] {
        graph::SearchInputs in{&s.data.train.features, s.data.train.spid, nullptr, {}};
        const uint64_t seed = stream_seed(c, Stream::kUniversalGraph, 0);
        s.universal_train = graph::build_graph(GraphRole::kTrain, s.train_nodes, in, c.knn, seed);
        in.targets = &s.data.validation.features;
        in.target_spids = s.data.validation.spid;
        s.universal_val = graph::build_graph(GraphRole::kValidation, s.val_nodes, in, c.knn, seed,
                                             &s.universal_train);
        std::vector<std::string> files;
        if (r.persistent()) {
          fs::create_directories(r.path("graphs"));
          graph::save_features(*s.train_nodes, r.path("graphs/train_nodes.features"));
          graph::save_features(*s.val_nodes, r.path("graphs/validation_nodes.features"));
          files = {"graphs/train_nodes.features", "graphs/train_nodes.features.bin",
                   "graphs/validation_nodes.features", "graphs/validation_nodes.features.bin"};
          save_graph_pair(r, s.universal_train, s.universal_val, "universal", files);
        }
        return files;
      },
      [&] {
        s.universal_train = graph::load_graph(r.path("graphs/universal_train.graph"), s.train_nodes);
        s.universal_val = graph::load_graph(r.path("graphs/universal_validation.graph"), s.val_nodes);
      });

  if (options.through == Through::kUniversalGraphs) return s;

  const models::NodeLabels tl = train_labels(s.data);
  const models::NodeLabels vl = val_labels(s.data);
  const std::string coarse_sections = section_keys(c, {"model", "train", "coarse", "run"});

  // Branch 1: coarse GraphSAGE localizers.
  {
    const auto cfg = coarse_config(c, s.data, models::CoarseTask::kRegression);
    const uint64_t seed = stream_seed(c, Stream::kRegressor, 0);
    s.models.regressor = std::make_shared<models::CoarseLocalizer<float>>(cfg, seed);
    const std::string ckpt = "checkpoints/coarse_regressor.ckpt";
    r.stage(
        "coarse_regressor", key_of({r.key("universal_graphs"), cfg.fingerprint(), coarse_sections}),
        [&] {
          const auto h = models::train_coarse_regressor(
              *s.models.regressor, {&s.universal_train, &tl}, {&s.universal_val, &vl},
              train_options(c, c.regressor_epochs, stream_seed(c, Stream::kRegressor, 1),
                            "coarse_regressor"),
              s.data.scaler);
          std::vector<std::string> files;
          if (r.persistent()) {
            save_model(r.path(ckpt), "coarse_regressor", cfg.fingerprint(), seed,
                       s.models.regressor->parameters(), h);
            files = checkpoint_files(ckpt, s.models.regressor->parameters());
          }
          return files;
        },
        [&] {
          models::load_checkpoint(r.path(ckpt), "coarse_regressor", cfg.fingerprint(),
                                  s.models.regressor->parameters());
        });
  }
  {
    const auto cfg = coarse_config(c, s.data, models::CoarseTask::kClassification);
    const uint64_t seed = stream_seed(c, Stream::kClassifier, 0);
    s.models.classifier = std::make_shared<models::CoarseLocalizer<float>>(cfg, seed);
    const std::string ckpt = "checkpoints/coarse_classifier.ckpt";
    r.stage(
        "coarse_classifier", key_of({r.key("universal_graphs"), cfg.fingerprint(), coarse_sections}),
        [&] {
          models::ClassifierOptions o;
          static_cast<models::TrainOptions&>(o) =
              train_options(c, c.classifier_epochs, stream_seed(c, Stream::kClassifier, 1),
                            "coarse_classifier");
          o.beta = c.beta;
          o.patience = c.patience;
          o.phase2_epochs = c.phase2_epochs;
          const auto h = models::train_coarse_classifier(*s.models.classifier,
                                                         {&s.universal_train, &tl},
                                                         {&s.universal_val, &vl}, o);
          std::vector<std::string> files;
          if (r.persistent()) {
            save_model(r.path(ckpt), "coarse_classifier", cfg.fingerprint(), seed,
                       s.models.classifier->parameters(), h);
            files = checkpoint_files(ckpt, s.models.classifier->parameters());
          }
          return files;
        },
        [&] {
          models::load_checkpoint(r.path(ckpt), "coarse_classifier", cfg.fingerprint(),
                                  s.models.classifier->parameters());
        });
  }
  // Position estimates for validation nodes come from the coarse models
  // only; their true labels never reach graph construction.
  s.val_predictions = coarse_positions(s, s.universal_val, s.universal_val.target_nodes());
  if (options.through == Through::kCoarse) return s;

  // Branch 2: stacked feature encoders.
  for (models::SfeTask task : {models::SfeTask::kCoordinate, models::SfeTask::kCoordinateFloor}) {
    const bool coords = task == models::SfeTask::kCoordinate;
    const std::string name = coords ? "sfe_coordinate" : "sfe_floor";
    const auto cfg = sfe_config(c, s.data, task);
    const uint64_t seed = stream_seed(c, Stream::kSfe, coords ? 0 : 1);
    auto& model = coords ? s.models.sfe_coord : s.models.sfe_floor;
    model = std::make_shared<models::StackedFeatureEncoder<float>>(cfg, seed);
    const std::string ckpt = "checkpoints/" + name + ".ckpt";
    r.stage(
        name, key_of({r.key("preprocess"), cfg.fingerprint(), section_keys(c, {"train", "sfe", "run"})}),
        [&] {
          models::SfeOptions o;
          static_cast<models::TrainOptions&>(o) =
              train_options(c, c.sfe_epochs, stream_seed(c, Stream::kSfe, coords ? 2 : 3), name);
          o.l1_lambda = c.l1_lambda;
          o.floor_weight = c.sfe_floor_weight;
          const models::SfeData train{&s.data.train.features, s.data.train.coords_std,
                                      s.data.train.floor};
          const models::SfeData val{&s.data.validation.features, s.data.validation.coords_std,
                                    s.data.validation.floor};
          const auto h = models::train_sfe(*model, train, val, o, s.data.scaler);
          std::vector<std::string> files;
          if (r.persistent()) {
            save_model(r.path(ckpt), name, cfg.fingerprint(), seed, model->parameters(), h);
            files = checkpoint_files(ckpt, model->parameters());
          }
          return files;
        },
        [&] { models::load_checkpoint(r.path(ckpt), name, cfg.fingerprint(), model->parameters()); });
  }
  if (s.mode == Ablation::kNoSfe) {
    s.coord_search = s.train_nodes;
    s.floor_search = s.train_nodes;
  } else {
    s.coord_search = std::make_shared<const dataset::FeatureMatrix>(
        s.models.sfe_coord->transform(s.data.train.features));
    s.floor_search = std::make_shared<const dataset::FeatureMatrix>(
        s.models.sfe_floor->transform(s.data.train.features));
  }
  if (options.through == Through::kEncoders) return s;

  const std::string upstream =
      key_of({r.key("universal_graphs"), r.key("coarse_regressor"), r.key("coarse_classifier"),
              r.key("sfe_coordinate"), r.key("sfe_floor")});
  run_branch3(s, r, upstream, options.through);
  return s;
}

PipelineState run_ablation(const PipelineState& full, Ablation mode, const RunOptions& options) {
  if (mode == Ablation::kFull) throw ConfigError("run_ablation needs an ablation mode");
  PipelineState s;
  s.config = full.config;
  s.mode = mode;
  s.data = full.data;
  s.train_nodes = full.train_nodes;
  s.val_nodes = full.val_nodes;
  s.universal_train = full.universal_train;
  s.universal_val = full.universal_val;
  s.val_predictions = full.val_predictions;
  s.models.regressor = full.models.regressor;
  s.models.classifier = full.models.classifier;
  s.models.sfe_coord = full.models.sfe_coord;
  s.models.sfe_floor = full.models.sfe_floor;
  s.coord_search = mode == Ablation::kNoSfe ? s.train_nodes : full.coord_search;
  s.floor_search = mode == Ablation::kNoSfe ? s.train_nodes : full.floor_search;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir / "graphs");
    s.config.save(options.out_dir / "config.ini");
    graph::save_features(*s.train_nodes, options.out_dir / "graphs/train_nodes.features");
    graph::save_features(*s.val_nodes, options.out_dir / "graphs/validation_nodes.features");
  }
  RunOptions o = options;
  o.mode = mode;
  Runner r(o);
  // Upstream artifacts belong to the full run; key on its configuration.
  run_branch3(s, r, key_of({s.config.to_text(), "ablation"}), options.through);
  return s;
}

PipelineState load_state(const fs::path& run_dir) {
  const PipelineConfig config = PipelineConfig::load(run_dir / "config.ini");
  RunOptions o;
  o.out_dir = run_dir;
  o.resume = true;
  o.train = false;
  return run_offline(config, o);
}

}  // namespace fingerloc::pipeline
