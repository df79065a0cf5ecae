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

// fingerloc command-line driver. One command per process; logs go to
// stderr, a one-line summary to stdout, everything else under --out.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fingerloc/error.h"
#include "fingerloc/evaluation.h"
#include "fingerloc/io.h"
#include "fingerloc/pipeline.h"
#include "fingerloc/synthetic.h"

namespace fs = std::filesystem;
using namespace fingerloc;
using namespace fingerloc::pipeline;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kDivergence = 4 };

struct Args {
  std::string command;
  std::string config = "default";
  std::string dataset;
  fs::path data_dir;
  std::optional<uint64_t> seed;
  fs::path out;
  fs::path checkpoint_dir;
  fs::path input;
  fs::path predictions;
  std::string mode = "all";
  bool adapter = false;
  bool fresh = false;
  std::string log_level = "info";
};

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  localtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return os.str();
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * *v << '%';
  return os.str();
}

std::string meters(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << *v << " m";
  return os.str();
}

// Defaults for the dataset, then the file, then command-line overrides.
PipelineConfig resolve_config(const Args& a) {
  PipelineConfig c;
  if (a.config.empty() || a.config == "default") {
    c = PipelineConfig::defaults_for(a.dataset.empty() ? "uji" : a.dataset);
  } else {
    c = PipelineConfig::load(a.config);
    if (!a.dataset.empty() && a.dataset != c.preset) {
      throw ConfigError("--dataset " + a.dataset + " conflicts with preset " + c.preset + " in " +
                        a.config);
    }
  }
  if (!a.data_dir.empty()) c.data_dir = a.data_dir;
  if (a.seed) c.seed = *a.seed;
  if (c.data_dir.empty()) {
    if (const char* v = std::getenv("FINGERLOC_DATA_DIR")) c.data_dir = v;
  }
  c.validate();
  return c;
}

void require_data_dir(const PipelineConfig& c) {
  if (c.data_dir.empty()) throw ConfigError("no data directory: pass --data-dir or set [dataset] dir");
}

// Snapshot of the effective configuration next to the outputs.
void snapshot(const PipelineConfig& c, const fs::path& out) {
  fs::create_directories(out);
  c.save(out / "config.ini");
  std::ofstream(out / "seed.txt") << c.seed << '\n';
}

PipelineState offline(const PipelineConfig& c, const Args& a, Through through) {
  require_data_dir(c);
  RunOptions o;
  o.out_dir = a.out;
  o.resume = !a.fresh;
  o.through = through;
  return run_offline(c, o);
}

// A trained state: loaded from --checkpoint-dir, or trained into --out.
PipelineState trained_state(const Args& a) {
  if (!a.checkpoint_dir.empty()) {
    PipelineState s = load_state(a.checkpoint_dir);
    if (!a.data_dir.empty()) s.config.data_dir = a.data_dir;
    return s;
  }
  return offline(resolve_config(a), a, Through::kAll);
}

std::vector<dataset::RawRecord> test_records(const PipelineState& s, const Args& a,
                                             dataset::LabelColumns labels) {
  if (!a.input.empty()) return dataset::load_dataset(a.input, s.data.descriptor, labels);
  require_data_dir(s.config);
  return load_test_records(s.config);
}

std::string edge_counts(const TaskGraphs& g) {
  std::ostringstream os;
  os << "rssi=" << g.rssi_train.edges.size() << "/" << g.rssi_val.edges.size()
     << " pos=" << g.pos_train.edges.size() << "/" << g.pos_val.edges.size();
  return os.str();
}

// Coarse localizer metrics on the validation targets.
evaluation::MetricsReport coarse_validation(const PipelineState& s) {
  const auto targets = s.universal_val.target_nodes();
  const auto cls =
      models::coarse_predict(*s.models.classifier, s.universal_val, targets, s.config.eval_chunk);
  std::vector<int32_t> building(targets.size(), 0);
  if (s.models.classifier->config().has_building_head()) {
    building = evaluation::argmax_rows(cls.building_logits);
  }
  std::vector<dataset::Coord> pred, truth;
  for (size_t i = 0; i < targets.size(); ++i) {
    pred.push_back(s.data.scaler.inverse_transform(s.val_predictions.coords_std[i]));
    truth.push_back(s.data.scaler.inverse_transform(s.data.validation.coords_std[i]));
  }
  return evaluation::make_report(building, s.data.validation.building, s.val_predictions.floor,
                                 s.data.validation.floor, s.data.floors.num_classes(), pred, truth);
}

int cmd_synth(const Args& a) {
  synthetic::Spec spec;
  if (a.seed) spec.seed = *a.seed;
  const auto site = synthetic::generate(spec);
  fs::create_directories(a.out);
  dataset::write_dataset(a.out / site.descriptor.train_file, site.train, site.descriptor);
  dataset::write_dataset(a.out / site.descriptor.test_file, site.test, site.descriptor);
  site.descriptor.save(a.out / "synthetic.descriptor");
  std::ofstream(a.out / "synthetic.ini") << "[dataset]\npreset = custom\ndescriptor = synthetic.descriptor\n"
                                            "dir = .\n";
  std::cout << "synth train_records=" << site.train.size() << " test_records=" << site.test.size()
            << " aps=" << site.descriptor.ap_count << " config=" << (a.out / "synthetic.ini").string()
            << '\n';
  return kOk;
}

int cmd_stage(const Args& a) {
  const PipelineConfig c = resolve_config(a);
  if (a.command == "preprocess") {
    const PipelineState s = offline(c, a, Through::kPreprocess);
    std::cout << "preprocess train_records=" << s.data.train.size()
              << " validation_records=" << s.data.validation.size()
              << " sampling_points=" << s.data.point_labels.size()
              << " floors=" << s.data.floors.num_classes() << " buildings=" << s.data.num_buildings
              << '\n';
  } else if (a.command == "build-graphs") {
    const PipelineState s = offline(c, a, Through::kUniversalGraphs);
    std::cout << "build-graphs nodes=" << s.universal_val.num_nodes()
              << " train_edges=" << s.universal_train.edges.size()
              << " validation_edges=" << s.universal_val.edges.size() << '\n';
  } else if (a.command == "train-coarse") {
    const PipelineState s = offline(c, a, Through::kCoarse);
    const auto r = coarse_validation(s);
    if (!a.out.empty()) evaluation::write_report(a.out / "metrics", "coarse_validation", r);
    std::cout << "train-coarse validation building=" << percent(r.building_accuracy)
              << " floor=" << percent(r.floor_accuracy) << " mle=" << meters(r.mle_meters) << '\n';
  } else if (a.command == "train-sfe") {
    const PipelineState s = offline(c, a, Through::kEncoders);
    std::cout << "train-sfe encoders=2 depth=" << c.sfe_depth
              << " dim=" << s.coord_search->cols() << '\n';
  } else if (a.command == "build-multigraphs") {
    const PipelineState s = offline(c, a, Through::kTaskGraphs);
    std::cout << "build-multigraphs coordinate " << edge_counts(s.coord) << " floor "
              << edge_counts(s.floor) << '\n';
  } else {
    const PipelineState s = offline(c, a, Through::kAll);
    std::cout << "train-hgnn validation building=" << percent(s.validation.building_accuracy)
              << " floor=" << percent(s.validation.floor_accuracy)
              << " mle=" << meters(s.validation.mle_meters) << '\n';
  }
  return kOk;
}

void print_report(const std::string& label, const evaluation::MetricsReport& r) {
  std::cout << label << " building=" << percent(r.building_accuracy)
            << " floor=" << percent(r.floor_accuracy) << " mle=" << meters(r.mle_meters);
}

int cmd_evaluate(const Args& a) {
  PipelineState s = trained_state(a);
  if (!a.checkpoint_dir.empty()) snapshot(s.config, a.out);
  const auto truth = test_records(s, a, dataset::LabelColumns::kRequired);
  std::vector<Prediction> preds;
  if (!a.predictions.empty()) {
    preds = read_predictions(a.predictions);
  } else {
    preds = run_online(s, truth).final_predictions;
    write_predictions(a.out / "predictions.csv", preds);
  }
  const auto r = evaluate(s, preds, truth);
  evaluation::write_report(a.out / "metrics", "test", r, {{"seed", std::to_string(s.config.seed)}});
  print_report("evaluate test", r);
  if (a.adapter) {
    const AdapterReport ar = run_adapter(s, truth);
    evaluation::write_report(a.out / "metrics", "adapter_unadapted", ar.unadapted);
    evaluation::write_report(a.out / "metrics", "adapter_adapted", ar.adapted);
    std::cout << " adapter_fit=" << ar.fit_records << " unadapted_mle=" << meters(ar.unadapted.mle_meters)
              << " adapted_mle=" << meters(ar.adapted.mle_meters)
              << " frozen=" << (ar.main_parameters_unchanged ? "yes" : "no");
  }
  std::cout << '\n';
  return kOk;
}

int cmd_predict(const Args& a) {
  if (a.checkpoint_dir.empty()) throw ConfigError("predict needs --checkpoint-dir");
  if (a.input.empty()) throw ConfigError("predict needs --input");
  const PipelineState s = load_state(a.checkpoint_dir);
  const auto records = test_records(s, a, dataset::LabelColumns::kOptional);
  const auto preds = run_online(s, records).final_predictions;
  fs::create_directories(a.out);
  write_predictions(a.out / "predictions.csv", preds);
  std::cout << "predict records=" << preds.size();
  if (preds.size() == 1) {
    std::cout << " building=" << preds[0].building << " floor=" << preds[0].floor
              << " longitude=" << io::exact(preds[0].longitude)
              << " latitude=" << io::exact(preds[0].latitude);
  }
  std::cout << " file=" << (a.out / "predictions.csv").string() << '\n';
  return kOk;
}

int cmd_ablate(const Args& a) {
  const PipelineState full = trained_state(a);
  if (!a.checkpoint_dir.empty()) snapshot(full.config, a.out);
  const auto truth = test_records(full, a, dataset::LabelColumns::kRequired);
  std::vector<Ablation> modes;
  if (a.mode == "all") {
    modes = ablation_modes();
  } else {
    modes.push_back(ablation_from_string(a.mode));
  }
  std::ofstream table(a.out / "ablation.csv");
  table << "mode,building_accuracy,floor_accuracy,mle_m\n";
  auto row = [&](const std::string& name, const evaluation::MetricsReport& r) {
    table << name << ',' << io::exact(r.building_accuracy.value_or(0.0)) << ','
          << io::exact(r.floor_accuracy.value_or(0.0)) << ',' << io::exact(r.mle_meters.value_or(0.0))
          << '\n';
    std::cout << ' ' << name << '=' << meters(r.mle_meters);
  };
  std::cout << "ablate test_mle";
  row("full", evaluate(full, run_online(full, truth).final_predictions, truth));
  for (Ablation m : modes) {
    RunOptions o;
    o.out_dir = a.out / "ablation" / to_string(m);
    o.resume = !a.fresh;
    const PipelineState s = run_ablation(full, m, o);
    const auto r = evaluate(s, run_online(s, truth).final_predictions, truth);
    evaluation::write_report(o.out_dir / "metrics", "test", r, {{"mode", to_string(m)}});
    row(to_string(m), r);
  }
  std::cout << '\n';
  return kOk;
}

int cmd_baseline(const Args& a) {
  const PipelineState s = trained_state(a);
  if (!a.checkpoint_dir.empty()) snapshot(s.config, a.out);
  const auto truth = test_records(s, a, dataset::LabelColumns::kRequired);
  const auto base = run_baseline_graphsage(s, truth);
  const auto full = evaluate(s, run_online(s, truth).final_predictions, truth);
  evaluation::write_report(a.out / "metrics", "baseline_test", base);
  evaluation::write_report(a.out / "metrics", "test", full);
  print_report("baseline graphsage", base);
  print_report(" full", full);
  std::cout << '\n';
  return kOk;
}

int cmd_pipeline(const Args& a) {
  const PipelineConfig c = resolve_config(a);
  PipelineState s = offline(c, a, Through::kAll);
  if (s.data.descriptor.test_file.empty() && a.input.empty()) {
    print_report("pipeline validation", s.validation);
    std::cout << '\n';
    return kOk;
  }
  const auto truth = test_records(s, a, dataset::LabelColumns::kRequired);
  const auto preds = run_online(s, truth).final_predictions;
  write_predictions(a.out / "predictions.csv", preds);
  const auto r = evaluate(s, preds, truth);
  evaluation::write_report(a.out / "metrics", "test", r, {{"seed", std::to_string(c.seed)}});
  print_report("pipeline test", r);
  std::cout << " validation_floor=" << percent(s.validation.floor_accuracy)
            << " validation_mle=" << meters(s.validation.mle_meters) << '\n';
  return kOk;
}

int dispatch(const Args& a) {
  if (a.command == "synth") return cmd_synth(a);
  if (a.command == "evaluate") return cmd_evaluate(a);
  if (a.command == "predict") return cmd_predict(a);
  if (a.command == "ablate") return cmd_ablate(a);
  if (a.command == "baseline") return cmd_baseline(a);
  if (a.command == "pipeline") return cmd_pipeline(a);
  return cmd_stage(a);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wi-Fi fingerprint localization with multi-graph heterogeneous GNNs"};
  app.require_subcommand(1);
  app.fallthrough();
  Args a;
  app.add_option("--config", a.config, "configuration file, or 'default'");
  app.add_option("--dataset", a.dataset, "dataset preset")
      ->check(CLI::IsMember({"uji", "uts", "custom"}));
  app.add_option("--data-dir", a.data_dir, "directory holding the dataset CSVs");
  app.add_option("--seed", a.seed, "master seed");
  app.add_option("--out", a.out, "output directory (default runs/<timestamp>)");
  app.add_option("--log-level", a.log_level, "trace, debug, info, warn, error or off");
  app.add_flag("--fresh", a.fresh, "ignore finished stages in --out");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"preprocess", "clean, aggregate and split the training data"},
      {"build-graphs", "build the universal training and validation graphs"},
      {"train-coarse", "train the coarse regressor and classifier"},
      {"train-sfe", "train the two feature encoders"},
      {"build-multigraphs", "build the task-directed RSSI and position graphs"},
      {"train-hgnn", "train the heterogeneous GNNs and report validation metrics"},
      {"evaluate", "evaluate a trained run on labeled test data"},
      {"predict", "predict building, floor and coordinates for new records"},
      {"ablate", "retrain the heterogeneous GNNs under ablation modes"},
      {"baseline", "compare against the homogeneous GraphSAGE localizer"},
      {"pipeline", "offline training followed by test evaluation"},
      {"synth", "write a synthetic dataset and matching config"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->callback([&a, n = name] { a.command = n; });
    if (name == "evaluate" || name == "predict" || name == "ablate" || name == "baseline") {
      sub->add_option("--checkpoint-dir", a.checkpoint_dir, "finished run directory");
      sub->add_option("--input", a.input, "records CSV (default: the dataset's test file)");
    }
    if (name == "pipeline") sub->add_option("--input", a.input, "test records CSV");
    if (name == "evaluate") {
      sub->add_option("--predictions", a.predictions, "score an existing predictions CSV");
      sub->add_flag("--adapter", a.adapter, "also fit and report the online adapter");
    }
    if (name == "ablate") {
      sub->add_option("--mode", a.mode, "pos_only, rssi_only, shared_only, parallel_only, no_sfe or all");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() == 0) return kOk;
    std::cerr << app.help();
    return kUsage;
  }

  auto log = spdlog::stderr_color_mt("fingerloc");
  spdlog::set_default_logger(log);
  spdlog::set_level(spdlog::level::from_str(a.log_level));
  if (a.out.empty()) a.out = fs::path("runs") / timestamp();

  try {
    return dispatch(a);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
