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

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "fingerloc/error.h"
#include "fingerloc/io.h"
#include "fingerloc/pipeline.h"

namespace fingerloc::pipeline {

namespace {

namespace pt = boost::property_tree;

std::string join_sizes(const std::vector<size_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

// One entry per key: how to print it and how to parse it.
struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const PipelineConfig&)> print;
  std::function<void(PipelineConfig&, const std::string&)> parse;  // throws on bad input
};

size_t parse_size(const std::string& s) {
  size_t pos = 0;
  if (s.empty() || s[0] == '-') throw std::invalid_argument("not a non-negative integer");
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return static_cast<size_t>(v);
}

double parse_real(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

std::vector<size_t> parse_sizes(const std::string& s) {
  std::vector<size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(item));
  return out;
}

#define SIZE_FIELD(sec, name, member)                                                  \
  Field {                                                                              \
    sec, name, [](const PipelineConfig& c) { return std::to_string(c.member); },       \
        [](PipelineConfig& c, const std::string& v) { c.member = parse_size(v); }      \
  }
#define REAL_FIELD(sec, name, member)                                                  \
  Field {                                                                              \
    sec, name, [](const PipelineConfig& c) { return io::exact(c.member); },            \
        [](PipelineConfig& c, const std::string& v) { c.member = parse_real(v); }      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      Field{"dataset", "preset", [](const PipelineConfig& c) { return c.preset; },
            [](PipelineConfig& c, const std::string& v) { c.preset = v; }},
      Field{"dataset", "descriptor", [](const PipelineConfig& c) { return c.descriptor_file.string(); },
            [](PipelineConfig& c, const std::string& v) { c.descriptor_file = v; }},
      Field{"dataset", "dir", [](const PipelineConfig& c) { return c.data_dir.string(); },
            [](PipelineConfig& c, const std::string& v) { c.data_dir = v; }},
      REAL_FIELD("split", "validation_ratio", validation_ratio),
      SIZE_FIELD("graph", "k", knn.k),
      SIZE_FIELD("graph", "n", knn.n),
      REAL_FIELD("graph", "floor_scale", floor_scale),
      SIZE_FIELD("model", "gnn_hidden", gnn_hidden),
      Field{"model", "mlp_hidden", [](const PipelineConfig& c) { return join_sizes(c.mlp_hidden); },
            [](PipelineConfig& c, const std::string& v) { c.mlp_hidden = parse_sizes(v); }},
      REAL_FIELD("model", "dropout", dropout),
      REAL_FIELD("model", "leaky_slope", leaky_slope),
      SIZE_FIELD("model", "coarse_layers", coarse_layers),
      SIZE_FIELD("model", "sfe_depth", sfe_depth),
      SIZE_FIELD("model", "hgnn_pos_layers", hgnn_pos_layers),
      SIZE_FIELD("model", "hgnn_rssi_layers", hgnn_rssi_layers),
      REAL_FIELD("train", "learning_rate", learning_rate),
      SIZE_FIELD("train", "batch_size", batch_size),
      SIZE_FIELD("train", "eval_chunk", eval_chunk),
      SIZE_FIELD("coarse", "regressor_epochs", regressor_epochs),
      SIZE_FIELD("coarse", "classifier_epochs", classifier_epochs),
      SIZE_FIELD("coarse", "patience", patience),
      REAL_FIELD("coarse", "beta", beta),
      SIZE_FIELD("coarse", "phase2_epochs", phase2_epochs),
      SIZE_FIELD("sfe", "epochs", sfe_epochs),
      REAL_FIELD("sfe", "l1_lambda", l1_lambda),
      REAL_FIELD("sfe", "floor_weight", sfe_floor_weight),
      SIZE_FIELD("hgnn", "epochs", hgnn_epochs),
      REAL_FIELD("adapter", "fraction", adapter_fraction),
      SIZE_FIELD("adapter", "epochs", adapter_epochs),
      REAL_FIELD("adapter", "learning_rate", adapter_learning_rate),
      Field{"run", "seed", [](const PipelineConfig& c) { return std::to_string(c.seed); },
            [](PipelineConfig& c, const std::string& v) { c.seed = parse_size(v); }},
  };
  return all;
}

#undef SIZE_FIELD
#undef REAL_FIELD

}  // namespace

PipelineConfig PipelineConfig::defaults_for(const std::string& preset) {
  PipelineConfig c;
  c.preset = preset;
  if (preset == "uts") c.descriptor = dataset::DatasetDescriptor::uts();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.message());
  }
  PipelineConfig c;
  std::vector<std::string> errors;
  std::set<std::string> known;
  for (const Field& f : fields()) {
    known.insert(f.section + "." + f.key);
    auto v = tree.get_optional<std::string>(pt::ptree::path_type(f.section + "." + f.key));
    if (!v) continue;
    try {
      f.parse(c, *v);
    } catch (const std::exception&) {
      errors.push_back("[" + f.section + "] " + f.key + ": cannot parse '" + *v + "'");
    }
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      errors.push_back("key '" + section + "' is outside any section");
      continue;
    }
    for (const auto& [key, value] : body) {
      if (!known.contains(section + "." + key)) {
        errors.push_back("unknown key [" + section + "] " + key);
      }
    }
  }
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(c.descriptor_file);
  resolve(c.data_dir);
  if (c.preset == "uji") {
    c.descriptor = dataset::DatasetDescriptor::uji();
  } else if (c.preset == "uts") {
    c.descriptor = dataset::DatasetDescriptor::uts();
  } else if (c.preset == "custom") {
    if (c.descriptor_file.empty()) {
      errors.push_back("[dataset] preset custom needs a descriptor file");
    } else {
      try {
        c.descriptor = dataset::DatasetDescriptor::load(c.descriptor_file);
      } catch (const Error& e) {
        errors.push_back(e.what());
      }
    }
  }
  for (const auto& p : c.problems()) errors.push_back(p);
  if (!errors.empty()) {
    std::string msg = "invalid config " + path.string() + ":";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

std::string PipelineConfig::section_text(const std::string& section) const {
  std::string out;
  for (const Field& f : fields()) {
    if (f.section == section) out += f.key + " = " + f.print(*this) + "\n";
  }
  return out;
}

std::string PipelineConfig::to_text() const {
  std::string out;
  std::string current;
  for (const Field& f : fields()) {
    if (f.section != current) {
      if (!current.empty()) out += "\n";
      out += "[" + f.section + "]\n";
      current = f.section;
    }
    out += f.key + " = " + f.print(*this) + "\n";
  }
  return out;
}

void PipelineConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  // Paths are written absolute so the snapshot works from any directory.
  PipelineConfig copy = *this;
  // A custom descriptor is copied next to the snapshot.
  if (preset == "custom") {
    copy.descriptor_file = std::filesystem::absolute(path).replace_extension(".descriptor");
    descriptor.save(copy.descriptor_file);
  } else if (!copy.descriptor_file.empty()) {
    copy.descriptor_file = std::filesystem::absolute(copy.descriptor_file);
  }
  if (!copy.data_dir.empty()) copy.data_dir = std::filesystem::absolute(copy.data_dir);
  out << copy.to_text();
}

std::vector<std::string> PipelineConfig::problems() const {
  std::vector<std::string> p;
  if (preset != "uji" && preset != "uts" && preset != "custom") {
    p.push_back("[dataset] preset must be uji, uts or custom, got '" + preset + "'");
  }
  for (const auto& d : descriptor.problems()) p.push_back("descriptor: " + d);
  if (!(validation_ratio > 0.0 && validation_ratio < 1.0)) {
    p.push_back("[split] validation_ratio must lie in (0, 1)");
  }
  if (knn.k == 0) p.push_back("[graph] k must be positive");
  if (knn.n == 0) p.push_back("[graph] n must be positive");
  if (!(floor_scale >= 0.0)) p.push_back("[graph] floor_scale must be non-negative");
  if (gnn_hidden == 0) p.push_back("[model] gnn_hidden must be positive");
  if (mlp_hidden.empty()) p.push_back("[model] mlp_hidden needs at least one width");
  for (size_t w : mlp_hidden) {
    if (w == 0) p.push_back("[model] mlp_hidden widths must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) p.push_back("[model] dropout must lie in [0, 1)");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) p.push_back("[model] leaky_slope must lie in [0, 1)");
  if (coarse_layers == 0) p.push_back("[model] coarse_layers must be positive");
  if (sfe_depth == 0) p.push_back("[model] sfe_depth must be positive");
  if (hgnn_pos_layers == 0) p.push_back("[model] hgnn_pos_layers must be positive");
  if (hgnn_rssi_layers == 0) p.push_back("[model] hgnn_rssi_layers must be positive");
  if (!(learning_rate > 0.0)) p.push_back("[train] learning_rate must be positive");
  if (batch_size == 0) p.push_back("[train] batch_size must be positive");
  if (eval_chunk == 0) p.push_back("[train] eval_chunk must be positive");
  if (regressor_epochs == 0) p.push_back("[coarse] regressor_epochs must be positive");
  if (classifier_epochs == 0) p.push_back("[coarse] classifier_epochs must be positive");
  if (patience == 0) p.push_back("[coarse] patience must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) p.push_back("[coarse] beta must lie in [0, 1]");
  if (sfe_epochs == 0) p.push_back("[sfe] epochs must be positive");
  if (!(l1_lambda >= 0.0)) p.push_back("[sfe] l1_lambda must be non-negative");
  if (!(sfe_floor_weight >= 0.0)) p.push_back("[sfe] floor_weight must be non-negative");
  if (hgnn_epochs == 0) p.push_back("[hgnn] epochs must be positive");
  if (!(adapter_fraction > 0.0 && adapter_fraction < 1.0)) {
    p.push_back("[adapter] fraction must lie in (0, 1)");
  }
  if (adapter_epochs == 0) p.push_back("[adapter] epochs must be positive");
  if (!(adapter_learning_rate > 0.0)) p.push_back("[adapter] learning_rate must be positive");
  return p;
}

void PipelineConfig::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& e : p) msg += "\n  - " + e;
  throw ConfigError(msg);
}

}  // namespace fingerloc::pipeline
