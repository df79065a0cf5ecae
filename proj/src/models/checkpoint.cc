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

#include "fingerloc/models/checkpoint.h"

#include "fingerloc/error.h"
#include "fingerloc/io.h"

namespace fingerloc::models {

namespace fs = std::filesystem;

void save_checkpoint(const fs::path& path, const CheckpointInfo& info,
                     const ParamList<float>& params) {
  io::Manifest m("checkpoint");
  m.set("checkpoint_format", std::to_string(kCheckpointFormat));
  m.set("model", info.model);
  m.set("fingerprint", info.fingerprint);
  m.set("seed", std::to_string(info.seed));
  for (const auto& [k, v] : info.extra) m.set(k, v);
  for (const Parameter<float>* p : params) {
    const std::string blob = path.filename().string() + "." + p->name + ".bin";
    io::BlobWriter w(path.parent_path() / blob, blob);
    m.add_section(w.write<float>(p->name, p->value.shape(), p->value.values()));
    w.close();
  }
  m.save(path);
}

namespace {

CheckpointInfo info_of(const io::Manifest& m) {
  const std::string format = m.get("checkpoint_format");
  if (format != std::to_string(kCheckpointFormat)) {
    throw DataError("checkpoint format version " + format + " is not supported (expected " +
                    std::to_string(kCheckpointFormat) + ")");
  }
  CheckpointInfo info;
  info.model = m.get("model");
  info.fingerprint = m.get("fingerprint");
  info.seed = std::stoull(m.get("seed"));
  for (const auto& [k, v] : m.fields()) {
    if (k != "checkpoint_format" && k != "model" && k != "fingerprint" && k != "seed") {
      info.extra.emplace_back(k, v);
    }
  }
  return info;
}

}  // namespace

CheckpointInfo read_checkpoint_info(const fs::path& path) {
  return info_of(io::Manifest::load(path, "checkpoint"));
}

CheckpointInfo load_checkpoint(const fs::path& path, const std::string& model,
                               const std::string& fingerprint, const ParamList<float>& params) {
  const io::Manifest m = io::Manifest::load(path, "checkpoint");
  CheckpointInfo info = info_of(m);
  if (info.model != model) {
    throw DataError(path.string() + " holds a '" + info.model + "' model, expected '" + model +
                    "'");
  }
  if (info.fingerprint != fingerprint) {
    throw DataError("config fingerprint mismatch for " + path.string() + ": checkpoint has '" +
                    info.fingerprint + "', current config is '" + fingerprint + "'");
  }
  if (m.sections().size() != params.size()) {
    throw DataError(path.string() + ": " + std::to_string(m.sections().size()) +
                    " tensors, model has " + std::to_string(params.size()));
  }
  // Read everything before touching the model so a failure leaves it intact.
  std::vector<std::vector<float>> values;
  for (const Parameter<float>* p : params) {
    const io::Section& s = m.section(p->name);
    if (s.shape != p->value.shape()) {
      throw DataError("tensor '" + p->name + "' has shape " + io::shape_to_string(s.shape) +
                      " in " + path.string() + ", model expects " +
                      io::shape_to_string(p->value.shape()));
    }
    values.push_back(io::read_section<float>(path.parent_path(), s));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), params[i]->value.values().begin());
  }
  return info;
}

std::vector<Tensor<float>> snapshot(const ParamList<float>& params) {
  std::vector<Tensor<float>> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

void restore(const ParamList<float>& params, const std::vector<Tensor<float>>& values) {
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

size_t parameter_count(const ParamList<float>& params) {
  size_t n = 0;
  for (const auto* p : params) n += p->value.size();
  return n;
}

}  // namespace fingerloc::models
