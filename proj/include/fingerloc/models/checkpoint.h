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

#ifndef FINGERLOC_MODELS_CHECKPOINT_H_
#define FINGERLOC_MODELS_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fingerloc/models/layers.h"

// Checkpoint layout: a text manifest (kind "checkpoint") with the model
// kind, config fingerprint, seed and format version, plus one raw
// little-endian f32 blob per tensor named "<manifest>.<tensor>.bin". Each
// tensor line records its shape, byte count and CRC-32.
namespace fingerloc::models {

inline constexpr int kCheckpointFormat = 1;

struct CheckpointInfo {
  std::string model;
  std::string fingerprint;
  uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointInfo& info,
                     const ParamList<float>& params);

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

// Loads tensors into `params` by name. Throws DataError when the model kind or
// config fingerprint differ, a tensor is missing or has the wrong shape, or
// a blob is corrupt.
CheckpointInfo load_checkpoint(const std::filesystem::path& path, const std::string& model,
                               const std::string& fingerprint, const ParamList<float>& params);

// Copies of parameter values, for best-epoch bookkeeping.
std::vector<Tensor<float>> snapshot(const ParamList<float>& params);
void restore(const ParamList<float>& params, const std::vector<Tensor<float>>& values);

size_t parameter_count(const ParamList<float>& params);

}  // namespace fingerloc::models

#endif  // FINGERLOC_MODELS_CHECKPOINT_H_
