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

#ifndef FINGERLOC_NUMERIC_ADAM_H_
#define FINGERLOC_NUMERIC_ADAM_H_

#include <cstdint>
#include <vector>

#include "fingerloc/numeric/ops.h"

namespace fingerloc::numeric {

struct AdamOptions {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed parameter list. Gradients are read,
// never cleared; callers zero them at the start of each batch.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamOptions options = {});

  void step();
  void zero_grad();

  int64_t step_count() const { return step_count_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Parameter<T>*>& params() const { return params_; }

 private:
  std::vector<Parameter<T>*> params_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  AdamOptions options_;
  int64_t step_count_ = 0;
};

}  // namespace fingerloc::numeric

#endif  // FINGERLOC_NUMERIC_ADAM_H_
