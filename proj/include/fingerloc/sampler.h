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

#ifndef FINGERLOC_SAMPLER_H_
#define FINGERLOC_SAMPLER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "fingerloc/graph.h"
#include "fingerloc/numeric/ops.h"

namespace fingerloc::graph {

// Layer-wise message-flow plan for evaluating an L-layer GNN at a set of
// seed nodes.
//
// Layer l reads the rows of `inputs[l]` and produces one row per node in
// `fresh[l + 1]`. The input list of layer l is fresh[l] followed by
// cached[l]: fresh rows are the previous layer's output (nothing is fresh
// at level 0), cached rows are gathered from a precomputed level-l table
// (the raw features at level 0). fresh[L] equals the seeds.
struct ComputationPlan {
  std::vector<std::vector<uint32_t>> fresh;   // L + 1 levels
  std::vector<std::vector<uint32_t>> cached;  // L levels
  std::vector<numeric::Neighborhoods> blocks; // L blocks

  size_t depth() const { return blocks.size(); }
  std::span<const uint32_t> seeds() const { return fresh.back(); }
  // Global ids of the inputs of layer l, in row order.
  std::vector<uint32_t> inputs(size_t l) const;
};

// Plan over full neighborhoods for a mini-batch of seeds. Every level-l
// representation is recomputed; only level 0 is gathered.
ComputationPlan make_batch_plan(const Adjacency& adj, std::span<const uint32_t> seeds,
                                size_t depth);

// Plan that evaluates each seed as if it were the only non-training node of
// the graph: other non-training nodes are dropped from its neighborhoods.
// Representations unaffected by the seed (farther than l hops at level l)
// are read from level tables computed on the training-only subgraph, which
// must cover nodes [0, num_train).
ComputationPlan make_isolated_plan(const Adjacency& adj, size_t num_train,
                                   std::span<const uint32_t> seeds, size_t depth);

// Block structure of a full-graph pass over the training-only subgraph:
// every training node is its own destination, src == dst == [0, num_train).
numeric::Neighborhoods train_only_block(const Adjacency& adj, size_t num_train);

}  // namespace fingerloc::graph

#endif  // FINGERLOC_SAMPLER_H_
