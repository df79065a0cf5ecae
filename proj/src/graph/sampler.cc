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

#include "fingerloc/sampler.h"

#include <unordered_map>

#include "fingerloc/error.h"

namespace fingerloc::graph {

std::vector<uint32_t> ComputationPlan::inputs(size_t l) const {
  std::vector<uint32_t> out = fresh[l];
  out.insert(out.end(), cached[l].begin(), cached[l].end());
  return out;
}

namespace {

void check_seeds(const Adjacency& adj, std::span<const uint32_t> seeds) {
  for (uint32_t s : seeds) {
    if (s >= adj.num_nodes()) throw DataError("seed node " + std::to_string(s) + " out of range");
  }
}

}  // namespace

ComputationPlan make_batch_plan(const Adjacency& adj, std::span<const uint32_t> seeds,
                                size_t depth) {
  check_seeds(adj, seeds);
  ComputationPlan plan;
  plan.fresh.resize(depth + 1);
  plan.cached.resize(depth);
  plan.blocks.resize(depth);
  plan.fresh[depth].assign(seeds.begin(), seeds.end());

  std::vector<int64_t> local(adj.num_nodes(), -1);
  for (size_t l = depth; l-- > 0;) {
    const std::vector<uint32_t>& dst = plan.fresh[l + 1];
    std::vector<uint32_t> src;
    auto index_of = [&](uint32_t v) {
      if (local[v] < 0) {
        local[v] = static_cast<int64_t>(src.size());
        src.push_back(v);
      }
      return static_cast<uint32_t>(local[v]);
    };
    for (uint32_t d : dst) index_of(d);
    numeric::Neighborhoods& nb = plan.blocks[l];
    for (uint32_t d : dst) {
      nb.members.push_back(index_of(d));
      for (uint32_t w : adj.of(d)) nb.members.push_back(index_of(w));
      nb.offsets.push_back(static_cast<uint32_t>(nb.members.size()));
    }
    nb.num_src = src.size();
    for (uint32_t v : src) local[v] = -1;
    if (l > 0) {
      plan.fresh[l] = std::move(src);
    } else {
      plan.cached[0] = std::move(src);
    }
  }
  return plan;
}

namespace {

// Plan for one seed; same layout as ComputationPlan.
ComputationPlan isolated_single(const Adjacency& adj, size_t num_train, uint32_t seed,
                                size_t depth) {
  auto allowed = [&](uint32_t w) { return w < num_train || w == seed; };

  std::unordered_map<uint32_t, size_t> dist{{seed, 0}};
  std::vector<uint32_t> frontier{seed};
  for (size_t hop = 1; hop < depth && !frontier.empty(); ++hop) {
    std::vector<uint32_t> next;
    for (uint32_t v : frontier) {
      for (uint32_t w : adj.of(v)) {
        if (allowed(w) && dist.emplace(w, hop).second) next.push_back(w);
      }
    }
    frontier = std::move(next);
  }
  auto affected = [&](uint32_t v, size_t level) {
    auto it = dist.find(v);
    return it != dist.end() && it->second <= level;
  };

  ComputationPlan plan;
  plan.fresh.resize(depth + 1);
  plan.cached.resize(depth);
  plan.blocks.resize(depth);
  plan.fresh[depth] = {seed};
  for (size_t l = depth; l-- > 0;) {
    const std::vector<uint32_t>& dst = plan.fresh[l + 1];
    std::vector<uint32_t> fresh;
    std::vector<uint32_t> cached;
    // Encoded slot: fresh index i as i, cached index j as ~j.
    std::unordered_map<uint32_t, int64_t> slot;
    auto slot_of = [&](uint32_t v) {
      auto [it, inserted] = slot.emplace(v, 0);
      if (inserted) {
        if (l > 0 && affected(v, l)) {
          it->second = static_cast<int64_t>(fresh.size());
          fresh.push_back(v);
        } else {
          it->second = ~static_cast<int64_t>(cached.size());
          cached.push_back(v);
        }
      }
      return it->second;
    };
    std::vector<int64_t> raw;
    numeric::Neighborhoods& nb = plan.blocks[l];
    for (uint32_t d : dst) {
      raw.push_back(slot_of(d));
      for (uint32_t w : adj.of(d)) {
        if (allowed(w)) raw.push_back(slot_of(w));
      }
      nb.offsets.push_back(static_cast<uint32_t>(raw.size()));
    }
    nb.members.reserve(raw.size());
    for (int64_t s : raw) {
      nb.members.push_back(s >= 0 ? static_cast<uint32_t>(s)
                                  : static_cast<uint32_t>(fresh.size() + static_cast<size_t>(~s)));
    }
    nb.num_src = fresh.size() + cached.size();
    plan.fresh[l] = std::move(fresh);
    plan.cached[l] = std::move(cached);
  }
  return plan;
}

}  // namespace

ComputationPlan make_isolated_plan(const Adjacency& adj, size_t num_train,
                                   std::span<const uint32_t> seeds, size_t depth) {
  check_seeds(adj, seeds);
  if (num_train > adj.num_nodes()) throw DataError("isolated plan: num_train exceeds node count");
  std::vector<ComputationPlan> parts;
  parts.reserve(seeds.size());
  for (uint32_t s : seeds) parts.push_back(isolated_single(adj, num_train, s, depth));

  ComputationPlan plan;
  plan.fresh.resize(depth + 1);
  plan.cached.resize(depth);
  plan.blocks.resize(depth);
  plan.fresh[depth].assign(seeds.begin(), seeds.end());
  for (size_t l = 0; l < depth; ++l) {
    size_t total_fresh = 0;
    for (const auto& p : parts) total_fresh += p.fresh[l].size();
    size_t fresh_off = 0;
    size_t cached_off = 0;
    numeric::Neighborhoods& nb = plan.blocks[l];
    for (const auto& p : parts) {
      const numeric::Neighborhoods& b = p.blocks[l];
      const size_t nf = p.fresh[l].size();
      for (size_t d = 0; d < b.num_dst(); ++d) {
        for (uint32_t m : b.of(d)) {
          nb.members.push_back(static_cast<uint32_t>(
              m < nf ? fresh_off + m : total_fresh + cached_off + (m - nf)));
        }
        nb.offsets.push_back(static_cast<uint32_t>(nb.members.size()));
      }
      plan.fresh[l].insert(plan.fresh[l].end(), p.fresh[l].begin(), p.fresh[l].end());
      plan.cached[l].insert(plan.cached[l].end(), p.cached[l].begin(), p.cached[l].end());
      fresh_off += nf;
      cached_off += p.cached[l].size();
    }
    nb.num_src = fresh_off + cached_off;
  }
  return plan;
}

numeric::Neighborhoods train_only_block(const Adjacency& adj, size_t num_train) {
  numeric::Neighborhoods nb;
  nb.num_src = num_train;
  for (size_t v = 0; v < num_train; ++v) {
    nb.members.push_back(static_cast<uint32_t>(v));
    for (uint32_t w : adj.of(v)) {
      if (w < num_train) nb.members.push_back(w);
    }
    nb.offsets.push_back(static_cast<uint32_t>(nb.members.size()));
  }
  return nb;
}

}  // namespace fingerloc::graph
