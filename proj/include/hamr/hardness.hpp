#pragma once

#include <cstdint>
#include <vector>

#include "hamr/common.hpp"

namespace hamr {

// Per-training-example hardness tracked as an EMA of post-meta weights, plus
// the neighborhood boost scores and hit counts maintained by the neighbor
// refresh.
struct HardnessState {
  std::vector<double> h;
  std::vector<double> b;
  std::vector<std::int64_t> hit_counts;
  int last_refresh_epoch = -1;
};

// h starts at 1 (the neutral post-renormalization weight) so epoch-0 sampling
// is near-uniform.
HardnessState init_hardness(std::size_t n);

// h_i <- gamma * h_i + (1 - gamma) * w_i for batch members only.
void ema_update(HardnessState& state, const std::vector<int>& batch_ids,
                const std::vector<double>& post_weights, double gamma);

// The ceil(ratio * n) ids with largest h, ties broken by lower id; sorted by
// descending h then ascending id.
std::vector<int> select_hard_set(const HardnessState& state, double ratio);

}  // namespace hamr
