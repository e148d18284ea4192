#include "hamr/hardness.hpp"

#include <algorithm>
#include <cmath>

namespace hamr {

HardnessState init_hardness(std::size_t n) {
  if (n == 0) throw ConfigError("init_hardness: n must be >= 1");
  HardnessState s;
  s.h.assign(n, 1.0);
  s.b.assign(n, 0.0);
  s.hit_counts.assign(n, 0);
  return s;
}

void ema_update(HardnessState& state, const std::vector<int>& batch_ids,
                const std::vector<double>& post_weights, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma_ema must be in [0,1]");
  if (batch_ids.size() != post_weights.size())
    throw ShapeError("ema_update: batch/weight length mismatch");
  for (std::size_t k = 0; k < batch_ids.size(); ++k) {
    std::size_t i = static_cast<std::size_t>(batch_ids[k]);
    if (i >= state.h.size()) throw DataError("ema_update: batch id out of range");
    state.h[i] = gamma * state.h[i] + (1.0 - gamma) * post_weights[k];
  }
}

std::vector<int> select_hard_set(const HardnessState& state, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("knn_ratio must be in (0,1]");
  const std::size_t n = state.h.size();
  std::size_t count = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(n)));
  count = std::min(count, n);
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (state.h[static_cast<std::size_t>(a)] != state.h[static_cast<std::size_t>(b)])
      return state.h[static_cast<std::size_t>(a)] > state.h[static_cast<std::size_t>(b)];
    return a < b;
  });
  ids.resize(count);
  return ids;
}

}  // namespace hamr
