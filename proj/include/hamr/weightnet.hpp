#pragma once

#include <vector>

#include "hamr/common.hpp"

namespace hamr {

// 1 -> hidden -> 1 network mapping a normalized difficulty score to a raw
// importance weight: raw = clip_max * sigmoid(w2 . tanh(w1 * x + b1) + b2).
// Flat layout: w1 (H), b1 (H), w2 (H), b2 (1).
struct WeightNetParams {
  int hidden_dim = 64;
  std::vector<double> flat;

  std::size_t param_count() const { return 3 * static_cast<std::size_t>(hidden_dim) + 1; }

  static WeightNetParams init(int hidden_dim, Rng& rng);
  static WeightNetParams zeros(int hidden_dim);
};

struct BatchWeights {
  std::vector<double> raw;
  std::vector<double> normalized_clipped;
  std::vector<int> batch_ids;
};

// Batch-wise z-score. A batch with sigma below the floor carries no ranking
// signal and maps to all zeros.
std::vector<double> zscore_normalize(const std::vector<double>& losses,
                                     double sigma_floor = 1e-8);

BatchWeights forward_weights(const WeightNetParams& theta,
                             const std::vector<double>& normalized_losses,
                             double clip_min, double clip_max);

// Exact Jacobian d(normalized_clipped)/d(theta), batch_size x |theta| row-major.
// The mean-1 renormalization is part of the differentiated graph; rows whose
// weight landed outside [clip_min, clip_max] before clamping are zero.
std::vector<double> weight_jacobian(const WeightNetParams& theta,
                                    const std::vector<double>& normalized_losses,
                                    double clip_min, double clip_max);

}  // namespace hamr
