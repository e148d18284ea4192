#pragma once

#include <cstdint>
#include <vector>

#include "hamr/common.hpp"

namespace hamr {

enum class WeightScheme { ICF, EN, Uniform };

struct ClassWeights {
  std::vector<double> w;
  WeightScheme scheme = WeightScheme::Uniform;
};

// w_c = (1/f_c) / ((1/C) sum_j 1/f_j), normalized to mean 1.
ClassWeights icf_weights(const std::vector<std::int64_t>& class_counts);

// w_y = (1 - beta) / (1 - beta^{n_y}). Not rescaled here; the trainer may
// rescale to mean 1.
ClassWeights en_weights(const std::vector<std::int64_t>& class_counts, double beta_en);

// -alpha_y * (1 - p_t)^gamma * log(p_t), with p_t floored at 1e-12.
double focal_loss(const std::vector<double>& probs, int y, double gamma_f,
                  const std::vector<double>& alpha_weights);

// Multi-class dice: per-class over the batch, averaged over classes.
double dice_loss(const std::vector<std::vector<double>>& probs_batch,
                 const std::vector<std::vector<double>>& onehot_batch,
                 double smooth_eps);

// Gradients with respect to logits, used by the baseline training paths.
std::vector<double> focal_grad_logits(const std::vector<double>& logits, int y,
                                      double gamma_f,
                                      const std::vector<double>& alpha_weights);
// Batch dice: returns the loss; grads_out gets one gradient row per batch row.
double dice_loss_grad_logits(const std::vector<std::vector<double>>& logits_batch,
                             const std::vector<int>& labels, int num_classes,
                             double smooth_eps,
                             std::vector<std::vector<double>>& grads_out);

}  // namespace hamr
