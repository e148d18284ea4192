#pragma once

#include <vector>

#include "hamr/common.hpp"
#include "hamr/dataset.hpp"
#include "hamr/diffmodel.hpp"
#include "hamr/weightnet.hpp"

namespace hamr {

enum class MetaSource { Validation, TrainTopup };

// The balanced meta-set: the full validation split plus per-class top-ups
// from train until each class reaches the validation median class count.
struct MetaSet {
  std::vector<int> example_ids;
  std::vector<MetaSource> source;
};

MetaSet build_meta_set(const LabeledDataset& dataset, std::uint64_t rng_seed);

// sum_i weights[i] * grads[i].
std::vector<double> weighted_grad_sum(const std::vector<PerExampleGradient>& grads,
                                      const std::vector<double>& weights);

// phi' = phi - alpha * sum_i w_i g_i, with the weights treated as constants.
TaskModelParams inner_step(const TaskModelParams& phi,
                           const std::vector<PerExampleGradient>& grads,
                           const std::vector<double>& weights, double alpha);

// Unweighted mean cross-entropy over the meta set (MEAN_CE regardless of the
// task aggregation mode). `meta_batch` = 0 means the full meta set.
double meta_loss(const TaskModelParams& phi_prime, const MetaSet& meta_set,
                 const LabeledDataset& dataset);

// Gradient of the meta loss with respect to phi'.
std::vector<double> meta_loss_grad(const TaskModelParams& phi_prime,
                                   const MetaSet& meta_set,
                                   const LabeledDataset& dataset);

// Exact one-step chain rule: grad_theta L_meta = -alpha * J^T d, where J is
// the weight Jacobian on the batch and d_i = <g_i, grad_phi' L_meta>.
std::vector<double> meta_gradient(const WeightNetParams& theta,
                                  const std::vector<double>& normalized_losses,
                                  const std::vector<PerExampleGradient>& grads,
                                  double alpha,
                                  const std::vector<double>& meta_grad_at_phi_prime,
                                  double clip_min, double clip_max);

WeightNetParams meta_update(const WeightNetParams& theta,
                            const std::vector<double>& theta_grad, double beta);

// Identical contract to inner_step, applied to the persistent phi with the
// post-meta weights.
TaskModelParams outer_step(const TaskModelParams& phi,
                           const std::vector<PerExampleGradient>& grads,
                           const std::vector<double>& post_weights, double alpha);

// One recorded bi-level step, replayable for audit.
struct BiLevelTrace {
  std::vector<int> batch_ids;
  BatchWeights pre_weights;
  TaskModelParams virtual_params;
  double meta_loss_value = 0.0;
  std::vector<double> theta_grad;
  BatchWeights post_weights;
};

}  // namespace hamr
