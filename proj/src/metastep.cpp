#include "hamr/metastep.hpp"

#include <algorithm>
#include <cmath>

namespace hamr {

MetaSet build_meta_set(const LabeledDataset& dataset, std::uint64_t rng_seed) {
  auto val_ids = dataset.ids_of(Split::Valid);
  if (val_ids.empty()) throw ConfigError("build_meta_set: empty validation split");

  auto val_counts = dataset.class_counts(Split::Valid);
  std::vector<std::int64_t> sorted_counts = val_counts;
  std::sort(sorted_counts.begin(), sorted_counts.end());
  // lower median keeps the target an integer count
  std::int64_t median = sorted_counts[(sorted_counts.size() - 1) / 2];

  MetaSet meta;
  for (int id : val_ids) {
    meta.example_ids.push_back(id);
    meta.source.push_back(MetaSource::Validation);
  }

  // per-class train pools
  std::vector<std::vector<int>> train_by_class(static_cast<std::size_t>(dataset.num_classes));
  for (int id : dataset.ids_of(Split::Train))
    train_by_class[static_cast<std::size_t>(example_label(dataset.examples[static_cast<std::size_t>(id)]))]
        .push_back(id);

  Rng rng(rng_seed);
  for (int c = 0; c < dataset.num_classes; ++c) {
    std::int64_t have = val_counts[static_cast<std::size_t>(c)];
    if (have >= median) continue;
    auto& pool = train_by_class[static_cast<std::size_t>(c)];
    std::int64_t need = std::min<std::int64_t>(median - have,
                                               static_cast<std::int64_t>(pool.size()));
    // uniform without replacement: partial Fisher-Yates
    for (std::int64_t j = 0; j < need; ++j) {
      std::size_t pick = static_cast<std::size_t>(j) +
                         static_cast<std::size_t>(rng.next_below(pool.size() - static_cast<std::size_t>(j)));
      std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
      meta.example_ids.push_back(pool[static_cast<std::size_t>(j)]);
      meta.source.push_back(MetaSource::TrainTopup);
    }
  }
  return meta;
}

std::vector<double> weighted_grad_sum(const std::vector<PerExampleGradient>& grads,
                                      const std::vector<double>& weights) {
  if (grads.size() != weights.size() || grads.empty())
    throw ShapeError("weighted_grad_sum: grads/weights mismatch");
  std::vector<double> out(grads[0].flat_grad.size(), 0.0);
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] += weights[i] * grads[i].flat_grad[j];
  return out;
}

TaskModelParams inner_step(const TaskModelParams& phi,
                           const std::vector<PerExampleGradient>& grads,
                           const std::vector<double>& weights, double alpha) {
  return apply_step(phi, weighted_grad_sum(grads, weights), alpha);
}

double meta_loss(const TaskModelParams& phi_prime, const MetaSet& meta_set,
                 const LabeledDataset& dataset) {
  if (meta_set.example_ids.empty()) throw ConfigError("meta_loss: empty meta set");
  std::vector<double> total;
  chunked_accumulate(
      meta_set.example_ids.size(), 1,
      [&](std::size_t begin, std::size_t end, double* acc) {
        for (std::size_t i = begin; i < end; ++i) {
          const Example& e =
              dataset.examples[static_cast<std::size_t>(meta_set.example_ids[i])];
          acc[0] += per_example_loss(phi_prime, e, LossAgg::MeanCE).value;
        }
      },
      total);
  return total[0] / static_cast<double>(meta_set.example_ids.size());
}

std::vector<double> meta_loss_grad(const TaskModelParams& phi_prime,
                                   const MetaSet& meta_set,
                                   const LabeledDataset& dataset) {
  const std::size_t p = phi_prime.shape.param_count();
  std::vector<double> grad;
  chunked_accumulate(
      meta_set.example_ids.size(), p,
      [&](std::size_t begin, std::size_t end, double* acc) {
        for (std::size_t i = begin; i < end; ++i) {
          const Example& e =
              dataset.examples[static_cast<std::size_t>(meta_set.example_ids[i])];
          auto g = per_example_grad(phi_prime, e, LossAgg::MeanCE);
          for (std::size_t j = 0; j < p; ++j) acc[j] += g.flat_grad[j];
        }
      },
      grad);
  double inv = 1.0 / static_cast<double>(meta_set.example_ids.size());
  for (auto& v : grad) v *= inv;
  return grad;
}

std::vector<double> meta_gradient(const WeightNetParams& theta,
                                  const std::vector<double>& normalized_losses,
                                  const std::vector<PerExampleGradient>& grads,
                                  double alpha,
                                  const std::vector<double>& meta_grad_at_phi_prime,
                                  double clip_min, double clip_max) {
  const std::size_t B = normalized_losses.size();
  const std::size_t p = theta.param_count();
  if (grads.size() != B) throw ShapeError("meta_gradient: batch size mismatch");
  std::vector<double> jac = weight_jacobian(theta, normalized_losses, clip_min, clip_max);
  // d_i = <g_i, grad_phi' L_meta>
  std::vector<double> d(B, 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    const auto& g = grads[i].flat_grad;
    if (g.size() != meta_grad_at_phi_prime.size())
      throw ShapeError("meta_gradient: parameter count mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) acc += g[j] * meta_grad_at_phi_prime[j];
    d[i] = acc;
  }
  std::vector<double> theta_grad(p, 0.0);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < p; ++j) theta_grad[j] -= alpha * d[i] * jac[i * p + j];
  return theta_grad;
}

WeightNetParams meta_update(const WeightNetParams& theta,
                            const std::vector<double>& theta_grad, double beta) {
  if (!(beta > 0.0)) throw ConfigError("wnet_lr (beta) must be positive");
  if (theta_grad.size() != theta.flat.size())
    throw ShapeError("meta_update: gradient length mismatch");
  WeightNetParams out = theta;
  for (std::size_t i = 0; i < out.flat.size(); ++i) out.flat[i] -= beta * theta_grad[i];
  return out;
}

TaskModelParams outer_step(const TaskModelParams& phi,
                           const std::vector<PerExampleGradient>& grads,
                           const std::vector<double>& post_weights, double alpha) {
  return inner_step(phi, grads, post_weights, alpha);
}

}  // namespace hamr
