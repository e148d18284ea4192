#include "hamr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "hamr/dataset.hpp"
#include "hamr/diffmodel.hpp"
#include "hamr/metastep.hpp"
#include "hamr/weightnet.hpp"

namespace hamr {

namespace {

constexpr double kStep = 1e-5;

double rel_error(const std::vector<double>& analytic, const std::vector<double>& fd) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
    norm += fd[i] * fd[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-8);
}

Example random_example(Rng& rng, int feature_dim, int num_classes, int max_tokens) {
  Example e;
  int tokens = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_tokens)));
  for (int t = 0; t < tokens; ++t) {
    std::vector<double> row(static_cast<std::size_t>(feature_dim));
    for (auto& v : row) v = rng.next_gaussian();
    e.rows.push_back(std::move(row));
    e.labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(num_classes))));
  }
  return e;
}

}  // namespace

GradCheckResult model_gradcheck(std::uint64_t seed, int cases) {
  Rng rng(seed);
  GradCheckResult result;
  while (result.cases < cases) {
    int classes = 2 + static_cast<int>(rng.next_below(3));
    int features = 1 + static_cast<int>(rng.next_below(3));
    int hidden = rng.next_double() < 0.5 ? 0 : 3;
    LossAgg agg = rng.next_double() < 0.5 ? LossAgg::MeanCE : LossAgg::MaxToken;
    ModelShape shape{classes, features, hidden};
    TaskModelParams params = TaskModelParams::random_init(shape, 0.5, rng);
    Example e = random_example(rng, features, classes, 3);

    if (agg == LossAgg::MaxToken && e.rows.size() > 1) {
      // skip near-ties where the max subgradient is not finite-difference safe
      std::vector<double> tl;
      for (std::size_t t = 0; t < e.rows.size(); ++t)
        tl.push_back(cross_entropy(forward_logits(params, e.rows[t]), e.labels[t]));
      std::sort(tl.rbegin(), tl.rend());
      if (tl[0] - tl[1] < 1e-3) continue;
    }

    auto analytic = per_example_grad(params, e, agg).flat_grad;
    std::vector<double> fd(params.flat.size());
    for (std::size_t j = 0; j < params.flat.size(); ++j) {
      TaskModelParams plus = params, minus = params;
      plus.flat[j] += kStep;
      minus.flat[j] -= kStep;
      fd[j] = (per_example_loss(plus, e, agg).value -
               per_example_loss(minus, e, agg).value) /
              (2.0 * kStep);
    }
    result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic, fd));
    result.cases++;
  }
  return result;
}

GradCheckResult weightnet_gradcheck(std::uint64_t seed, int cases) {
  Rng rng(seed);
  GradCheckResult result;
  const double clip_min = 0.05, clip_max = 10.0;
  for (int k = 0; k < cases; ++k) {
    int H = 2 + static_cast<int>(rng.next_below(4));
    WeightNetParams theta = WeightNetParams::zeros(H);
    for (auto& v : theta.flat) v = rng.uniform(-0.5, 0.5);
    std::size_t B = 2 + rng.next_below(4);
    std::vector<double> norm(B);
    for (auto& v : norm) v = rng.next_gaussian();

    auto analytic = weight_jacobian(theta, norm, clip_min, clip_max);
    const std::size_t p = theta.param_count();
    std::vector<double> fd(B * p);
    for (std::size_t j = 0; j < p; ++j) {
      WeightNetParams plus = theta, minus = theta;
      plus.flat[j] += kStep;
      minus.flat[j] -= kStep;
      auto wp = forward_weights(plus, norm, clip_min, clip_max).normalized_clipped;
      auto wm = forward_weights(minus, norm, clip_min, clip_max).normalized_clipped;
      for (std::size_t i = 0; i < B; ++i) fd[i * p + j] = (wp[i] - wm[i]) / (2.0 * kStep);
    }
    result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic, fd));
    result.cases++;
  }
  return result;
}

GradCheckResult meta_gradcheck(std::uint64_t seed, int cases) {
  Rng rng(seed);
  GradCheckResult result;
  const double clip_min = 0.05, clip_max = 10.0;
  for (int k = 0; k < cases; ++k) {
    int classes = 2 + static_cast<int>(rng.next_below(3));
    int features = 1 + static_cast<int>(rng.next_below(3));
    double alpha = 0.05 + 0.2 * rng.next_double();
    ModelShape shape{classes, features, 0};
    TaskModelParams phi = TaskModelParams::random_init(shape, 0.5, rng);
    WeightNetParams theta = WeightNetParams::zeros(3);
    for (auto& v : theta.flat) v = rng.uniform(-0.3, 0.3);

    // small dataset: batch examples + meta examples
    LabeledDataset ds;
    ds.feature_dim = features;
    ds.num_classes = classes;
    std::size_t n_batch = 2 + rng.next_below(3);
    std::size_t n_meta = 2 + rng.next_below(3);
    MetaSet meta;
    std::vector<const Example*> batch;
    for (std::size_t i = 0; i < n_batch + n_meta; ++i) {
      Example e = random_example(rng, features, classes, 1);
      e.id = static_cast<int>(i);
      ds.examples.push_back(std::move(e));
      ds.splits.push_back(i < n_batch ? Split::Train : Split::Valid);
      if (i >= n_batch) {
        meta.example_ids.push_back(static_cast<int>(i));
        meta.source.push_back(MetaSource::Validation);
      }
    }
    for (std::size_t i = 0; i < n_batch; ++i) batch.push_back(&ds.examples[i]);

    std::vector<ExampleLoss> losses;
    batch_losses(phi, batch, LossAgg::MeanCE, losses, false);
    std::vector<double> raw(losses.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = losses[i].value;
    auto norm = zscore_normalize(raw);
    std::vector<PerExampleGradient> grads;
    batch_grads(phi, batch, LossAgg::MeanCE, grads, false);

    // loss of theta through the full pipeline; the grads are constants
    auto loss_of = [&](const WeightNetParams& th) {
      auto w = forward_weights(th, norm, clip_min, clip_max).normalized_clipped;
      TaskModelParams phi_prime = inner_step(phi, grads, w, alpha);
      return meta_loss(phi_prime, meta, ds);
    };

    auto phi_prime = inner_step(
        phi, grads,
        forward_weights(theta, norm, clip_min, clip_max).normalized_clipped, alpha);
    auto mg = meta_loss_grad(phi_prime, meta, ds);
    auto analytic = meta_gradient(theta, norm, grads, alpha, mg, clip_min, clip_max);

    std::vector<double> fd(theta.param_count());
    for (std::size_t j = 0; j < fd.size(); ++j) {
      WeightNetParams plus = theta, minus = theta;
      plus.flat[j] += kStep;
      minus.flat[j] -= kStep;
      fd[j] = (loss_of(plus) - loss_of(minus)) / (2.0 * kStep);
    }
    result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic, fd));
    result.cases++;
  }
  return result;
}

}  // namespace hamr
