#include "hamr/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace hamr {

SamplingDistribution sampling_probabilities(const std::vector<double>& h,
                                            const std::vector<double>& b, double tau,
                                            double lambda, double epsilon) {
  if (!(tau > 0.0)) throw ConfigError("hardness_alpha (tau) must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (lambda < 0.0) throw ConfigError("knn_lambda must be nonnegative");
  if (h.size() != b.size() || h.empty())
    throw ShapeError("sampling_probabilities: h/b length mismatch");
  SamplingDistribution dist;
  dist.tau = tau;
  dist.lambda = lambda;
  dist.epsilon = epsilon;
  dist.p.resize(h.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    dist.p[i] = std::pow(h[i] + epsilon, tau) * (1.0 + lambda * b[i]);
    sum += dist.p[i];
  }
  dist.cdf.resize(h.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    dist.p[i] /= sum;
    acc += dist.p[i];
    dist.cdf[i] = acc;
  }
  dist.cdf.back() = 1.0;
  return dist;
}

std::vector<int> draw_batch(const SamplingDistribution& dist, std::size_t batch_size,
                            Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<int> ids(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    double u = rng.next_double();
    auto it = std::upper_bound(dist.cdf.begin(), dist.cdf.end(), u);
    if (it == dist.cdf.end()) --it;
    ids[k] = static_cast<int>(it - dist.cdf.begin());
  }
  return ids;
}

}  // namespace hamr
