#pragma once

#include <vector>

#include "hamr/common.hpp"

namespace hamr {

// p_i proportional to (h_i + epsilon)^tau * (1 + lambda * b_i).
struct SamplingDistribution {
  std::vector<double> p;
  std::vector<double> cdf;
  double tau = 1.0;
  double lambda = 0.0;
  double epsilon = 1e-6;
};

SamplingDistribution sampling_probabilities(const std::vector<double>& h,
                                            const std::vector<double>& b, double tau,
                                            double lambda, double epsilon);

// batch_size ids drawn i.i.d. with replacement; the rng advances
// deterministically.
std::vector<int> draw_batch(const SamplingDistribution& dist, std::size_t batch_size,
                            Rng& rng);

}  // namespace hamr
