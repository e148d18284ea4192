#pragma once

#include <cstdint>

#include "hamr/common.hpp"

namespace hamr {

struct GradCheckResult {
  int cases = 0;
  double max_rel_error = 0.0;
};

// Central finite differences (step 1e-5) against per_example_grad on random
// small models and examples.
GradCheckResult model_gradcheck(std::uint64_t seed, int cases);

// Finite differences against weight_jacobian, renormalization included.
GradCheckResult weightnet_gradcheck(std::uint64_t seed, int cases);

// Finite differences of the meta loss w.r.t. theta against meta_gradient on
// random small instances (<= 8 examples, <= 4 classes, <= 3 features).
GradCheckResult meta_gradcheck(std::uint64_t seed, int cases);

}  // namespace hamr
