#pragma once

#include <optional>
#include <vector>

#include "hamr/common.hpp"

namespace hamr {

enum class LossAgg { MeanCE, MaxToken };

// Shape manifest for the flat parameter vector. hidden_dim == 0 selects the
// plain softmax-linear model; hidden_dim > 0 inserts one tanh layer.
struct ModelShape {
  int num_classes = 0;
  int feature_dim = 0;
  int hidden_dim = 0;

  std::size_t param_count() const {
    if (hidden_dim > 0) {
      return static_cast<std::size_t>(hidden_dim) * feature_dim + hidden_dim +
             static_cast<std::size_t>(num_classes) * hidden_dim + num_classes;
    }
    return static_cast<std::size_t>(num_classes) * feature_dim + num_classes;
  }
};

// Task-model parameters stored flat so gradient dot products are a single
// inner product. Layout (linear): W row-major (C x d), then b (C).
// Layout (hidden): Wh (H x d), bh (H), Wo (C x H), bo (C).
struct TaskModelParams {
  ModelShape shape;
  std::vector<double> flat;

  static TaskModelParams zeros(const ModelShape& shape);
  static TaskModelParams random_init(const ModelShape& shape, double scale, Rng& rng);
};

// One training example: a single feature row for classification, or a group
// of token rows for sequence tasks.
struct Example {
  int id = 0;
  std::vector<std::vector<double>> rows;  // one row per token
  std::vector<int> labels;                // one label per token
};

struct ExampleLoss {
  int example_id = 0;
  double value = 0.0;
  std::optional<std::vector<double>> sub_losses;  // token-level, when grouped
};

struct PerExampleGradient {
  int example_id = 0;
  std::vector<double> flat_grad;
};

std::vector<double> forward_logits(const TaskModelParams& params,
                                   const std::vector<double>& x);

ExampleLoss per_example_loss(const TaskModelParams& params, const Example& example,
                             LossAgg aggregation);

PerExampleGradient per_example_grad(const TaskModelParams& params,
                                    const Example& example, LossAgg aggregation);

// params - lr * direction, value semantics. lr must be positive (lr == 0 is
// accepted for the degenerate no-op step used in tests).
TaskModelParams apply_step(const TaskModelParams& params,
                           const std::vector<double>& direction, double lr);

// Numerically stable softmax and its cross-entropy.
std::vector<double> softmax(const std::vector<double>& logits);
double cross_entropy(const std::vector<double>& logits, int label);

// Accumulates scale * (dL/dlogits backpropagated to the parameters) for one
// feature row. The baseline losses use this with their own logit gradients.
void accumulate_param_grad(const TaskModelParams& params, const std::vector<double>& x,
                           const std::vector<double>& dlogits, double scale,
                           std::vector<double>& grad);

// Batch kernels: per-example losses/gradients over many examples. Results are
// written to per-example slots, so the OpenMP path is bit-identical to the
// serial one. `parallel=false` forces the serial reference path.
void batch_losses(const TaskModelParams& params, const std::vector<const Example*>& batch,
                  LossAgg aggregation, std::vector<ExampleLoss>& out, bool parallel = true);
void batch_grads(const TaskModelParams& params, const std::vector<const Example*>& batch,
                 LossAgg aggregation, std::vector<PerExampleGradient>& out,
                 bool parallel = true);

}  // namespace hamr
