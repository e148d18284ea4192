#include "hamr/diffmodel.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hamr {

void chunked_accumulate(std::size_t n, std::size_t dim,
                        const std::function<void(std::size_t, std::size_t, double*)>& fn,
                        std::vector<double>& out) {
  constexpr std::size_t kChunk = 64;
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> buffers(nchunks, std::vector<double>(dim, 0.0));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    std::size_t end = std::min(begin + kChunk, n);
    fn(begin, end, buffers[static_cast<std::size_t>(c)].data());
  }
  out.assign(dim, 0.0);
  for (const auto& buf : buffers) {
    for (std::size_t j = 0; j < dim; ++j) out[j] += buf[j];
  }
}

TaskModelParams TaskModelParams::zeros(const ModelShape& shape) {
  return TaskModelParams{shape, std::vector<double>(shape.param_count(), 0.0)};
}

TaskModelParams TaskModelParams::random_init(const ModelShape& shape, double scale,
                                             Rng& rng) {
  TaskModelParams p{shape, std::vector<double>(shape.param_count())};
  for (auto& v : p.flat) v = rng.uniform(-scale, scale);
  return p;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double cross_entropy(const std::vector<double>& logits, int label) {
  // log-sum-exp with max subtraction
  double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  return std::log(sum) + m - logits[static_cast<std::size_t>(label)];
}

namespace {

struct Views {
  // offsets into the flat vector
  std::size_t wh = 0, bh = 0, wo = 0, bo = 0;
};

Views layout(const ModelShape& s) {
  Views v;
  if (s.hidden_dim > 0) {
    v.wh = 0;
    v.bh = static_cast<std::size_t>(s.hidden_dim) * s.feature_dim;
    v.wo = v.bh + s.hidden_dim;
    v.bo = v.wo + static_cast<std::size_t>(s.num_classes) * s.hidden_dim;
  } else {
    v.wo = 0;
    v.bo = static_cast<std::size_t>(s.num_classes) * s.feature_dim;
  }
  return v;
}

// Forward pass keeping the hidden activation for backprop.
void forward_impl(const TaskModelParams& params, const std::vector<double>& x,
                  std::vector<double>* hidden, std::vector<double>& logits) {
  const ModelShape& s = params.shape;
  if (static_cast<int>(x.size()) != s.feature_dim)
    throw ShapeError("feature vector has length " + std::to_string(x.size()) +
                     ", expected " + std::to_string(s.feature_dim));
  const Views v = layout(s);
  const double* flat = params.flat.data();
  logits.assign(static_cast<std::size_t>(s.num_classes), 0.0);
  if (s.hidden_dim > 0) {
    std::vector<double> h(static_cast<std::size_t>(s.hidden_dim));
    for (int j = 0; j < s.hidden_dim; ++j) {
      double acc = flat[v.bh + j];
      const double* row = flat + v.wh + static_cast<std::size_t>(j) * s.feature_dim;
      for (int d = 0; d < s.feature_dim; ++d) acc += row[d] * x[d];
      h[static_cast<std::size_t>(j)] = std::tanh(acc);
    }
    for (int c = 0; c < s.num_classes; ++c) {
      double acc = flat[v.bo + c];
      const double* row = flat + v.wo + static_cast<std::size_t>(c) * s.hidden_dim;
      for (int j = 0; j < s.hidden_dim; ++j) acc += row[j] * h[static_cast<std::size_t>(j)];
      logits[static_cast<std::size_t>(c)] = acc;
    }
    if (hidden) *hidden = std::move(h);
  } else {
    for (int c = 0; c < s.num_classes; ++c) {
      double acc = flat[v.bo + c];
      const double* row = flat + v.wo + static_cast<std::size_t>(c) * s.feature_dim;
      for (int d = 0; d < s.feature_dim; ++d) acc += row[d] * x[d];
      logits[static_cast<std::size_t>(c)] = acc;
    }
  }
}

}  // namespace

void accumulate_param_grad(const TaskModelParams& params, const std::vector<double>& x,
                           const std::vector<double>& residual, double scale,
                           std::vector<double>& grad) {
  const ModelShape& s = params.shape;
  const Views v = layout(s);
  std::vector<double> hidden;
  std::vector<double> logits;
  forward_impl(params, x, s.hidden_dim > 0 ? &hidden : nullptr, logits);

  const double* flat = params.flat.data();
  if (s.hidden_dim > 0) {
    // output layer
    for (int c = 0; c < s.num_classes; ++c) {
      double r = scale * residual[static_cast<std::size_t>(c)];
      double* row = grad.data() + v.wo + static_cast<std::size_t>(c) * s.hidden_dim;
      for (int j = 0; j < s.hidden_dim; ++j) row[j] += r * hidden[static_cast<std::size_t>(j)];
      grad[v.bo + c] += r;
    }
    // hidden layer
    for (int j = 0; j < s.hidden_dim; ++j) {
      double back = 0.0;
      for (int c = 0; c < s.num_classes; ++c)
        back += residual[static_cast<std::size_t>(c)] *
                flat[v.wo + static_cast<std::size_t>(c) * s.hidden_dim + j];
      double hj = hidden[static_cast<std::size_t>(j)];
      double r = scale * back * (1.0 - hj * hj);
      double* row = grad.data() + v.wh + static_cast<std::size_t>(j) * s.feature_dim;
      for (int d = 0; d < s.feature_dim; ++d) row[d] += r * x[d];
      grad[v.bh + j] += r;
    }
  } else {
    for (int c = 0; c < s.num_classes; ++c) {
      double r = scale * residual[static_cast<std::size_t>(c)];
      double* row = grad.data() + v.wo + static_cast<std::size_t>(c) * s.feature_dim;
      for (int d = 0; d < s.feature_dim; ++d) row[d] += r * x[d];
      grad[v.bo + c] += r;
    }
  }
}

namespace {

// scale * d(token CE)/d(params)
void accumulate_token_grad(const TaskModelParams& params, const std::vector<double>& x,
                           int label, double scale, std::vector<double>& grad) {
  std::vector<double> residual = softmax(forward_logits(params, x));
  residual[static_cast<std::size_t>(label)] -= 1.0;
  accumulate_param_grad(params, x, residual, scale, grad);
}

}  // namespace

std::vector<double> forward_logits(const TaskModelParams& params,
                                   const std::vector<double>& x) {
  std::vector<double> logits;
  forward_impl(params, x, nullptr, logits);
  return logits;
}

ExampleLoss per_example_loss(const TaskModelParams& params, const Example& example,
                             LossAgg aggregation) {
  if (example.rows.empty()) throw DataError("example " + std::to_string(example.id) + " has no tokens");
  std::vector<double> token_losses(example.rows.size());
  for (std::size_t t = 0; t < example.rows.size(); ++t) {
    int label = example.labels[t];
    if (label < 0 || label >= params.shape.num_classes)
      throw DataError("label out of range in example " + std::to_string(example.id));
    token_losses[t] = cross_entropy(forward_logits(params, example.rows[t]), label);
  }
  ExampleLoss out;
  out.example_id = example.id;
  if (aggregation == LossAgg::MaxToken) {
    out.value = *std::max_element(token_losses.begin(), token_losses.end());
  } else {
    double sum = 0.0;
    for (double v : token_losses) sum += v;
    out.value = sum / static_cast<double>(token_losses.size());
  }
  if (example.rows.size() > 1) out.sub_losses = std::move(token_losses);
  return out;
}

PerExampleGradient per_example_grad(const TaskModelParams& params,
                                    const Example& example, LossAgg aggregation) {
  if (example.rows.empty()) throw DataError("example " + std::to_string(example.id) + " has no tokens");
  PerExampleGradient g;
  g.example_id = example.id;
  g.flat_grad.assign(params.shape.param_count(), 0.0);
  if (aggregation == LossAgg::MaxToken) {
    // subgradient routed through the first maximal token
    std::size_t argmax = 0;
    double best = -1.0;
    for (std::size_t t = 0; t < example.rows.size(); ++t) {
      double l = cross_entropy(forward_logits(params, example.rows[t]), example.labels[t]);
      if (l > best) {
        best = l;
        argmax = t;
      }
    }
    accumulate_token_grad(params, example.rows[argmax], example.labels[argmax], 1.0,
                          g.flat_grad);
  } else {
    double scale = 1.0 / static_cast<double>(example.rows.size());
    for (std::size_t t = 0; t < example.rows.size(); ++t)
      accumulate_token_grad(params, example.rows[t], example.labels[t], scale, g.flat_grad);
  }
  return g;
}

TaskModelParams apply_step(const TaskModelParams& params,
                           const std::vector<double>& direction, double lr) {
  if (lr < 0.0) throw ConfigError("learning rate must be nonnegative");
  if (direction.size() != params.flat.size())
    throw ShapeError("direction length does not match parameter count");
  TaskModelParams out = params;
  for (std::size_t i = 0; i < out.flat.size(); ++i) out.flat[i] -= lr * direction[i];
  return out;
}

void batch_losses(const TaskModelParams& params, const std::vector<const Example*>& batch,
                  LossAgg aggregation, std::vector<ExampleLoss>& out, bool parallel) {
  out.resize(batch.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (long long i = 0; i < static_cast<long long>(batch.size()); ++i)
    out[static_cast<std::size_t>(i)] =
        per_example_loss(params, *batch[static_cast<std::size_t>(i)], aggregation);
  (void)parallel;
}

void batch_grads(const TaskModelParams& params, const std::vector<const Example*>& batch,
                 LossAgg aggregation, std::vector<PerExampleGradient>& out, bool parallel) {
  out.resize(batch.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (long long i = 0; i < static_cast<long long>(batch.size()); ++i)
    out[static_cast<std::size_t>(i)] =
        per_example_grad(params, *batch[static_cast<std::size_t>(i)], aggregation);
  (void)parallel;
}

}  // namespace hamr
