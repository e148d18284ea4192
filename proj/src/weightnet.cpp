#include "hamr/weightnet.hpp"

#include <algorithm>
#include <cmath>

namespace hamr {

WeightNetParams WeightNetParams::init(int hidden_dim, Rng& rng) {
  WeightNetParams p;
  p.hidden_dim = hidden_dim;
  p.flat.assign(p.param_count(), 0.0);
  // layer weights uniform(-0.1, 0.1), biases 0
  for (int j = 0; j < hidden_dim; ++j) p.flat[static_cast<std::size_t>(j)] = rng.uniform(-0.1, 0.1);
  for (int j = 0; j < hidden_dim; ++j)
    p.flat[2 * static_cast<std::size_t>(hidden_dim) + j] = rng.uniform(-0.1, 0.1);
  return p;
}

WeightNetParams WeightNetParams::zeros(int hidden_dim) {
  WeightNetParams p;
  p.hidden_dim = hidden_dim;
  p.flat.assign(p.param_count(), 0.0);
  return p;
}

std::vector<double> zscore_normalize(const std::vector<double>& losses,
                                     double sigma_floor) {
  if (losses.empty()) throw ShapeError("zscore_normalize: empty batch");
  const double n = static_cast<double>(losses.size());
  double mu = 0.0;
  for (double v : losses) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : losses) var += (v - mu) * (v - mu);
  double sigma = std::sqrt(var / n);  // population sigma
  std::vector<double> out(losses.size(), 0.0);
  if (sigma < sigma_floor) return out;
  for (std::size_t i = 0; i < losses.size(); ++i) out[i] = (losses[i] - mu) / sigma;
  return out;
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// raw weight and, optionally, its gradient w.r.t. theta
double raw_weight(const WeightNetParams& theta, double x, double clip_max,
                  double* grad /* |theta| or nullptr */) {
  const int H = theta.hidden_dim;
  const double* w1 = theta.flat.data();
  const double* b1 = w1 + H;
  const double* w2 = b1 + H;
  const double b2 = theta.flat[3 * static_cast<std::size_t>(H)];
  double u = b2;
  std::vector<double> t(static_cast<std::size_t>(H));
  for (int j = 0; j < H; ++j) {
    t[static_cast<std::size_t>(j)] = std::tanh(w1[j] * x + b1[j]);
    u += w2[j] * t[static_cast<std::size_t>(j)];
  }
  double s = sigmoid(u);
  if (grad) {
    double ds = clip_max * s * (1.0 - s);
    for (int j = 0; j < H; ++j) {
      double tj = t[static_cast<std::size_t>(j)];
      double dt = w2[j] * (1.0 - tj * tj);
      grad[j] = ds * dt * x;           // w1
      grad[H + j] = ds * dt;           // b1
      grad[2 * H + j] = ds * tj;       // w2
    }
    grad[3 * H] = ds;                  // b2
  }
  return clip_max * s;
}

}  // namespace

BatchWeights forward_weights(const WeightNetParams& theta,
                             const std::vector<double>& normalized_losses,
                             double clip_min, double clip_max) {
  if (normalized_losses.empty()) throw ShapeError("forward_weights: empty batch");
  if (!(clip_min > 0.0 && clip_max > clip_min))
    throw ConfigError("clip range must satisfy 0 < clip_min < clip_max");
  BatchWeights out;
  const std::size_t n = normalized_losses.size();
  out.raw.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.raw[i] = raw_weight(theta, normalized_losses[i], clip_max, nullptr);
    sum += out.raw[i];
  }
  // renormalize to mean 1, then clip
  out.normalized_clipped.resize(n);
  double scale = static_cast<double>(n) / sum;
  for (std::size_t i = 0; i < n; ++i)
    out.normalized_clipped[i] = std::clamp(out.raw[i] * scale, clip_min, clip_max);
  return out;
}

std::vector<double> weight_jacobian(const WeightNetParams& theta,
                                    const std::vector<double>& normalized_losses,
                                    double clip_min, double clip_max) {
  const std::size_t n = normalized_losses.size();
  const std::size_t p = theta.param_count();
  std::vector<double> raw(n);
  std::vector<double> draw(n * p);  // d raw_i / d theta
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = raw_weight(theta, normalized_losses[i], clip_max, draw.data() + i * p);
    sum += raw[i];
  }
  std::vector<double> dsum(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) dsum[j] += draw[i * p + j];

  const double nn = static_cast<double>(n);
  std::vector<double> jac(n * p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double w = raw[i] * nn / sum;
    if (w < clip_min || w > clip_max) continue;  // clipped: subgradient 0
    // d/dtheta [ raw_i * n / sum ]
    for (std::size_t j = 0; j < p; ++j)
      jac[i * p + j] = nn * (draw[i * p + j] / sum - raw[i] * dsum[j] / (sum * sum));
  }
  return jac;
}

}  // namespace hamr
