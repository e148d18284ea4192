#include "hamr/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "hamr/diffmodel.hpp"

namespace hamr {

ClassWeights icf_weights(const std::vector<std::int64_t>& class_counts) {
  if (class_counts.empty()) throw DataError("icf_weights: no classes");
  std::int64_t total = 0;
  for (std::int64_t c : class_counts) {
    if (c < 1) throw DataError("icf_weights: class count must be >= 1");
    total += c;
  }
  const std::size_t C = class_counts.size();
  std::vector<double> inv(C);
  double mean_inv = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    double f = static_cast<double>(class_counts[c]) / static_cast<double>(total);
    inv[c] = 1.0 / f;
    mean_inv += inv[c];
  }
  mean_inv /= static_cast<double>(C);
  ClassWeights out;
  out.scheme = WeightScheme::ICF;
  out.w.resize(C);
  for (std::size_t c = 0; c < C; ++c) out.w[c] = inv[c] / mean_inv;
  return out;
}

ClassWeights en_weights(const std::vector<std::int64_t>& class_counts, double beta_en) {
  if (!(beta_en >= 0.0 && beta_en < 1.0)) throw ConfigError("en beta must be in [0,1)");
  ClassWeights out;
  out.scheme = WeightScheme::EN;
  out.w.resize(class_counts.size());
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    if (class_counts[c] < 1) throw DataError("en_weights: class count must be >= 1");
    if (beta_en == 0.0) {
      out.w[c] = 1.0;
    } else {
      out.w[c] = (1.0 - beta_en) /
                 (1.0 - std::pow(beta_en, static_cast<double>(class_counts[c])));
    }
  }
  return out;
}

double focal_loss(const std::vector<double>& probs, int y, double gamma_f,
                  const std::vector<double>& alpha_weights) {
  if (gamma_f < 0.0) throw ConfigError("focal gamma must be nonnegative");
  double pt = std::max(probs[static_cast<std::size_t>(y)], 1e-12);
  double alpha = alpha_weights.empty() ? 1.0 : alpha_weights[static_cast<std::size_t>(y)];
  return -alpha * std::pow(1.0 - pt, gamma_f) * std::log(pt);
}

double dice_loss(const std::vector<std::vector<double>>& probs_batch,
                 const std::vector<std::vector<double>>& onehot_batch,
                 double smooth_eps) {
  if (probs_batch.empty() || probs_batch.size() != onehot_batch.size())
    throw ShapeError("dice_loss: batch mismatch");
  const std::size_t C = probs_batch[0].size();
  double loss = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    double num = 0.0, y_sum = 0.0, p_sum = 0.0;
    for (std::size_t i = 0; i < probs_batch.size(); ++i) {
      num += onehot_batch[i][c] * probs_batch[i][c];
      y_sum += onehot_batch[i][c];
      p_sum += probs_batch[i][c];
    }
    loss += 1.0 - (2.0 * num + smooth_eps) / (y_sum + p_sum + smooth_eps);
  }
  return loss / static_cast<double>(C);
}

std::vector<double> focal_grad_logits(const std::vector<double>& logits, int y,
                                      double gamma_f,
                                      const std::vector<double>& alpha_weights) {
  std::vector<double> p = softmax(logits);
  double pt = std::max(p[static_cast<std::size_t>(y)], 1e-12);
  double alpha = alpha_weights.empty() ? 1.0 : alpha_weights[static_cast<std::size_t>(y)];
  // dL/dpt
  double one_m = 1.0 - pt;
  double dl_dpt = alpha * gamma_f * (gamma_f > 0.0 ? std::pow(one_m, gamma_f - 1.0) : 0.0) *
                      std::log(pt) -
                  alpha * std::pow(one_m, gamma_f) / pt;
  std::vector<double> g(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    double dpt_dz = pt * ((static_cast<int>(j) == y ? 1.0 : 0.0) - p[j]);
    g[j] = dl_dpt * dpt_dz;
  }
  return g;
}

double dice_loss_grad_logits(const std::vector<std::vector<double>>& logits_batch,
                             const std::vector<int>& labels, int num_classes,
                             double smooth_eps,
                             std::vector<std::vector<double>>& grads_out) {
  const std::size_t B = logits_batch.size();
  const std::size_t C = static_cast<std::size_t>(num_classes);
  std::vector<std::vector<double>> probs(B);
  for (std::size_t i = 0; i < B; ++i) probs[i] = softmax(logits_batch[i]);

  std::vector<double> num(C, 0.0), y_sum(C, 0.0), p_sum(C, 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t y = static_cast<std::size_t>(labels[i]);
    num[y] += probs[i][y];
    y_sum[y] += 1.0;
    for (std::size_t c = 0; c < C; ++c) p_sum[c] += probs[i][c];
  }
  double loss = 0.0;
  std::vector<double> dnum(C), dden(C);  // dL/dS_c and dL/dP_c pieces
  for (std::size_t c = 0; c < C; ++c) {
    double den = y_sum[c] + p_sum[c] + smooth_eps;
    double nm = 2.0 * num[c] + smooth_eps;
    loss += 1.0 - nm / den;
    dnum[c] = -2.0 / den / static_cast<double>(C);
    dden[c] = nm / (den * den) / static_cast<double>(C);
  }
  loss /= static_cast<double>(C);

  grads_out.assign(B, std::vector<double>(C, 0.0));
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t y = static_cast<std::size_t>(labels[i]);
    // dL/dp_ic
    std::vector<double> gp(C);
    for (std::size_t c = 0; c < C; ++c)
      gp[c] = (c == y ? dnum[c] : 0.0) + dden[c];
    // chain through softmax: dL/dz_ij = p_ij * (gp_j - sum_c gp_c p_ic)
    double dot = 0.0;
    for (std::size_t c = 0; c < C; ++c) dot += gp[c] * probs[i][c];
    for (std::size_t j = 0; j < C; ++j)
      grads_out[i][j] = probs[i][j] * (gp[j] - dot);
  }
  return loss;
}

}  // namespace hamr
