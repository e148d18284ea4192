#include <cmath>
#include <vector>

#include "doctest.h"

#include "hamr/baselines.hpp"
#include "hamr/diffmodel.hpp"

using namespace hamr;

TEST_CASE("icf_weights: equal counts give all ones") {
  auto w = icf_weights({7, 7, 7});
  for (double v : w.w) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("icf_weights: hand evaluations, mean exactly 1") {
  auto w = icf_weights({3, 1});
  CHECK(w.w[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(w.w[1] == doctest::Approx(1.5).epsilon(1e-9));

  auto w2 = icf_weights({1, 1, 2});
  CHECK(w2.w[0] == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(w2.w[1] == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(w2.w[2] == doctest::Approx(0.6).epsilon(1e-9));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::int64_t> counts(2 + rng.next_below(8));
    for (auto& c : counts) c = 1 + static_cast<std::int64_t>(rng.next_below(1000));
    auto ww = icf_weights(counts);
    double mean = 0.0;
    for (double v : ww.w) mean += v;
    mean /= static_cast<double>(ww.w.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("icf_weights: zero count is a data error") {
  CHECK_THROWS_AS(icf_weights({3, 0}), DataError);
}

TEST_CASE("en_weights: closed forms and monotonicity") {
  const double beta = 0.9999;
  auto w = en_weights({1, 2}, beta);
  CHECK(w.w[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w.w[1] == doctest::Approx(1.0 / (1.0 + beta)).epsilon(1e-9));

  auto w0 = en_weights({5, 50, 500}, 0.0);
  for (double v : w0.w) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // more examples never increase the weight
  auto wm = en_weights({1, 10, 100, 1000}, beta);
  for (std::size_t i = 1; i < wm.w.size(); ++i) CHECK(wm.w[i] < wm.w[i - 1]);
}

TEST_CASE("en_weights: beta >= 1 rejected") {
  CHECK_THROWS_AS(en_weights({1, 2}, 1.0), ConfigError);
  CHECK_THROWS_AS(en_weights({1, 2}, 1.5), ConfigError);
}

TEST_CASE("focal_loss: closed forms") {
  std::vector<double> alpha1 = {1.0, 1.0};
  // p_t = 1 -> 0
  CHECK(focal_loss({1.0, 0.0}, 0, 2.0, alpha1) == doctest::Approx(0.0).epsilon(1e-9));
  // p_t = 0.5, gamma 2 -> 0.25 ln 2
  CHECK(focal_loss({0.5, 0.5}, 0, 2.0, alpha1) ==
        doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("focal_loss: gamma 0 with alpha 1 reduces to cross-entropy") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t c = 2 + rng.next_below(4);
    std::vector<double> logits(c);
    for (auto& z : logits) z = rng.next_gaussian();
    auto probs = softmax(logits);
    int y = static_cast<int>(rng.next_below(c));
    std::vector<double> alpha(c, 1.0);
    CHECK(focal_loss(probs, y, 0.0, alpha) ==
          doctest::Approx(cross_entropy(logits, y)).epsilon(1e-9));
    // focusing never increases the loss relative to CE
    CHECK(focal_loss(probs, y, 2.0, alpha) <= cross_entropy(logits, y) + 1e-12);
  }
}

TEST_CASE("focal_grad_logits: matches central finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t c = 2 + rng.next_below(4);
    std::vector<double> logits(c);
    for (auto& z : logits) z = rng.next_gaussian();
    int y = static_cast<int>(rng.next_below(c));
    std::vector<double> alpha(c);
    for (auto& a : alpha) a = rng.uniform(0.5, 2.0);
    double gamma = rng.uniform(0.0, 3.0);
    auto g = focal_grad_logits(logits, y, gamma, alpha);
    const double eps = 1e-6;
    for (std::size_t j = 0; j < c; ++j) {
      auto zp = logits, zm = logits;
      zp[j] += eps;
      zm[j] -= eps;
      double fd = (focal_loss(softmax(zp), y, gamma, alpha) -
                   focal_loss(softmax(zm), y, gamma, alpha)) /
                  (2.0 * eps);
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("dice_loss: perfect overlap is ~0, zero overlap is ~1") {
  std::vector<std::vector<double>> onehot = {{1.0, 0.0}, {0.0, 1.0}};
  CHECK(dice_loss(onehot, onehot, 1e-5) == doctest::Approx(0.0).epsilon(1e-4));

  std::vector<std::vector<double>> probs = {{0.0, 1.0}, {0.0, 1.0}};
  std::vector<std::vector<double>> target = {{1.0, 0.0}, {1.0, 0.0}};
  // class 0 predicted nowhere though present -> per-class dice near 1
  double loss = dice_loss(probs, target, 1e-5);
  CHECK(loss > 0.9);
}

TEST_CASE("dice_loss: hand case gives 1/9") {
  std::vector<std::vector<double>> probs = {{0.8}};
  std::vector<std::vector<double>> onehot = {{1.0}};
  CHECK(dice_loss(probs, onehot, 0.0) == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
}

TEST_CASE("dice_loss: bounded in [0, 1]") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 1 + rng.next_below(6), c = 2 + rng.next_below(4);
    std::vector<std::vector<double>> probs(n), onehot(n, std::vector<double>(c, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> z(c);
      for (auto& v : z) v = rng.next_gaussian();
      probs[i] = softmax(z);
      onehot[i][rng.next_below(c)] = 1.0;
    }
    double loss = dice_loss(probs, onehot, 1e-5);
    CHECK(loss >= 0.0);
    CHECK(loss <= 1.0);
  }
}

namespace {

double dice_from_logits(const std::vector<std::vector<double>>& logits_batch,
                        const std::vector<int>& labels, int num_classes, double eps) {
  std::vector<std::vector<double>> probs, onehot;
  for (std::size_t i = 0; i < logits_batch.size(); ++i) {
    probs.push_back(softmax(logits_batch[i]));
    std::vector<double> oh(static_cast<std::size_t>(num_classes), 0.0);
    oh[static_cast<std::size_t>(labels[i])] = 1.0;
    onehot.push_back(oh);
  }
  return dice_loss(probs, onehot, eps);
}

}  // namespace

TEST_CASE("dice_loss_grad_logits: matches central finite differences") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    int c = 2 + static_cast<int>(rng.next_below(3));
    std::size_t n = 2 + rng.next_below(4);
    std::vector<std::vector<double>> logits(n, std::vector<double>(static_cast<std::size_t>(c)));
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& z : logits[i]) z = rng.next_gaussian();
      labels[i] = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(c)));
    }
    const double eps_smooth = 1e-3;  // keep the FD well conditioned
    std::vector<std::vector<double>> grads;
    double loss = dice_loss_grad_logits(logits, labels, c, eps_smooth, grads);
    CHECK(loss ==
          doctest::Approx(dice_from_logits(logits, labels, c, eps_smooth)).epsilon(1e-9));
    const double step = 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < c; ++j) {
        auto bump = logits;
        bump[i][static_cast<std::size_t>(j)] += step;
        double up = dice_from_logits(bump, labels, c, eps_smooth);
        bump[i][static_cast<std::size_t>(j)] -= 2.0 * step;
        double dn = dice_from_logits(bump, labels, c, eps_smooth);
        double fd = (up - dn) / (2.0 * step);
        CHECK(grads[i][static_cast<std::size_t>(j)] ==
              doctest::Approx(fd).epsilon(1e-4).scale(1.0));
      }
    }
  }
}
