#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "hamr/hardness.hpp"

using namespace hamr;

TEST_CASE("init_hardness: neutral start") {
  auto s = init_hardness(3);
  CHECK(s.h == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(s.b == std::vector<double>{0.0, 0.0, 0.0});
  auto s1 = init_hardness(1);
  CHECK(s1.h == std::vector<double>{1.0});
  CHECK_THROWS_AS(init_hardness(0), ConfigError);
}

TEST_CASE("ema_update: gamma 1 freezes h; gamma 0 projects to the new weights") {
  auto s = init_hardness(4);
  ema_update(s, {0, 2}, {3.0, 5.0}, 1.0);
  CHECK(s.h == std::vector<double>{1.0, 1.0, 1.0, 1.0});
  ema_update(s, {0, 2}, {3.0, 5.0}, 0.0);
  CHECK(s.h[0] == 3.0);
  CHECK(s.h[2] == 5.0);
  CHECK(s.h[1] == 1.0);  // untouched ids unchanged
  CHECK(s.h[3] == 1.0);
}

TEST_CASE("ema_update: hand arithmetic") {
  auto s = init_hardness(1);
  ema_update(s, {0}, {2.0}, 0.9);
  CHECK(s.h[0] == doctest::Approx(1.1).epsilon(1e-12));
}

TEST_CASE("ema_update: gamma outside [0, 1] rejected") {
  auto s = init_hardness(2);
  CHECK_THROWS_AS(ema_update(s, {0}, {1.0}, -0.1), ConfigError);
  CHECK_THROWS_AS(ema_update(s, {0}, {1.0}, 1.1), ConfigError);
}

TEST_CASE("ema_update: h stays inside the convex hull of init and observed weights") {
  const double clip_min = 0.05, clip_max = 10.0;
  const double lo = std::min(1.0, clip_min), hi = std::max(1.0, clip_max);
  Rng rng(31);
  auto s = init_hardness(16);
  for (int step = 0; step < 2000; ++step) {
    std::vector<int> ids;
    std::vector<double> w;
    std::size_t b = 1 + rng.next_below(8);
    for (std::size_t i = 0; i < b; ++i) {
      ids.push_back(static_cast<int>(rng.next_below(16)));
      w.push_back(rng.uniform(clip_min, clip_max));
    }
    ema_update(s, ids, w, rng.next_double());
    for (double h : s.h) {
      CHECK(h >= lo);
      CHECK(h <= hi);
    }
  }
}

TEST_CASE("select_hard_set: ratio 1 returns every id") {
  auto s = init_hardness(5);
  auto ids = select_hard_set(s, 1.0);
  CHECK(ids.size() == 5);
}

TEST_CASE("select_hard_set: hand top-k with tie at the top") {
  auto s = init_hardness(4);
  s.h = {0.1, 0.9, 0.5, 0.9};
  auto ids = select_hard_set(s, 0.5);
  CHECK(ids == std::vector<int>{1, 3});
}

TEST_CASE("select_hard_set: all-equal ties break toward lower ids") {
  auto s = init_hardness(8);
  auto ids = select_hard_set(s, 0.25);
  CHECK(ids == std::vector<int>{0, 1});
}

TEST_CASE("select_hard_set: size is always ceil(ratio * n)") {
  Rng rng(32);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 1 + rng.next_below(40);
    auto s = init_hardness(n);
    for (auto& h : s.h) h = rng.next_double();
    double ratio = rng.uniform(0.01, 1.0);
    auto ids = select_hard_set(s, ratio);
    CHECK(ids.size() ==
          static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n))));
    // sorted by descending h, ties by ascending id
    for (std::size_t i = 1; i < ids.size(); ++i) {
      double prev = s.h[static_cast<std::size_t>(ids[i - 1])];
      double cur = s.h[static_cast<std::size_t>(ids[i])];
      CHECK((prev > cur || (prev == cur && ids[i - 1] < ids[i])));
    }
  }
}
