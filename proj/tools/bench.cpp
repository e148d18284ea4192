// Compares the OpenMP kernels against their serial reference paths:
// batch per-example gradients and brute-force k-NN queries.

#include <chrono>
#include <iostream>

#include "hamr/dataset.hpp"
#include "hamr/diffmodel.hpp"
#include "hamr/neighbors.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main() {
  using namespace hamr;
  const int classes = 20, dim = 64;
  auto ds = generate_longtail(classes, 10.0, 6000, dim, 3.0, 9);
  Rng rng(1);
  TaskModelParams params =
      TaskModelParams::random_init(ModelShape{classes, dim, 0}, 0.1, rng);

  std::vector<const Example*> batch;
  for (const auto& e : ds.examples) batch.push_back(&e);

  std::vector<PerExampleGradient> serial, parallel;
  auto t0 = Clock::now();
  batch_grads(params, batch, LossAgg::MeanCE, serial, false);
  double t_serial = seconds_since(t0);
  t0 = Clock::now();
  batch_grads(params, batch, LossAgg::MeanCE, parallel, true);
  double t_parallel = seconds_since(t0);

  bool grads_match = true;
  for (std::size_t i = 0; i < serial.size(); ++i)
    if (serial[i].flat_grad != parallel[i].flat_grad) grads_match = false;
  std::cout << "batch_grads (" << batch.size() << " examples): serial " << t_serial
            << "s, parallel " << t_parallel << "s, speedup "
            << t_serial / t_parallel << "x, bitwise match: "
            << (grads_match ? "yes" : "NO") << "\n";

  NeighborIndex index(dataset_embeddings(ds, Metric::Cosine));
  std::vector<int> queries(ds.size());
  for (std::size_t i = 0; i < queries.size(); ++i) queries[i] = static_cast<int>(i);
  t0 = Clock::now();
  auto ls = index.query(queries, 10, false);
  t_serial = seconds_since(t0);
  t0 = Clock::now();
  auto lp = index.query(queries, 10, true);
  t_parallel = seconds_since(t0);
  bool knn_match = ls.lists == lp.lists;
  std::cout << "knn_query (" << queries.size() << " queries, k=10): serial " << t_serial
            << "s, parallel " << t_parallel << "s, speedup "
            << t_serial / t_parallel << "x, match: " << (knn_match ? "yes" : "NO")
            << "\n";
  return grads_match && knn_match ? 0 : 1;
}
