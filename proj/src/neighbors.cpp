#include "hamr/neighbors.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hamr {

NeighborIndex::NeighborIndex(EmbeddingMatrix embeddings) : emb_(std::move(embeddings)) {
  if (emb_.n < 2) throw DataError("neighbor index needs at least 2 points");
  for (double v : emb_.data)
    if (!std::isfinite(v)) throw DataError("embedding matrix contains non-finite entries");
  if (emb_.metric == Metric::Cosine) {
    norms_.resize(emb_.n);
    for (std::size_t i = 0; i < emb_.n; ++i) {
      double s = 0.0;
      const double* r = emb_.row(i);
      for (std::size_t d = 0; d < emb_.dim; ++d) s += r[d] * r[d];
      norms_[i] = std::sqrt(s);
      if (norms_[i] == 0.0)
        throw DataError("zero-norm embedding row " + std::to_string(i) +
                        " under cosine metric");
    }
  }
}

double NeighborIndex::distance(std::size_t a, std::size_t b) const {
  const double* x = emb_.row(a);
  const double* y = emb_.row(b);
  if (emb_.metric == Metric::Cosine) {
    double dot = 0.0;
    for (std::size_t d = 0; d < emb_.dim; ++d) dot += x[d] * y[d];
    return 1.0 - dot / (norms_[a] * norms_[b]);
  }
  double s = 0.0;
  for (std::size_t d = 0; d < emb_.dim; ++d) {
    double diff = x[d] - y[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

NeighborLists NeighborIndex::query(const std::vector<int>& query_ids, int k,
                                   bool parallel) const {
  if (k < 1 || static_cast<std::size_t>(k) > emb_.n - 1)
    throw ConfigError("knn_k must be in [1, n-1]");
  NeighborLists out;
  out.k = k;
  out.lists.resize(query_ids.size());
  out.distances.resize(query_ids.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (long long qi = 0; qi < static_cast<long long>(query_ids.size()); ++qi) {
    std::size_t q = static_cast<std::size_t>(query_ids[static_cast<std::size_t>(qi)]);
    std::vector<std::pair<double, int>> cand;
    cand.reserve(emb_.n - 1);
    for (std::size_t j = 0; j < emb_.n; ++j) {
      if (j == q) continue;  // self excluded
      cand.emplace_back(distance(q, j), static_cast<int>(j));
    }
    // ties by ascending id (pair comparison does exactly that)
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    auto& ids = out.lists[static_cast<std::size_t>(qi)];
    auto& ds = out.distances[static_cast<std::size_t>(qi)];
    ids.resize(static_cast<std::size_t>(k));
    ds.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      ds[static_cast<std::size_t>(j)] = cand[static_cast<std::size_t>(j)].first;
      ids[static_cast<std::size_t>(j)] = cand[static_cast<std::size_t>(j)].second;
    }
  }
  (void)parallel;
  return out;
}

void compute_boosts(const std::vector<int>& hard_ids, const NeighborLists& lists,
                    std::size_t n, std::vector<double>& b,
                    std::vector<std::int64_t>& hit_counts) {
  if (hard_ids.empty()) throw ConfigError("compute_boosts: empty hard set");
  hit_counts.assign(n, 0);
  for (const auto& list : lists.lists)
    for (int id : list) hit_counts[static_cast<std::size_t>(id)] += 1;
  std::int64_t max_count = 0;
  for (std::int64_t c : hit_counts) max_count = std::max(max_count, c);
  b.assign(n, 0.0);
  if (max_count == 0) return;
  for (std::size_t i = 0; i < n; ++i)
    b[i] = static_cast<double>(hit_counts[i]) / static_cast<double>(max_count);
}

}  // namespace hamr
