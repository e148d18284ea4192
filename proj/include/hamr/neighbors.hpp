#pragma once

#include <cstdint>
#include <vector>

#include "hamr/common.hpp"

namespace hamr {

enum class Metric { Cosine, L2 };

struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // row-major n x dim
  Metric metric = Metric::Cosine;

  const double* row(std::size_t i) const { return data.data() + i * dim; }
};

struct NeighborLists {
  int k = 0;
  std::vector<std::vector<int>> lists;        // per query, length k, self excluded
  std::vector<std::vector<double>> distances;  // nondecreasing within each list
};

// Exact brute-force index. Rows are validated at build time (finite entries;
// nonzero norms under cosine).
class NeighborIndex {
 public:
  explicit NeighborIndex(EmbeddingMatrix embeddings);

  const EmbeddingMatrix& embeddings() const { return emb_; }
  std::size_t size() const { return emb_.n; }

  // k nearest other examples per query, ordered by distance, ties by
  // ascending id. Parallel over queries; `parallel=false` is the serial
  // reference path.
  NeighborLists query(const std::vector<int>& query_ids, int k,
                      bool parallel = true) const;

  double distance(std::size_t a, std::size_t b) const;

 private:
  EmbeddingMatrix emb_;
  std::vector<double> norms_;  // cosine only
};

// hit_count_j = number of hard-sample neighbor lists containing j;
// b_j = hit_count_j / max hit_count (all zeros if the max is 0).
void compute_boosts(const std::vector<int>& hard_ids, const NeighborLists& lists,
                    std::size_t n, std::vector<double>& b,
                    std::vector<std::int64_t>& hit_counts);

}  // namespace hamr
