#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hamr/common.hpp"
#include "hamr/neighbors.hpp"

namespace hamr {

struct ClassPRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct F1Report {
  std::vector<ClassPRF> per_class;  // indexed by label id (or span type)
  std::vector<std::string> class_names;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

F1Report f1_scores(const std::vector<int>& predictions, const std::vector<int>& gold,
                   int num_classes, bool exclude_empty = false);

// Span-level F1 under the BIO scheme, O excluded. Lenient decoding: an I-X
// without a preceding span of type X starts a new span.
F1Report bio_span_f1(const std::vector<std::vector<std::string>>& pred_tags,
                     const std::vector<std::vector<std::string>>& gold_tags);

// max(count) / min(count).
double imbalance_ratio(const std::vector<std::int64_t>& class_counts);

struct QuartileReport {
  std::vector<int> quartile_of_label;   // label id -> 0..3 (0 = rarest quartile)
  std::vector<double> mean_f1;          // per quartile; NaN for empty quartiles
  std::vector<std::vector<int>> labels; // labels per quartile
};

// Labels sorted ascending by train count (ties by id) and split into 4
// contiguous groups as equal as possible; remainders go to the earlier
// quartiles.
QuartileReport quartile_analysis(const std::vector<double>& per_label_f1,
                                 const std::vector<std::int64_t>& train_label_counts);

// Mean over the sample set of 1[(same-label neighbors among K) / K > 0.5].
double local_consistency(const NeighborIndex& index, const std::vector<int>& labels,
                         const std::vector<int>& sample_set, int K);

// The uniform-comparison control: for each anchor, K comparison samples drawn
// uniformly from the other examples instead of its nearest neighbors.
double random_consistency(const std::vector<int>& labels,
                          const std::vector<int>& sample_set, int K, Rng& rng);

}  // namespace hamr
