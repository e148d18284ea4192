#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hamr/common.hpp"
#include "hamr/diffmodel.hpp"
#include "hamr/neighbors.hpp"

namespace hamr {

enum class Split { Train, Valid, Test };

// Feature rows (or token groups) with integer labels and named splits.
// For sequence data an example is one sentence; its class, where one is
// needed (meta-set balance, the generator), is the dominant token label.
struct LabeledDataset {
  bool sequence = false;
  int feature_dim = 0;
  int num_classes = 0;
  std::vector<Example> examples;
  std::vector<Split> splits;                    // aligned with examples
  std::optional<EmbeddingMatrix> embeddings;    // sidecar, aligned by example order

  std::size_t size() const { return examples.size(); }
  std::vector<int> ids_of(Split s) const;
  // Per-class example counts within a split (dominant label for sequences).
  std::vector<std::int64_t> class_counts(Split s) const;
  // Per-class token counts within a split (equals class_counts for CLS data).
  std::vector<std::int64_t> token_class_counts(Split s) const;
  void validate() const;
};

// Dominant token label, ties broken by lower label id.
int example_label(const Example& e);

// Embeddings for the neighbor modules: the sidecar when present, otherwise
// raw features (token mean for sequences).
EmbeddingMatrix dataset_embeddings(const LabeledDataset& ds, Metric metric);

// Line-oriented text format: header `CLS n d c` or `SEQ n d c`; CLS rows
// `split,label,f1,...,fd`; SEQ rows `split,group_id,label,f1,...,fd`.
LabeledDataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const LabeledDataset& ds);

// Sidecar format: header `EMB n e` then n comma-separated rows of e floats.
EmbeddingMatrix load_embeddings(const std::string& path, Metric metric);
void save_embeddings(const std::string& path, const EmbeddingMatrix& emb);

// Synthetic long-tailed generator: geometric class-size profile from n_max
// down to n_max / imbalance_ratio, Gaussian clusters, stratified 70/10/20
// split.
LabeledDataset generate_longtail(int num_classes, double imbalance_ratio,
                                 std::size_t n_total, int embed_dim,
                                 double cluster_separation, std::uint64_t seed);

}  // namespace hamr
