#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hamr/config.hpp"
#include "hamr/dataset.hpp"
#include "hamr/hardness.hpp"
#include "hamr/metastep.hpp"
#include "hamr/metrics.hpp"

#include "json.hpp"

namespace hamr {

struct EpochMetrics {
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double val_micro_f1 = 0.0;
};

struct StepTrace {
  std::vector<int> batch_ids;           // dataset example ids
  std::vector<double> pre_weights;
  double meta_loss_value = 0.0;
  double theta_grad_norm = 0.0;
  std::vector<double> post_weights;
};

// Everything needed to reproduce and audit one run. Serialized as a single
// JSON document, versioned by schema_version.
struct RunArtifact {
  int schema_version = 1;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> per_epoch;
  F1Report final_report;                 // test split (valid when no test data)
  std::string final_split;
  QuartileReport quartiles;
  std::optional<F1Report> span_report;   // sequence tasks only
  HardnessState hardness;
  TaskModelParams params;
  bool weight_net_constructed = false;
  double wall_clock_seconds = 0.0;
  std::vector<StepTrace> traces;         // only with verbose_trace

  nlohmann::json to_json() const;
  static RunArtifact from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static RunArtifact load(const std::string& path);
};

// Runs the configured method end to end. Throws DivergenceError when the
// train loss goes non-finite.
RunArtifact train(const RunConfig& config, const LabeledDataset& dataset);
RunArtifact train(const RunConfig& config);  // loads config.dataset

// Argmax predictions, one label per token (one per example for CLS data).
std::vector<int> predict_example(const TaskModelParams& params, const Example& e);

struct EvalResult {
  F1Report report;
  QuartileReport quartiles;
  std::optional<F1Report> span_report;
};

EvalResult evaluate(const TaskModelParams& params, const LabeledDataset& dataset,
                    Split split, bool exclude_empty = false);

// BIO tag convention for integer labels: 0 -> O, odd l -> B-T<(l+1)/2>,
// even l -> I-T<l/2>.
std::string bio_tag_of_label(int label);

// Local label-consistency audit over the four sampling settings, computed on
// the train split with the neighbor graph fixed.
struct ConsistencyReport {
  double random = 0.0;
  double full_set = 0.0;
  double hard_samples = 0.0;
  double hard_union_neighbors = 0.0;
};

ConsistencyReport consistency_audit(const LabeledDataset& dataset,
                                    const HardnessState& hardness,
                                    const RunConfig& config, int K);

}  // namespace hamr
