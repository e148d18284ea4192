#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hamr/common.hpp"
#include "hamr/diffmodel.hpp"
#include "hamr/neighbors.hpp"

namespace hamr {

enum class Method { Hamr, Focal, Dice, Icf, En, Plain };

Method parse_method(const std::string& s);
std::string method_name(Method m);

struct RunConfig {
  Method method = Method::Hamr;
  double learning_rate = 0.1;    // alpha, task-model steps
  double wnet_lr = 0.01;         // beta, weight-net meta step
  double meta_update_lr = 0.0;   // virtual inner-step rate; 0 = learning_rate
  double gamma_ema = 0.9;
  double hardness_alpha = 0.7;   // tau in the sampling distribution
  double knn_lambda = 0.3;
  int knn_k = 10;
  double knn_ratio = 0.2;
  int refresh_interval = 1;      // F, epochs
  int batch_size = 32;
  int epochs = 5;
  double clip_min = 0.05;
  double clip_max = 10.0;
  double epsilon = 1e-6;
  LossAgg loss_agg = LossAgg::MeanCE;
  Metric metric = Metric::Cosine;
  std::uint64_t seed = 42;
  std::string dataset;           // path
  std::string embeddings;        // optional sidecar path
  int hidden_dim = 0;            // task model hidden layer; 0 = linear
  int wnet_hidden_dim = 64;
  int meta_batch = 0;            // 0 = full meta set
  bool rebuild_meta_set = false; // rebuild per epoch instead of once per run
  double en_beta = 0.9999;
  double focal_gamma = 2.0;
  double dice_eps = 1e-5;
  bool exclude_empty = false;    // drop empty classes from macro-F1
  bool verbose_trace = false;    // record per-step bi-level traces

  double virtual_lr() const { return meta_update_lr > 0.0 ? meta_update_lr : learning_rate; }
  void validate() const;

  // Unknown keys are hard errors; hyperparameter sweeps fail on typos.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> as_map() const;

  static RunConfig from_file(const std::string& path);
};

}  // namespace hamr
