#include "hamr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "hamr/baselines.hpp"
#include "hamr/sampler.hpp"

namespace hamr {

using nlohmann::json;

namespace {

json report_to_json(const F1Report& r) {
  json j;
  j["macro_f1"] = r.macro_f1;
  j["micro_f1"] = r.micro_f1;
  json per = json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    json e;
    if (c < r.class_names.size()) e["name"] = r.class_names[c];
    e["precision"] = r.per_class[c].precision;
    e["recall"] = r.per_class[c].recall;
    e["f1"] = r.per_class[c].f1;
    e["support"] = r.per_class[c].support;
    per.push_back(e);
  }
  j["per_class"] = per;
  return j;
}

F1Report report_from_json(const json& j) {
  F1Report r;
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.micro_f1 = j.at("micro_f1").get<double>();
  for (const auto& e : j.at("per_class")) {
    ClassPRF p;
    p.precision = e.at("precision").get<double>();
    p.recall = e.at("recall").get<double>();
    p.f1 = e.at("f1").get<double>();
    p.support = e.at("support").get<std::int64_t>();
    r.per_class.push_back(p);
    if (e.contains("name")) r.class_names.push_back(e["name"].get<std::string>());
  }
  return r;
}

json quartiles_to_json(const QuartileReport& q) {
  json j;
  j["quartile_of_label"] = q.quartile_of_label;
  json means = json::array();
  for (double m : q.mean_f1) means.push_back(std::isnan(m) ? json(nullptr) : json(m));
  j["mean_f1"] = means;
  j["labels"] = q.labels;
  return j;
}

QuartileReport quartiles_from_json(const json& j) {
  QuartileReport q;
  q.quartile_of_label = j.at("quartile_of_label").get<std::vector<int>>();
  for (const auto& m : j.at("mean_f1"))
    q.mean_f1.push_back(m.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : m.get<double>());
  q.labels = j.at("labels").get<std::vector<std::vector<int>>>();
  return q;
}

}  // namespace

json RunArtifact::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["config"] = config;
  j["seed"] = seed;
  json epochs = json::array();
  for (const auto& e : per_epoch)
    epochs.push_back({{"train_loss", e.train_loss},
                      {"val_macro_f1", e.val_macro_f1},
                      {"val_micro_f1", e.val_micro_f1}});
  j["per_epoch"] = epochs;
  j["final_split"] = final_split;
  j["final_report"] = report_to_json(final_report);
  j["quartiles"] = quartiles_to_json(quartiles);
  if (span_report) j["span_report"] = report_to_json(*span_report);
  j["hardness"] = {{"h", hardness.h},
                   {"b", hardness.b},
                   {"hit_counts", hardness.hit_counts},
                   {"last_refresh_epoch", hardness.last_refresh_epoch}};
  j["model"] = {{"num_classes", params.shape.num_classes},
                {"feature_dim", params.shape.feature_dim},
                {"hidden_dim", params.shape.hidden_dim},
                {"flat", params.flat}};
  j["weight_net_constructed"] = weight_net_constructed;
  j["wall_clock_seconds"] = wall_clock_seconds;
  if (!traces.empty()) {
    json ts = json::array();
    for (const auto& t : traces)
      ts.push_back({{"batch_ids", t.batch_ids},
                    {"pre_weights", t.pre_weights},
                    {"meta_loss", t.meta_loss_value},
                    {"theta_grad_norm", t.theta_grad_norm},
                    {"post_weights", t.post_weights}});
    j["traces"] = ts;
  }
  return j;
}

RunArtifact RunArtifact::from_json(const json& j) {
  RunArtifact a;
  a.schema_version = j.at("schema_version").get<int>();
  a.config = j.at("config").get<std::map<std::string, std::string>>();
  a.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& e : j.at("per_epoch"))
    a.per_epoch.push_back({e.at("train_loss").get<double>(),
                           e.at("val_macro_f1").get<double>(),
                           e.at("val_micro_f1").get<double>()});
  a.final_split = j.at("final_split").get<std::string>();
  a.final_report = report_from_json(j.at("final_report"));
  a.quartiles = quartiles_from_json(j.at("quartiles"));
  if (j.contains("span_report")) a.span_report = report_from_json(j["span_report"]);
  const auto& h = j.at("hardness");
  a.hardness.h = h.at("h").get<std::vector<double>>();
  a.hardness.b = h.at("b").get<std::vector<double>>();
  a.hardness.hit_counts = h.at("hit_counts").get<std::vector<std::int64_t>>();
  a.hardness.last_refresh_epoch = h.at("last_refresh_epoch").get<int>();
  const auto& m = j.at("model");
  a.params.shape = {m.at("num_classes").get<int>(), m.at("feature_dim").get<int>(),
                    m.at("hidden_dim").get<int>()};
  a.params.flat = m.at("flat").get<std::vector<double>>();
  a.weight_net_constructed = j.at("weight_net_constructed").get<bool>();
  a.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  return a;
}

void RunArtifact::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write artifact " + path);
  out << to_json().dump(2) << '\n';
}

RunArtifact RunArtifact::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open artifact " + path);
  json j;
  in >> j;
  return from_json(j);
}

std::vector<int> predict_example(const TaskModelParams& params, const Example& e) {
  std::vector<int> preds(e.rows.size());
  for (std::size_t t = 0; t < e.rows.size(); ++t) {
    auto logits = forward_logits(params, e.rows[t]);
    preds[t] = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  return preds;
}

std::string bio_tag_of_label(int label) {
  if (label == 0) return "O";
  int type = (label + 1) / 2;
  return (label % 2 == 1 ? "B-T" : "I-T") + std::to_string(type);
}

EvalResult evaluate(const TaskModelParams& params, const LabeledDataset& dataset,
                    Split split, bool exclude_empty) {
  auto ids = dataset.ids_of(split);
  if (ids.empty()) throw ConfigError("evaluate: requested split is empty");
  std::vector<int> gold, pred;
  std::vector<std::vector<std::string>> gold_tags, pred_tags;
  for (int id : ids) {
    const Example& e = dataset.examples[static_cast<std::size_t>(id)];
    auto p = predict_example(params, e);
    for (std::size_t t = 0; t < p.size(); ++t) {
      gold.push_back(e.labels[t]);
      pred.push_back(p[t]);
    }
    if (dataset.sequence) {
      std::vector<std::string> gt(e.labels.size()), pt(p.size());
      for (std::size_t t = 0; t < p.size(); ++t) {
        gt[t] = bio_tag_of_label(e.labels[t]);
        pt[t] = bio_tag_of_label(p[t]);
      }
      gold_tags.push_back(std::move(gt));
      pred_tags.push_back(std::move(pt));
    }
  }
  EvalResult out;
  out.report = f1_scores(pred, gold, dataset.num_classes, exclude_empty);
  std::vector<double> per_label_f1(static_cast<std::size_t>(dataset.num_classes));
  for (int c = 0; c < dataset.num_classes; ++c)
    per_label_f1[static_cast<std::size_t>(c)] = out.report.per_class[static_cast<std::size_t>(c)].f1;
  auto train_counts = dataset.sequence ? dataset.token_class_counts(Split::Train)
                                       : dataset.class_counts(Split::Train);
  out.quartiles = quartile_analysis(per_label_f1, train_counts);
  if (dataset.sequence) out.span_report = bio_span_f1(pred_tags, gold_tags);
  return out;
}

namespace {

struct BaselineLoss {
  double value = 0.0;
  std::vector<double> direction;  // parameter-space gradient
};

// Per-batch loss and parameter gradient for the non-meta methods.
BaselineLoss baseline_batch(const RunConfig& cfg, const TaskModelParams& phi,
                            const std::vector<const Example*>& batch,
                            const ClassWeights& class_w) {
  BaselineLoss out;
  out.direction.assign(phi.shape.param_count(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  if (cfg.method == Method::Dice) {
    // batch-level dice over all token rows
    std::vector<std::vector<double>> logits;
    std::vector<int> labels;
    std::vector<const std::vector<double>*> rows;
    for (const Example* e : batch)
      for (std::size_t t = 0; t < e->rows.size(); ++t) {
        logits.push_back(forward_logits(phi, e->rows[t]));
        labels.push_back(e->labels[t]);
        rows.push_back(&e->rows[t]);
      }
    std::vector<std::vector<double>> dlogits;
    out.value = dice_loss_grad_logits(logits, labels, phi.shape.num_classes,
                                      cfg.dice_eps, dlogits);
    for (std::size_t i = 0; i < rows.size(); ++i)
      accumulate_param_grad(phi, *rows[i], dlogits[i], 1.0, out.direction);
    return out;
  }

  for (const Example* e : batch) {
    if (cfg.method == Method::Focal) {
      double scale = inv_b / static_cast<double>(e->rows.size());
      for (std::size_t t = 0; t < e->rows.size(); ++t) {
        auto logits = forward_logits(phi, e->rows[t]);
        out.value += scale * focal_loss(softmax(logits), e->labels[t], cfg.focal_gamma,
                                        class_w.w);
        auto dl = focal_grad_logits(logits, e->labels[t], cfg.focal_gamma, class_w.w);
        accumulate_param_grad(phi, e->rows[t], dl, scale, out.direction);
      }
    } else {
      // plain / icf / en: (class-)weighted cross-entropy
      double scale = inv_b / static_cast<double>(e->rows.size());
      for (std::size_t t = 0; t < e->rows.size(); ++t) {
        double w = class_w.w.empty() ? 1.0
                                     : class_w.w[static_cast<std::size_t>(e->labels[t])];
        auto logits = forward_logits(phi, e->rows[t]);
        out.value += scale * w * cross_entropy(logits, e->labels[t]);
        auto probs = softmax(logits);
        probs[static_cast<std::size_t>(e->labels[t])] -= 1.0;
        accumulate_param_grad(phi, e->rows[t], probs, scale * w, out.direction);
      }
    }
  }
  return out;
}

ClassWeights class_weights_for(const RunConfig& cfg, const LabeledDataset& ds) {
  auto counts = ds.sequence ? ds.token_class_counts(Split::Train)
                            : ds.class_counts(Split::Train);
  switch (cfg.method) {
    case Method::Icf:
      return icf_weights(counts);
    case Method::En: {
      // rescaled to mean 1 so the step size stays comparable across methods
      ClassWeights w = en_weights(counts, cfg.en_beta);
      double mean = 0.0;
      for (double v : w.w) mean += v;
      mean /= static_cast<double>(w.w.size());
      for (double& v : w.w) v /= mean;
      return w;
    }
    case Method::Focal: {
      ClassWeights w = en_weights(counts, cfg.en_beta);
      double mean = 0.0;
      for (double v : w.w) mean += v;
      mean /= static_cast<double>(w.w.size());
      for (double& v : w.w) v /= mean;
      w.scheme = WeightScheme::EN;
      return w;
    }
    default:
      return ClassWeights{};  // empty -> uniform
  }
}

}  // namespace

RunArtifact train(const RunConfig& config, const LabeledDataset& dataset) {
  config.validate();
  dataset.validate();
  const auto t0 = std::chrono::steady_clock::now();

  RunArtifact artifact;
  artifact.config = config.as_map();
  artifact.seed = config.seed;

  const auto train_ids = dataset.ids_of(Split::Train);
  const std::size_t n_train = train_ids.size();
  if (n_train == 0) throw DataError("train split is empty");

  Rng rng(config.seed);
  ModelShape shape{dataset.num_classes, dataset.feature_dim, config.hidden_dim};
  TaskModelParams phi = TaskModelParams::random_init(shape, 0.01, rng);

  const bool is_hamr = config.method == Method::Hamr;
  std::optional<WeightNetParams> theta;
  std::optional<MetaSet> meta;
  std::optional<NeighborIndex> index;
  HardnessState hard = init_hardness(n_train);

  if (is_hamr) {
    theta = WeightNetParams::init(config.wnet_hidden_dim, rng);
    meta = build_meta_set(dataset, config.seed + 1);
    // neighbor index over the train split only
    EmbeddingMatrix all = dataset_embeddings(dataset, config.metric);
    EmbeddingMatrix train_emb;
    train_emb.n = n_train;
    train_emb.dim = all.dim;
    train_emb.metric = all.metric;
    train_emb.data.resize(n_train * all.dim);
    for (std::size_t i = 0; i < n_train; ++i)
      std::copy_n(all.row(static_cast<std::size_t>(train_ids[i])), all.dim,
                  train_emb.data.data() + i * all.dim);
    index.emplace(std::move(train_emb));
  }
  artifact.weight_net_constructed = theta.has_value();

  const ClassWeights class_w = class_weights_for(config, dataset);
  const std::size_t batches_per_epoch =
      (n_train + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size);
  const int knn_k = std::min<int>(config.knn_k, static_cast<int>(n_train) - 1);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (is_hamr) {
      if (epoch % config.refresh_interval == 0) {
        auto hard_set = select_hard_set(hard, config.knn_ratio);
        auto lists = index->query(hard_set, knn_k);
        compute_boosts(hard_set, lists, n_train, hard.b, hard.hit_counts);
        hard.last_refresh_epoch = epoch;
      }
      if (config.rebuild_meta_set && epoch > 0)
        meta = build_meta_set(dataset, config.seed + 1 + static_cast<std::uint64_t>(epoch));
    }

    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < batches_per_epoch; ++step) {
      // batch positions index into train_ids
      std::vector<int> batch_pos;
      if (is_hamr) {
        auto dist = sampling_probabilities(hard.h, hard.b, config.hardness_alpha,
                                           config.knn_lambda, config.epsilon);
        batch_pos = draw_batch(dist, static_cast<std::size_t>(config.batch_size), rng);
      } else {
        batch_pos.resize(static_cast<std::size_t>(config.batch_size));
        for (auto& p : batch_pos) p = static_cast<int>(rng.next_below(n_train));
      }
      std::vector<const Example*> batch(batch_pos.size());
      std::vector<int> batch_example_ids(batch_pos.size());
      for (std::size_t i = 0; i < batch_pos.size(); ++i) {
        batch_example_ids[i] = train_ids[static_cast<std::size_t>(batch_pos[i])];
        batch[i] = &dataset.examples[static_cast<std::size_t>(batch_example_ids[i])];
      }

      double batch_loss;
      if (is_hamr) {
        std::vector<ExampleLoss> losses;
        batch_losses(phi, batch, config.loss_agg, losses);
        std::vector<double> raw(losses.size());
        double mean_loss = 0.0;
        for (std::size_t i = 0; i < losses.size(); ++i) {
          raw[i] = losses[i].value;
          mean_loss += losses[i].value;
        }
        mean_loss /= static_cast<double>(losses.size());
        batch_loss = mean_loss;

        auto norm = zscore_normalize(raw);
        auto pre = forward_weights(*theta, norm, config.clip_min, config.clip_max);
        std::vector<PerExampleGradient> grads;
        batch_grads(phi, batch, config.loss_agg, grads);

        // The step kernels sum weighted per-example gradients; dividing the
        // rate by the batch size keeps learning_rate on the same batch-mean
        // scale as the baseline paths (the mean-1 weights make the weighted
        // sum |B| times the weighted mean).
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        TaskModelParams phi_prime =
            inner_step(phi, grads, pre.normalized_clipped, config.virtual_lr() * inv_b);

        MetaSet meta_view = *meta;
        if (config.meta_batch > 0 &&
            static_cast<std::size_t>(config.meta_batch) < meta->example_ids.size()) {
          MetaSet sub;
          for (int i = 0; i < config.meta_batch; ++i) {
            std::size_t pick = static_cast<std::size_t>(
                rng.next_below(meta->example_ids.size()));
            sub.example_ids.push_back(meta->example_ids[pick]);
            sub.source.push_back(meta->source[pick]);
          }
          meta_view = std::move(sub);
        }
        double ml = meta_loss(phi_prime, meta_view, dataset);
        auto mg = meta_loss_grad(phi_prime, meta_view, dataset);
        auto theta_grad = meta_gradient(*theta, norm, grads, config.virtual_lr() * inv_b,
                                        mg, config.clip_min, config.clip_max);
        theta = meta_update(*theta, theta_grad, config.wnet_lr);
        auto post = forward_weights(*theta, norm, config.clip_min, config.clip_max);
        phi = outer_step(phi, grads, post.normalized_clipped,
                         config.learning_rate * inv_b);
        ema_update(hard, batch_pos, post.normalized_clipped, config.gamma_ema);

        if (config.verbose_trace) {
          StepTrace tr;
          tr.batch_ids = batch_example_ids;
          tr.pre_weights = pre.normalized_clipped;
          tr.meta_loss_value = ml;
          double tn = 0.0;
          for (double v : theta_grad) tn += v * v;
          tr.theta_grad_norm = std::sqrt(tn);
          tr.post_weights = post.normalized_clipped;
          artifact.traces.push_back(std::move(tr));
        }
      } else {
        BaselineLoss bl = baseline_batch(config, phi, batch, class_w);
        batch_loss = bl.value;
        phi = apply_step(phi, bl.direction, config.learning_rate);
      }

      if (!std::isfinite(batch_loss))
        throw DivergenceError("train loss became non-finite at epoch " +
                              std::to_string(epoch) + " step " + std::to_string(step));
      epoch_loss += batch_loss;
    }

    EpochMetrics em;
    em.train_loss = epoch_loss / static_cast<double>(batches_per_epoch);
    auto val = evaluate(phi, dataset, Split::Valid, config.exclude_empty);
    em.val_macro_f1 = val.report.macro_f1;
    em.val_micro_f1 = val.report.micro_f1;
    artifact.per_epoch.push_back(em);
  }

  // final metrics: test split when present
  Split final_split = dataset.ids_of(Split::Test).empty() ? Split::Valid : Split::Test;
  auto fin = evaluate(phi, dataset, final_split, config.exclude_empty);
  artifact.final_split = final_split == Split::Test ? "test" : "valid";
  artifact.final_report = fin.report;
  artifact.quartiles = fin.quartiles;
  artifact.span_report = fin.span_report;
  artifact.hardness = hard;
  artifact.params = phi;
  artifact.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return artifact;
}

ConsistencyReport consistency_audit(const LabeledDataset& dataset,
                                    const HardnessState& hardness,
                                    const RunConfig& config, int K) {
  auto train_ids = dataset.ids_of(Split::Train);
  const std::size_t n = train_ids.size();
  if (hardness.h.size() != n)
    throw ShapeError("consistency_audit: hardness state does not match the train split");

  EmbeddingMatrix all = dataset_embeddings(dataset, config.metric);
  EmbeddingMatrix emb;
  emb.n = n;
  emb.dim = all.dim;
  emb.metric = all.metric;
  emb.data.resize(n * all.dim);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(all.row(static_cast<std::size_t>(train_ids[i])), all.dim,
                emb.data.data() + i * all.dim);
    labels[i] = example_label(dataset.examples[static_cast<std::size_t>(train_ids[i])]);
  }
  NeighborIndex index(std::move(emb));

  std::vector<int> full(n);
  for (std::size_t i = 0; i < n; ++i) full[i] = static_cast<int>(i);
  auto hard = select_hard_set(hardness, config.knn_ratio);
  int k = std::min<int>(config.knn_k, static_cast<int>(n) - 1);
  auto lists = index.query(hard, k);
  std::vector<char> in_union(n, 0);
  for (int id : hard) in_union[static_cast<std::size_t>(id)] = 1;
  for (const auto& list : lists.lists)
    for (int id : list) in_union[static_cast<std::size_t>(id)] = 1;
  std::vector<int> hard_union;
  for (std::size_t i = 0; i < n; ++i)
    if (in_union[i]) hard_union.push_back(static_cast<int>(i));

  ConsistencyReport rep;
  Rng rng(config.seed + 7);
  rep.random = random_consistency(labels, full, K, rng);
  rep.full_set = local_consistency(index, labels, full, K);
  rep.hard_samples = local_consistency(index, labels, hard, K);
  rep.hard_union_neighbors = local_consistency(index, labels, hard_union, K);
  return rep;
}

RunArtifact train(const RunConfig& config) {
  if (config.dataset.empty()) throw ConfigError("no dataset path configured");
  LabeledDataset ds = load_dataset(config.dataset);
  if (!config.embeddings.empty())
    ds.embeddings = load_embeddings(config.embeddings, config.metric);
  return train(config, ds);
}

}  // namespace hamr
