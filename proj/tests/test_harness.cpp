#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "hamr/config.hpp"
#include "hamr/dataset.hpp"
#include "hamr/metrics.hpp"
#include "hamr/trainer.hpp"

using namespace hamr;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& contents = "")
      : path("/tmp/hamr_test_" + name) {
    if (!contents.empty()) {
      std::ofstream out(path);
      out << contents;
    }
  }
  ~TempFile() { std::remove(path.c_str()); }
};

bool same_metrics(const RunArtifact& a, const RunArtifact& b) {
  if (a.per_epoch.size() != b.per_epoch.size()) return false;
  for (std::size_t i = 0; i < a.per_epoch.size(); ++i) {
    if (a.per_epoch[i].train_loss != b.per_epoch[i].train_loss) return false;
    if (a.per_epoch[i].val_macro_f1 != b.per_epoch[i].val_macro_f1) return false;
    if (a.per_epoch[i].val_micro_f1 != b.per_epoch[i].val_micro_f1) return false;
  }
  return a.final_report.macro_f1 == b.final_report.macro_f1 &&
         a.final_report.micro_f1 == b.final_report.micro_f1 &&
         a.params.flat == b.params.flat && a.hardness.h == b.hardness.h;
}

}  // namespace

TEST_CASE("RunConfig: unknown keys are hard errors; round trip through as_map") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("learning_rte", "0.1"), ConfigError);
  cfg.set("learning_rate", "0.25");
  cfg.set("method", "focal");
  cfg.set("loss_agg", "max_token");
  CHECK(cfg.learning_rate == 0.25);
  CHECK(cfg.method == Method::Focal);
  CHECK(cfg.loss_agg == LossAgg::MaxToken);

  RunConfig copy;
  for (const auto& [k, v] : cfg.as_map()) copy.set(k, v);
  CHECK(copy.as_map() == cfg.as_map());
}

TEST_CASE("RunConfig: invalid values rejected by validate") {
  RunConfig cfg;
  cfg.gamma_ema = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.knn_ratio = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.refresh_interval = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("RunConfig: file parsing with comments and bad values") {
  TempFile f("cfg.txt",
             "# comment line\n"
             "method=plain\n"
             "epochs=3\n"
             "learning_rate=0.5\n");
  RunConfig cfg = RunConfig::from_file(f.path);
  CHECK(cfg.method == Method::Plain);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.learning_rate == 0.5);

  TempFile bad("cfg_bad.txt", "epochs=three\n");
  CHECK_THROWS_AS(RunConfig::from_file(bad.path), ConfigError);
}

TEST_CASE("load_dataset: minimal valid file") {
  TempFile f("min.txt",
             "CLS 3 2 2\n"
             "train,0,1.0,2.0\n"
             "train,1,0.5,0.5\n"
             "valid,0,1.5,2.5\n");
  LabeledDataset ds = load_dataset(f.path);
  CHECK(ds.size() == 3);
  CHECK(ds.feature_dim == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.ids_of(Split::Train).size() == 2);
  CHECK(ds.ids_of(Split::Valid).size() == 1);
}

TEST_CASE("load_dataset: wrong column count names the line") {
  TempFile f("badrow.txt",
             "CLS 2 2 2\n"
             "train,0,1.0,2.0\n"
             "train,1,0.5\n");
  try {
    load_dataset(f.path);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("load_dataset: unknown class id and empty valid split rejected") {
  TempFile f("badlabel.txt",
             "CLS 2 1 2\n"
             "train,5,1.0\n"
             "valid,0,1.0\n");
  CHECK_THROWS_AS(load_dataset(f.path), DataError);

  TempFile g("nosplit.txt",
             "CLS 2 1 2\n"
             "train,0,1.0\n"
             "train,1,2.0\n");
  CHECK_THROWS_AS(load_dataset(g.path), DataError);
}

TEST_CASE("dataset round trip: save then load is identical") {
  auto ds = generate_longtail(4, 5.0, 120, 3, 3.0, 11);
  TempFile f("roundtrip.txt");
  save_dataset(f.path, ds);
  LabeledDataset back = load_dataset(f.path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.feature_dim == ds.feature_dim);
  CHECK(back.num_classes == ds.num_classes);
  CHECK(back.splits == ds.splits);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.examples[i].labels == ds.examples[i].labels);
    for (std::size_t t = 0; t < ds.examples[i].rows.size(); ++t)
      for (std::size_t j = 0; j < ds.examples[i].rows[t].size(); ++j)
        CHECK(back.examples[i].rows[t][j] ==
              doctest::Approx(ds.examples[i].rows[t][j]).epsilon(1e-12));
  }
}

TEST_CASE("sequence dataset: SEQ rows group by id; embeddings sidecar aligns") {
  TempFile f("seq.txt",
             "SEQ 7 2 3\n"
             "train,0,1,0.1,0.2\n"
             "train,0,2,0.3,0.4\n"
             "train,1,0,0.5,0.6\n"
             "train,2,2,0.2,0.1\n"
             "train,2,2,0.4,0.3\n"
             "valid,3,1,0.7,0.8\n"
             "test,4,2,0.9,1.0\n");
  LabeledDataset ds = load_dataset(f.path);
  CHECK(ds.sequence);
  CHECK(ds.size() == 5);  // 5 groups
  CHECK(ds.examples[0].rows.size() == 2);

  TempFile e("seq_emb.txt",
             "EMB 5 2\n"
             "1,0\n0,1\n1,1\n0.5,0.5\n0.2,0.9\n");
  auto emb = load_embeddings(e.path, Metric::Cosine);
  CHECK(emb.n == 5);
  CHECK(emb.dim == 2);
}

TEST_CASE("example_label: dominant token label with ties to the lower id") {
  Example e;
  e.id = 0;
  e.rows = {{0.0}, {0.0}, {0.0}, {0.0}};
  e.labels = {2, 1, 2, 1};
  CHECK(example_label(e) == 1);
  e.labels = {2, 2, 1, 2};
  CHECK(example_label(e) == 2);
}

TEST_CASE("generate_longtail: balanced limit, measured IR, minimum sizes") {
  auto balanced = generate_longtail(5, 1.0, 500, 4, 3.0, 3);
  auto counts = balanced.class_counts(Split::Train);
  std::int64_t lo = counts[0], hi = counts[0];
  for (auto c : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi - lo <= 1);

  for (double ir : {5.0, 20.0, 50.0}) {
    auto ds = generate_longtail(8, ir, 2000, 6, 3.0, 4);
    std::vector<std::int64_t> overall(8, 0);
    for (const auto& ex : ds.examples) overall[static_cast<std::size_t>(example_label(ex))]++;
    double measured = imbalance_ratio(overall);
    CHECK(measured >= 0.9 * ir);
    CHECK(measured <= 1.1 * ir);
    for (auto c : overall) CHECK(c >= 2);
    // every class appears in train and valid so training and the meta set work
    auto tc = ds.class_counts(Split::Train);
    auto vc = ds.class_counts(Split::Valid);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(tc[k] >= 1);
      CHECK(vc[k] >= 1);
    }
  }
  CHECK_THROWS_AS(generate_longtail(1, 2.0, 100, 3, 1.0, 5), ConfigError);
}

TEST_CASE("train: zero epochs records initial-model metrics only") {
  auto ds = generate_longtail(4, 3.0, 200, 3, 3.0, 21);
  RunConfig cfg;
  cfg.method = Method::Plain;
  cfg.epochs = 0;
  RunArtifact art = train(cfg, ds);
  CHECK(art.per_epoch.empty());
  CHECK_FALSE(art.weight_net_constructed);
}

TEST_CASE("train: identical config and seed reproduce the artifact bit for bit") {
  auto ds = generate_longtail(4, 4.0, 240, 3, 2.5, 22);
  for (Method m : {Method::Hamr, Method::Plain, Method::Focal, Method::Dice, Method::Icf,
                   Method::En}) {
    RunConfig cfg;
    cfg.method = m;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.seed = 5;
    RunArtifact a = train(cfg, ds);
    RunArtifact b = train(cfg, ds);
    CHECK(same_metrics(a, b));
    CHECK(a.weight_net_constructed == (m == Method::Hamr));
  }
}

TEST_CASE("train: changing only the seed changes the trajectory") {
  auto ds = generate_longtail(4, 4.0, 240, 3, 2.5, 23);
  RunConfig cfg;
  cfg.method = Method::Hamr;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.seed = 5;
  RunArtifact a = train(cfg, ds);
  cfg.seed = 6;
  RunArtifact b = train(cfg, ds);
  CHECK_FALSE(a.params.flat == b.params.flat);
}

TEST_CASE("train: frozen-hardness limit keeps h neutral and sampling uniform") {
  auto ds = generate_longtail(4, 4.0, 240, 3, 2.5, 24);
  RunConfig cfg;
  cfg.method = Method::Hamr;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.gamma_ema = 1.0;     // h frozen at 1
  cfg.knn_lambda = 0.0;    // no boost term
  cfg.hardness_alpha = 1e-9;  // tau -> 0: uniform sampling
  RunArtifact art = train(cfg, ds);
  for (double h : art.hardness.h) CHECK(h == 1.0);
}

TEST_CASE("train: exploding learning rate triggers the divergence guard") {
  auto ds = generate_longtail(3, 2.0, 150, 3, 3.0, 25);
  RunConfig cfg;
  cfg.method = Method::Plain;
  cfg.epochs = 3;
  cfg.learning_rate = 1e308;  // overflows the parameters on the first step
  CHECK_THROWS_AS(train(cfg, ds), DivergenceError);
}

TEST_CASE("artifact JSON round trip") {
  auto ds = generate_longtail(4, 4.0, 240, 3, 2.5, 26);
  RunConfig cfg;
  cfg.method = Method::Hamr;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  RunArtifact art = train(cfg, ds);
  TempFile f("artifact.json");
  art.save(f.path);
  RunArtifact back = RunArtifact::load(f.path);
  CHECK(back.schema_version == art.schema_version);
  CHECK(back.params.flat == art.params.flat);
  CHECK(back.hardness.h == art.hardness.h);
  CHECK(back.final_report.macro_f1 == art.final_report.macro_f1);
  CHECK(back.config == art.config);
}

TEST_CASE("evaluate: empty split is a config error; reports span F1 for sequences") {
  TempFile f("seq_eval.txt",
             "SEQ 6 2 3\n"
             "train,0,1,0.1,0.2\n"
             "train,0,2,0.3,0.4\n"
             "train,1,0,0.5,0.6\n"
             "train,2,2,0.2,0.1\n"
             "valid,3,1,0.7,0.8\n"
             "test,4,2,0.9,1.0\n");
  LabeledDataset ds = load_dataset(f.path);
  TaskModelParams p = TaskModelParams::zeros(ModelShape{3, 2, 0});
  auto res = evaluate(p, ds, Split::Test);
  CHECK(res.span_report.has_value());

  TempFile g("noeval.txt",
             "CLS 3 1 2\n"
             "train,0,1.0\n"
             "train,1,2.0\n"
             "valid,0,1.5\n");
  LabeledDataset ds2 = load_dataset(g.path);
  TaskModelParams p2 = TaskModelParams::zeros(ModelShape{2, 1, 0});
  CHECK_THROWS_AS(evaluate(p2, ds2, Split::Test), ConfigError);
}

TEST_CASE("bio_tag_of_label: deterministic integer-label convention") {
  CHECK(bio_tag_of_label(0) == "O");
  CHECK(bio_tag_of_label(1) == "B-T1");
  CHECK(bio_tag_of_label(2) == "I-T1");
  CHECK(bio_tag_of_label(3) == "B-T2");
  CHECK(bio_tag_of_label(4) == "I-T2");
}

TEST_CASE("consistency_audit: values in range and deterministic") {
  auto ds = generate_longtail(5, 5.0, 400, 4, 5.0, 27);
  RunConfig cfg;
  cfg.method = Method::Hamr;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  RunArtifact art = train(cfg, ds);
  auto r1 = consistency_audit(ds, art.hardness, cfg, 10);
  auto r2 = consistency_audit(ds, art.hardness, cfg, 10);
  CHECK(r1.random == r2.random);
  CHECK(r1.full_set == r2.full_set);
  CHECK(r1.hard_samples == r2.hard_samples);
  CHECK(r1.hard_union_neighbors == r2.hard_union_neighbors);
  for (double v : {r1.random, r1.full_set, r1.hard_samples, r1.hard_union_neighbors}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
