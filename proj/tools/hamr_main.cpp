#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hamr/config.hpp"
#include "hamr/dataset.hpp"
#include "hamr/gradcheck.hpp"
#include "hamr/trainer.hpp"

namespace {

const std::vector<std::string> kConfigKeys = {
    "method",        "learning_rate", "wnet_lr",        "meta_update_lr",
    "gamma_ema",     "hardness_alpha", "knn_lambda",    "knn_k",
    "knn_ratio",     "refresh_interval", "batch_size",  "epochs",
    "clip_min",      "clip_max",      "epsilon",        "loss_agg",
    "metric",        "seed",          "dataset",        "embeddings",
    "hidden_dim",    "wnet_hidden_dim", "meta_batch",   "rebuild_meta_set",
    "en_beta",       "focal_gamma",   "dice_eps",       "exclude_empty",
    "verbose_trace"};

// Every config key is mirrored as a --key flag; flags override the file.
void add_config_flags(CLI::App* cmd, std::shared_ptr<std::vector<std::pair<std::string, std::string>>> overrides) {
  for (const auto& key : kConfigKeys) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [overrides, key](const std::string& value) { overrides->emplace_back(key, value); });
  }
}

hamr::RunConfig resolve_config(const std::string& config_path,
                               const std::vector<std::pair<std::string, std::string>>& overrides) {
  hamr::RunConfig cfg =
      config_path.empty() ? hamr::RunConfig{} : hamr::RunConfig::from_file(config_path);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  if (const char* env = std::getenv("HAMR_SEED"))
    cfg.set("seed", env);
  cfg.validate();
  return cfg;
}

hamr::LabeledDataset load_for(const hamr::RunConfig& cfg) {
  if (cfg.dataset.empty()) throw hamr::ConfigError("no dataset path configured");
  hamr::LabeledDataset ds = hamr::load_dataset(cfg.dataset);
  if (!cfg.embeddings.empty())
    ds.embeddings = hamr::load_embeddings(cfg.embeddings, cfg.metric);
  return ds;
}

void print_report(const hamr::F1Report& r) {
  std::cout << "macro_f1=" << r.macro_f1 << " micro_f1=" << r.micro_f1 << "\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    std::cout << "  class " << (c < r.class_names.size() ? r.class_names[c] : std::to_string(c))
              << ": P=" << r.per_class[c].precision << " R=" << r.per_class[c].recall
              << " F1=" << r.per_class[c].f1 << " support=" << r.per_class[c].support
              << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hardness-aware meta-resample trainer"};
  app.require_subcommand(1);

  // --- train ---
  auto train_overrides = std::make_shared<std::vector<std::pair<std::string, std::string>>>();
  std::string train_config, train_out = "artifact.json";
  auto* train_cmd = app.add_subcommand("train", "Run a training job");
  train_cmd->add_option("--config", train_config, "key=value config file");
  train_cmd->add_option("--out", train_out, "artifact output path");
  add_config_flags(train_cmd, train_overrides);

  // --- eval ---
  std::string eval_artifact, eval_dataset, eval_embeddings, eval_split = "test";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained artifact on a split");
  eval_cmd->add_option("--artifact", eval_artifact)->required();
  eval_cmd->add_option("--dataset", eval_dataset)->required();
  eval_cmd->add_option("--embeddings", eval_embeddings);
  eval_cmd->add_option("--split", eval_split, "train|valid|test");

  // --- gen-data ---
  int gd_classes = 10, gd_dim = 16;
  double gd_ir = 50.0, gd_sep = 2.5;
  std::size_t gd_n = 4000;
  std::uint64_t gd_seed = 1;
  std::string gd_out = "dataset.txt";
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic long-tailed dataset");
  gen_cmd->add_option("--classes", gd_classes);
  gen_cmd->add_option("--ir", gd_ir, "imbalance ratio");
  gen_cmd->add_option("--n", gd_n, "total examples");
  gen_cmd->add_option("--dim", gd_dim, "feature dimension");
  gen_cmd->add_option("--sep", gd_sep, "cluster separation");
  gen_cmd->add_option("--seed", gd_seed);
  gen_cmd->add_option("--out", gd_out)->required();

  // --- consistency ---
  auto cons_overrides = std::make_shared<std::vector<std::pair<std::string, std::string>>>();
  std::string cons_config;
  int cons_k = 10;
  auto* cons_cmd = app.add_subcommand(
      "consistency", "Train, then audit local label consistency over four settings");
  cons_cmd->add_option("--config", cons_config);
  cons_cmd->add_option("--K", cons_k, "neighbors per consistency query");
  add_config_flags(cons_cmd, cons_overrides);

  // --- gradcheck ---
  std::uint64_t gc_seed = 42;
  int gc_cases = 50;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
  gc_cmd->add_option("--seed", gc_seed);
  gc_cmd->add_option("--cases", gc_cases);

  // --- report ---
  std::string rep_artifact;
  bool rep_csv = false;
  auto* rep_cmd = app.add_subcommand("report", "Quartile table from a run artifact");
  rep_cmd->add_option("--artifact", rep_artifact)->required();
  rep_cmd->add_flag("--csv", rep_csv, "emit CSV instead of a text table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      hamr::RunConfig cfg = resolve_config(train_config, *train_overrides);
      hamr::LabeledDataset ds = load_for(cfg);
      try {
        hamr::RunArtifact artifact = hamr::train(cfg, ds);
        artifact.save(train_out);
        std::cout << "wrote " << train_out << "\n";
        std::cout << "final (" << artifact.final_split << "): macro_f1="
                  << artifact.final_report.macro_f1
                  << " micro_f1=" << artifact.final_report.micro_f1 << "\n";
      } catch (const hamr::DivergenceError& e) {
        nlohmann::json diag = {{"schema_version", 1},
                               {"diverged", true},
                               {"message", e.what()},
                               {"config", cfg.as_map()}};
        std::ofstream out(train_out);
        out << diag.dump(2) << '\n';
        std::cerr << "divergence: " << e.what() << " (diagnostic written to "
                  << train_out << ")\n";
        return 4;
      }
    } else if (*eval_cmd) {
      hamr::RunArtifact artifact = hamr::RunArtifact::load(eval_artifact);
      hamr::LabeledDataset ds = hamr::load_dataset(eval_dataset);
      if (!eval_embeddings.empty())
        ds.embeddings = hamr::load_embeddings(eval_embeddings, hamr::Metric::Cosine);
      hamr::Split split;
      if (eval_split == "train") split = hamr::Split::Train;
      else if (eval_split == "valid") split = hamr::Split::Valid;
      else if (eval_split == "test") split = hamr::Split::Test;
      else throw hamr::ConfigError("unknown split '" + eval_split + "'");
      auto res = hamr::evaluate(artifact.params, ds, split);
      print_report(res.report);
      if (res.span_report) {
        std::cout << "span-level:\n";
        print_report(*res.span_report);
      }
    } else if (*gen_cmd) {
      auto ds = hamr::generate_longtail(gd_classes, gd_ir, gd_n, gd_dim, gd_sep, gd_seed);
      hamr::save_dataset(gd_out, ds);
      auto counts = ds.class_counts(hamr::Split::Train);
      std::int64_t total = 0;
      for (auto c : counts) total += c;
      std::cout << "wrote " << gd_out << " (" << ds.size() << " examples, "
                << gd_classes << " classes)\n";
    } else if (*cons_cmd) {
      hamr::RunConfig cfg = resolve_config(cons_config, *cons_overrides);
      hamr::LabeledDataset ds = load_for(cfg);
      hamr::RunArtifact artifact = hamr::train(cfg, ds);
      auto rep = hamr::consistency_audit(ds, artifact.hardness, cfg, cons_k);
      std::cout << "Random            " << rep.random << "\n"
                << "Full Set          " << rep.full_set << "\n"
                << "Hard Samples      " << rep.hard_samples << "\n"
                << "Hard u Neighbors  " << rep.hard_union_neighbors << "\n";
    } else if (*gc_cmd) {
      auto m = hamr::model_gradcheck(gc_seed, gc_cases);
      auto w = hamr::weightnet_gradcheck(gc_seed + 1, gc_cases);
      auto g = hamr::meta_gradcheck(gc_seed + 2, gc_cases);
      std::cout << "model grad:    " << m.cases << " cases, max rel err " << m.max_rel_error << "\n";
      std::cout << "weight jac:    " << w.cases << " cases, max rel err " << w.max_rel_error << "\n";
      std::cout << "meta gradient: " << g.cases << " cases, max rel err " << g.max_rel_error << "\n";
      bool ok = m.max_rel_error < 1e-4 && w.max_rel_error < 1e-4 && g.max_rel_error < 1e-3;
      std::cout << (ok ? "OK" : "FAIL") << "\n";
      return ok ? 0 : 1;
    } else if (*rep_cmd) {
      hamr::RunArtifact artifact = hamr::RunArtifact::load(rep_artifact);
      const auto& q = artifact.quartiles;
      if (rep_csv) {
        std::cout << "quartile,mean_f1,labels\n";
        for (int i = 0; i < 4; ++i) {
          std::cout << "Q" << (i + 1) << "," << q.mean_f1[static_cast<std::size_t>(i)] << ",\"";
          for (std::size_t j = 0; j < q.labels[static_cast<std::size_t>(i)].size(); ++j)
            std::cout << (j ? " " : "") << q.labels[static_cast<std::size_t>(i)][j];
          std::cout << "\"\n";
        }
      } else {
        std::cout << "quartile  mean_f1   labels (Q1 = rarest)\n";
        for (int i = 0; i < 4; ++i) {
          std::cout << "Q" << (i + 1) << "        " << q.mean_f1[static_cast<std::size_t>(i)]
                    << "   ";
          for (int l : q.labels[static_cast<std::size_t>(i)]) std::cout << l << " ";
          std::cout << "\n";
        }
      }
    }
  } catch (const hamr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hamr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const hamr::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
