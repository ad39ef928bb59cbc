#include "ordproto/cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "ordproto/config.hpp"
#include "ordproto/data.hpp"
#include "ordproto/encoder.hpp"
#include "ordproto/errors.hpp"
#include "ordproto/eval.hpp"
#include "ordproto/json_io.hpp"
#include "ordproto/prototypes.hpp"
#include "ordproto/trainer.hpp"

namespace fs = std::filesystem;

namespace ordproto {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void apply_ablation(TrainConfig& cfg, const std::string& variant) {
  if (variant == "ce-only") {
    cfg.switches = {false, false, false};
  } else if (variant == "ins2ins") {
    cfg.switches = {true, false, false};
  } else if (variant == "ins2cls") {
    cfg.switches = {true, true, false};
  } else if (variant == "full") {
    cfg.switches = {true, true, true};
  } else {
    throw BadConfigError("--ablate", "expected ce-only, ins2ins, ins2cls or full");
  }
}

void check_compatible(const Model& model, const GlobalPrototypeStore* store,
                      const SyntheticOrdinalDataset& data) {
  if (data.input_dim() != model.dims().input_dim) {
    throw DimMismatchError("data has " + std::to_string(data.input_dim()) +
                           " input columns, checkpoint expects " +
                           std::to_string(model.dims().input_dim));
  }
  if (store && store->dim != model.dims().feature_dim) {
    throw DimMismatchError("store dim " + std::to_string(store->dim) +
                           " does not match checkpoint feature dim " +
                           std::to_string(model.dims().feature_dim));
  }
  if (data.num_classes() > model.dims().num_classes) {
    throw DimMismatchError("data has more classes than the checkpoint head");
  }
}

std::string embeddings_csv(const Model& model, const GlobalPrototypeStore& store,
                           const SyntheticOrdinalDataset& data) {
  const TrainingSet view = training_view(data);
  const ForwardPass pass = forward(model, view.inputs);
  std::string out = "id,coarse_label,fine_label";
  for (int j = 0; j < model.dims().feature_dim; ++j) out += ",z" + std::to_string(j);
  out += ",p_progressive\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data.samples[i];
    out += std::to_string(s.id) + ',' + std::to_string(s.coarse_label) + ',' +
           (s.fine_label ? to_string(*s.fine_label) : std::string());
    const auto z = pass.features.row(i);
    for (double v : z) out += ',' + fmt(v);
    out += ',' + fmt(predict_progression(z, store)) + '\n';
  }
  return out;
}

void print_summary(std::ostream& out, const RunSummary& s, const std::string& label = "seed") {
  out << label << "\tacc\tauc\tf1\tprecision\trecall\tspearman\n";
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const SeedResult& r = s.rows[i];
    const BinaryMetrics& m = r.eval.metrics;
    out << (label == "seed" ? std::to_string(r.seed) : std::to_string(i + 1)) << '\t'
        << fixed(m.acc) << '\t' << fixed(m.auc) << '\t' << fixed(m.f1) << '\t'
        << fixed(m.precision) << '\t' << fixed(m.recall) << '\t' << fixed(r.eval.spearman) << '\n';
  }
  auto pm = [](double mean, double sd) { return fixed(mean) + "+-" + fixed(sd); };
  out << "overall\t" << pm(s.mean.acc, s.std.acc) << '\t' << pm(s.mean.auc, s.std.auc) << '\t'
      << pm(s.mean.f1, s.std.f1) << '\t' << pm(s.mean.precision, s.std.precision) << '\t'
      << pm(s.mean.recall, s.std.recall) << '\t' << pm(s.mean.spearman, s.std.spearman) << '\n';
}

struct GenDataArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<int> counts;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  ExperimentConfig cfg = load_config(a.config);
  if (!a.counts.empty()) {
    cfg.generation.class_counts = a.counts;
    cfg.generation.validate();
  }
  const SyntheticOrdinalDataset ds = generate(cfg.generation, a.seed);
  save_dataset(ds, a.out);
  std::map<int, int> counts;
  for (const Sample& s : ds.samples) ++counts[s.coarse_label];
  out << "wrote " << ds.size() << " samples to " << a.out << '\n';
  for (const auto& [cls, n] : counts) out << "class " << cls << ": " << n << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string test;
  std::string out;
  std::string ablate;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig cfg = load_config(a.config);
  if (!a.ablate.empty()) apply_ablation(cfg.training, a.ablate);
  const SyntheticOrdinalDataset train_ds = load_dataset(a.data);
  const SyntheticOrdinalDataset eval_ds = a.test.empty() ? train_ds : load_dataset(a.test);
  if (train_ds.num_classes() != cfg.training.num_classes) {
    throw BadConfigError("classes", "config has " + std::to_string(cfg.training.num_classes) +
                                        " classes but the data has " +
                                        std::to_string(train_ds.num_classes()));
  }
  if (eval_ds.input_dim() != train_ds.input_dim()) {
    throw DimMismatchError("test data width differs from training data");
  }

  const fs::path dir(a.out);
  ensure_dir(dir);
  const fs::path checkpoint = dir / "checkpoint.json";
  const fs::path store = dir / "store.json";
  const fs::path history = dir / "history.csv";
  const fs::path metrics = dir / "metrics.json";
  const fs::path embeddings = dir / "embeddings.csv";

  const RunSummary summary = run_seeds(
      cfg.training, training_view(train_ds), eval_ds,
      [&](std::size_t index, const TrainedModel& t) {
        const fs::path seed_dir = dir / ("seed_" + std::to_string(cfg.training.seeds[index]));
        ensure_dir(seed_dir);
        save_checkpoint(t.model, cfg.training.epochs, seed_dir / "checkpoint.json");
        save_store(t.store, seed_dir / "store.json");
        t.history.write_csv(seed_dir / "history.csv");
        if (index == 0) {
          save_checkpoint(t.model, cfg.training.epochs, checkpoint);
          save_store(t.store, store);
          t.history.write_csv(history);
          write_text(embeddings, embeddings_csv(t.model, t.store, eval_ds));
        }
      });
  write_json_file(summary_to_json(summary), metrics);

  nlohmann::json manifest;
  manifest["config_path"] = a.config;
  manifest["config"] = render_config(cfg);
  manifest["seeds"] = cfg.training.seeds;
  manifest["output_dir"] = dir.string();
  manifest["data"] = a.data;
  manifest["test"] = a.test.empty() ? a.data : a.test;
  manifest["artifacts"] = {{"checkpoint", checkpoint.string()}, {"store", store.string()},
                           {"history", history.string()},       {"metrics", metrics.string()},
                           {"embeddings", embeddings.string()}};
  write_json_file(manifest, dir / "manifest.json");

  print_summary(out, summary);
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string store;
  std::string data;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Model model = load_checkpoint(a.checkpoint);
  const GlobalPrototypeStore store = load_store(a.store);
  const SyntheticOrdinalDataset data = load_dataset(a.data);
  check_compatible(model, &store, data);
  const EvalResult r = evaluate(model, store, data);
  nlohmann::json j = metrics_to_json(r.metrics);
  j["spearman"] = r.spearman;
  if (!a.out.empty()) write_json_file(j, a.out);
  out << j.dump(2) << '\n';
  return kExitOk;
}

struct ExportArgs {
  std::string checkpoint;
  std::string store;
  std::string data;
  std::string out;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const Model model = load_checkpoint(a.checkpoint);
  const GlobalPrototypeStore store = load_store(a.store);
  const SyntheticOrdinalDataset data = load_dataset(a.data);
  check_compatible(model, &store, data);
  write_text(a.out, embeddings_csv(model, store, data));
  out << "wrote " << data.size() << " embeddings to " << a.out << '\n';
  return kExitOk;
}

struct CrossvalArgs {
  std::string config;
  std::string data;
  int k = 5;
  std::string out;
};

int cmd_crossval(const CrossvalArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_config(a.config);
  const SyntheticOrdinalDataset ds = load_dataset(a.data);
  if (ds.num_classes() != cfg.training.num_classes) {
    throw BadConfigError("classes", "config and data disagree on the number of classes");
  }
  const std::uint64_t seed = cfg.training.seeds.front();
  const std::vector<int> folds = kfold_split(ds.coarse_labels(), ds.num_classes(), a.k, seed);
  std::vector<SeedResult> rows;
  for (int f = 1; f <= a.k; ++f) {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test_idx : train_idx).push_back(i);
    const SyntheticOrdinalDataset train_ds = ds.subset(train_idx);
    const SyntheticOrdinalDataset test_ds = ds.subset(test_idx);
    const TrainedModel t = train(cfg.training, training_view(train_ds), seed);
    rows.push_back({static_cast<std::uint64_t>(f), evaluate(t.model, t.store, test_ds)});
  }
  const RunSummary summary = summarize(std::move(rows));
  if (!a.out.empty()) {
    nlohmann::json j = summary_to_json(summary);
    nlohmann::json per_fold = nlohmann::json::array();
    for (auto row : j["per_seed"]) {
      row["fold"] = row["seed"];
      row.erase("seed");
      per_fold.push_back(std::move(row));
    }
    j.erase("per_seed");
    j["per_fold"] = std::move(per_fold);
    j["k"] = a.k;
    write_json_file(j, a.out);
  }
  print_summary(out, summary, "fold");
  return kExitOk;
}

struct AblationArgs {
  std::string config;
  std::string data;
  std::string test;
  std::string kind = "losses";
  std::string out;
};

int cmd_ablation(const AblationArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_config(a.config);
  const SyntheticOrdinalDataset train_ds = load_dataset(a.data);
  const SyntheticOrdinalDataset test_ds = a.test.empty() ? train_ds : load_dataset(a.test);
  const TrainingSet view = training_view(train_ds);

  std::vector<std::pair<std::string, TrainConfig>> variants;
  if (a.kind == "losses") {
    for (const char* v : {"ce-only", "ins2ins", "ins2cls", "full"}) {
      TrainConfig t = cfg.training;
      apply_ablation(t, v);
      variants.emplace_back(v, t);
    }
  } else if (a.kind == "sigma") {
    TrainConfig no_ema = cfg.training;
    no_ema.use_ema = false;
    variants.emplace_back("no-ema", no_ema);
    for (double s : {0.5, 0.8, 0.9, 0.99, 0.999}) {
      TrainConfig t = cfg.training;
      t.use_ema = true;
      t.sigma = s;
      variants.emplace_back("sigma=" + fmt(s), t);
    }
  } else {
    throw BadConfigError("--kind", "expected 'losses' or 'sigma'");
  }

  nlohmann::json report = nlohmann::json::array();
  out << "variant\tacc\tauc\tf1\tprecision\trecall\tspearman\n";
  for (const auto& [name, t] : variants) {
    const RunSummary s = run_seeds(t, view, test_ds);
    out << name << '\t' << fixed(s.mean.acc) << '\t' << fixed(s.mean.auc) << '\t'
        << fixed(s.mean.f1) << '\t' << fixed(s.mean.precision) << '\t' << fixed(s.mean.recall)
        << '\t' << fixed(s.mean.spearman) << '\n';
    nlohmann::json j = summary_to_json(s);
    j["variant"] = name;
    report.push_back(std::move(j));
  }
  if (!a.out.empty()) write_json_file(report, a.out);
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BadConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) return kExitIo;
  if (dynamic_cast<const DimMismatchError*>(&e)) return kExitIncompatible;
  if (dynamic_cast<const BadKError*>(&e) || dynamic_cast<const BatchTooSmallError*>(&e)) {
    return kExitUsage;
  }
  return kExitNumeric;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ordinal prototype learning: synthetic cohorts, training, evaluation"};
  app.name(args.empty() ? "ordproto" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic ordinal dataset (CSV)");
  gen_cmd->add_option("--config", gen.config, "Experiment config file")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();
  gen_cmd->add_option("--counts", gen.counts, "Per-class counts overriding class_counts")
      ->delimiter(',');

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train over the configured seeds");
  train_cmd->add_option("--config", tr.config, "Experiment config file")->required();
  train_cmd->add_option("--data", tr.data, "Training dataset CSV")->required();
  train_cmd->add_option("--test", tr.test, "Evaluation dataset CSV (default: --data)");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--ablate", tr.ablate, "Loss variant: ce-only, ins2ins, ins2cls, full");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and prototype store");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON")->required();
  eval_cmd->add_option("--store", ev.store, "Prototype store JSON")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset CSV")->required();
  eval_cmd->add_option("--out", ev.out, "Also write the metrics JSON here");

  ExportArgs ex;
  auto* export_cmd = app.add_subcommand("export-embeddings", "Write features and scores as CSV");
  export_cmd->add_option("--checkpoint", ex.checkpoint, "Checkpoint JSON")->required();
  export_cmd->add_option("--store", ex.store, "Prototype store JSON")->required();
  export_cmd->add_option("--data", ex.data, "Dataset CSV")->required();
  export_cmd->add_option("--out", ex.out, "Output CSV")->required();

  CrossvalArgs cv;
  auto* cv_cmd = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
  cv_cmd->add_option("--config", cv.config, "Experiment config file")->required();
  cv_cmd->add_option("--data", cv.data, "Dataset CSV")->required();
  cv_cmd->add_option("--k", cv.k, "Number of folds")->default_val(5);
  cv_cmd->add_option("--out", cv.out, "Also write per-fold results as JSON");

  AblationArgs ab;
  auto* ab_cmd = app.add_subcommand("ablation", "Loss-component or EMA momentum sweep");
  ab_cmd->add_option("--config", ab.config, "Experiment config file")->required();
  ab_cmd->add_option("--data", ab.data, "Training dataset CSV")->required();
  ab_cmd->add_option("--test", ab.test, "Evaluation dataset CSV (default: --data)");
  ab_cmd->add_option("--kind", ab.kind, "losses or sigma")->default_val("losses");
  ab_cmd->add_option("--out", ab.out, "Also write the report as JSON");

  std::vector<const char*> argv;
  for (const std::string& s : args) argv.push_back(s.c_str());
  if (argv.empty()) argv.push_back("ordproto");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failed->help();
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*export_cmd) return cmd_export(ex, out);
    if (*cv_cmd) return cmd_crossval(cv, out);
    if (*ab_cmd) return cmd_ablation(ab, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace ordproto
