// painreg: train and evaluate the discrete-intensity regression head on
// precomputed face-feature embeddings.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "painreg/baselines.hpp"
#include "painreg/crossval.hpp"
#include "painreg/data.hpp"
#include "painreg/errors.hpp"
#include "painreg/metrics.hpp"
#include "painreg/model.hpp"

namespace {

using nlohmann::json;
using namespace painreg;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct CommonTrainFlags {
  std::string data_path;
  std::size_t dim = 512;
  double lr = 0.0001;
  long iterations = 5000;
  std::size_t batch = 36;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  double lambda = 0.01;
  double t = 1.0;
  std::string center_norm = "l2";
  std::string loss_kind = "smooth_l1";
  std::string sampler = "balanced";
  std::size_t hidden = 50;
  double dropout = 0.5;
  std::string activation = "relu";
  std::string center_init = "zero";
};

TrainConfig to_train_config(const CommonTrainFlags& f) {
  TrainConfig c;
  c.learning_rate = f.lr;
  c.iterations = f.iterations;
  c.batch_size = f.batch;
  c.momentum = f.momentum;
  c.seed = f.seed;
  c.loss.center_weight = f.lambda;
  c.loss.turning_point = f.t;
  if (f.center_norm == "l1") {
    c.loss.center_norm = CenterNorm::L1;
  } else if (f.center_norm == "l2") {
    c.loss.center_norm = CenterNorm::L2;
  } else {
    throw CLI::ValidationError("--center-norm must be l1 or l2");
  }
  if (f.loss_kind == "mse") {
    c.loss.regression_kind = RegressionKind::MSE;
  } else if (f.loss_kind == "smooth_l1") {
    c.loss.regression_kind = RegressionKind::SmoothL1;
  } else {
    throw CLI::ValidationError("--loss must be mse or smooth_l1");
  }
  if (f.sampler == "balanced") {
    c.sampler_kind = SamplerKind::Balanced;
  } else if (f.sampler == "uniform") {
    c.sampler_kind = SamplerKind::Uniform;
  } else {
    throw CLI::ValidationError("--sampler must be balanced or uniform");
  }
  c.hidden_dim = f.hidden;
  c.dropout_rate = f.dropout;
  if (f.activation == "relu") {
    c.activation = Activation::ReLU;
  } else if (f.activation == "identity") {
    c.activation = Activation::Identity;
  } else {
    throw CLI::ValidationError("--activation must be relu or identity");
  }
  if (f.center_init == "zero") {
    c.center_init = CenterInit::Zero;
  } else if (f.center_init == "batch-means") {
    c.center_init = CenterInit::FirstBatchMeans;
  } else {
    throw CLI::ValidationError("--center-init must be zero or batch-means");
  }
  return c;
}

json resolved_config_json(const CommonTrainFlags& f) {
  return json{{"data", f.data_path},
              {"dim", f.dim},
              {"lr", f.lr},
              {"iterations", f.iterations},
              {"batch", f.batch},
              {"momentum", f.momentum},
              {"seed", f.seed},
              {"lambda", f.lambda},
              {"t", f.t},
              {"center_norm", f.center_norm},
              {"loss", f.loss_kind},
              {"sampler", f.sampler},
              {"hidden", f.hidden},
              {"dropout", f.dropout},
              {"activation", f.activation},
              {"center_init", f.center_init}};
}

void add_train_flags(CLI::App* cmd, CommonTrainFlags& f) {
  cmd->add_option("--data", f.data_path, "Feature CSV path")->required();
  cmd->add_option("--dim", f.dim, "Feature dimension D");
  cmd->add_option("--lr", f.lr, "Learning rate");
  cmd->add_option("--iterations", f.iterations, "SGD iterations");
  cmd->add_option("--batch", f.batch, "Batch size");
  cmd->add_option("--momentum", f.momentum, "Classical momentum");
  cmd->add_option("--seed", f.seed, "Base RNG seed");
  cmd->add_option("--lambda", f.lambda, "Center-loss weight");
  cmd->add_option("--t", f.t, "Smooth-l1 turning point");
  cmd->add_option("--center-norm", f.center_norm, "Center-loss norm: l1|l2");
  cmd->add_option("--loss", f.loss_kind, "Regression loss: mse|smooth_l1");
  cmd->add_option("--sampler", f.sampler, "Sampler: balanced|uniform");
  cmd->add_option("--hidden", f.hidden, "Hidden layer width H");
  cmd->add_option("--dropout", f.dropout, "Dropout rate");
  cmd->add_option("--activation", f.activation, "Hidden activation: relu|identity");
  cmd->add_option("--center-init", f.center_init, "Center init: zero|batch-means");
}

// --config JSON sets defaults; explicit flags override. The file holds flag
// names without the leading dashes.
void apply_config_file(const std::string& path, CommonTrainFlags& f) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  json j;
  in >> j;
  if (j.contains("data")) f.data_path = j["data"].get<std::string>();
  if (j.contains("dim")) f.dim = j["dim"].get<std::size_t>();
  if (j.contains("lr")) f.lr = j["lr"].get<double>();
  if (j.contains("iterations")) f.iterations = j["iterations"].get<long>();
  if (j.contains("batch")) f.batch = j["batch"].get<std::size_t>();
  if (j.contains("momentum")) f.momentum = j["momentum"].get<double>();
  if (j.contains("seed")) f.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("lambda")) f.lambda = j["lambda"].get<double>();
  if (j.contains("t")) f.t = j["t"].get<double>();
  if (j.contains("center_norm")) f.center_norm = j["center_norm"].get<std::string>();
  if (j.contains("loss")) f.loss_kind = j["loss"].get<std::string>();
  if (j.contains("sampler")) f.sampler = j["sampler"].get<std::string>();
  if (j.contains("hidden")) f.hidden = j["hidden"].get<std::size_t>();
  if (j.contains("dropout")) f.dropout = j["dropout"].get<double>();
  if (j.contains("activation")) f.activation = j["activation"].get<std::string>();
  if (j.contains("center_init")) f.center_init = j["center_init"].get<std::string>();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

void print_class_histogram(const Dataset& ds) {
  std::vector<std::size_t> counts(ds.num_classes, 0);
  for (const auto& s : ds.samples) ++counts[s.label];
  std::printf("%zu samples, D=%zu\n", ds.size(), ds.feature_dim);
  for (int k = 0; k < ds.num_classes; ++k) {
    const double frac = ds.empty() ? 0.0
                                   : static_cast<double>(counts[k]) /
                                         static_cast<double>(ds.size());
    std::printf("  class %d: %zu (%.4f)\n", k, counts[k], frac);
  }
}

int cmd_synth(const SyntheticConfig& cfg, const std::string& out_path) {
  const Dataset ds = generate_synthetic(cfg);
  save_dataset(ds, out_path);
  print_class_histogram(ds);
  return kExitOk;
}

int cmd_dedup(const std::string& data_path, std::size_t dim,
              std::size_t threshold, const std::string& out_path) {
  const Dataset ds = load_dataset(data_path, dim);
  const Dataset deduped = deduplicate(ds, threshold);
  save_dataset(deduped, out_path);
  std::printf("kept %zu of %zu frames\n", deduped.size(), ds.size());
  return kExitOk;
}

int cmd_train(const CommonTrainFlags& flags, bool dedup, const std::string& out_dir) {
  Dataset ds = load_dataset(flags.data_path, flags.dim);
  if (dedup) ds = deduplicate(ds);
  const TrainConfig config = to_train_config(flags);
  const TrainedModel model = train(ds, config);

  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  save_checkpoint(model, config, (dir / "checkpoint.json").string());

  json log = json::array();
  for (const auto& e : model.training_log) {
    log.push_back({{"iteration", e.iteration},
                   {"total", e.total},
                   {"regression", e.regression},
                   {"center", e.center}});
  }
  json out{{"config", resolved_config_json(flags)}, {"log", log}};
  write_text((dir / "training_log.json").string(), out.dump(2) + "\n");
  if (!model.training_log.empty()) {
    const auto& last = model.training_log.back();
    std::printf("final loss %.6f (regression %.6f, center %.6f)\n", last.total,
                last.regression, last.center);
  }
  return kExitOk;
}

int cmd_eval(const CommonTrainFlags& flags, const std::string& checkpoint_path,
             const std::string& baseline, const std::string& metrics_path,
             const std::string& preds_path) {
  const Dataset ds = load_dataset(flags.data_path, flags.dim);
  if (ds.empty()) throw DataError("empty dataset");

  std::vector<double> preds;
  if (baseline == "zeros") {
    preds = all_zeros_predictor(ds.samples);
  } else {
    const TrainedModel model = load_checkpoint(checkpoint_path);
    if (model.head.input_dim != ds.feature_dim) {
      throw ShapeError("checkpoint input dim " +
                       std::to_string(model.head.input_dim) +
                       " != data dim " + std::to_string(ds.feature_dim));
    }
    preds = predict(model, ds.samples);
  }
  const auto labeled = label_predictions(ds.samples, preds);
  const MetricsReport report = compute_metrics(labeled, ds.num_classes);

  json out{{"config", resolved_config_json(flags)},
           {"baseline", baseline},
           {"metrics", json::parse(metrics_to_json(report))}};
  write_text(metrics_path, out.dump(2) + "\n");
  save_predictions_csv(labeled, preds_path);

  std::printf("MAE %.4f  MSE %.4f  PCC %s  wMAE %.4f  wMSE %.4f\n", report.mae,
              report.mse,
              report.pcc ? std::to_string(*report.pcc).c_str() : "N/A",
              report.wmae, report.wmse);
  return kExitOk;
}

void print_comparison_table(const MetricsReport& ours, const MetricsReport& zeros) {
  auto pcc_str = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("N/A");
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return std::string(buf);
  };
  std::printf("%-24s %8s %8s %8s %8s %8s\n", "Method", "MAE", "MSE", "PCC",
              "wMAE", "wMSE");
  std::printf("%-24s %8.3f %8.3f %8s %8.3f %8.3f\n", "regression head", ours.mae,
              ours.mse, pcc_str(ours.pcc).c_str(), ours.wmae, ours.wmse);
  std::printf("%-24s %8.3f %8.3f %8s %8.3f %8.3f\n", "all zeros", zeros.mae,
              zeros.mse, pcc_str(zeros.pcc).c_str(), zeros.wmae, zeros.wmse);
}

int cmd_loso(const CommonTrainFlags& flags, const LosoOptions& options,
             std::size_t repeats, const std::string& out_dir) {
  const Dataset ds = load_dataset(flags.data_path, flags.dim);
  const TrainConfig base_config = to_train_config(flags);

  for (std::size_t r = 0; r < repeats; ++r) {
    TrainConfig config = base_config;
    config.seed = repeats == 1 ? base_config.seed
                               : derive_seed(base_config.seed,
                                             "repeat" + std::to_string(r));
    const std::string dir =
        repeats == 1 ? out_dir
                     : (std::filesystem::path(out_dir) /
                        ("repeat_" + std::to_string(r)))
                           .string();
    const LosoResult result = run_loso(ds, config, options);
    write_loso_outputs(result, config, dir);

    // Embed the resolved config alongside the aggregate.
    json agg = json::parse(aggregate_to_json(result));
    agg["config"] = resolved_config_json(flags);
    agg["config"]["dedup_train"] = options.dedup_train;
    agg["config"]["workers"] = options.workers;
    write_text((std::filesystem::path(dir) / "aggregate_metrics.json").string(),
               agg.dump(2) + "\n");

    const auto zeros_labeled =
        label_predictions(ds.samples, all_zeros_predictor(ds.samples));
    const MetricsReport zeros = compute_metrics(zeros_labeled, ds.num_classes);
    if (repeats > 1) std::printf("repeat %zu\n", r);
    print_comparison_table(result.aggregate, zeros);
    if (result.failed_folds > 0) {
      std::fprintf(stderr, "%zu fold(s) diverged\n", result.failed_folds);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-intensity regression on precomputed face embeddings"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic feature CSV");
  SyntheticConfig synth_cfg;
  std::string synth_out = "synthetic.csv";
  std::string synth_profile = "balanced";
  synth->add_option("--subjects", synth_cfg.num_subjects, "Number of subjects");
  synth->add_option("--frames", synth_cfg.frames_per_subject, "Frames per subject");
  synth->add_option("--dim", synth_cfg.feature_dim, "Feature dimension");
  synth->add_option("--noise", synth_cfg.noise_sigma, "Gaussian noise sigma");
  synth->add_option("--seed", synth_cfg.seed, "RNG seed");
  synth->add_option("--profile", synth_profile, "balanced|imbalanced");
  synth->add_option("--out", synth_out, "Output CSV path");

  // dedup
  auto* dedup = app.add_subcommand("dedup", "Collapse long same-label runs");
  std::string dedup_data, dedup_out = "deduped.csv";
  std::size_t dedup_dim = 512, dedup_threshold = 5;
  dedup->add_option("--data", dedup_data, "Feature CSV path")->required();
  dedup->add_option("--dim", dedup_dim, "Feature dimension");
  dedup->add_option("--threshold", dedup_threshold, "Run-length threshold");
  dedup->add_option("--out", dedup_out, "Output CSV path");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train on the full input");
  CommonTrainFlags train_flags;
  std::string train_config_file;
  std::string train_out = "train_out";
  bool train_dedup = false;
  train_cmd->add_option("--config", train_config_file, "JSON config file");
  add_train_flags(train_cmd, train_flags);
  train_cmd->add_flag("--dedup", train_dedup, "De-duplicate before training");
  train_cmd->add_option("--out", train_out, "Output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  CommonTrainFlags eval_flags;
  std::string eval_checkpoint, eval_baseline;
  std::string eval_metrics = "metrics.json", eval_preds = "predictions.csv";
  eval_cmd->add_option("--data", eval_flags.data_path, "Feature CSV path")
      ->required();
  eval_cmd->add_option("--dim", eval_flags.dim, "Feature dimension");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint JSON path");
  eval_cmd->add_option("--baseline", eval_baseline, "zeros");
  eval_cmd->add_option("--out-metrics", eval_metrics, "Metrics JSON path");
  eval_cmd->add_option("--out-predictions", eval_preds, "Predictions CSV path");

  // loso
  auto* loso = app.add_subcommand("loso", "Leave-one-subject-out cross-validation");
  CommonTrainFlags loso_flags;
  std::string loso_config_file;
  std::string loso_out = "loso_out";
  LosoOptions loso_options;
  bool no_dedup = false;
  std::size_t repeats = 1;
  loso->add_option("--config", loso_config_file, "JSON config file");
  add_train_flags(loso, loso_flags);
  loso->add_flag("--no-dedup", no_dedup, "Keep redundant frames in training folds");
  loso->add_option("--dedup-threshold", loso_options.dedup_run_threshold,
                   "Run-length threshold");
  loso->add_option("--workers", loso_options.workers, "Parallel fold workers");
  loso->add_option("--repeats", repeats, "Independent repeats with derived seeds");
  loso->add_option("--out", loso_out, "Output directory");

  // Config files must be applied before parse so flags override them.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_config_file(argv[i + 1], train_flags);
        apply_config_file(argv[i + 1], loso_flags);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (synth_profile == "balanced") {
        synth_cfg.profile = LabelProfile::Balanced;
      } else if (synth_profile == "imbalanced") {
        synth_cfg.profile = LabelProfile::Imbalanced;
      } else {
        std::fprintf(stderr, "error: --profile must be balanced or imbalanced\n");
        return kExitUsage;
      }
      return cmd_synth(synth_cfg, synth_out);
    }
    if (dedup->parsed()) {
      return cmd_dedup(dedup_data, dedup_dim, dedup_threshold, dedup_out);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_flags, train_dedup, train_out);
    }
    if (eval_cmd->parsed()) {
      if (eval_baseline.empty() && eval_checkpoint.empty()) {
        std::fprintf(stderr, "error: need --checkpoint or --baseline\n");
        return kExitUsage;
      }
      return cmd_eval(eval_flags, eval_checkpoint, eval_baseline, eval_metrics,
                      eval_preds);
    }
    if (loso->parsed()) {
      loso_options.dedup_train = !no_dedup;
      return cmd_loso(loso_flags, loso_options, repeats, loso_out);
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
