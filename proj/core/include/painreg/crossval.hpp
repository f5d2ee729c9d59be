#pragma once

#include <optional>
#include <string>
#include <vector>

#include "painreg/data.hpp"
#include "painreg/metrics.hpp"
#include "painreg/model.hpp"

namespace painreg {

// One leave-one-subject-out fold: positions of the held-out subject go to
// test, everything else to train.
struct FoldSpec {
  std::string held_out_subject;
  std::vector<std::size_t> train_positions;
  std::vector<std::size_t> test_positions;
};

std::vector<FoldSpec> make_loso_folds(const Dataset& dataset);

struct FoldResult {
  std::string subject;
  std::optional<TrainedModel> model;  // empty if the fold diverged
  std::optional<MetricsReport> metrics;
  std::vector<LabeledPrediction> predictions;
  std::string error;  // non-empty on divergence
};

struct LosoOptions {
  bool dedup_train = true;
  std::size_t dedup_run_threshold = 5;
  std::size_t workers = 1;
};

struct LosoResult {
  std::vector<FoldResult> folds;
  // Metrics over all folds' pooled test predictions (primary aggregate).
  MetricsReport aggregate;
  // Unweighted mean of per-fold metric values (the alternative reading).
  MetricsReport mean_of_folds;
  std::vector<LabeledPrediction> predictions;
  std::size_t failed_folds = 0;
};

// Trains one model per fold (seed derived from config.seed and the held-out
// subject id), evaluates on the untouched test split, aggregates. A fold that
// diverges is recorded; the remaining folds still run.
LosoResult run_loso(const Dataset& dataset, const TrainConfig& config,
                    const LosoOptions& options = {});

// Writes fold_<subject>/{checkpoint.json,metrics.json}, aggregate_metrics.json
// and predictions.csv under output_dir.
void write_loso_outputs(const LosoResult& result, const TrainConfig& config,
                        const std::string& output_dir);

std::string aggregate_to_json(const LosoResult& result);

}  // namespace painreg
