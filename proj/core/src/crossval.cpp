#include "painreg/crossval.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

#include "painreg/errors.hpp"
#include "painreg/rng.hpp"

namespace painreg {

std::vector<FoldSpec> make_loso_folds(const Dataset& dataset) {
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t pos = 0; pos < dataset.samples.size(); ++pos) {
    by_subject[dataset.samples[pos].subject_id].push_back(pos);
  }
  if (by_subject.size() < 2) {
    throw DomainError("leave-one-subject-out needs at least 2 subjects, got " +
                      std::to_string(by_subject.size()));
  }
  std::vector<FoldSpec> folds;
  folds.reserve(by_subject.size());
  for (const auto& [subject, test_positions] : by_subject) {
    FoldSpec fold;
    fold.held_out_subject = subject;
    fold.test_positions = test_positions;
    for (std::size_t pos = 0; pos < dataset.samples.size(); ++pos) {
      if (dataset.samples[pos].subject_id != subject) {
        fold.train_positions.push_back(pos);
      }
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

namespace {

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& positions) {
  Dataset out;
  out.feature_dim = dataset.feature_dim;
  out.num_classes = dataset.num_classes;
  out.samples.reserve(positions.size());
  for (std::size_t pos : positions) out.samples.push_back(dataset.samples[pos]);
  return out;
}

MetricsReport mean_of_fold_metrics(const std::vector<FoldResult>& folds,
                                   int num_classes) {
  MetricsReport mean;
  mean.per_class.count_by_class.assign(num_classes, 0);
  mean.per_class.mae_by_class.assign(num_classes, std::nullopt);
  mean.per_class.mse_by_class.assign(num_classes, std::nullopt);
  std::size_t n = 0;
  double pcc_sum = 0.0;
  std::size_t pcc_n = 0;
  for (const auto& fold : folds) {
    if (!fold.metrics.has_value()) continue;
    const auto& m = *fold.metrics;
    mean.mae += m.mae;
    mean.mse += m.mse;
    mean.pooled_mae += m.pooled_mae;
    mean.pooled_mse += m.pooled_mse;
    mean.wmae += m.wmae;
    mean.wmse += m.wmse;
    mean.num_frames += m.num_frames;
    mean.pcc_excluded_count += m.pcc_excluded_count;
    if (m.pcc.has_value()) {
      pcc_sum += *m.pcc;
      ++pcc_n;
    }
    ++n;
  }
  if (n == 0) return mean;
  const double inv = 1.0 / static_cast<double>(n);
  mean.mae *= inv;
  mean.mse *= inv;
  mean.pooled_mae *= inv;
  mean.pooled_mse *= inv;
  mean.wmae *= inv;
  mean.wmse *= inv;
  if (pcc_n > 0) mean.pcc = pcc_sum / static_cast<double>(pcc_n);
  return mean;
}

}  // namespace

LosoResult run_loso(const Dataset& dataset, const TrainConfig& config,
                    const LosoOptions& options) {
  const std::vector<FoldSpec> folds = make_loso_folds(dataset);

  LosoResult result;
  result.folds.resize(folds.size());

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(options.workers, folds.size()));

  std::atomic<std::size_t> next_fold{0};
  auto run_fold = [&](std::size_t fi) {
    const FoldSpec& fold = folds[fi];
    FoldResult& out = result.folds[fi];
    out.subject = fold.held_out_subject;

    Dataset train_split = subset(dataset, fold.train_positions);
    if (options.dedup_train) {
      train_split = deduplicate(train_split, options.dedup_run_threshold);
    }
    TrainConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, fold.held_out_subject);

    try {
      TrainedModel model = train(train_split, fold_config);
      const Dataset test_split = subset(dataset, fold.test_positions);
      const std::vector<double> preds = predict(model, test_split.samples);
      out.predictions = label_predictions(test_split.samples, preds);
      out.metrics = compute_metrics(out.predictions, dataset.num_classes);
      out.model = std::move(model);
    } catch (const DivergenceError& e) {
      out.error = "fold " + fold.held_out_subject + ": " + e.what();
    }
  };

  if (workers == 1) {
    for (std::size_t fi = 0; fi < folds.size(); ++fi) run_fold(fi);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t fi = next_fold.fetch_add(1); fi < folds.size();
             fi = next_fold.fetch_add(1)) {
          run_fold(fi);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& fold : result.folds) {
    if (!fold.error.empty()) {
      ++result.failed_folds;
      continue;
    }
    result.predictions.insert(result.predictions.end(), fold.predictions.begin(),
                              fold.predictions.end());
  }
  if (result.predictions.empty()) {
    throw DivergenceError("all folds diverged", -1);
  }
  result.aggregate = compute_metrics(result.predictions, dataset.num_classes);
  result.mean_of_folds = mean_of_fold_metrics(result.folds, dataset.num_classes);
  return result;
}

std::string aggregate_to_json(const LosoResult& result) {
  nlohmann::json j;
  j["pooled"] = nlohmann::json::parse(metrics_to_json(result.aggregate));
  j["mean_of_folds"] = nlohmann::json::parse(metrics_to_json(result.mean_of_folds));
  j["primary"] = "pooled";
  j["failed_folds"] = result.failed_folds;
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& fold : result.folds) {
    if (!fold.error.empty()) errors.push_back(fold.error);
  }
  j["fold_errors"] = errors;
  return j.dump(2);
}

void write_loso_outputs(const LosoResult& result, const TrainConfig& config,
                        const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  for (const auto& fold : result.folds) {
    const fs::path fold_dir = fs::path(output_dir) / ("fold_" + fold.subject);
    fs::create_directories(fold_dir);
    if (fold.model.has_value()) {
      save_checkpoint(*fold.model, config, (fold_dir / "checkpoint.json").string());
    }
    if (fold.metrics.has_value()) {
      std::ofstream out(fold_dir / "metrics.json", std::ios::binary);
      out << metrics_to_json(*fold.metrics) << "\n";
    }
  }
  {
    std::ofstream out(fs::path(output_dir) / "aggregate_metrics.json",
                      std::ios::binary);
    out << aggregate_to_json(result) << "\n";
  }
  save_predictions_csv(result.predictions,
                       (fs::path(output_dir) / "predictions.csv").string());
}

}  // namespace painreg
