#pragma once

#include <optional>
#include <string>
#include <vector>

#include "painreg/data.hpp"

namespace painreg {

struct LabeledPrediction {
  std::string subject_id;
  std::string sequence_id;
  long frame_index = 0;
  double prediction = 0.0;
  int label = 0;
};

enum class Aggregation { PerSequenceMean, Pooled };

double mae(const std::vector<LabeledPrediction>& preds,
           Aggregation aggregation = Aggregation::PerSequenceMean);
double mse(const std::vector<LabeledPrediction>& preds,
           Aggregation aggregation = Aggregation::PerSequenceMean);

struct PccResult {
  std::optional<double> value;  // empty when every sequence was excluded
  std::size_t excluded_sequences = 0;
  std::size_t included_sequences = 0;
};

// Per-sequence Pearson correlation averaged over sequences; zero-variance
// sequences are excluded and counted.
PccResult pcc(const std::vector<LabeledPrediction>& preds);

struct PerClassStats {
  std::vector<std::optional<double>> mae_by_class;  // empty slot = absent class
  std::vector<std::optional<double>> mse_by_class;
  std::vector<std::size_t> count_by_class;
};

struct WeightedMetrics {
  double wmae = 0.0;
  double wmse = 0.0;
  PerClassStats per_class;
};

// Frames pooled across sequences, grouped by ground-truth label; the result is
// the unweighted mean of per-class errors over the classes present.
WeightedMetrics weighted_metrics(const std::vector<LabeledPrediction>& preds,
                                 int num_classes = kDefaultNumClasses);

struct SequenceStats {
  std::string subject_id;
  std::string sequence_id;
  std::size_t frames = 0;
  double mae = 0.0;
  double mse = 0.0;
  std::optional<double> pcc;
};

struct MetricsReport {
  double mae = 0.0;   // per-sequence mean
  double mse = 0.0;
  double pooled_mae = 0.0;
  double pooled_mse = 0.0;
  std::optional<double> pcc;
  std::size_t pcc_excluded_count = 0;
  double wmae = 0.0;
  double wmse = 0.0;
  PerClassStats per_class;
  std::vector<SequenceStats> per_sequence;
  std::size_t num_frames = 0;
};

MetricsReport compute_metrics(const std::vector<LabeledPrediction>& preds,
                              int num_classes = kDefaultNumClasses);

std::string metrics_to_json(const MetricsReport& report);

// Per-frame prediction CSV: subject_id,sequence_id,frame_index,label,prediction
void save_predictions_csv(const std::vector<LabeledPrediction>& preds,
                          const std::string& path);

std::vector<LabeledPrediction> label_predictions(
    const std::vector<Sample>& samples, const std::vector<double>& predictions);

}  // namespace painreg
