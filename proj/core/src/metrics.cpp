#include "painreg/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "painreg/errors.hpp"

namespace painreg {

namespace {

using SeqKey = std::pair<std::string, std::string>;

std::map<SeqKey, std::vector<const LabeledPrediction*>> group_by_sequence(
    const std::vector<LabeledPrediction>& preds) {
  std::map<SeqKey, std::vector<const LabeledPrediction*>> groups;
  for (const auto& p : preds) {
    groups[{p.subject_id, p.sequence_id}].push_back(&p);
  }
  return groups;
}

double pooled_error(const std::vector<LabeledPrediction>& preds, bool squared) {
  double sum = 0.0;
  for (const auto& p : preds) {
    const double e = std::abs(p.prediction - static_cast<double>(p.label));
    sum += squared ? e * e : e;
  }
  return sum / static_cast<double>(preds.size());
}

double per_sequence_error(const std::vector<LabeledPrediction>& preds, bool squared) {
  const auto groups = group_by_sequence(preds);
  double sum = 0.0;
  for (const auto& [key, frames] : groups) {
    double seq_sum = 0.0;
    for (const auto* p : frames) {
      const double e = std::abs(p->prediction - static_cast<double>(p->label));
      seq_sum += squared ? e * e : e;
    }
    sum += seq_sum / static_cast<double>(frames.size());
  }
  return sum / static_cast<double>(groups.size());
}

void require_nonempty(const std::vector<LabeledPrediction>& preds) {
  if (preds.empty()) throw DomainError("empty prediction list");
}

std::optional<double> sequence_pearson(
    const std::vector<const LabeledPrediction*>& frames) {
  const double n = static_cast<double>(frames.size());
  double mean_p = 0.0, mean_l = 0.0;
  for (const auto* f : frames) {
    mean_p += f->prediction;
    mean_l += f->label;
  }
  mean_p /= n;
  mean_l /= n;
  double cov = 0.0, var_p = 0.0, var_l = 0.0;
  for (const auto* f : frames) {
    const double dp = f->prediction - mean_p;
    const double dl = f->label - mean_l;
    cov += dp * dl;
    var_p += dp * dp;
    var_l += dl * dl;
  }
  if (var_p <= 0.0 || var_l <= 0.0) return std::nullopt;
  return cov / std::sqrt(var_p * var_l);
}

}  // namespace

double mae(const std::vector<LabeledPrediction>& preds, Aggregation aggregation) {
  require_nonempty(preds);
  return aggregation == Aggregation::Pooled ? pooled_error(preds, false)
                                            : per_sequence_error(preds, false);
}

double mse(const std::vector<LabeledPrediction>& preds, Aggregation aggregation) {
  require_nonempty(preds);
  return aggregation == Aggregation::Pooled ? pooled_error(preds, true)
                                            : per_sequence_error(preds, true);
}

PccResult pcc(const std::vector<LabeledPrediction>& preds) {
  require_nonempty(preds);
  PccResult result;
  double sum = 0.0;
  for (const auto& [key, frames] : group_by_sequence(preds)) {
    const auto r = sequence_pearson(frames);
    if (r.has_value()) {
      sum += *r;
      ++result.included_sequences;
    } else {
      ++result.excluded_sequences;
    }
  }
  if (result.included_sequences > 0) {
    result.value = sum / static_cast<double>(result.included_sequences);
  }
  return result;
}

WeightedMetrics weighted_metrics(const std::vector<LabeledPrediction>& preds,
                                 int num_classes) {
  require_nonempty(preds);
  WeightedMetrics wm;
  wm.per_class.count_by_class.assign(num_classes, 0);
  std::vector<double> abs_sum(num_classes, 0.0), sq_sum(num_classes, 0.0);
  for (const auto& p : preds) {
    if (p.label < 0 || p.label >= num_classes) {
      throw DomainError("label " + std::to_string(p.label) + " out of range");
    }
    const double e = std::abs(p.prediction - static_cast<double>(p.label));
    ++wm.per_class.count_by_class[p.label];
    abs_sum[p.label] += e;
    sq_sum[p.label] += e * e;
  }
  wm.per_class.mae_by_class.assign(num_classes, std::nullopt);
  wm.per_class.mse_by_class.assign(num_classes, std::nullopt);
  double mae_total = 0.0, mse_total = 0.0;
  std::size_t present = 0;
  for (int k = 0; k < num_classes; ++k) {
    const std::size_t n = wm.per_class.count_by_class[k];
    if (n == 0) continue;
    wm.per_class.mae_by_class[k] = abs_sum[k] / static_cast<double>(n);
    wm.per_class.mse_by_class[k] = sq_sum[k] / static_cast<double>(n);
    mae_total += *wm.per_class.mae_by_class[k];
    mse_total += *wm.per_class.mse_by_class[k];
    ++present;
  }
  wm.wmae = mae_total / static_cast<double>(present);
  wm.wmse = mse_total / static_cast<double>(present);
  return wm;
}

MetricsReport compute_metrics(const std::vector<LabeledPrediction>& preds,
                              int num_classes) {
  require_nonempty(preds);
  MetricsReport report;
  report.num_frames = preds.size();
  report.mae = mae(preds, Aggregation::PerSequenceMean);
  report.mse = mse(preds, Aggregation::PerSequenceMean);
  report.pooled_mae = mae(preds, Aggregation::Pooled);
  report.pooled_mse = mse(preds, Aggregation::Pooled);
  const PccResult p = pcc(preds);
  report.pcc = p.value;
  report.pcc_excluded_count = p.excluded_sequences;
  const WeightedMetrics wm = weighted_metrics(preds, num_classes);
  report.wmae = wm.wmae;
  report.wmse = wm.wmse;
  report.per_class = wm.per_class;

  for (const auto& [key, frames] : group_by_sequence(preds)) {
    SequenceStats stats;
    stats.subject_id = key.first;
    stats.sequence_id = key.second;
    stats.frames = frames.size();
    double abs_sum = 0.0, sq_sum = 0.0;
    for (const auto* f : frames) {
      const double e = std::abs(f->prediction - static_cast<double>(f->label));
      abs_sum += e;
      sq_sum += e * e;
    }
    stats.mae = abs_sum / static_cast<double>(frames.size());
    stats.mse = sq_sum / static_cast<double>(frames.size());
    stats.pcc = sequence_pearson(frames);
    report.per_sequence.push_back(std::move(stats));
  }
  return report;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["num_frames"] = report.num_frames;
  j["mae"] = report.mae;
  j["mse"] = report.mse;
  j["pooled_mae"] = report.pooled_mae;
  j["pooled_mse"] = report.pooled_mse;
  if (report.pcc.has_value()) {
    j["pcc"] = *report.pcc;
  } else {
    j["pcc"] = nullptr;
  }
  j["pcc_excluded_count"] = report.pcc_excluded_count;
  j["wmae"] = report.wmae;
  j["wmse"] = report.wmse;

  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t k = 0; k < report.per_class.count_by_class.size(); ++k) {
    nlohmann::json entry;
    entry["class"] = k;
    entry["count"] = report.per_class.count_by_class[k];
    if (report.per_class.mae_by_class[k].has_value()) {
      entry["mae"] = *report.per_class.mae_by_class[k];
      entry["mse"] = *report.per_class.mse_by_class[k];
    } else {
      entry["mae"] = nullptr;
      entry["mse"] = nullptr;
    }
    per_class.push_back(entry);
  }
  j["per_class"] = per_class;

  nlohmann::json per_sequence = nlohmann::json::array();
  for (const auto& s : report.per_sequence) {
    nlohmann::json entry;
    entry["subject_id"] = s.subject_id;
    entry["sequence_id"] = s.sequence_id;
    entry["frames"] = s.frames;
    entry["mae"] = s.mae;
    entry["mse"] = s.mse;
    if (s.pcc.has_value()) {
      entry["pcc"] = *s.pcc;
    } else {
      entry["pcc"] = nullptr;
    }
    per_sequence.push_back(entry);
  }
  j["per_sequence"] = per_sequence;
  return j.dump(2);
}

void save_predictions_csv(const std::vector<LabeledPrediction>& preds,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "subject_id,sequence_id,frame_index,label,prediction\n";
  char buf[32];
  for (const auto& p : preds) {
    std::snprintf(buf, sizeof(buf), "%.17g", p.prediction);
    out << p.subject_id << ',' << p.sequence_id << ',' << p.frame_index << ','
        << p.label << ',' << buf << "\n";
  }
}

std::vector<LabeledPrediction> label_predictions(
    const std::vector<Sample>& samples, const std::vector<double>& predictions) {
  if (samples.size() != predictions.size()) {
    throw ShapeError("sample/prediction count mismatch");
  }
  std::vector<LabeledPrediction> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.push_back({samples[i].subject_id, samples[i].sequence_id,
                   samples[i].frame_index, predictions[i], samples[i].label});
  }
  return out;
}

}  // namespace painreg
