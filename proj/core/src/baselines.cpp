#include "painreg/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "painreg/errors.hpp"

namespace painreg {

std::vector<double> all_zeros_predictor(const std::vector<Sample>& samples) {
  return std::vector<double>(samples.size(), 0.0);
}

namespace {

// Gaussian elimination with partial pivoting; A is n x n row-major, solved
// in place.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b,
                                 std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-300) throw DomainError("degenerate normal equations");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
      std::swap(b[col], b[pivot]);
    }
    const double diag = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / diag;
      if (factor == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= factor * a[col * n + j];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double sum = b[ri];
    for (std::size_t j = ri + 1; j < n; ++j) sum -= a[ri * n + j] * x[j];
    x[ri] = sum / a[ri * n + ri];
  }
  return x;
}

}  // namespace

std::vector<double> linear_least_squares_oracle(const Dataset& train,
                                                const Dataset& test, double ridge) {
  if (train.empty()) throw DomainError("oracle needs a non-empty training set");
  if (test.feature_dim != train.feature_dim) {
    throw ShapeError("train/test feature dims differ");
  }
  const std::size_t d = train.feature_dim;
  const std::size_t n = d + 1;  // trailing intercept column

  // Normal equations with a ridge term on the weights (not the intercept).
  std::vector<double> ata(n * n, 0.0);
  std::vector<double> aty(n, 0.0);
  std::vector<double> row(n, 1.0);
  for (const auto& s : train.samples) {
    for (std::size_t j = 0; j < d; ++j) row[j] = s.features[j];
    row[d] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) ata[i * n + j] += row[i] * row[j];
      aty[i] += row[i] * static_cast<double>(s.label);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) ata[i * n + j] = ata[j * n + i];
  }
  for (std::size_t j = 0; j < d; ++j) ata[j * n + j] += ridge;

  const std::vector<double> coef = solve_linear(std::move(ata), std::move(aty), n);

  std::vector<double> preds;
  preds.reserve(test.size());
  for (const auto& s : test.samples) {
    double v = coef[d];
    for (std::size_t j = 0; j < d; ++j) v += coef[j] * s.features[j];
    preds.push_back(std::clamp(v, 0.0, 5.0));
  }
  return preds;
}

CompactnessReport compactness_diagnostic(const TrainedModel& model,
                                         const Dataset& dataset) {
  if (dataset.empty()) throw DomainError("empty dataset");
  const std::size_t h = model.head.hidden_dim;
  const int k_classes = dataset.num_classes;

  std::vector<std::vector<double>> hidden;
  hidden.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    hidden.push_back(forward_eval(model.head, s.features).hidden);
  }

  std::vector<std::vector<double>> means(k_classes, std::vector<double>(h, 0.0));
  std::vector<std::size_t> counts(k_classes, 0);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const int k = dataset.samples[i].label;
    ++counts[k];
    for (std::size_t j = 0; j < h; ++j) means[k][j] += hidden[i][j];
  }
  for (int k = 0; k < k_classes; ++k) {
    if (counts[k] == 0) continue;
    for (auto& v : means[k]) v /= static_cast<double>(counts[k]);
  }

  CompactnessReport report;
  report.per_class.assign(k_classes, std::nullopt);
  std::vector<double> dist_sum(k_classes, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const int k = dataset.samples[i].label;
    double sq = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      const double dlt = hidden[i][j] - means[k][j];
      sq += dlt * dlt;
    }
    const double dist = std::sqrt(sq);
    dist_sum[k] += dist;
    total += dist;
  }
  for (int k = 0; k < k_classes; ++k) {
    if (counts[k] == 0) continue;
    report.per_class[k] = dist_sum[k] / static_cast<double>(counts[k]);
  }
  report.overall = total / static_cast<double>(hidden.size());
  return report;
}

std::string compactness_to_json(const CompactnessReport& report) {
  nlohmann::json j;
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    if (report.per_class[k].has_value()) {
      per_class[std::to_string(k)] = *report.per_class[k];
    } else {
      per_class[std::to_string(k)] = nullptr;
    }
  }
  j["per_class"] = per_class;
  j["overall"] = report.overall;
  return j.dump(2);
}

}  // namespace painreg
