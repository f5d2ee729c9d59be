#pragma once

#include <optional>
#include <string>
#include <vector>

#include "painreg/data.hpp"
#include "painreg/model.hpp"

namespace painreg {

// Trivial predictor: intensity 0 everywhere.
std::vector<double> all_zeros_predictor(const std::vector<Sample>& samples);

// Ridge-regularized linear least squares on raw features, clamped to [0, 5].
// Independent of the regression head; bounds the achievable error.
std::vector<double> linear_least_squares_oracle(const Dataset& train,
                                                const Dataset& test,
                                                double ridge = 1e-8);

struct CompactnessReport {
  std::vector<std::optional<double>> per_class;  // mean distance to class mean
  double overall = 0.0;  // mean over frames of distance to their class mean
};

// Mean l2 distance of eval-mode hidden features to post-hoc class means.
CompactnessReport compactness_diagnostic(const TrainedModel& model,
                                         const Dataset& dataset);

std::string compactness_to_json(const CompactnessReport& report);

}  // namespace painreg
