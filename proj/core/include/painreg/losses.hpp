#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "painreg/errors.hpp"

namespace painreg {

enum class CenterNorm { L1, L2 };
enum class RegressionKind { MSE, SmoothL1 };

struct LossConfig {
  double turning_point = 1.0;   // t of the smooth-l1 branch switch
  double center_weight = 0.01;  // lambda
  CenterNorm center_norm = CenterNorm::L2;
  RegressionKind regression_kind = RegressionKind::SmoothL1;
};

// Learned per-class centers in hidden-feature space: K rows of dimension H.
struct Centers {
  std::size_t dim = 0;
  std::vector<std::vector<double>> rows;

  static Centers zeros(std::size_t num_classes, std::size_t dim) {
    Centers c;
    c.dim = dim;
    c.rows.assign(num_classes, std::vector<double>(dim, 0.0));
    return c;
  }
};

double mse_loss(double pred, double label);
double mse_grad(double pred, double label);

// 0.5*e^2 below the turning point, e - t + 0.5*t^2 at or above it.
double smooth_l1_loss(double pred, double label, double t);
double smooth_l1_grad(double pred, double label, double t);

double regression_loss(double pred, double label, const LossConfig& config);
double regression_grad(double pred, double label, const LossConfig& config);

// ||x - c_k||_1 for L1; sum of squared components for L2 (the p-th power of
// the p-norm in both cases).
double center_loss(std::span<const double> x, int label, const Centers& centers,
                   CenterNorm norm);

struct CenterGrads {
  std::vector<double> wrt_x;
  std::vector<double> wrt_center;  // row `label` only; all other rows are zero
};

CenterGrads center_loss_grads(std::span<const double> x, int label,
                              const Centers& centers, CenterNorm norm);

struct JointLossParts {
  double total = 0.0;
  double regression = 0.0;
  double center = 0.0;  // unweighted center term; total = regression + lambda*center
};

JointLossParts joint_loss(double pred, std::span<const double> x, int label,
                          const Centers& centers, const LossConfig& config);

}  // namespace painreg
