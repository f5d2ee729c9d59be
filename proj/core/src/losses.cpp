#include "painreg/losses.hpp"

#include <cmath>
#include <string>

namespace painreg {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string("non-finite ") + name);
  }
}

const std::vector<double>& center_row(const Centers& centers, int label,
                                      std::size_t x_dim) {
  if (label < 0 || static_cast<std::size_t>(label) >= centers.rows.size()) {
    throw DomainError("label " + std::to_string(label) + " out of range for " +
                      std::to_string(centers.rows.size()) + " centers");
  }
  const auto& row = centers.rows[label];
  if (row.size() != x_dim) {
    throw ShapeError("feature dim " + std::to_string(x_dim) +
                     " != center dim " + std::to_string(row.size()));
  }
  return row;
}

}  // namespace

double mse_loss(double pred, double label) {
  require_finite(pred, "pred");
  require_finite(label, "label");
  const double e = pred - label;
  return e * e;
}

double mse_grad(double pred, double label) {
  require_finite(pred, "pred");
  require_finite(label, "label");
  return 2.0 * (pred - label);
}

double smooth_l1_loss(double pred, double label, double t) {
  require_finite(pred, "pred");
  require_finite(label, "label");
  const double e = std::abs(pred - label);
  if (e < t) return 0.5 * e * e;
  return e - t + 0.5 * t * t;
}

double smooth_l1_grad(double pred, double label, double t) {
  require_finite(pred, "pred");
  require_finite(label, "label");
  const double diff = pred - label;
  const double e = std::abs(diff);
  if (e < t) return diff;
  if (diff > 0) return 1.0;
  if (diff < 0) return -1.0;
  return 0.0;  // e == t == 0
}

double regression_loss(double pred, double label, const LossConfig& config) {
  return config.regression_kind == RegressionKind::MSE
             ? mse_loss(pred, label)
             : smooth_l1_loss(pred, label, config.turning_point);
}

double regression_grad(double pred, double label, const LossConfig& config) {
  return config.regression_kind == RegressionKind::MSE
             ? mse_grad(pred, label)
             : smooth_l1_grad(pred, label, config.turning_point);
}

double center_loss(std::span<const double> x, int label, const Centers& centers,
                   CenterNorm norm) {
  const auto& c = center_row(centers, label, x.size());
  double sum = 0.0;
  if (norm == CenterNorm::L1) {
    for (std::size_t j = 0; j < x.size(); ++j) sum += std::abs(x[j] - c[j]);
  } else {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - c[j];
      sum += d * d;
    }
  }
  return sum;
}

CenterGrads center_loss_grads(std::span<const double> x, int label,
                              const Centers& centers, CenterNorm norm) {
  const auto& c = center_row(centers, label, x.size());
  CenterGrads g;
  g.wrt_x.resize(x.size());
  g.wrt_center.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - c[j];
    double gx;
    if (norm == CenterNorm::L1) {
      gx = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);  // subgradient 0 at the kink
    } else {
      gx = 2.0 * d;
    }
    g.wrt_x[j] = gx;
    g.wrt_center[j] = -gx;
  }
  return g;
}

JointLossParts joint_loss(double pred, std::span<const double> x, int label,
                          const Centers& centers, const LossConfig& config) {
  JointLossParts parts;
  parts.regression = regression_loss(pred, static_cast<double>(label), config);
  parts.center = center_loss(x, label, centers, config.center_norm);
  parts.total = parts.regression + config.center_weight * parts.center;
  return parts;
}

}  // namespace painreg
