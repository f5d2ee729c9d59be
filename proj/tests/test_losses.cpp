#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "painreg/losses.hpp"
#include "painreg/rng.hpp"
#include "test_util.hpp"

using namespace painreg;
using painreg::testutil::rel_error;

TEST_CASE("mse_loss values") {
  CHECK(mse_loss(2.5, 2.5) == 0.0);
  CHECK(mse_loss(3.0, 1.0) == 4.0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
    CHECK(mse_loss(a, b) == mse_loss(b, a));
  }
  CHECK_THROWS_AS(mse_loss(std::nan(""), 0.0), DomainError);
}

TEST_CASE("smooth_l1_loss frozen values") {
  CHECK(smooth_l1_loss(2.0, 2.0, 1.0) == 0.0);
  // Continuity point: both branches give 0.5 at e = t = 1.
  CHECK(smooth_l1_loss(3.0, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  // Linear branch: 3 - 1 + 0.5 = 2.5.
  CHECK(smooth_l1_loss(4.0, 1.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("smooth_l1_loss with t=0 equals absolute error") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform(-5, 5), l = rng.uniform(-5, 5);
    CHECK(smooth_l1_loss(p, l, 0.0) ==
          doctest::Approx(std::abs(p - l)).epsilon(1e-15));
  }
}

TEST_CASE("smooth_l1_loss with huge t equals half squared error") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform(-5, 5), l = rng.uniform(-5, 5);
    CHECK(smooth_l1_loss(p, l, 100.0) ==
          doctest::Approx(0.5 * (p - l) * (p - l)).epsilon(1e-14));
  }
}

TEST_CASE("smooth_l1_loss branch continuity at e = t") {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(0.0, 5.0);
    if (t == 0.0) continue;
    const double quad = 0.5 * t * t;
    const double lin = t - t + 0.5 * t * t;
    CHECK(std::abs(quad - lin) < 1e-12);
  }
}

TEST_CASE("smooth_l1_grad values and finite differences") {
  CHECK(smooth_l1_grad(2.0, 2.0, 1.0) == 0.0);
  CHECK(smooth_l1_grad(4.0, 1.0, 1.0) == 1.0);
  CHECK(smooth_l1_grad(-2.0, 1.0, 1.0) == -1.0);

  Rng rng(5);
  int checked = 0;
  while (checked < 100) {
    const double t = 1.0;
    const double l = rng.uniform(0, 5);
    const double p = rng.uniform(-5, 10);
    const double e = std::abs(p - l);
    if (std::abs(e - t) < 0.01 || e < 0.01) continue;  // stay off the kinks
    const double numeric = painreg::testutil::central_diff(
        [&](double x) { return smooth_l1_loss(x, l, t); }, p);
    CHECK(rel_error(smooth_l1_grad(p, l, t), numeric) < 1e-6);
    ++checked;
  }
}

TEST_CASE("mse_grad matches finite differences") {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const double p = rng.uniform(-5, 5), l = rng.uniform(-5, 5);
    const double numeric = painreg::testutil::central_diff(
        [&](double x) { return mse_loss(x, l); }, p);
    CHECK(rel_error(mse_grad(p, l), numeric) < 1e-6);
  }
}

TEST_CASE("center_loss frozen values") {
  Centers centers = Centers::zeros(6, 2);
  centers.rows[1] = {1.0, 1.0};
  const std::vector<double> x1 = {1.0, 1.0};
  CHECK(center_loss(x1, 1, centers, CenterNorm::L1) == 0.0);
  CHECK(center_loss(x1, 1, centers, CenterNorm::L2) == 0.0);

  // x - c = (3, 4): squared l2 = 25.
  const std::vector<double> x2 = {4.0, 5.0};
  CHECK(center_loss(x2, 1, centers, CenterNorm::L2) == 25.0);

  Centers c3 = Centers::zeros(6, 3);
  const std::vector<double> x3 = {1.0, -2.0, 0.0};
  CHECK(center_loss(x3, 0, c3, CenterNorm::L1) == 3.0);
}

TEST_CASE("center_loss error paths") {
  const Centers centers = Centers::zeros(6, 2);
  const std::vector<double> wrong_dim = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(center_loss(wrong_dim, 0, centers, CenterNorm::L2), ShapeError);
  const std::vector<double> x = {1.0, 2.0};
  CHECK_THROWS_AS(center_loss(x, 6, centers, CenterNorm::L2), DomainError);
  CHECK_THROWS_AS(center_loss(x, -1, centers, CenterNorm::L2), DomainError);
}

TEST_CASE("center_loss nonnegativity, zero iff at the center") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Centers centers = Centers::zeros(6, 4);
    for (auto& row : centers.rows) {
      for (auto& v : row) v = rng.normal();
    }
    std::vector<double> x(4);
    for (auto& v : x) v = rng.normal();
    const int k = static_cast<int>(rng.index(6));
    CHECK(center_loss(x, k, centers, CenterNorm::L1) >= 0.0);
    CHECK(center_loss(x, k, centers, CenterNorm::L2) >= 0.0);
    CHECK(center_loss(centers.rows[k], k, centers, CenterNorm::L1) == 0.0);
    CHECK(center_loss(centers.rows[k], k, centers, CenterNorm::L2) <= 1e-12);
  }
}

TEST_CASE("center_loss_grads frozen values") {
  Centers centers = Centers::zeros(6, 2);
  centers.rows[2] = {1.0, 1.0};
  const std::vector<double> x = {4.0, 5.0};  // x - c = (3, 4)
  const auto g = center_loss_grads(x, 2, centers, CenterNorm::L2);
  CHECK(g.wrt_x == std::vector<double>{6.0, 8.0});
  CHECK(g.wrt_center == std::vector<double>{-6.0, -8.0});

  const auto gz = center_loss_grads(centers.rows[2], 2, centers, CenterNorm::L1);
  CHECK(gz.wrt_x == std::vector<double>{0.0, 0.0});
  CHECK(gz.wrt_center == std::vector<double>{0.0, 0.0});
}

TEST_CASE("center_loss_grads match finite differences for both norms") {
  Rng rng(8);
  for (CenterNorm norm : {CenterNorm::L1, CenterNorm::L2}) {
    int checked = 0;
    while (checked < 50) {
      Centers centers = Centers::zeros(3, 4);
      for (auto& row : centers.rows) {
        for (auto& v : row) v = rng.normal();
      }
      std::vector<double> x(4);
      for (auto& v : x) v = rng.normal();
      const int k = static_cast<int>(rng.index(3));
      bool near_kink = false;
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (std::abs(x[j] - centers.rows[k][j]) < 0.01) near_kink = true;
      }
      if (norm == CenterNorm::L1 && near_kink) continue;

      const auto g = center_loss_grads(x, k, centers, norm);
      for (std::size_t j = 0; j < x.size(); ++j) {
        double numeric = painreg::testutil::central_diff(
            [&](double v) {
              auto xx = x;
              xx[j] = v;
              return center_loss(xx, k, centers, norm);
            },
            x[j]);
        CHECK(rel_error(g.wrt_x[j], numeric) < 1e-6);
        numeric = painreg::testutil::central_diff(
            [&](double v) {
              auto cc = centers;
              cc.rows[k][j] = v;
              return center_loss(x, k, cc, norm);
            },
            centers.rows[k][j]);
        CHECK(rel_error(g.wrt_center[j], numeric) < 1e-6);
      }
      ++checked;
    }
  }
}

TEST_CASE("joint_loss composition") {
  Centers centers = Centers::zeros(6, 2);
  centers.rows[3] = {1.0, 1.0};
  LossConfig config;

  SUBCASE("lambda = 0 leaves only the regression term") {
    config.center_weight = 0.0;
    const std::vector<double> x = {9.0, 9.0};
    const auto parts = joint_loss(2.0, x, 3, centers, config);
    CHECK(parts.total == parts.regression);
  }

  SUBCASE("x at the center leaves only the regression term") {
    const auto parts = joint_loss(2.0, centers.rows[3], 3, centers, config);
    CHECK(parts.center == 0.0);
    CHECK(parts.total == parts.regression);
  }

  SUBCASE("linear combination: 0.5 + 0.01 * 25 = 0.75") {
    // pred 2, label 3 -> e = 1 = t, linear branch value 0.5.
    // x - c = (3, 4) squared l2 = 25.
    const std::vector<double> x = {4.0, 5.0};
    const auto parts = joint_loss(2.0, x, 3, centers, config);
    CHECK(parts.regression == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(parts.center == 25.0);
    CHECK(parts.total == doctest::Approx(0.75).epsilon(1e-15));
  }

  SUBCASE("additivity holds on random inputs") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x = {rng.normal(), rng.normal()};
      const int k = static_cast<int>(rng.index(6));
      const double pred = rng.uniform(0, 5);
      const auto parts = joint_loss(pred, x, k, centers, config);
      CHECK(std::abs(parts.total -
                     (parts.regression + config.center_weight * parts.center)) <
            1e-12);
    }
  }
}
