#include <doctest.h>

#include <random>

#include "prognos/smoothing.hpp"

using namespace prognos;

TEST_CASE("rloess reproduces an exact quadratic") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(40, 0, 1);
  Eigen::VectorXd series = 2.0 + 3.0 * grid.array() - 1.5 * grid.array().square();
  for (double bw : {0.2, 0.5, 1.0}) {
    SmoothingConfig cfg;
    cfg.bandwidth = bw;
    Eigen::VectorXd out = smooth_rloess(series, grid, cfg);
    CHECK((out - series).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("rloess zeroes out a single spiked outlier") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(50, 0, 1);
  Eigen::VectorXd series = Eigen::VectorXd::Constant(50, 4.0);
  // tiny jitter so the median absolute residual is nonzero
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0, 1e-9);
  for (Eigen::Index i = 0; i < 50; ++i) series[i] += nd(rng);
  series[25] = 40.0;
  SmoothingConfig cfg;
  cfg.bandwidth = 0.4;
  cfg.robust_iterations = 3;
  Eigen::VectorXd out = smooth_rloess(series, grid, cfg);
  CHECK(std::abs(out[25] - 4.0) < 1e-6);
}

TEST_CASE("rloess shrinks noise below the raw level") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(80, 0.01, 0.8);
  double sigma = 0.25;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd(0, sigma);
  Eigen::VectorXd clean(80), noisy(80);
  for (Eigen::Index i = 0; i < 80; ++i) {
    clean[i] = -1.0 / std::log(grid[i]);
    noisy[i] = clean[i] + nd(rng);
  }
  SmoothingConfig cfg;
  cfg.bandwidth = 0.5;
  Eigen::VectorXd out = smooth_rloess(noisy, grid, cfg);
  double sd_before = std::sqrt((noisy - clean).squaredNorm() / 80.0);
  double sd_after = std::sqrt((out - clean).squaredNorm() / 80.0);
  CHECK(sd_after < sd_before);
  CHECK(sd_after < sigma);
}

TEST_CASE("rloess is translation equivariant") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(30, 0, 1);
  Eigen::VectorXd series(30);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0, 1);
  for (Eigen::Index i = 0; i < 30; ++i) series[i] = nd(rng);
  SmoothingConfig cfg;
  cfg.bandwidth = 0.4;
  Eigen::VectorXd a = smooth_rloess(series, grid, cfg);
  Eigen::VectorXd b = smooth_rloess(series.array() + 11.5, grid, cfg);
  CHECK((b.array() - a.array() - 11.5).abs().maxCoeff() < 1e-10);
}

TEST_CASE("rloess rejects invalid windows") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(10, 0, 1);
  Eigen::VectorXd series = grid;
  SmoothingConfig cfg;
  cfg.bandwidth = 0.0;
  CHECK_THROWS(smooth_rloess(series, grid, cfg));
  cfg.bandwidth = 2.0;
  CHECK_THROWS(smooth_rloess(series, grid, cfg));
}
