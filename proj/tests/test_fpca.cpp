#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "prognos/fpca.hpp"

using namespace prognos;

namespace {

// Independent trapezoid-rule projection oracle for scores.
Eigen::VectorXd trapezoid_projection(const Eigen::VectorXd& curve, const EigenBasis& b) {
  Eigen::VectorXd centered = curve - b.mean;
  Eigen::VectorXd out(b.n_components());
  for (Eigen::Index m = 0; m < b.n_components(); ++m) {
    double acc = 0;
    for (Eigen::Index g = 0; g + 1 < b.grid.size(); ++g) {
      double fa = centered[g] * b.eigenfunctions(m, g);
      double fb = centered[g + 1] * b.eigenfunctions(m, g + 1);
      acc += 0.5 * (fa + fb) * (b.grid[g + 1] - b.grid[g]);
    }
    out[m] = acc;
  }
  return out;
}

double orthonormality_defect(const EigenBasis& b) {
  double worst = 0;
  for (Eigen::Index a = 0; a < b.n_components(); ++a)
    for (Eigen::Index c = 0; c < b.n_components(); ++c) {
      if (b.eigenvalues[a] <= 1e-12 || b.eigenvalues[c] <= 1e-12) continue;
      double ip = (b.eigenfunctions.row(a).array() * b.eigenfunctions.row(c).array() *
                   b.quadrature_weights.transpose().array())
                      .sum();
      worst = std::max(worst, std::abs(ip - (a == c ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace

TEST_CASE("identical curves give zero eigenvalues and the common mean") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(30, 0, 1);
  Eigen::VectorXd curve = grid.array().sin();
  Eigen::MatrixXd curves(4, 30);
  for (int i = 0; i < 4; ++i) curves.row(i) = curve.transpose();
  auto b = fit_fpca(curves, grid);
  CHECK(b.eigenvalues.maxCoeff() <= 1e-10);
  CHECK((b.mean - curve).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rank-1 ensemble recovers sin up to normalization") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(60, 0, 3.14159);
  Eigen::VectorXd s = grid.array().sin();
  Eigen::MatrixXd curves(3, 60);
  double cs[3] = {-1, 1, 2};
  for (int i = 0; i < 3; ++i) curves.row(i) = cs[i] * s.transpose();
  auto b = fit_fpca(curves, grid);
  CHECK(b.eigenvalues[0] > 1e-3);
  CHECK(b.eigenvalues.tail(b.n_components() - 1).maxCoeff() < 1e-10);
  Eigen::VectorXd w = trapezoid_weights(grid);
  double norm = std::sqrt((s.array().square() * w.array()).sum());
  Eigen::VectorXd expect = s / norm;
  double diff = std::min((b.eigenfunctions.row(0).transpose() - expect).cwiseAbs().maxCoeff(),
                         (b.eigenfunctions.row(0).transpose() + expect).cwiseAbs().maxCoeff());
  CHECK(diff < 1e-6);
}

TEST_CASE("select_fve") {
  Eigen::VectorXd a(3);
  a << 1, 0, 0;
  CHECK(select_fve(a, 0.95) == 1);
  Eigen::VectorXd b(4);
  b << 0.5, 0.3, 0.15, 0.05;
  CHECK(select_fve(b, 0.95) == 3);
  Eigen::VectorXd c(3);
  c << 0.90, 0.06, 0.04;
  CHECK(select_fve(c, 0.95) == 2);
  CHECK_THROWS(select_fve(Eigen::VectorXd::Zero(3), 0.95));
  // monotone in the threshold
  CHECK(select_fve(b, 0.5) <= select_fve(b, 0.8));
  CHECK(select_fve(b, 0.8) <= select_fve(b, 0.99));
}

TEST_CASE("noise-free score of mu + 2*phi1 is (2, 0, ...)") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(50, 0, 1);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0, 1);
  Eigen::MatrixXd curves(20, 50);
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index g = 0; g < 50; ++g)
      curves(i, g) = std::sin(grid[g] * 6) * nd(rng) + grid[g];
  auto b = fit_fpca(curves, grid);
  b.noise_var = 0;
  Eigen::VectorXd curve = b.mean + 2.0 * b.eigenfunctions.row(0).transpose();
  Eigen::VectorXd sc = pace_scores(b, curve.transpose()).row(0);
  CHECK(std::abs(sc[0] - 2.0) < 1e-6);
  for (Eigen::Index m = 1; m < sc.size(); ++m) CHECK(std::abs(sc[m]) < 1e-6);
}

TEST_CASE("PACE with zero noise equals the trapezoid projection oracle") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(40, 0.1, 0.9);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0, 1);
  Eigen::MatrixXd curves(15, 40);
  for (Eigen::Index i = 0; i < 15; ++i)
    for (Eigen::Index g = 0; g < 40; ++g)
      curves(i, g) = nd(rng) * grid[g] + nd(rng) * std::cos(3 * grid[g]);
  auto b = fit_fpca(curves, grid);
  b.noise_var = 0;
  Eigen::MatrixXd scores = pace_scores(b, curves);
  for (Eigen::Index i = 0; i < curves.rows(); ++i) {
    Eigen::VectorXd oracle = trapezoid_projection(curves.row(i).transpose(), b);
    CHECK((scores.row(i).transpose() - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("scores shrink monotonically as noise variance grows") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(30, 0, 1);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd(0, 1);
  Eigen::MatrixXd curves(10, 30);
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index g = 0; g < 30; ++g) curves(i, g) = nd(rng);
  auto b = fit_fpca(curves, grid);
  double prev = std::numeric_limits<double>::infinity();
  for (double nv : {0.0, 1.0, 10.0, 100.0}) {
    b.noise_var = nv;
    double nrm = pace_scores(b, curves.row(0)).row(0).norm();
    CHECK(nrm <= prev + 1e-12);
    prev = nrm;
  }
}

TEST_CASE("orthonormality and eigenvalue ordering on random ensembles") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0, 1);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(35, 0.05, 0.95);
    Eigen::MatrixXd curves(12, 35);
    for (Eigen::Index i = 0; i < 12; ++i)
      for (Eigen::Index g = 0; g < 35; ++g) curves(i, g) = nd(rng);
    auto b = fit_fpca(curves, grid);
    CHECK(orthonormality_defect(b) < 1e-8);
    for (Eigen::Index m = 1; m < b.n_components(); ++m)
      CHECK(b.eigenvalues[m] <= b.eigenvalues[m - 1] + 1e-14);
    CHECK(b.eigenvalues.minCoeff() >= 0);
  }
}

TEST_CASE("noise-free rank-r reconstruction is exact at q = r") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(45, 0, 1);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd(0, 1);
  Eigen::MatrixXd curves(25, 45);
  for (Eigen::Index i = 0; i < 25; ++i) {
    double a = nd(rng), b2 = nd(rng), c = nd(rng);
    for (Eigen::Index g = 0; g < 45; ++g)
      curves(i, g) = a * grid[g] + b2 * grid[g] * grid[g] + c;
  }
  // rank 3 ensemble
  auto b = fit_fpca(curves, grid);
  b.noise_var = 0;
  Eigen::MatrixXd rec = reconstruct(b, pace_scores(b, curves), 3);
  CHECK((rec - curves).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("basis serialization round-trips exactly") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(20, 0, 1);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd(0, 1);
  Eigen::MatrixXd curves(8, 20);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index g = 0; g < 20; ++g) curves(i, g) = nd(rng);
  auto b = fit_fpca(curves, grid);
  Eigen::VectorXd sm = Eigen::VectorXd::Random(3), ss = Eigen::VectorXd::Random(3);
  std::stringstream buf;
  save_basis(buf, b, sm, ss);
  auto lb = load_basis(buf);
  CHECK(lb.basis.grid == b.grid);
  CHECK(lb.basis.mean == b.mean);
  CHECK(lb.basis.eigenvalues == b.eigenvalues);
  CHECK(lb.basis.eigenfunctions == b.eigenfunctions);
  CHECK(lb.basis.noise_var == b.noise_var);
  CHECK(lb.score_means == sm);
  CHECK(lb.score_sds == ss);
}
