#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "prognos/csv.hpp"

namespace prognos {

// Eigen-decomposition of a curve ensemble's covariance under a quadrature
// inner product. For multivariate (sensor-concatenated) decompositions the
// mean/eigenfunction length is a multiple of grid.size().
struct EigenBasis {
  Eigen::VectorXd grid;
  Eigen::VectorXd mean;                // D
  Eigen::MatrixXd eigenfunctions;      // M x D, rows orthonormal under W
  Eigen::VectorXd eigenvalues;         // M, descending, >= 0
  double noise_var = 0;
  Eigen::VectorXd quadrature_weights;  // D

  Eigen::Index dim() const { return mean.size(); }
  Eigen::Index n_components() const { return eigenvalues.size(); }
};

inline Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
  const Eigen::Index g = grid.size();
  if (g < 2) throw std::invalid_argument("trapezoid_weights: need >= 2 points");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(g);
  for (Eigen::Index j = 0; j + 1 < g; ++j) {
    double h = 0.5 * (grid[j + 1] - grid[j]);
    w[j] += h;
    w[j + 1] += h;
  }
  return w;
}

namespace detail {

// Measurement-error variance from the gap between the raw covariance diagonal
// and a local plane fit through nearby off-diagonal entries.
inline double estimate_noise_var(const Eigen::MatrixXd& cov, const Eigen::VectorXd& grid) {
  const Eigen::Index g = cov.rows();
  const Eigen::Index band = 3;
  double gap_sum = 0;
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < g; ++j) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    Eigen::Index npts = 0;
    for (Eigen::Index a = std::max<Eigen::Index>(0, j - band); a < std::min(g, j + band + 1); ++a)
      for (Eigen::Index b = std::max<Eigen::Index>(0, j - band); b < std::min(g, j + band + 1); ++b) {
        if (a == b) continue;  // diagonal carries the noise bump
        Eigen::Vector3d row(1.0, grid[a] - grid[j], grid[b] - grid[j]);
        ata.noalias() += row * row.transpose();
        atb.noalias() += cov(a, b) * row;
        ++npts;
      }
    if (npts < 4) continue;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
    if (!lu.isInvertible()) continue;
    gap_sum += cov(j, j) - lu.solve(atb)[0];
    ++count;
  }
  if (count == 0) return 0;
  return std::max(0.0, gap_sum / (double)count);
}

}  // namespace detail

// PCA of curves under arbitrary quadrature weights. The eigenproblem is
// solved on W^{1/2} C W^{1/2}; eigenvectors are rescaled by W^{-1/2} so the
// resulting eigenfunctions are orthonormal in the quadrature inner product.
inline EigenBasis fit_pca_weighted(const Eigen::MatrixXd& curves,
                                   const Eigen::VectorXd& grid,
                                   const Eigen::VectorXd& weights,
                                   bool estimate_noise = false) {
  const Eigen::Index n = curves.rows(), d = curves.cols();
  if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 curves");
  if (weights.size() != d) throw std::invalid_argument("fit_pca: weight length mismatch");
  if (!curves.allFinite()) throw std::invalid_argument("fit_pca: non-finite values");

  EigenBasis basis;
  basis.grid = grid;
  basis.quadrature_weights = weights;
  basis.mean = curves.colwise().mean();
  Eigen::MatrixXd centered = curves.rowwise() - basis.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);

  if (estimate_noise && grid.size() == d)
    basis.noise_var = detail::estimate_noise_var(cov, grid);

  Eigen::VectorXd sqw = weights.array().sqrt();
  Eigen::MatrixXd a = sqw.asDiagonal() * cov * sqw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigensolver failed");

  const Eigen::Index m = std::min<Eigen::Index>(n - 1, d);
  basis.eigenvalues.resize(m);
  basis.eigenfunctions.resize(m, d);
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index src = d - 1 - j;  // solver returns ascending order
    basis.eigenvalues[j] = std::max(0.0, es.eigenvalues()[src]);
    Eigen::VectorXd phi = es.eigenvectors().col(src).array() / sqw.array();
    Eigen::Index imax;
    phi.cwiseAbs().maxCoeff(&imax);
    if (phi[imax] < 0) phi = -phi;  // reproducible sign convention
    basis.eigenfunctions.row(j) = phi.transpose();
  }
  return basis;
}

inline EigenBasis fit_fpca(const Eigen::MatrixXd& curves, const Eigen::VectorXd& grid) {
  return fit_pca_weighted(curves, grid, trapezoid_weights(grid), /*estimate_noise=*/true);
}

// Eigenvalues net of the measurement-error contribution. White noise on the
// grid inflates the sample spectrum by roughly noise_var * (mean quadrature
// weight), spread up to the Marchenko-Pastur edge (1 + sqrt(d/n))^2 for n
// curves on d points, so a variance-explained rule applied to the raw
// spectrum would chase the noise floor instead of the signal rank.
// n_samples = 0 skips the sampling-spread correction.
inline Eigen::VectorXd signal_eigenvalues(const EigenBasis& b, Eigen::Index n_samples = 0) {
  if (b.noise_var <= 0 || b.quadrature_weights.size() == 0) return b.eigenvalues;
  double floor = b.noise_var * b.quadrature_weights.mean();
  if (n_samples > 0) {
    double r = std::sqrt((double)b.dim() / (double)n_samples);
    floor *= (1 + r) * (1 + r);
  }
  return (b.eigenvalues.array() - floor).max(0.0).matrix();
}

// Smallest q whose leading eigenvalues reach the FVE threshold.
inline Eigen::Index select_fve(const Eigen::VectorXd& eigenvalues, double threshold = 0.95) {
  double total = eigenvalues.sum();
  if (!(total > 0)) throw std::invalid_argument("select_fve: all eigenvalues zero");
  double cum = 0;
  for (Eigen::Index q = 0; q < eigenvalues.size(); ++q) {
    cum += eigenvalues[q];
    if (cum / total >= threshold) return q + 1;
  }
  return eigenvalues.size();
}

// Conditional-expectation (PACE) scores. In the quadrature-whitened space the
// estimator reduces per component to lambda/(lambda + noise_var) times the
// projection <s - mu, phi>; with noise_var = 0 it is the plain projection.
inline Eigen::MatrixXd pace_scores(const EigenBasis& basis, const Eigen::MatrixXd& curves) {
  if (curves.cols() != basis.dim())
    throw std::invalid_argument("pace_scores: curve length does not match basis");
  Eigen::MatrixXd centered = curves.rowwise() - basis.mean.transpose();
  Eigen::MatrixXd proj =
      centered * basis.quadrature_weights.asDiagonal() * basis.eigenfunctions.transpose();
  if (basis.noise_var > 0) {
    for (Eigen::Index m = 0; m < basis.n_components(); ++m) {
      double lam = basis.eigenvalues[m];
      proj.col(m) *= lam / (lam + basis.noise_var);
    }
  }
  return proj;  // n x M
}

// Truncated Karhunen-Loeve reconstruction from the first q scores.
inline Eigen::MatrixXd reconstruct(const EigenBasis& basis, const Eigen::MatrixXd& scores,
                                   Eigen::Index q) {
  q = std::min(q, basis.n_components());
  Eigen::MatrixXd out = scores.leftCols(q) * basis.eigenfunctions.topRows(q);
  out.rowwise() += basis.mean.transpose();
  return out;
}

// ---- serialization --------------------------------------------------------
// Flat CSV dump, versioned; round-trips exactly (shortest-round-trip floats).

inline void save_basis(std::ostream& out, const EigenBasis& b,
                       const Eigen::VectorXd& score_means = {},
                       const Eigen::VectorXd& score_sds = {}) {
  out << "prognos-basis,1\n";
  out << "dims," << b.grid.size() << "," << b.dim() << "," << b.n_components() << ","
      << score_means.size() << "\n";
  out << "noise_var," << csv::fmt(b.noise_var) << "\n";
  auto vec = [&](const char* name, const Eigen::VectorXd& v) {
    out << name;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << "," << csv::fmt(v[i]);
    out << "\n";
  };
  vec("grid", b.grid);
  vec("mean", b.mean);
  vec("weights", b.quadrature_weights);
  vec("eigenvalues", b.eigenvalues);
  for (Eigen::Index m = 0; m < b.n_components(); ++m)
    vec("phi", b.eigenfunctions.row(m).transpose());
  if (score_means.size()) {
    vec("score_means", score_means);
    vec("score_sds", score_sds);
  }
}

struct LoadedBasis {
  EigenBasis basis;
  Eigen::VectorXd score_means, score_sds;
};

inline LoadedBasis load_basis(std::istream& in) {
  std::string line;
  auto next = [&]() {
    if (!std::getline(in, line)) throw csv::DataError("basis file truncated");
    return csv::split(line);
  };
  auto head = next();
  if (head.size() != 2 || head[0] != "prognos-basis" || head[1] != "1")
    throw csv::DataError("not a prognos basis file (or unknown version)");
  auto dims = next();
  Eigen::Index g = std::stol(dims[1]), d = std::stol(dims[2]), m = std::stol(dims[3]);
  Eigen::Index nstd = std::stol(dims[4]);
  LoadedBasis lb;
  lb.basis.noise_var = csv::parse_double(next()[1], "basis noise_var");
  auto vec = [&](const char* name, Eigen::Index len) {
    auto f = next();
    if (f[0] != name || (Eigen::Index)f.size() != len + 1)
      throw csv::DataError(std::string("basis file: bad section ") + name);
    Eigen::VectorXd v(len);
    for (Eigen::Index i = 0; i < len; ++i) v[i] = csv::parse_double(f[i + 1], name);
    return v;
  };
  lb.basis.grid = vec("grid", g);
  lb.basis.mean = vec("mean", d);
  lb.basis.quadrature_weights = vec("weights", d);
  lb.basis.eigenvalues = vec("eigenvalues", m);
  lb.basis.eigenfunctions.resize(m, d);
  for (Eigen::Index r = 0; r < m; ++r) lb.basis.eigenfunctions.row(r) = vec("phi", d).transpose();
  if (nstd) {
    lb.score_means = vec("score_means", nstd);
    lb.score_sds = vec("score_sds", nstd);
  }
  return lb;
}

}  // namespace prognos
