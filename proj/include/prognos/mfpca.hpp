#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "prognos/fpca.hpp"

namespace prognos {

// Multivariate FPCA on sensor-concatenated curves. Scores of the training
// sample are standardized to zero mean / unit variance; test units are
// standardized with the stored training constants.
struct MfpcaModel {
  EigenBasis basis;  // dim = n_blocks * grid_len
  Eigen::Index n_blocks = 0;
  Eigen::Index retained = 0;  // H
  Eigen::VectorXd score_means, score_sds;
  Eigen::MatrixXd train_scores;  // N x H, standardized
};

// `stacked` holds one row per system, each row the concatenation of the
// selected sensors' series on `grid` (block quadrature: trapezoid weights
// repeated per block).
inline MfpcaModel fit_mfpca(const Eigen::MatrixXd& stacked, const Eigen::VectorXd& grid,
                            Eigen::Index n_blocks, double fve = 0.95) {
  if (n_blocks < 1) throw std::invalid_argument("fit_mfpca: empty sensor subset");
  if (stacked.cols() != n_blocks * grid.size())
    throw std::invalid_argument("fit_mfpca: stacked width != n_blocks * grid length");
  Eigen::VectorXd w1 = trapezoid_weights(grid);
  Eigen::VectorXd w(stacked.cols());
  for (Eigen::Index b = 0; b < n_blocks; ++b) w.segment(b * grid.size(), grid.size()) = w1;

  MfpcaModel m;
  m.basis = fit_pca_weighted(stacked, grid, w, /*estimate_noise=*/false);
  m.n_blocks = n_blocks;
  m.retained = select_fve(signal_eigenvalues(m.basis, stacked.rows()), fve);

  Eigen::MatrixXd raw = pace_scores(m.basis, stacked).leftCols(m.retained);
  m.score_means = raw.colwise().mean();
  raw.rowwise() -= m.score_means.transpose();
  m.score_sds.resize(m.retained);
  for (Eigen::Index j = 0; j < m.retained; ++j) {
    double v = raw.col(j).squaredNorm() / double(stacked.rows() - 1);
    m.score_sds[j] = v > 0 ? std::sqrt(v) : 1.0;
    raw.col(j) /= m.score_sds[j];
  }
  m.train_scores = std::move(raw);
  return m;
}

// Scores for new units, standardized with the training constants.
inline Eigen::MatrixXd mfpca_scores(const MfpcaModel& m, const Eigen::MatrixXd& stacked) {
  if (stacked.cols() != m.basis.dim())
    throw std::invalid_argument("mfpca_scores: curve shorter than basis domain");
  Eigen::MatrixXd s = pace_scores(m.basis, stacked).leftCols(m.retained);
  s.rowwise() -= m.score_means.transpose();
  for (Eigen::Index j = 0; j < m.retained; ++j) s.col(j) /= m.score_sds[j];
  return s;
}

}  // namespace prognos
