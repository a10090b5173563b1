#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "prognos/fpca.hpp"
#include "prognos/signal_data.hpp"

namespace prognos {

// Standardized scores grouped by sensor: the design matrix of the mixture
// regression. Columns [group_offsets[p], group_offsets[p+1]) belong to
// sensor p.
struct FeatureMatrix {
  Eigen::MatrixXd x;  // N x sum(q_p)
  std::vector<Eigen::Index> group_offsets;  // size P+1
  Eigen::VectorXd means, sds;

  Eigen::Index n_groups() const { return (Eigen::Index)group_offsets.size() - 1; }
  Eigen::Index group_size(Eigen::Index p) const {
    return group_offsets[(size_t)p + 1] - group_offsets[(size_t)p];
  }
  Eigen::Index n_features() const { return x.cols(); }
};

struct ClusterBases {
  // bases[p][k] is the FPCA basis for sensor p, cluster k (empty clusters
  // removed after merging; cluster_of maps original labels to fitted cells).
  std::vector<std::vector<EigenBasis>> bases;
  std::vector<Eigen::Index> retained;  // q_p per sensor
  std::vector<std::vector<int>> effective_labels;  // N x P after merging
};

inline void standardize_columns(Eigen::MatrixXd& x, Eigen::VectorXd& means,
                                Eigen::VectorXd& sds) {
  const Eigen::Index n = x.rows();
  means = x.colwise().mean();
  x.rowwise() -= means.transpose();
  sds.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double v = x.col(j).squaredNorm() / double(n - 1);
    sds[j] = v > 0 ? std::sqrt(v) : 1.0;
    x.col(j) /= sds[j];
  }
}

// Cluster-covariate FPCA: independent FPCA per (sensor, cluster) cell with
// q_p = max over clusters of the FVE pick; each system scored against its own
// cluster's basis. Cells with fewer than 2 members are merged into the
// nearest cluster (by mean curve) for that sensor.
inline std::pair<ClusterBases, FeatureMatrix> fit_cafpca(
    const SignalDataset& d, const std::vector<std::vector<int>>& sensorwise_labels, int k,
    double fve = 0.95) {
  d.validate();
  const Eigen::Index n = d.n_systems(), p_count = d.n_sensors(), g = d.grid_len();
  if ((Eigen::Index)sensorwise_labels.size() != n)
    throw std::invalid_argument("fit_cafpca: label row count mismatch");

  ClusterBases cb;
  cb.bases.resize((size_t)p_count);
  cb.retained.resize((size_t)p_count);
  cb.effective_labels.assign((size_t)n, std::vector<int>((size_t)p_count));

  std::vector<Eigen::MatrixXd> all_scores((size_t)p_count);
  for (Eigen::Index p = 0; p < p_count; ++p) {
    std::vector<int> lab((size_t)n);
    for (Eigen::Index i = 0; i < n; ++i) lab[(size_t)i] = sensorwise_labels[(size_t)i][(size_t)p];

    // merge undersized clusters into the nearest one by mean curve distance
    for (;;) {
      std::vector<Eigen::Index> count((size_t)k, 0);
      for (int l : lab) ++count[(size_t)l];
      int small = -1;
      for (int c = 0; c < k; ++c)
        if (count[(size_t)c] > 0 && count[(size_t)c] < 2) { small = c; break; }
      if (small < 0) break;
      std::vector<Eigen::VectorXd> centroids((size_t)k);
      for (int c = 0; c < k; ++c) {
        if (count[(size_t)c] == 0) continue;
        Eigen::VectorXd m = Eigen::VectorXd::Zero(g);
        for (Eigen::Index i = 0; i < n; ++i)
          if (lab[(size_t)i] == c) m += d.systems[(size_t)i].values.row(p).transpose();
        centroids[(size_t)c] = m / (double)count[(size_t)c];
      }
      int target = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        if (c == small || count[(size_t)c] < 2) continue;
        double dist = (centroids[(size_t)c] - centroids[(size_t)small]).norm();
        if (dist < best) { best = dist; target = c; }
      }
      if (target < 0) throw std::invalid_argument("fit_cafpca: no cluster with >= 2 members");
      for (auto& l : lab)
        if (l == small) l = target;
    }
    for (Eigen::Index i = 0; i < n; ++i) cb.effective_labels[(size_t)i][(size_t)p] = lab[(size_t)i];

    // fit per-cluster FPCA and pick q_p = max_k FVE choice
    std::vector<EigenBasis> cell_basis((size_t)k);
    std::vector<bool> present((size_t)k, false);
    Eigen::Index qp = 1;
    for (int c = 0; c < k; ++c) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i)
        if (lab[(size_t)i] == c) members.push_back(i);
      if (members.empty()) continue;
      Eigen::MatrixXd curves((Eigen::Index)members.size(), g);
      for (size_t r = 0; r < members.size(); ++r)
        curves.row((Eigen::Index)r) = d.systems[(size_t)members[r]].values.row(p);
      cell_basis[(size_t)c] = fit_fpca(curves, d.time_grid);
      present[(size_t)c] = true;
      Eigen::VectorXd lam =
          signal_eigenvalues(cell_basis[(size_t)c], (Eigen::Index)members.size());
      if (lam.sum() > 0) qp = std::max(qp, select_fve(lam, fve));
    }
    cb.retained[(size_t)p] = qp;
    cb.bases[(size_t)p] = std::move(cell_basis);

    // score each system against its own cluster's basis; pad with zeros if a
    // cluster has fewer available components than q_p
    Eigen::MatrixXd sc = Eigen::MatrixXd::Zero(n, qp);
    for (Eigen::Index i = 0; i < n; ++i) {
      const EigenBasis& b = cb.bases[(size_t)p][(size_t)lab[(size_t)i]];
      Eigen::MatrixXd s = pace_scores(b, d.systems[(size_t)i].values.row(p));
      Eigen::Index take = std::min<Eigen::Index>(qp, s.cols());
      sc.row(i).head(take) = s.row(0).head(take);
    }
    all_scores[(size_t)p] = std::move(sc);
    (void)present;
  }

  FeatureMatrix fm;
  fm.group_offsets.resize((size_t)p_count + 1);
  fm.group_offsets[0] = 0;
  for (Eigen::Index p = 0; p < p_count; ++p)
    fm.group_offsets[(size_t)p + 1] = fm.group_offsets[(size_t)p] + cb.retained[(size_t)p];
  fm.x.resize(n, fm.group_offsets.back());
  for (Eigen::Index p = 0; p < p_count; ++p)
    fm.x.middleCols(fm.group_offsets[(size_t)p], cb.retained[(size_t)p]) = all_scores[(size_t)p];
  standardize_columns(fm.x, fm.means, fm.sds);
  return {std::move(cb), std::move(fm)};
}

}  // namespace prognos
