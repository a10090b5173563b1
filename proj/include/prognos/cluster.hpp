#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "prognos/rng.hpp"

namespace prognos {

struct KmeansModel {
  Eigen::MatrixXd centroids;  // K x d
  std::vector<int> labels;
  double inertia = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void assign_nearest(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& cent,
                           std::vector<int>& labels, double& inertia) {
  inertia = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index k = 0; k < cent.rows(); ++k) {
      double d = (pts.row(i) - cent.row(k)).squaredNorm();
      if (d < best) { best = d; arg = (int)k; }  // ties keep the lowest index
    }
    labels[(size_t)i] = arg;
    inertia += best;
  }
}

inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& pts, int k, std::mt19937_64& rng) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd cent(k, pts.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  cent.row(0) = pts.row(first(rng));
  Eigen::VectorXd d2 = (pts.rowwise() - cent.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0, total);
      double r = u(rng), acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) { pick = i; break; }
      }
    } else {
      pick = first(rng);
    }
    cent.row(c) = pts.row(pick);
    d2 = d2.cwiseMin((pts.rowwise() - cent.row(c)).rowwise().squaredNorm());
  }
  return cent;
}

}  // namespace detail

inline KmeansModel kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed = 0,
                          int restarts = 10) {
  const Eigen::Index n = points.rows();
  if (k < 1 || n < k) throw std::invalid_argument("kmeans: need n >= K >= 1");
  KmeansModel best;
  best.inertia = std::numeric_limits<double>::infinity();
  best.seed = seed;
  for (int r = 0; r < restarts; ++r) {
    auto rng = substream(seed, (std::uint64_t)r);
    Eigen::MatrixXd cent = detail::kmeanspp_init(points, k, rng);
    std::vector<int> labels(n), prev;
    double inertia = 0;
    for (int it = 0; it < 300; ++it) {
      detail::assign_nearest(points, cent, labels, inertia);
      if (labels == prev) break;
      prev = labels;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[(size_t)i]) += points.row(i);
        counts[labels[(size_t)i]] += 1;
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          cent.row(c) = sums.row(c) / counts[c];
        } else {
          // re-seed an emptied cluster at the point farthest from its centroid
          Eigen::Index far = 0;
          double fd = -1;
          for (Eigen::Index i = 0; i < n; ++i) {
            double d = (points.row(i) - cent.row(labels[(size_t)i])).squaredNorm();
            if (d > fd) { fd = d; far = i; }
          }
          cent.row(c) = points.row(far);
        }
      }
    }
    detail::assign_nearest(points, cent, labels, inertia);
    if (inertia < best.inertia) {
      best.centroids = cent;
      best.labels = labels;
      best.inertia = inertia;
    }
  }
  return best;
}

struct KnnConfig {
  double neighbor_fraction = 0.1;
  int minimum_neighbors = 1;
};

inline int knn_neighbor_count(Eigen::Index n, const KnnConfig& cfg) {
  if (!(cfg.neighbor_fraction > 0 && cfg.neighbor_fraction <= 1))
    throw std::invalid_argument("knn: neighbor_fraction must be in (0,1]");
  int k = (int)std::ceil(cfg.neighbor_fraction * (double)n);
  k = std::max(k, cfg.minimum_neighbors);
  return std::min<int>(k, (int)n);
}

// Majority vote among the nearest ceil(fraction*n) training scores; a vote
// tie goes to the single nearest neighbor's label.
inline int knn_diagnose(const Eigen::MatrixXd& train_scores, const std::vector<int>& train_modes,
                        const Eigen::VectorXd& test_score, const KnnConfig& cfg = {}) {
  const Eigen::Index n = train_scores.rows();
  if (n < 1) throw std::invalid_argument("knn_diagnose: empty training set");
  if ((size_t)n != train_modes.size())
    throw std::invalid_argument("knn_diagnose: scores/modes length mismatch");
  const int k = knn_neighbor_count(n, cfg);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd d2 = (train_scores.rowwise() - test_score.transpose()).rowwise().squaredNorm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return d2[a] < d2[b]; });
  std::vector<int> votes;
  for (int j = 0; j < k; ++j) {
    int m = train_modes[(size_t)order[(size_t)j]];
    if ((int)votes.size() <= m) votes.resize(m + 1, 0);
    ++votes[m];
  }
  int best = std::max_element(votes.begin(), votes.end()) - votes.begin();
  int ties = std::count(votes.begin(), votes.end(), votes[best]);
  if (ties > 1) return train_modes[(size_t)order[0]];
  return best;
}

// Best label permutation (exhaustive, K <= 8) and the resulting accuracy.
inline std::pair<std::vector<int>, double> align_labels(const std::vector<int>& pred,
                                                        const std::vector<int>& truth, int k) {
  if (pred.size() != truth.size()) throw std::invalid_argument("align_labels: length mismatch");
  if (k > 8) throw std::invalid_argument("align_labels: K > 8 unsupported");
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm = perm;
  long best_agree = -1;
  do {
    long agree = 0;
    for (size_t i = 0; i < pred.size(); ++i)
      if (perm[(size_t)pred[i]] == truth[i]) ++agree;
    if (agree > best_agree) { best_agree = agree; best_perm = perm; }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_perm, (double)best_agree / (double)pred.size()};
}

}  // namespace prognos
