#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "prognos/signal_data.hpp"

namespace prognos {

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace detail

// Robust local quadratic regression (rloess): tricube distance weights over
// the k-nearest window, bisquare robustness weights refit
// cfg.robust_iterations times, residuals beyond 6x the median absolute
// residual zeroed out.
inline Eigen::VectorXd smooth_rloess(const Eigen::VectorXd& series,
                                     const Eigen::VectorXd& grid,
                                     const SmoothingConfig& cfg = {}) {
  const Eigen::Index n = series.size();
  if (grid.size() != n) throw std::invalid_argument("smooth_rloess: grid/series length mismatch");
  if (!(cfg.bandwidth > 0 && cfg.bandwidth <= 1))
    throw std::invalid_argument("smooth_rloess: bandwidth must be in (0,1]");
  if (!series.allFinite()) throw std::invalid_argument("smooth_rloess: non-finite series");
  const int k = std::max<int>((int)std::ceil(cfg.bandwidth * (double)n), cfg.polynomial_order + 1);
  if (k > n) throw std::invalid_argument("smooth_rloess: window larger than series");
  if (k < cfg.polynomial_order + 1)
    throw std::invalid_argument("smooth_rloess: window too small for quadratic fit");

  Eigen::VectorXd robust = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd fitted = series;
  std::vector<Eigen::Index> usable(n);
  for (int pass = 0; pass <= cfg.robust_iterations; ++pass) {
    // window candidates: points that still carry robustness weight (all of
    // them on the first pass); if too few survive, fall back to everything
    usable.clear();
    for (Eigen::Index m = 0; m < n; ++m)
      if (robust[m] > 0) usable.push_back(m);
    bool weighted = usable.size() >= (size_t)(cfg.polynomial_order + 1);
    if (!weighted) {
      usable.resize((size_t)n);
      std::iota(usable.begin(), usable.end(), 0);
    }
    const Eigen::Index kk = std::min<Eigen::Index>(k, (Eigen::Index)usable.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      // k nearest usable points around j (contiguous in usable order)
      Eigen::Index pos = (Eigen::Index)(std::lower_bound(usable.begin(), usable.end(), j) -
                                        usable.begin());
      Eigen::Index lo = std::min<Eigen::Index>(pos, (Eigen::Index)usable.size() - 1), hi = lo;
      while (hi - lo + 1 < kk) {
        if (lo == 0) ++hi;
        else if (hi == (Eigen::Index)usable.size() - 1) --lo;
        else if (grid[j] - grid[usable[(size_t)lo - 1]] <= grid[usable[(size_t)hi + 1]] - grid[j])
          --lo;
        else ++hi;
      }
      double h = std::max(std::abs(grid[j] - grid[usable[(size_t)lo]]),
                          std::abs(grid[usable[(size_t)hi]] - grid[j]));
      if (h <= 0) h = 1;
      Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
      Eigen::Vector3d atb = Eigen::Vector3d::Zero();
      double wsum = 0;
      for (Eigen::Index q = lo; q <= hi; ++q) {
        Eigen::Index m = usable[(size_t)q];
        double u = std::abs(grid[m] - grid[j]) / h;
        double tri = u < 1 ? std::pow(1 - u * u * u, 3) : 0.0;
        double w = weighted ? tri * robust[m] : tri;
        if (w <= 0) continue;
        double dt = grid[m] - grid[j];
        Eigen::Vector3d row(1.0, dt, dt * dt);
        ata.noalias() += w * row * row.transpose();
        atb.noalias() += w * series[m] * row;
        wsum += w;
      }
      if (wsum <= 0) { fitted[j] = series[j]; continue; }
      Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
      if (lu.isInvertible()) {
        fitted[j] = lu.solve(atb)[0];
      } else {
        fitted[j] = atb[0] / ata(0, 0);  // degenerate window: weighted mean
      }
    }
    if (pass == cfg.robust_iterations) break;
    Eigen::VectorXd resid = series - fitted;
    std::vector<double> a(n);
    for (Eigen::Index m = 0; m < n; ++m) a[m] = std::abs(resid[m]);
    double mad = detail::median_of(a);
    if (mad <= 0) break;  // perfect fit, robustness weights stay at 1
    for (Eigen::Index m = 0; m < n; ++m) {
      double u = resid[m] / (6.0 * mad);
      robust[m] = std::abs(u) < 1 ? (1 - u * u) * (1 - u * u) : 0.0;
    }
  }
  return fitted;
}

}  // namespace prognos
