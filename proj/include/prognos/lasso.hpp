#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace prognos {

// Weighted lasso by coordinate descent:
//   min_{c0,c}  sum_i w_i (y_i - c0 - z_i'c)^2 + lambda * sum_h |c_h|
// Intercept unpenalized. The soft threshold is lambda/2 because the loss
// carries no 1/2 factor.
struct LassoFit {
  double c0 = 0;
  Eigen::VectorXd coef;
  double lambda = 0;
};

inline LassoFit lasso_cd(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w, double lambda, int max_iter = 2000,
                         double tol = 1e-10, const LassoFit* warm = nullptr) {
  const Eigen::Index n = z.rows(), h = z.cols();
  if (y.size() != n || w.size() != n) throw std::invalid_argument("lasso_cd: size mismatch");
  if ((w.array() <= 0).any() || !w.allFinite())
    throw std::invalid_argument("lasso_cd: weights must be positive and finite");
  LassoFit fit;
  fit.lambda = lambda;
  fit.coef = warm ? warm->coef : Eigen::VectorXd::Zero(h);
  fit.c0 = warm ? warm->c0 : 0.0;

  const double wsum = w.sum();
  Eigen::VectorXd znorm(h);
  for (Eigen::Index j = 0; j < h; ++j) znorm[j] = (w.array() * z.col(j).array().square()).sum();
  Eigen::VectorXd r = y - z * fit.coef;
  r.array() -= fit.c0;
  for (int it = 0; it < max_iter; ++it) {
    double delta = 0;
    double dc0 = (w.array() * r.array()).sum() / wsum;
    fit.c0 += dc0;
    r.array() -= dc0;
    delta = std::abs(dc0);
    for (Eigen::Index j = 0; j < h; ++j) {
      if (znorm[j] <= 0) continue;
      double old = fit.coef[j];
      double rho = (w.array() * z.col(j).array() * r.array()).sum() + znorm[j] * old;
      double thr = lambda / 2.0;
      double nw = std::abs(rho) <= thr ? 0.0 : (rho > 0 ? rho - thr : rho + thr) / znorm[j];
      if (nw != old) {
        r += z.col(j) * (old - nw);
        fit.coef[j] = nw;
        delta = std::max(delta, std::abs(nw - old));
      }
    }
    if (delta < tol) break;
  }
  return fit;
}

// Smallest lambda that zeroes every coefficient.
inline double lasso_lambda_max(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w) {
  double c0 = (w.array() * y.array()).sum() / w.sum();
  Eigen::VectorXd r = y.array() - c0;
  double m = 0;
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    m = std::max(m, 2.0 * std::abs((w.array() * z.col(j).array() * r.array()).sum()));
  return m;
}

struct LassoPathResult {
  LassoFit best;
  std::vector<double> path;      // lambdas, descending
  std::vector<double> cv_error;  // leave-one-out MSE per lambda
};

// Leave-one-out CV over a log-spaced path from lambda_max down to
// 1e-4*lambda_max (50 points); N here is small so plain refits are fine.
inline LassoPathResult lasso_loocv(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, int path_len = 50) {
  const Eigen::Index n = z.rows();
  if (n < 3) throw std::invalid_argument("lasso_loocv: need at least 3 observations");
  LassoPathResult out;
  double lmax = lasso_lambda_max(z, y, w);
  if (lmax <= 0) lmax = 1.0;
  for (int t = 0; t < path_len; ++t)
    out.path.push_back(lmax * std::pow(1e-4, (double)t / (double)(path_len - 1)));

  out.cv_error.assign(out.path.size(), 0.0);
  Eigen::MatrixXd ztr(n - 1, z.cols());
  Eigen::VectorXd ytr(n - 1), wtr(n - 1);
  for (Eigen::Index leave = 0; leave < n; ++leave) {
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == leave) continue;
      ztr.row(r) = z.row(i);
      ytr[r] = y[i];
      wtr[r] = w[i];
      ++r;
    }
    LassoFit prev;
    bool have_prev = false;
    for (size_t t = 0; t < out.path.size(); ++t) {
      LassoFit f = lasso_cd(ztr, ytr, wtr, out.path[t], 2000, 1e-10, have_prev ? &prev : nullptr);
      double pred = f.c0 + z.row(leave).dot(f.coef);
      out.cv_error[t] += (pred - y[leave]) * (pred - y[leave]) / (double)n;
      prev = f;
      have_prev = true;
    }
  }
  size_t best_t = 0;
  for (size_t t = 1; t < out.cv_error.size(); ++t)
    if (out.cv_error[t] < out.cv_error[best_t]) best_t = t;
  out.best = lasso_cd(z, y, w, out.path[best_t]);
  return out;
}

}  // namespace prognos
