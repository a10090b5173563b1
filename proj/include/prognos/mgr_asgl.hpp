#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "prognos/cafpca.hpp"
#include "prognos/rng.hpp"

namespace prognos {

inline constexpr double kPiFloor = 1e-10;
inline constexpr double kRhoMin = 1e-8;
inline constexpr double kRhoMax = 1e8;
inline constexpr double kHalfLn2Pi = 0.91893853320467274178;  // ln(2*pi)/2

// Mixture parameters in the scale-invariant parameterization:
// rho_k = 1/sigma_k, phi = beta/sigma. Per-mode coefficient vectors are laid
// out by the FeatureMatrix group offsets.
struct MixtureParams {
  Eigen::VectorXd pi;    // K, on the simplex
  Eigen::VectorXd rho;   // K, positive
  Eigen::VectorXd phi0;  // K
  std::vector<Eigen::VectorXd> phi;  // K vectors of length n_features

  Eigen::Index n_modes() const { return pi.size(); }
  double sigma(Eigen::Index k) const { return 1.0 / rho[k]; }
  Eigen::VectorXd beta(Eigen::Index k) const { return phi[(size_t)k] / rho[k]; }
};

struct PenaltyConfig {
  double lambda = 0;
  double alpha = 1;  // 1 = pure l1, 0 = pure group
  std::vector<Eigen::Index> group_offsets;

  Eigen::Index n_groups() const { return (Eigen::Index)group_offsets.size() - 1; }
  Eigen::Index group_size(Eigen::Index p) const {
    return group_offsets[(size_t)p + 1] - group_offsets[(size_t)p];
  }
};

struct EmConfig {
  int max_iterations = 500;
  double tolerance = 1e-6;  // relative change of the penalized objective
  int inner_max_iterations = 1000;
  double inner_tolerance = 1e-8;
  int restarts = 8;  // independent initializations; best final objective wins
  std::uint64_t seed = 0;
};

struct SensorSelectionEntry {
  Eigen::Index sensor, mode;
  double norm;
  bool significant;
};
using SensorSelectionReport = std::vector<SensorSelectionEntry>;

struct FitResult {
  MixtureParams params;
  Eigen::MatrixXd gamma;  // N x K responsibilities
  std::vector<double> objective_trace;  // penalized negative IDLL per iteration
  std::vector<int> hard_labels;
  SensorSelectionReport selection;
  bool converged = false;
  bool degenerate_mode = false;  // some mode lost effectively all responsibility
};

// ---- likelihood pieces ------------------------------------------------------

// Per-(system, mode) log joint: ln pi_k + ln rho_k - ln sqrt(2 pi) - res^2/2.
inline Eigen::MatrixXd log_joint(const MixtureParams& th, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows(), k = th.n_modes();
  Eigen::MatrixXd lj(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::ArrayXd res = (y.array() * th.rho[c] - th.phi0[c]) - (x * th.phi[(size_t)c]).array();
    lj.col(c) = std::log(std::max(th.pi[c], kPiFloor)) + std::log(th.rho[c]) - kHalfLn2Pi -
                0.5 * res.square();
  }
  return lj;
}

inline double neg_idll(const MixtureParams& th, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& y) {
  Eigen::MatrixXd lj = log_joint(th, x, y);
  double total = 0;
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    double mx = lj.row(i).maxCoeff();
    total += mx + std::log((lj.row(i).array() - mx).exp().sum());
  }
  if (!std::isfinite(total)) throw std::runtime_error("neg_idll: non-finite (invalid params)");
  return -total;
}

inline double penalty_value(const MixtureParams& th, const PenaltyConfig& pen) {
  double v = 0;
  for (Eigen::Index k = 0; k < th.n_modes(); ++k) {
    double mode = 0;
    for (Eigen::Index p = 0; p < pen.n_groups(); ++p) {
      auto seg = th.phi[(size_t)k].segment(pen.group_offsets[(size_t)p], pen.group_size(p));
      mode += pen.alpha * seg.lpNorm<1>() +
              (1 - pen.alpha) * std::sqrt((double)pen.group_size(p)) * seg.norm();
    }
    v += th.pi[k] * mode;
  }
  return pen.lambda * v;
}

// The penalty enters on the per-sample scale of the likelihood (Stadler-style
// -loglik/n + lambda * penalty, here kept in sum form), hence the factor n.
inline double penalized_objective(const MixtureParams& th, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, const PenaltyConfig& pen) {
  return neg_idll(th, x, y) + (double)x.rows() * penalty_value(th, pen);
}

inline Eigen::MatrixXd e_step(const MixtureParams& th, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y) {
  Eigen::MatrixXd lj = log_joint(th, x, y);
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    double mx = lj.row(i).maxCoeff();
    Eigen::ArrayXd e = (lj.row(i).array() - mx).exp();
    lj.row(i) = e / e.sum();
  }
  return lj;
}

// Negative expected CDLL (the EM surrogate), without the penalty.
inline double q_function(const MixtureParams& th, const Eigen::MatrixXd& gamma,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (gamma.rows() != x.rows() || gamma.cols() != th.n_modes())
    throw std::invalid_argument("q_function: gamma shape mismatch");
  return -(gamma.array() * log_joint(th, x, y).array()).sum();
}

inline double gamma_entropy(const Eigen::MatrixXd& gamma) {
  double h = 0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i)
    for (Eigen::Index k = 0; k < gamma.cols(); ++k)
      if (gamma(i, k) > 0) h -= gamma(i, k) * std::log(gamma(i, k));
  return h;
}

struct BoundCheck {
  double lhs;  // E_g[l_C]
  double rhs;  // l(Theta; Y)
  bool holds;
  std::optional<double> posterior_gap;  // |l - (E_gamma[l_C] + H(gamma))| at the posterior
};

// Jensen bound: the expected CDLL under any simplex distribution g is a lower
// bound on the IDLL; at the posterior the gap equals the entropy of g.
inline BoundCheck check_cdll_bound(const MixtureParams& th, const Eigen::MatrixXd& g,
                                   const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   bool at_posterior = false) {
  BoundCheck out;
  out.lhs = -q_function(th, g, x, y);
  out.rhs = -neg_idll(th, x, y);
  out.holds = out.lhs <= out.rhs + 1e-9;
  if (at_posterior) out.posterior_gap = std::abs(out.rhs - (out.lhs + gamma_entropy(g)));
  return out;
}

// ---- M-step -----------------------------------------------------------------

// Proximal map of t_l1*||.||_1 + t_group*||.||_2: elementwise soft threshold,
// then group shrink or kill.
inline Eigen::VectorXd sgl_prox(const Eigen::VectorXd& v, double t_l1, double t_group) {
  Eigen::VectorXd u = v.array().sign() * (v.array().abs() - t_l1).max(0.0);
  double nrm = u.norm();
  if (nrm <= t_group) return Eigen::VectorXd::Zero(v.size());
  return u * (1 - t_group / nrm);
}

struct ModeSolution {
  double rho, phi0;
  Eigen::VectorXd phi;
  double objective;  // Eq-12 value minus the constant Gamma*ln(pi_k) term
  int iterations;
};

namespace detail {

inline double mode_objective(double rho, double phi0, const Eigen::VectorXd& phi,
                             const Eigen::VectorXd& g, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y, double lam_pi, double alpha,
                             const PenaltyConfig& pen) {
  Eigen::ArrayXd res = (y.array() * rho - phi0) - (x * phi).array();
  double f = -g.sum() * std::log(rho) + 0.5 * (g.array() * res.square()).sum();
  for (Eigen::Index p = 0; p < pen.n_groups(); ++p) {
    auto seg = phi.segment(pen.group_offsets[(size_t)p], pen.group_size(p));
    f += lam_pi * (alpha * seg.lpNorm<1>() +
                   (1 - alpha) * std::sqrt((double)pen.group_size(p)) * seg.norm());
  }
  return f;
}

// Positive root of the rho stationarity quadratic.
inline double rho_closed_form(const Eigen::VectorXd& g, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& a) {
  double syy = (g.array() * y.array().square()).sum();
  if (syy <= 0) throw std::invalid_argument("m_step: degenerate responses (sum g*y^2 == 0)");
  double sya = (g.array() * y.array() * a.array()).sum();
  double gam = g.sum();
  double rho = (sya + std::sqrt(sya * sya + 4 * gam * syy)) / (2 * syy);
  return std::clamp(rho, kRhoMin, kRhoMax);
}

}  // namespace detail

// Per-mode penalized solve: closed-form rho and phi0 blocks alternated with a
// proximal gradient step on the grouped coefficients (step 1/L, L the largest
// eigenvalue of the responsibility-weighted Gram matrix).
inline ModeSolution m_step_mode(const Eigen::VectorXd& g, double pi_k, const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& y, const PenaltyConfig& pen,
                                const EmConfig& cfg, double rho0 = 1.0, double phi00 = 0.0,
                                const Eigen::VectorXd* phi_init = nullptr) {
  const Eigen::Index f = x.cols();
  if (g.sum() <= 0) throw std::invalid_argument("m_step: empty effective cluster");
  ModeSolution s;
  s.rho = rho0;
  s.phi0 = phi00;
  s.phi = phi_init ? *phi_init : Eigen::VectorXd::Zero(f);

  Eigen::MatrixXd gram = x.transpose() * g.asDiagonal() * x;
  double lip = f > 0 ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff()
                     : 1.0;
  if (lip <= 0) lip = 1.0;
  const double step = 1.0 / lip;
  const double lam_pi = pen.lambda * pi_k * (double)y.size();
  const double gsum = g.sum();

  double prev = detail::mode_objective(s.rho, s.phi0, s.phi, g, x, y, lam_pi, pen.alpha, pen);
  int it = 0;
  for (; it < cfg.inner_max_iterations; ++it) {
    Eigen::VectorXd xphi = x * s.phi;
    Eigen::VectorXd a = xphi.array() + s.phi0;
    s.rho = detail::rho_closed_form(g, y, a);
    s.phi0 = (g.array() * (y.array() * s.rho - xphi.array())).sum() / gsum;

    if (f > 0) {
      Eigen::VectorXd r = y * s.rho;
      r.array() -= s.phi0;
      Eigen::VectorXd grad = gram * s.phi - x.transpose() * (g.asDiagonal() * r);
      Eigen::VectorXd v = s.phi - step * grad;
      for (Eigen::Index p = 0; p < pen.n_groups(); ++p) {
        auto sz = pen.group_size(p);
        s.phi.segment(pen.group_offsets[(size_t)p], sz) =
            sgl_prox(v.segment(pen.group_offsets[(size_t)p], sz), step * lam_pi * pen.alpha,
                     step * lam_pi * (1 - pen.alpha) * std::sqrt((double)sz));
      }
    }
    double cur = detail::mode_objective(s.rho, s.phi0, s.phi, g, x, y, lam_pi, pen.alpha, pen);
    if (std::abs(prev - cur) <= cfg.inner_tolerance * (std::abs(prev) + 1)) { prev = cur; break; }
    prev = cur;
  }
  s.objective = prev;
  s.iterations = it + 1;
  return s;
}

// Smallest lambda for which phi = 0 solves every per-mode problem: for each
// group the soft-thresholded null gradient must fit inside the group-norm
// subdifferential ball. Found by bisection (the condition is monotone).
inline double lambda_max(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& pi,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const PenaltyConfig& pen) {
  const Eigen::Index kcount = gamma.cols();
  double lo = 0, hi = 1;
  auto all_null = [&](double lam) {
    for (Eigen::Index k = 0; k < kcount; ++k) {
      Eigen::VectorXd g = gamma.col(k);
      if (g.sum() <= 0) continue;
      // rho, phi0 at phi = 0: alternate the two closed forms to a fixed point
      double rho = 1, phi0 = 0;
      for (int t = 0; t < 200; ++t) {
        double nrho = detail::rho_closed_form(g, y, Eigen::VectorXd::Constant(y.size(), phi0));
        double nphi0 = (g.array() * y.array()).sum() * nrho / g.sum();
        if (std::abs(nrho - rho) + std::abs(nphi0 - phi0) < 1e-14) { rho = nrho; phi0 = nphi0; break; }
        rho = nrho;
        phi0 = nphi0;
      }
      Eigen::VectorXd r = y * rho;
      r.array() -= phi0;
      Eigen::VectorXd grad = -(x.transpose() * (g.asDiagonal() * r));
      double lp = lam * pi[k] * (double)y.size();
      for (Eigen::Index p = 0; p < pen.n_groups(); ++p) {
        auto seg = grad.segment(pen.group_offsets[(size_t)p], pen.group_size(p));
        Eigen::VectorXd sth =
            seg.array().sign() * (seg.array().abs() - lp * pen.alpha).max(0.0);
        if (sth.norm() > lp * (1 - pen.alpha) * std::sqrt((double)pen.group_size(p)) + 1e-12)
          return false;
      }
    }
    return true;
  };
  while (!all_null(hi) && hi < 1e12) hi *= 2;
  for (int t = 0; t < 200; ++t) {
    double mid = 0.5 * (lo + hi);
    if (all_null(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

// Mixing-weight line search: move from the current pi toward the column means
// of gamma by the largest step in {1, 1/2, ..., 2^-20} that increases neither
// the penalized objective nor the EM surrogate (the latter keeps the outer
// descent guarantee).
inline Eigen::VectorXd pi_step(const MixtureParams& th, const Eigen::MatrixXd& gamma,
                               const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const PenaltyConfig& pen) {
  Eigen::VectorXd target = gamma.colwise().mean();
  Eigen::VectorXd counts = gamma.colwise().sum();
  Eigen::VectorXd mode_pen(th.n_modes());
  for (Eigen::Index k = 0; k < th.n_modes(); ++k) {
    double v = 0;
    for (Eigen::Index p = 0; p < pen.n_groups(); ++p) {
      auto seg = th.phi[(size_t)k].segment(pen.group_offsets[(size_t)p], pen.group_size(p));
      v += pen.alpha * seg.lpNorm<1>() +
           (1 - pen.alpha) * std::sqrt((double)pen.group_size(p)) * seg.norm();
    }
    mode_pen[k] = v;
  }
  auto surrogate_pi_part = [&](const Eigen::VectorXd& pi) {
    double q = 0;
    for (Eigen::Index k = 0; k < pi.size(); ++k)
      q += -counts[k] * std::log(std::max(pi[k], kPiFloor)) +
           pen.lambda * (double)x.rows() * pi[k] * mode_pen[k];
    return q;
  };
  MixtureParams trial = th;
  double f_cur = penalized_objective(th, x, y, pen);
  double m_cur = surrogate_pi_part(th.pi);
  double u = 1.0;
  for (int t = 0; t <= 20; ++t, u *= 0.5) {
    trial.pi = th.pi + u * (target - th.pi);
    double f_new = penalized_objective(trial, x, y, pen);
    double m_new = surrogate_pi_part(trial.pi);
    if (f_new <= f_cur + 1e-12 && m_new <= m_cur + 1e-12) return trial.pi;
  }
  return th.pi;
}

inline SensorSelectionReport selection_report(const MixtureParams& th, const PenaltyConfig& pen) {
  SensorSelectionReport rep;
  for (Eigen::Index p = 0; p < pen.n_groups(); ++p)
    for (Eigen::Index k = 0; k < th.n_modes(); ++k) {
      double nrm =
          th.phi[(size_t)k].segment(pen.group_offsets[(size_t)p], pen.group_size(p)).norm();
      rep.push_back({p, k, nrm, nrm > 1e-8});
    }
  return rep;
}

enum class EmInit { RandomResponsibilities, LabelsProvided };

namespace detail {

// One EM run from a given responsibility matrix.
inline FitResult em_single(const FeatureMatrix& fm, const Eigen::VectorXd& y, int k_modes,
                           const PenaltyConfig& pen, const EmConfig& cfg,
                           Eigen::MatrixXd gamma) {
  const Eigen::Index n = fm.x.rows();
  FitResult fit;
  fit.params.pi = gamma.colwise().mean();
  fit.params.rho = Eigen::VectorXd::Ones(k_modes);
  fit.params.phi0 = Eigen::VectorXd::Zero(k_modes);
  fit.params.phi.assign((size_t)k_modes, Eigen::VectorXd::Zero(fm.n_features()));
  for (int k = 0; k < k_modes; ++k) {
    auto sol = m_step_mode(gamma.col(k), fit.params.pi[k], fm.x, y, pen, cfg);
    fit.params.rho[k] = sol.rho;
    fit.params.phi0[k] = sol.phi0;
    fit.params.phi[(size_t)k] = sol.phi;
  }

  double obj = penalized_objective(fit.params, fm.x, y, pen);
  fit.objective_trace.push_back(obj);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    gamma = e_step(fit.params, fm.x, y);
    fit.params.pi = pi_step(fit.params, gamma, fm.x, y, pen);
    for (int k = 0; k < k_modes; ++k) {
      if (gamma.col(k).sum() < 1e-6 * (double)n) { fit.degenerate_mode = true; continue; }
      auto sol = m_step_mode(gamma.col(k), fit.params.pi[k], fm.x, y, pen, cfg,
                             fit.params.rho[k], fit.params.phi0[k], &fit.params.phi[(size_t)k]);
      fit.params.rho[k] = sol.rho;
      fit.params.phi0[k] = sol.phi0;
      fit.params.phi[(size_t)k] = sol.phi;
    }
    double next = penalized_objective(fit.params, fm.x, y, pen);
    fit.objective_trace.push_back(next);
    if (std::abs(obj - next) <= cfg.tolerance * (std::abs(obj) + 1)) {
      fit.converged = true;
      obj = next;
      break;
    }
    obj = next;
  }

  fit.gamma = e_step(fit.params, fm.x, y);
  fit.hard_labels.resize((size_t)n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg;
    fit.gamma.row(i).maxCoeff(&arg);
    fit.hard_labels[(size_t)i] = (int)arg;
  }
  fit.selection = selection_report(fit.params, pen);
  return fit;
}

}  // namespace detail

// Full EM loop: E-step responsibilities, pi line search, per-mode penalized
// M-step; stops on relative change of the penalized negative IDLL. The
// objective is multimodal, so several seeded initializations are run (the
// caller's labels, if given, plus random responsibility draws) and the fit
// with the lowest final penalized objective wins.
inline FitResult fit_em(const FeatureMatrix& fm, const Eigen::VectorXd& y, int k_modes,
                        double lambda, double alpha, const EmConfig& cfg = {},
                        const std::vector<int>* init_labels = nullptr) {
  const Eigen::Index n = fm.x.rows();
  if (n <= k_modes) throw std::invalid_argument("fit_em: need N > K");
  if (init_labels && (Eigen::Index)init_labels->size() != n)
    throw std::invalid_argument("fit_em: init label length mismatch");
  PenaltyConfig pen{lambda, alpha, fm.group_offsets};

  FitResult best;
  bool have = false;
  auto consider = [&](Eigen::MatrixXd gamma) {
    FitResult fit = detail::em_single(fm, y, k_modes, pen, cfg, std::move(gamma));
    if (!have || fit.objective_trace.back() < best.objective_trace.back()) {
      best = std::move(fit);
      have = true;
    }
  };

  if (init_labels) {
    Eigen::MatrixXd gamma(n, k_modes);
    double off = k_modes > 1 ? 0.1 / double(k_modes - 1) : 0.0;
    gamma.setConstant(off);
    for (Eigen::Index i = 0; i < n; ++i)
      gamma(i, (*init_labels)[(size_t)i]) = k_modes > 1 ? 0.9 : 1.0;
    consider(std::move(gamma));
  }
  const int rand_starts = init_labels ? cfg.restarts - 1 : cfg.restarts;
  for (int r = 0; r < std::max(rand_starts, have ? 0 : 1); ++r) {
    auto rng = substream(cfg.seed, 0x67616d6d61ULL, (std::uint64_t)r);
    std::exponential_distribution<double> ex(1.0);
    Eigen::MatrixXd gamma(n, k_modes);
    for (Eigen::Index i = 0; i < n; ++i) {
      double sum = 0;
      for (int c = 0; c < k_modes; ++c) { gamma(i, c) = ex(rng); sum += gamma(i, c); }
      gamma.row(i) /= sum;
    }
    consider(std::move(gamma));
  }
  return best;
}

}  // namespace prognos
