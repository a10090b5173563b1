#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "prognos/cafpca.hpp"
#include "prognos/cluster.hpp"
#include "prognos/lasso.hpp"
#include "prognos/mfpca.hpp"
#include "prognos/mgr_asgl.hpp"
#include "prognos/signal_data.hpp"
#include "prognos/smoothing.hpp"

namespace prognos {

// ---- offline: sensor-wise clustering -> CA-FPCA -> MGR-ASGL ----------------

struct OfflineModel {
  int k_modes = 0;
  // per-sensor plain FPCA (covariate clustering features) and its K-means
  std::vector<EigenBasis> sensor_bases;
  std::vector<Eigen::Index> sensor_retained;
  std::vector<KmeansModel> sensor_kmeans;
  ClusterBases cluster_bases;
  FeatureMatrix features;
  StandardizedTtf ttf_std;
  FitResult fit;
  std::vector<std::vector<Eigen::Index>> selected_sensors;  // per mode, 0-based
  std::vector<int> labels;  // hard mode per training system
};

struct OfflineOptions {
  double fve = 0.95;
  std::uint64_t cluster_seed = 0;
  int cluster_restarts = 10;
  bool kmeans_init_labels = false;  // initial EM labels from pooled-score K-means
};

inline Eigen::MatrixXd sensor_curves(const SignalDataset& d, Eigen::Index p) {
  Eigen::MatrixXd curves(d.n_systems(), d.grid_len());
  for (Eigen::Index i = 0; i < d.n_systems(); ++i) curves.row(i) = d.systems[(size_t)i].values.row(p);
  return curves;
}

inline OfflineModel offline_fit(const SignalDataset& train, int k_modes, double lambda,
                                double alpha, const EmConfig& em = {},
                                const OfflineOptions& opt = {}) {
  train.validate();
  OfflineModel m;
  m.k_modes = k_modes;
  const Eigen::Index p_count = train.n_sensors(), n = train.n_systems();

  std::vector<std::vector<int>> sensorwise((size_t)n, std::vector<int>((size_t)p_count));
  for (Eigen::Index p = 0; p < p_count; ++p) {
    EigenBasis b = fit_fpca(sensor_curves(train, p), train.time_grid);
    Eigen::VectorXd lam = signal_eigenvalues(b, n);
    Eigen::Index q = lam.sum() > 0 ? select_fve(lam, opt.fve) : 1;
    Eigen::MatrixXd sc = pace_scores(b, sensor_curves(train, p)).leftCols(q);
    KmeansModel km = kmeans(sc, k_modes, derive_seed(opt.cluster_seed, 11, (std::uint64_t)p),
                            opt.cluster_restarts);
    for (Eigen::Index i = 0; i < n; ++i) sensorwise[(size_t)i][(size_t)p] = km.labels[(size_t)i];
    m.sensor_bases.push_back(std::move(b));
    m.sensor_retained.push_back(q);
    m.sensor_kmeans.push_back(std::move(km));
  }

  auto [cb, fm] = fit_cafpca(train, sensorwise, k_modes, opt.fve);
  m.cluster_bases = std::move(cb);
  m.features = std::move(fm);
  m.ttf_std = standardize_ln_ttf(train);

  // standardized features put every sensor on the same scale, so low-SNR
  // sensors cannot swamp the init the way raw scores would
  std::optional<std::vector<int>> init;
  if (opt.kmeans_init_labels)
    init = kmeans(m.features.x, k_modes, derive_seed(opt.cluster_seed, 12), opt.cluster_restarts)
               .labels;
  m.fit = fit_em(m.features, m.ttf_std.y, k_modes, lambda, alpha, em,
                 init ? &*init : nullptr);
  m.labels = m.fit.hard_labels;
  m.selected_sensors.assign((size_t)k_modes, {});
  for (const auto& e : m.fit.selection)
    if (e.significant) m.selected_sensors[(size_t)e.mode].push_back(e.sensor);
  return m;
}

// Features for unseen units under a fitted offline model: sensor-wise cluster
// assignment by nearest K-means centroid, scores against that cluster's
// basis, standardization with the training constants.
inline Eigen::MatrixXd featurize(const OfflineModel& m, const SignalDataset& d) {
  const Eigen::Index n = d.n_systems(), p_count = d.n_sensors();
  Eigen::MatrixXd x(n, m.features.n_features());
  for (Eigen::Index p = 0; p < p_count; ++p) {
    Eigen::MatrixXd curves = sensor_curves(d, p);
    Eigen::MatrixXd sc =
        pace_scores(m.sensor_bases[(size_t)p], curves).leftCols(m.sensor_retained[(size_t)p]);
    const auto& km = m.sensor_kmeans[(size_t)p];
    for (Eigen::Index i = 0; i < n; ++i) {
      int lab = 0;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < km.centroids.rows(); ++c) {
        double dist = (sc.row(i) - km.centroids.row(c)).squaredNorm();
        if (dist < best) { best = dist; lab = (int)c; }
      }
      const EigenBasis& b = m.cluster_bases.bases[(size_t)p][(size_t)lab];
      Eigen::MatrixXd s = pace_scores(b, curves.row(i));
      Eigen::Index qp = m.cluster_bases.retained[(size_t)p];
      Eigen::Index off = m.features.group_offsets[(size_t)p];
      for (Eigen::Index j = 0; j < qp; ++j)
        x(i, off + j) = j < s.cols() ? s(0, j) : 0.0;
    }
  }
  x.rowwise() -= m.features.means.transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) /= m.features.sds[j];
  return x;
}

// Prior-weighted mixture mean of the standardized response; responsibilities
// need the response itself, so the prediction uses pi as weights.
inline Eigen::VectorXd predict_y(const MixtureParams& th, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index k = 0; k < th.n_modes(); ++k)
    out += th.pi[k] * ((x * th.phi[(size_t)k]).array() + th.phi0[k]).matrix() / th.rho[k];
  return out;
}

// ---- cross-validation over the (lambda, alpha) grid ------------------------

struct CvConfig {
  int folds = 5;
  std::vector<double> lambda_grid;  // defaults to 20 points 0.0050..0.4000
  std::vector<double> alpha_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::uint64_t seed = 0;

  CvConfig() {
    for (int i = 0; i < 20; ++i) lambda_grid.push_back(0.0050 + i * 0.0208 - (i == 19 ? 0.0002 : 0));
    lambda_grid[19] = 0.4000;
  }
};

struct CvCell {
  double lambda, alpha, mse;
  int folds_used;
};

struct CvResult {
  double best_lambda = 0, best_alpha = 0;
  std::vector<CvCell> table;
};

inline SignalDataset subset_dataset(const SignalDataset& d, const std::vector<Eigen::Index>& ix) {
  SignalDataset out;
  out.sensor_ids = d.sensor_ids;
  out.time_grid = d.time_grid;
  out.truncated_at = d.truncated_at;
  for (auto i : ix) out.systems.push_back(d.systems[(size_t)i]);
  return out;
}

inline CvResult cross_validate(const SignalDataset& train, int k_modes, const CvConfig& cv,
                               const EmConfig& em = {}, const OfflineOptions& opt = {}) {
  const Eigen::Index n = train.n_systems();
  if (n < cv.folds) throw std::invalid_argument("cross_validate: N < folds");
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = substream(cv.seed, 0xcfULL);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<Eigen::Index>> fold_ix((size_t)cv.folds);
  for (Eigen::Index i = 0; i < n; ++i) fold_ix[(size_t)(i % cv.folds)].push_back(order[(size_t)i]);

  CvResult res;
  double best = std::numeric_limits<double>::infinity();
  for (double alpha : cv.alpha_grid)
    for (double lambda : cv.lambda_grid) {
      double mse = 0;
      long count = 0;
      int used = 0;
      for (int f = 0; f < cv.folds; ++f) {
        std::vector<Eigen::Index> tr, te = fold_ix[(size_t)f];
        for (int g = 0; g < cv.folds; ++g)
          if (g != f) tr.insert(tr.end(), fold_ix[(size_t)g].begin(), fold_ix[(size_t)g].end());
        SignalDataset dtr = subset_dataset(train, tr), dte = subset_dataset(train, te);
        try {
          OfflineModel m = offline_fit(dtr, k_modes, lambda, alpha, em, opt);
          Eigen::MatrixXd xte = featurize(m, dte);
          Eigen::VectorXd yhat = predict_y(m.fit.params, xte);
          for (Eigen::Index i = 0; i < dte.n_systems(); ++i) {
            double yte = (std::log(*dte.systems[(size_t)i].ttf) - m.ttf_std.ln_mean) / m.ttf_std.ln_var;
            mse += (yhat[i] - yte) * (yhat[i] - yte);
            ++count;
          }
          ++used;
        } catch (const std::exception&) {
          // degenerate fold, skipped
        }
      }
      if (count == 0) continue;
      mse /= (double)count;
      res.table.push_back({lambda, alpha, mse, used});
      if (mse < best) { best = mse; res.best_lambda = lambda; res.best_alpha = alpha; }
    }
  if (res.table.empty()) throw std::runtime_error("cross_validate: every grid point failed");
  return res;
}

// ---- online: smoothing -> MFPCA -> KNN -> weighted regression -> RUL -------

struct OnlineContext {
  double t_star = 0;
  Eigen::Index g_count = 0;  // grid points observed
  Eigen::VectorXd grid;      // restricted grid
  std::vector<Eigen::Index> surviving;
  std::vector<int> survivor_labels;
  std::vector<Eigen::Index> union_sensors;
  std::vector<std::vector<Eigen::Index>> mode_sensors;
  MfpcaModel union_model;
  std::vector<MfpcaModel> mode_models;
  std::vector<std::vector<Eigen::Index>> mode_members;  // row index into surviving order
  SmoothingConfig smoothing;
  KnnConfig knn;
};

namespace detail {

inline Eigen::MatrixXd stack_smoothed(const SystemRecord& rec, const Eigen::VectorXd& grid,
                                      const std::vector<Eigen::Index>& sensors,
                                      const SmoothingConfig& cfg) {
  const Eigen::Index g = grid.size();
  Eigen::MatrixXd row(1, (Eigen::Index)sensors.size() * g);
  for (size_t b = 0; b < sensors.size(); ++b) {
    Eigen::VectorXd s = rec.values.row(sensors[b]).head(g).transpose();
    row.block(0, (Eigen::Index)b * g, 1, g) = smooth_rloess(s, grid, cfg).transpose();
  }
  return row;
}

}  // namespace detail

inline OnlineContext online_prepare(const SignalDataset& train_full, const OfflineModel& offline,
                                    double t_star, const SmoothingConfig& smoothing = {},
                                    const KnnConfig& knn = {}, double fve = 0.95) {
  OnlineContext ctx;
  ctx.t_star = t_star;
  ctx.smoothing = smoothing;
  ctx.knn = knn;
  Eigen::Index g = 0;
  while (g < train_full.grid_len() && train_full.time_grid[g] <= t_star) ++g;
  if (g < 3) throw std::invalid_argument("online_prepare: too few grid points before t_star");
  ctx.g_count = g;
  ctx.grid = train_full.time_grid.head(g);

  for (Eigen::Index i = 0; i < train_full.n_systems(); ++i)
    if (train_full.systems[(size_t)i].ttf && *train_full.systems[(size_t)i].ttf > t_star)
      ctx.surviving.push_back(i);
  if (ctx.surviving.empty()) throw std::invalid_argument("online_prepare: no surviving units");

  std::vector<bool> in_union((size_t)train_full.n_sensors(), false);
  ctx.mode_sensors.resize((size_t)offline.k_modes);
  for (int k = 0; k < offline.k_modes; ++k) {
    ctx.mode_sensors[(size_t)k] = offline.selected_sensors[(size_t)k];
    for (auto p : ctx.mode_sensors[(size_t)k]) in_union[(size_t)p] = true;
  }
  for (Eigen::Index p = 0; p < train_full.n_sensors(); ++p)
    if (in_union[(size_t)p]) ctx.union_sensors.push_back(p);
  if (ctx.union_sensors.empty())
    throw std::invalid_argument("online_prepare: empty union of selected sensors");
  for (auto& ms : ctx.mode_sensors)
    if (ms.empty()) ms = ctx.union_sensors;  // degenerate mode falls back to the union

  const Eigen::Index ns = (Eigen::Index)ctx.surviving.size();
  Eigen::MatrixXd union_stack(ns, (Eigen::Index)ctx.union_sensors.size() * g);
  std::map<Eigen::Index, Eigen::Index> union_pos;
  for (size_t b = 0; b < ctx.union_sensors.size(); ++b) union_pos[ctx.union_sensors[b]] = (Eigen::Index)b;
  for (Eigen::Index r = 0; r < ns; ++r) {
    const auto& rec = train_full.systems[(size_t)ctx.surviving[(size_t)r]];
    union_stack.row(r) = detail::stack_smoothed(rec, ctx.grid, ctx.union_sensors, smoothing);
    ctx.survivor_labels.push_back(offline.labels[(size_t)ctx.surviving[(size_t)r]]);
  }
  ctx.union_model = fit_mfpca(union_stack, ctx.grid, (Eigen::Index)ctx.union_sensors.size(), fve);

  ctx.mode_members.resize((size_t)offline.k_modes);
  ctx.mode_models.resize((size_t)offline.k_modes);
  for (int k = 0; k < offline.k_modes; ++k) {
    for (Eigen::Index r = 0; r < ns; ++r)
      if (ctx.survivor_labels[(size_t)r] == k) ctx.mode_members[(size_t)k].push_back(r);
    if (ctx.mode_members[(size_t)k].size() < 2) continue;  // diagnosed later via fallback
    const auto& sensors = ctx.mode_sensors[(size_t)k];
    Eigen::MatrixXd stack((Eigen::Index)ctx.mode_members[(size_t)k].size(),
                          (Eigen::Index)sensors.size() * g);
    bool subset_of_union = true;
    for (auto p : sensors)
      if (!union_pos.count(p)) subset_of_union = false;
    for (size_t r = 0; r < ctx.mode_members[(size_t)k].size(); ++r) {
      Eigen::Index row = ctx.mode_members[(size_t)k][r];
      if (subset_of_union) {
        for (size_t b = 0; b < sensors.size(); ++b)
          stack.block((Eigen::Index)r, (Eigen::Index)b * g, 1, g) =
              union_stack.block(row, union_pos[sensors[b]] * g, 1, g);
      } else {
        const auto& rec = train_full.systems[(size_t)ctx.surviving[(size_t)row]];
        stack.row((Eigen::Index)r) = detail::stack_smoothed(rec, ctx.grid, sensors, smoothing);
      }
    }
    ctx.mode_models[(size_t)k] = fit_mfpca(stack, ctx.grid, (Eigen::Index)sensors.size(), fve);
  }
  return ctx;
}

inline int diagnose(const OnlineContext& ctx, const SystemRecord& unit) {
  if (unit.observed() < ctx.g_count)
    throw std::invalid_argument("diagnose: unit not observed through t_star");
  Eigen::MatrixXd stacked =
      detail::stack_smoothed(unit, ctx.grid, ctx.union_sensors, ctx.smoothing);
  Eigen::VectorXd score = mfpca_scores(ctx.union_model, stacked).row(0);
  Eigen::MatrixXd train = ctx.union_model.train_scores;
  return knn_diagnose(train, ctx.survivor_labels, score, ctx.knn);
}

struct RegressionModel {
  int mode = 0;
  double c0 = 0;
  Eigen::VectorXd coef;
  Eigen::VectorXd weights;
  double lasso_lambda = 0;
  double ln_mean = 0, ln_var = 0;
};

// Weighted lasso regression of the standardized ln TTF on mode-specific MFPC
// scores; unit weights are reciprocal distances to the mode centroid.
inline RegressionModel fit_weighted_regression(const OnlineContext& ctx, int mode,
                                               const SignalDataset& train_full,
                                               const StandardizedTtf& ttf_std) {
  const auto& members = ctx.mode_members[(size_t)mode];
  const MfpcaModel& mm = ctx.mode_models[(size_t)mode];
  if (members.size() < (size_t)(mm.retained + 2))
    throw std::invalid_argument("fit_weighted_regression: too few surviving units for mode");
  Eigen::MatrixXd z((Eigen::Index)members.size(), mm.retained);
  Eigen::VectorXd y((Eigen::Index)members.size());
  for (size_t r = 0; r < members.size(); ++r) {
    z.row((Eigen::Index)r) = mm.train_scores.row((Eigen::Index)r);  // mode model rows follow member order
    double ttf = *train_full.systems[(size_t)ctx.surviving[(size_t)members[r]]].ttf;
    y[(Eigen::Index)r] = (std::log(ttf) - ttf_std.ln_mean) / ttf_std.ln_var;
  }
  Eigen::RowVectorXd centroid = z.colwise().mean();
  Eigen::VectorXd w((Eigen::Index)members.size());
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    w[r] = 1.0 / ((z.row(r) - centroid).norm() + 1e-8);

  auto path = lasso_loocv(z, y, w);
  RegressionModel rm;
  rm.mode = mode;
  rm.c0 = path.best.c0;
  rm.coef = path.best.coef;
  rm.weights = w;
  rm.lasso_lambda = path.best.lambda;
  rm.ln_mean = ttf_std.ln_mean;
  rm.ln_var = ttf_std.ln_var;
  return rm;
}

struct RulPrediction {
  std::string unit_id;
  double t_star = 0;
  int mode = 0;
  double rul = 0;
  double estimated_life = 0;
  bool clamped = false;
  Eigen::VectorXd scores;
};

inline RulPrediction predict_rul(const RegressionModel& model, const OnlineContext& ctx,
                                 const SystemRecord& unit) {
  RulPrediction out;
  out.unit_id = unit.id;
  out.t_star = ctx.t_star;
  out.mode = model.mode;
  Eigen::MatrixXd stacked = detail::stack_smoothed(unit, ctx.grid,
                                                   ctx.mode_sensors[(size_t)model.mode],
                                                   ctx.smoothing);
  out.scores = mfpca_scores(ctx.mode_models[(size_t)model.mode], stacked).row(0);
  if (!out.scores.allFinite()) throw std::runtime_error("predict_rul: non-finite scores");
  double yhat = model.c0 + out.scores.dot(model.coef);
  // destandardize with the same ln-variance scaling used when forming y
  double life = std::exp(yhat * model.ln_var + model.ln_mean);
  out.rul = life - ctx.t_star;
  if (out.rul < 0) { out.rul = 0; out.clamped = true; }
  out.estimated_life = ctx.t_star + out.rul;
  return out;
}

inline double relative_error(double estimated_life, double actual_life) {
  if (!(actual_life > 0)) throw std::invalid_argument("relative_error: nonpositive actual life");
  return std::abs(estimated_life - actual_life) / actual_life * 100.0;
}

// ---- end-to-end evaluation over life percentiles ----------------------------

struct EvalRecord {
  std::string unit_id;
  double percentile, t_star, actual_life, estimated_life, rel_error;
  int true_mode, diagnosed_mode;
};

// Observation times are snapped to the shared grid so contexts (MFPCA bases,
// regressions) can be shared across test units that truncate at the same
// grid point.
inline std::vector<EvalRecord> evaluate_sim(const SignalDataset& train_full,
                                            const OfflineModel& offline,
                                            const SignalDataset& test,
                                            const std::vector<int>& test_modes,
                                            const std::vector<double>& percentiles,
                                            const SmoothingConfig& smoothing = {},
                                            const KnnConfig& knn = {}, double fve = 0.95) {
  std::vector<EvalRecord> records;
  std::map<Eigen::Index, std::shared_ptr<OnlineContext>> ctx_cache;
  std::map<std::pair<Eigen::Index, int>, std::shared_ptr<RegressionModel>> reg_cache;

  for (double pct : percentiles) {
    for (Eigen::Index u = 0; u < test.n_systems(); ++u) {
      const auto& unit = test.systems[(size_t)u];
      double ttf = *unit.ttf;
      double t_raw = pct * ttf;
      Eigen::Index g = 0;
      while (g < train_full.grid_len() && train_full.time_grid[g] <= t_raw) ++g;
      if (g < 3) continue;  // too early to observe anything useful
      double t_star = train_full.time_grid[g - 1];

      auto it = ctx_cache.find(g);
      if (it == ctx_cache.end()) {
        auto ctx = std::make_shared<OnlineContext>(
            online_prepare(train_full, offline, t_star, smoothing, knn, fve));
        it = ctx_cache.emplace(g, std::move(ctx)).first;
      }
      const OnlineContext& ctx = *it->second;

      int k_star = diagnose(ctx, unit);
      auto rit = reg_cache.find({g, k_star});
      if (rit == reg_cache.end()) {
        auto rm = std::make_shared<RegressionModel>(
            fit_weighted_regression(ctx, k_star, train_full, offline.ttf_std));
        rit = reg_cache.emplace(std::make_pair(g, k_star), std::move(rm)).first;
      }
      RulPrediction pred = predict_rul(*rit->second, ctx, unit);
      EvalRecord rec;
      rec.unit_id = unit.id;
      rec.percentile = pct;
      rec.t_star = t_star;
      rec.actual_life = ttf;
      rec.estimated_life = pred.estimated_life;
      rec.rel_error = relative_error(pred.estimated_life, ttf);
      rec.true_mode = test_modes[(size_t)u];
      rec.diagnosed_mode = k_star;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

}  // namespace prognos
