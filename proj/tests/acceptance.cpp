// Acceptance gate: one line per criterion, nonzero exit if any fail.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "prognos/cluster.hpp"
#include "prognos/cmapss.hpp"
#include "prognos/pipeline.hpp"
#include "prognos/simgen.hpp"

namespace fs = std::filesystem;
using namespace prognos;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail = "") {
  std::cout << "criterion " << criterion << " (" << name << "): " << (pass ? "PASS" : "FAIL");
  if (!detail.empty()) std::cout << " — " << detail;
  std::cout << std::endl;
  if (!pass) ++g_failures;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// ---- shared synthetic fixtures ----------------------------------------------

struct Fixture {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  MixtureParams th;
};

Fixture random_fixture(int n, int k, int f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0, 1);
  Fixture fx;
  fx.x.resize(n, f);
  fx.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) fx.x(i, j) = nd(rng);
    fx.y[i] = nd(rng);
  }
  fx.th.pi.resize(k);
  fx.th.rho.resize(k);
  fx.th.phi0.resize(k);
  fx.th.phi.assign((size_t)k, Eigen::VectorXd::Zero(f));
  for (int c = 0; c < k; ++c) {
    fx.th.pi[c] = 0.2 + std::abs(nd(rng));
    fx.th.rho[c] = 0.5 + std::abs(nd(rng));
    fx.th.phi0[c] = 0.3 * nd(rng);
    for (int j = 0; j < f; ++j) fx.th.phi[(size_t)c][j] = 0.5 * nd(rng);
  }
  fx.th.pi /= fx.th.pi.sum();
  return fx;
}

Eigen::MatrixXd random_simplex_rows(int n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ex(1.0);
  Eigen::MatrixXd g(n, k);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int c = 0; c < k; ++c) { g(i, c) = ex(rng); s += g(i, c); }
    g.row(i) /= s;
  }
  return g;
}

// ---- criterion 1 + 2: EM trace and the expected-CDLL bound -------------------

void criterion_monotonicity(const std::vector<std::vector<double>>& extra_traces) {
  bool ok = true;
  double worst = 0;
  auto check_trace = [&](const std::vector<double>& tr) {
    for (size_t t = 1; t < tr.size(); ++t) {
      double rise = tr[t] - tr[t - 1];
      worst = std::max(worst, rise);
      if (rise > 1e-8) ok = false;
    }
  };
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Fixture fx = random_fixture(80, 2, 6, 3000 + seed);
    FeatureMatrix fm;
    fm.x = fx.x;
    fm.group_offsets = {0, 2, 4, 6};
    fm.means = Eigen::VectorXd::Zero(6);
    fm.sds = Eigen::VectorXd::Ones(6);
    EmConfig cfg;
    cfg.seed = seed;
    for (double lambda : {0.0, 0.05, 0.3})
      check_trace(fit_em(fm, fx.y, 2, lambda, 0.5, cfg).objective_trace);
  }
  for (const auto& tr : extra_traces) check_trace(tr);
  std::ostringstream d;
  d << "largest objective rise " << worst;
  report(1, "EM monotone objective", ok, d.str());
}

void criterion_bound_identity() {
  bool ok = true;
  double worst_gap = 0, worst_violation = -1e300;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Fixture fx = random_fixture(30, 3, 4, 4000 + seed);
    Eigen::MatrixXd g = random_simplex_rows(30, 3, 4400 + seed);
    auto chk = check_cdll_bound(fx.th, g, fx.x, fx.y);
    worst_violation = std::max(worst_violation, chk.lhs - chk.rhs);
    if (chk.lhs > chk.rhs + 1e-9) ok = false;
    Eigen::MatrixXd post = e_step(fx.th, fx.x, fx.y);
    auto at_post = check_cdll_bound(fx.th, post, fx.x, fx.y, true);
    worst_gap = std::max(worst_gap, *at_post.posterior_gap);
    if (*at_post.posterior_gap > 1e-9) ok = false;
  }
  std::ostringstream d;
  d << "max bound violation " << worst_violation << ", max posterior identity gap " << worst_gap;
  report(2, "expected-CDLL lower bound", ok, d.str());
}

// ---- criterion 3: prox oracle -------------------------------------------------

void criterion_prox() {
  bool ok = true;
  double worst = 0;
  std::mt19937_64 rng(5000);
  std::normal_distribution<double> nd(0, 2);
  std::uniform_real_distribution<double> ud(0, 1.5);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd v(2);
    v << nd(rng), nd(rng);
    double t1 = ud(rng), t2 = ud(rng);
    Eigen::VectorXd fast = sgl_prox(v, t1, t2);
    auto obj = [&](double a, double b) {
      return 0.5 * ((a - v[0]) * (a - v[0]) + (b - v[1]) * (b - v[1])) +
             t1 * (std::abs(a) + std::abs(b)) + t2 * std::hypot(a, b);
    };
    Eigen::Vector2d arg(0, 0);
    double best = std::numeric_limits<double>::infinity();
    for (double a = -6; a <= 6; a += 1e-2)
      for (double b = -6; b <= 6; b += 1e-2)
        if (double f = obj(a, b); f < best) { best = f; arg << a, b; }
    Eigen::Vector2d c = arg;
    for (double a = c[0] - 2e-2; a <= c[0] + 2e-2; a += 1e-4)
      for (double b = c[1] - 2e-2; b <= c[1] + 2e-2; b += 1e-4)
        if (double f = obj(a, b); f < best) { best = f; arg << a, b; }
    double err = (fast - arg).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    if (err > 2e-3) ok = false;
  }
  // lambda >= lambda_max kills every group exactly
  Fixture fx = random_fixture(50, 2, 6, 5100);
  Eigen::MatrixXd gamma = random_simplex_rows(50, 2, 5200);
  Eigen::VectorXd pi = gamma.colwise().mean();
  PenaltyConfig pen{0.0, 0.5, {0, 2, 4, 6}};
  double lmax = lambda_max(gamma, pi, fx.x, fx.y, pen);
  pen.lambda = lmax * 1.0001;
  EmConfig cfg;
  for (int k = 0; k < 2; ++k) {
    auto sol = m_step_mode(gamma.col(k), pi[k], fx.x, fx.y, pen, cfg);
    if (sol.phi.norm() != 0.0) ok = false;
  }
  std::ostringstream d;
  d << "max argmin deviation " << worst;
  report(3, "sparse-group prox oracle", ok, d.str());
}

// ---- criterion 4: score oracle -------------------------------------------------

void criterion_scores() {
  bool ok = true;
  double worst_score = 0, worst_ortho = 0, worst_recon = 0;
  std::mt19937_64 rng(6000);
  std::normal_distribution<double> nd(0, 1);
  const int g = 60, n = 40, rank = 3;
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(g, 0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd curves(n, g);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < g; ++t) {
        double tt = grid[t];
        curves(i, t) = 1 + tt;  // mean
      }
    Eigen::MatrixXd loadings(n, rank);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < rank; ++r) loadings(i, r) = nd(rng) * (3.0 - r);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < g; ++t) {
        double tt = grid[t];
        curves(i, t) += loadings(i, 0) * std::sin(2 * M_PI * tt) +
                        loadings(i, 1) * std::cos(2 * M_PI * tt) +
                        loadings(i, 2) * std::sin(4 * M_PI * tt);
      }
    EigenBasis b = fit_fpca(curves, grid);
    b.noise_var = 0;  // curves are noise-free; evaluate the score path at zero error variance
    // orthonormality under quadrature
    for (Eigen::Index a = 0; a < b.eigenfunctions.rows(); ++a)
      for (Eigen::Index c = 0; c <= a; ++c) {
        double ip = (b.eigenfunctions.row(a).array() * b.quadrature_weights.transpose().array() *
                     b.eigenfunctions.row(c).array())
                        .sum();
        double defect = std::abs(ip - (a == c ? 1.0 : 0.0));
        worst_ortho = std::max(worst_ortho, defect);
        if (defect > 1e-8) ok = false;
      }
    // zero-noise scores match the independent trapezoid projection
    Eigen::MatrixXd sc = pace_scores(b, curves);
    for (int i = 0; i < n; ++i)
      for (Eigen::Index m = 0; m < b.eigenfunctions.rows(); ++m) {
        Eigen::VectorXd centered = curves.row(i).transpose() - b.mean;
        double proj = (b.eigenfunctions.row(m).transpose().array() *
                       b.quadrature_weights.array() * centered.array())
                          .sum();
        double shrink = b.noise_var > 0
                            ? b.eigenvalues[m] / (b.eigenvalues[m] + b.noise_var)
                            : 1.0;
        double err = std::abs(sc(i, m) - shrink * proj);
        worst_score = std::max(worst_score, err);
        if (err > 1e-8) ok = false;
      }
    // rank-r reconstruction of a noise-free ensemble
    Eigen::Index q = select_fve(b.eigenvalues, 0.9999999);
    Eigen::MatrixXd recon = reconstruct(b, sc, q);
    double err = (recon - curves).cwiseAbs().maxCoeff();
    worst_recon = std::max(worst_recon, err);
    if (err > 1e-6) ok = false;
  }
  std::ostringstream d;
  d << "score err " << worst_score << ", orthonormality defect " << worst_ortho
    << ", reconstruction err " << worst_recon;
  report(4, "FPCA score oracle", ok, d.str());
}

// ---- criteria 5-7: simulation study ----------------------------------------

struct RegimeResult {
  std::vector<double> mode_acc[2];          // per true mode, one entry per seed
  std::vector<std::array<int, 2>> top4_hits;  // per seed, per true mode
  std::vector<std::vector<double>> traces;
  SimDataset first_data;    // seed 1 dataset kept for the RUL criterion
  OfflineModel first_model;
};

RegimeResult run_regime(double snr_lo, double snr_hi, double lambda, double alpha,
                        const std::vector<std::vector<int>>& informative) {
  RegimeResult res;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig cfg;
    cfg.snr_informative = {snr_lo, snr_hi};
    cfg.seed = seed;
    SimDataset d = gen_dataset(cfg);
    EmConfig em;
    em.seed = seed;
    OfflineOptions opt;
    opt.cluster_seed = seed;
    opt.kmeans_init_labels = true;
    OfflineModel m = offline_fit(d.train, 2, lambda, alpha, em, opt);
    res.traces.push_back(m.fit.objective_trace);

    auto [perm, acc] = align_labels(m.labels, d.train_modes, 2);
    (void)acc;
    for (int k = 0; k < 2; ++k) {
      long hit = 0, tot = 0;
      for (size_t i = 0; i < d.train_modes.size(); ++i)
        if (d.train_modes[i] == k) {
          ++tot;
          if (perm[(size_t)m.labels[i]] == k) ++hit;
        }
      res.mode_acc[k].push_back((double)hit / (double)tot);
    }

    // top-4 sensors by coefficient-group norm, mapped to true modes via perm
    std::array<int, 2> hits = {0, 0};
    for (int fitted = 0; fitted < 2; ++fitted) {
      int true_mode = perm[(size_t)fitted];
      std::vector<std::pair<double, int>> ranked;  // (norm, 1-based sensor)
      for (const auto& e : m.fit.selection)
        if (e.mode == fitted) ranked.push_back({e.norm, (int)e.sensor + 1});
      std::sort(ranked.begin(), ranked.end(), std::greater<>());
      for (size_t r = 0; r < 4 && r < ranked.size(); ++r) {
        const auto& truth = informative[(size_t)true_mode];
        if (std::find(truth.begin(), truth.end(), ranked[r].second) != truth.end())
          ++hits[(size_t)true_mode];
      }
    }
    res.top4_hits.push_back(hits);

    if (seed == 1) {
      res.first_data = std::move(d);
      res.first_model = std::move(m);
    }
  }
  return res;
}

void criterion_rul_trend(const SimDataset& d, const OfflineModel& m) {
  std::vector<double> percentiles;
  for (int p = 1; p <= 9; ++p) percentiles.push_back(p / 10.0);
  bool ok = true;
  std::string detail;
  try {
    auto records = evaluate_sim(d.train_full, m, d.test, d.test_modes, percentiles);
    std::vector<double> med;
    for (double pct : percentiles) {
      std::vector<double> errs;
      for (const auto& r : records)
        if (r.percentile == pct) errs.push_back(r.rel_error);
      if (errs.empty()) { med.push_back(std::nan("")); continue; }
      med.push_back(median_of(errs));
    }
    int nonincreasing = 0;
    for (size_t s = 1; s < med.size(); ++s)
      if (med[s] <= med[s - 1] + 1e-12) ++nonincreasing;
    bool late_better = med.back() < med.front();
    ok = late_better && nonincreasing >= 6;
    std::ostringstream ss;
    ss << "median rel error by life fraction:";
    for (double v : med) ss << " " << v;
    ss << " (nonincreasing steps " << nonincreasing << "/8)";
    detail = ss.str();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(7, "relative error shrinks late in life", ok, detail);
}

// ---- criterion 8: regression reductions --------------------------------------

void criterion_regression() {
  bool ok = true;
  std::mt19937_64 rng(8000);
  std::normal_distribution<double> nd(0, 1);
  int n = 50, h = 4;
  Eigen::MatrixXd z(n, h);
  Eigen::VectorXd y(n), w = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < h; ++j) z(i, j) = nd(rng);
    y[i] = 1.2 * z(i, 0) - 0.4 * z(i, 2) + 0.7 + 0.2 * nd(rng);
  }
  LassoFit f = lasso_cd(z, y, w, 0.0, 50000, 1e-14);
  Eigen::MatrixXd xa(n, h + 1);
  xa << Eigen::VectorXd::Ones(n), z;
  Eigen::VectorXd ols = (xa.transpose() * xa).ldlt().solve(xa.transpose() * y);
  double err = std::abs(f.c0 - ols[0]);
  for (int j = 0; j < h; ++j) err = std::max(err, std::abs(f.coef[j] - ols[j + 1]));
  if (err > 1e-6) ok = false;

  double round_err = 0;
  for (double ttf : {0.31, 0.55, 0.88}) {
    double ln_mean = -0.6, ln_var = 0.02;
    double ystd = (std::log(ttf) - ln_mean) / ln_var;
    double back = std::exp(ystd * ln_var + ln_mean);
    round_err = std::max(round_err, std::abs(back - ttf) / ttf);
  }
  if (round_err > 1e-9) ok = false;
  std::ostringstream d;
  d << "OLS deviation " << err << ", destandardization rel err " << round_err;
  report(8, "regression reductions", ok, d.str());
}

// ---- criterion 9: turbofan data (conditional on data availability) -----------

std::string find_cmapss_dir() {
  const char* env = std::getenv("PROGNOS_CMAPSS_DIR");
  std::vector<std::string> candidates;
  if (env) candidates.push_back(env);
  candidates.insert(candidates.end(),
                    {"data/cmapss", "../data/cmapss", "../../data/cmapss", "/root/proj/data/cmapss"});
  for (const auto& c : candidates)
    if (fs::exists(fs::path(c) / "train_FD003.txt")) return c;
  return "";
}

void criterion_cmapss() {
  std::string dir = find_cmapss_dir();
  if (dir.empty()) {
    std::cout << "criterion 9 (turbofan dataset): SKIP — public FD003 files not present "
                 "(set PROGNOS_CMAPSS_DIR or place train_FD003.txt/test_FD003.txt/RUL_FD003.txt "
                 "under data/cmapss)"
              << std::endl;
    return;
  }
  bool ok = true;
  std::string detail;
  try {
    fs::path d(dir);
    CmapssDataset cm = ingest_cmapss((d / "train_FD003.txt").string(),
                                     (d / "test_FD003.txt").string(),
                                     (d / "RUL_FD003.txt").string());
    if (cm.train_full.systems.size() != 100) ok = false;
    if (cm.kept_sensors.size() != 14) ok = false;

    SignalDataset train = truncate_to_min_ttf(cm.train_full);
    EmConfig em;
    em.seed = 1;
    OfflineOptions opt;
    opt.cluster_seed = 1;
    opt.kmeans_init_labels = true;
    OfflineModel m = offline_fit(train, 2, 0.1089, 1.0, em, opt);

    std::map<Eigen::Index, std::shared_ptr<OnlineContext>> ctx_cache;
    std::map<std::pair<Eigen::Index, int>, std::shared_ptr<RegressionModel>> reg_cache;
    long finite = 0;
    std::vector<double> err_le20, err_le100;
    for (size_t u = 0; u < cm.test.systems.size(); ++u) {
      const auto& unit = cm.test.systems[u];
      Eigen::Index g = unit.observed();
      double t_star = cm.train_full.time_grid[g - 1];
      auto it = ctx_cache.find(g);
      if (it == ctx_cache.end())
        it = ctx_cache
                 .emplace(g, std::make_shared<OnlineContext>(
                                 online_prepare(cm.train_full, m, t_star)))
                 .first;
      int k_star = diagnose(*it->second, unit);
      auto rit = reg_cache.find({g, k_star});
      if (rit == reg_cache.end())
        rit = reg_cache
                  .emplace(std::make_pair(g, k_star),
                           std::make_shared<RegressionModel>(fit_weighted_regression(
                               *it->second, k_star, cm.train_full, m.ttf_std)))
                  .first;
      RulPrediction pred = predict_rul(*rit->second, *it->second, unit);
      if (std::isfinite(pred.rul)) ++finite;
      double actual_life = (double)g + cm.true_rul[u];
      double rel = relative_error(pred.estimated_life, actual_life);
      if (cm.true_rul[u] <= 20) err_le20.push_back(rel);
      if (cm.true_rul[u] <= 100) err_le100.push_back(rel);
    }
    if (finite != (long)cm.test.systems.size()) ok = false;
    double mean20 = 0, mean100 = 0;
    for (double e : err_le20) mean20 += e;
    mean20 /= std::max<size_t>(1, err_le20.size());
    for (double e : err_le100) mean100 += e;
    mean100 /= std::max<size_t>(1, err_le100.size());
    if (!(mean20 < mean100)) ok = false;
    std::ostringstream ss;
    ss << finite << " finite predictions; mean rel err RUL<=20: " << mean20
       << "%, RUL<=100: " << mean100 << "%";
    detail = ss.str();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(9, "turbofan dataset", ok, detail);
}

// ---- criterion 10: determinism ------------------------------------------------

bool same_dir_bytes(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a)) names_a.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names_b.push_back(e.path().filename().string());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) return false;
  for (const auto& n : names_a) {
    std::ifstream fa(a / n, std::ios::binary), fb(b / n, std::ios::binary);
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) return false;
  }
  return true;
}

void criterion_determinism(const char* argv0) {
  bool ok = true;
  std::string detail;
  fs::path tmp = fs::temp_directory_path() / "prognos_acceptance_det";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);

  fs::path cli = fs::path(argv0).parent_path() / ".." / "tools" / "prognos";
  if (fs::exists(cli)) {
    std::ofstream cfgf(tmp / "sim.cfg");
    cfgf << "seed = 3\nn_sensors = 8\nn_per_mode = 20\ntrain_per_mode = 15\ngrid_len = 40\n";
    cfgf.close();
    std::string base = "\"" + cli.string() + "\" simulate --config \"" + (tmp / "sim.cfg").string() +
                       "\" --out ";
    int rc1 = std::system((base + "\"" + (tmp / "a").string() + "\" > /dev/null").c_str());
    int rc2 = std::system((base + "\"" + (tmp / "b").string() + "\" > /dev/null").c_str());
    if (rc1 != 0 || rc2 != 0) {
      ok = false;
      detail = "simulate subcommand failed";
    } else if (!same_dir_bytes(tmp / "a", tmp / "b")) {
      ok = false;
      detail = "simulate outputs differ between identical runs";
    } else {
      detail = "simulate outputs byte-identical across reruns";
    }
  } else {
    detail = "CLI binary not found; falling back to library-level check";
  }

  // library-level: identical seeds give identical fits
  SimConfig cfg;
  cfg.n_sensors = 8;
  cfg.n_per_mode = 20;
  cfg.train_per_mode = 15;
  cfg.grid_len = 40;
  cfg.informative = {{2, 5}, {3, 6}};
  cfg.seed = 3;
  SimDataset d1 = gen_dataset(cfg), d2 = gen_dataset(cfg);
  EmConfig em;
  em.seed = 3;
  OfflineOptions opt;
  opt.cluster_seed = 3;
  opt.kmeans_init_labels = true;
  OfflineModel m1 = offline_fit(d1.train, 2, 0.02, 0.5, em, opt);
  OfflineModel m2 = offline_fit(d2.train, 2, 0.02, 0.5, em, opt);
  if (m1.labels != m2.labels) ok = false;
  if ((m1.fit.params.pi - m2.fit.params.pi).cwiseAbs().maxCoeff() != 0) ok = false;
  for (size_t k = 0; k < m1.fit.params.phi.size(); ++k)
    if ((m1.fit.params.phi[k] - m2.fit.params.phi[k]).cwiseAbs().maxCoeff() != 0) ok = false;

  fs::remove_all(tmp, ec);
  report(10, "determinism", ok, detail);
}

}  // namespace

int main(int, char** argv) {
  criterion_bound_identity();
  criterion_prox();
  criterion_scores();
  criterion_regression();

  // simulation-study criteria share the fitted regimes
  const std::vector<std::vector<int>> informative = {{5, 12, 16, 19}, {3, 7, 9, 19}};
  RegimeResult lo = run_regime(2, 5, 0.0466, 1.0, informative);
  RegimeResult mid = run_regime(5, 8, 0.0258, 0.0, informative);
  RegimeResult hi = run_regime(8, 11, 0.0258, 0.25, informative);

  {
    bool ok = true;
    std::ostringstream d;
    d << "median per-mode accuracy:";
    auto check = [&](const char* name, RegimeResult& r, double floor_acc) {
      for (int k = 0; k < 2; ++k) {
        double med = median_of(r.mode_acc[k]);
        d << " " << name << "/m" << k + 1 << "=" << med;
        if (med < floor_acc) ok = false;
      }
    };
    check("snr[2,5]", lo, 0.70);
    check("snr[5,8]", mid, 0.45);
    check("snr[8,11]", hi, 0.70);
    report(5, "simulation clustering accuracy", ok, d.str());
  }

  {
    bool ok = true;
    std::ostringstream d;
    auto check = [&](const char* name, RegimeResult& r) {
      for (int k = 0; k < 2; ++k) {
        int good_seeds = 0;
        for (const auto& hits : r.top4_hits)
          if (hits[(size_t)k] >= 3) ++good_seeds;
        d << " " << name << "/m" << k + 1 << "=" << good_seeds << "/5";
        if (good_seeds < 3) ok = false;
      }
    };
    d << "seeds with >=3 of top-4 sensors informative:";
    check("snr[2,5]", lo);
    check("snr[8,11]", hi);
    report(6, "informative sensor recovery", ok, d.str());
  }

  {
    std::vector<std::vector<double>> traces;
    for (const auto* r : {&lo, &mid, &hi})
      traces.insert(traces.end(), r->traces.begin(), r->traces.end());
    criterion_monotonicity(traces);
  }

  criterion_rul_trend(hi.first_data, hi.first_model);
  criterion_cmapss();
  criterion_determinism(argv[0]);

  if (g_failures) {
    std::cout << g_failures << " criteria failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
