#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "prognos/rng.hpp"
#include "prognos/signal_data.hpp"

namespace prognos {

// Degradation-path simulator: latent path -theta/ln(t) on (0,1), failure on
// threshold crossing, per-sensor drift rates correlated with the latent rate,
// white noise at a per-sensor SNR.
struct SimConfig {
  std::vector<double> mu = {1.0, 0.8};        // per-mode degradation rate
  std::vector<double> threshold = {2.0, 1.5}; // per-mode failure level D_k
  std::vector<std::vector<int>> informative = {{5, 12, 16, 19}, {3, 7, 9, 19}};  // 1-based ids
  int n_sensors = 20;
  int n_per_mode = 200;
  int train_per_mode = 160;
  std::array<double, 2> snr_informative = {2, 5};
  std::array<double, 2> snr_noninformative = {1, 3};
  std::array<double, 2> rho_informative = {0.80, 0.99};
  std::array<double, 2> rho_noninformative = {0.1, 0.6};
  int grid_len = 100;
  double grid_lo = 0.01, grid_hi = 0.99;
  std::uint64_t seed = 0;

  int n_modes() const { return (int)mu.size(); }
  bool is_informative(int mode, int sensor_1based) const {
    for (int s : informative[(size_t)mode])
      if (s == sensor_1based) return true;
    return false;
  }
};

// First crossing time of -theta/ln(t) = D on (0,1).
inline double ttf_of(double theta, double d) {
  if (!(theta > 0) || !(d > 0)) throw std::invalid_argument("ttf_of: need positive theta and D");
  return std::exp(-theta / d);
}

inline Eigen::VectorXd gen_sensor_path(double theta_ip, double sigma, double sign,
                                       const Eigen::VectorXd& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    if (!(grid[g] > 0 && grid[g] < 1))
      throw std::invalid_argument("gen_sensor_path: grid must lie in (0,1)");
    double eps = sigma > 0 ? noise(rng) : 0.0;
    out[g] = sign * (-theta_ip / std::log(grid[g])) + eps;
  }
  return out;
}

struct SimDataset {
  SignalDataset train;   // truncated to the min train ttf
  SignalDataset train_full;  // same units on the full grid (online step input)
  SignalDataset test;    // full-grid signals, ttf known (held back for scoring)
  std::vector<int> train_modes, test_modes;
  std::vector<double> train_theta, test_theta;
};

inline SimDataset gen_dataset(const SimConfig& cfg) {
  const int k_modes = cfg.n_modes();
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(cfg.grid_len, cfg.grid_lo, cfg.grid_hi);

  // per-(mode, sensor) draws: correlation, SNR, and response direction (a
  // sensor rises or falls with degradation as a property of the sensor, not
  // of the individual unit)
  std::vector<std::vector<double>> rho((size_t)k_modes), snr((size_t)k_modes), sgn((size_t)k_modes);
  for (int k = 0; k < k_modes; ++k) {
    rho[(size_t)k].resize((size_t)cfg.n_sensors);
    snr[(size_t)k].resize((size_t)cfg.n_sensors);
    sgn[(size_t)k].resize((size_t)cfg.n_sensors);
    for (int p = 0; p < cfg.n_sensors; ++p) {
      auto rng = substream(cfg.seed, 1, (std::uint64_t)k, (std::uint64_t)p);
      bool info = cfg.is_informative(k, p + 1);
      auto rint = info ? cfg.rho_informative : cfg.rho_noninformative;
      auto sint = info ? cfg.snr_informative : cfg.snr_noninformative;
      rho[(size_t)k][(size_t)p] = std::uniform_real_distribution<double>(rint[0], rint[1])(rng);
      snr[(size_t)k][(size_t)p] = std::uniform_real_distribution<double>(sint[0], sint[1])(rng);
      sgn[(size_t)k][(size_t)p] = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    }
  }

  SimDataset out;
  SignalDataset all;
  all.time_grid = grid;
  for (int p = 0; p < cfg.n_sensors; ++p) all.sensor_ids.push_back("s" + std::to_string(p + 1));

  std::vector<int> modes;
  std::vector<double> thetas;
  long redraws = 0;
  for (int k = 0; k < k_modes; ++k) {
    for (int i = 0; i < cfg.n_per_mode; ++i) {
      auto sys_rng = substream(cfg.seed, 2, (std::uint64_t)k, (std::uint64_t)i);
      std::normal_distribution<double> nd(cfg.mu[(size_t)k], 0.1);
      double theta = nd(sys_rng);
      while (theta <= 0) { theta = nd(sys_rng); ++redraws; }
      SystemRecord rec;
      rec.id = "m" + std::to_string(k + 1) + "_u" + std::to_string(i + 1);
      rec.ttf = ttf_of(theta, cfg.threshold[(size_t)k]);
      rec.values.resize(cfg.n_sensors, grid.size());
      for (int p = 0; p < cfg.n_sensors; ++p) {
        auto rng = substream(cfg.seed, 3 + (std::uint64_t)k * 1000003ULL,
                             (std::uint64_t)i, (std::uint64_t)p);
        // conditional on the unit's own drift: high-correlation sensors track
        // theta closely, so their trends carry the unit's severity, not just
        // the mode mean; the conditional spread shrinks with rho so that rho
        // really is (approximately) the correlation between the sensor drift
        // and the unit drift
        const double rho_kp = rho[(size_t)k][(size_t)p];
        std::normal_distribution<double> cond(theta * (1 - std::sqrt(1 - rho_kp)),
                                              0.1 * std::sqrt(1 - rho_kp));
        double theta_ip = cond(rng);
        double sign = sgn[(size_t)k][(size_t)p];
        double sigma = cfg.mu[(size_t)k] / snr[(size_t)k][(size_t)p];
        rec.values.row(p) = gen_sensor_path(theta_ip, sigma, sign, grid, rng).transpose();
      }
      all.systems.push_back(std::move(rec));
      modes.push_back(k);
      thetas.push_back(theta);
    }
  }
  if (redraws > (long)(0.01 * k_modes * cfg.n_per_mode))
    throw std::runtime_error("gen_dataset: excessive nonpositive theta redraw rate");

  SignalDataset train_full, test;
  train_full.sensor_ids = test.sensor_ids = all.sensor_ids;
  train_full.time_grid = test.time_grid = all.time_grid;
  for (int k = 0; k < k_modes; ++k)
    for (int i = 0; i < cfg.n_per_mode; ++i) {
      size_t ix = (size_t)(k * cfg.n_per_mode + i);
      if (i < cfg.train_per_mode) {
        train_full.systems.push_back(all.systems[ix]);
        out.train_modes.push_back(modes[ix]);
        out.train_theta.push_back(thetas[ix]);
      } else {
        test.systems.push_back(all.systems[ix]);
        out.test_modes.push_back(modes[ix]);
        out.test_theta.push_back(thetas[ix]);
      }
    }
  out.train = truncate_to_min_ttf(train_full);
  out.train_full = std::move(train_full);
  out.test = std::move(test);
  return out;
}

inline void write_truth_csv(const std::string& path, const SignalDataset& d,
                            const std::vector<int>& modes, const std::vector<double>& thetas) {
  csv::Table t;
  t.header = {"system_id", "mode", "theta", "ttf"};
  for (size_t i = 0; i < d.systems.size(); ++i)
    t.rows.push_back({d.systems[i].id, std::to_string(modes[i] + 1), csv::fmt(thetas[i]),
                      csv::fmt(*d.systems[i].ttf)});
  csv::write_table(path, t);
}

}  // namespace prognos
