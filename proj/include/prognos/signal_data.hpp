#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prognos/csv.hpp"

namespace prognos {

// One monitored unit: P sensor series on the dataset's shared time grid.
// Online test units may be observed only through a grid prefix; for those
// observed_through < G and ttf is unknown.
struct SystemRecord {
  std::string id;
  std::optional<double> ttf;
  Eigen::MatrixXd values;  // P x G
  Eigen::Index observed_through = -1;  // number of valid leading grid points

  Eigen::Index observed() const {
    return observed_through >= 0 ? observed_through : values.cols();
  }
};

struct SignalDataset {
  std::vector<std::string> sensor_ids;
  Eigen::VectorXd time_grid;
  std::vector<SystemRecord> systems;
  std::optional<double> truncated_at;

  Eigen::Index n_sensors() const { return (Eigen::Index)sensor_ids.size(); }
  Eigen::Index n_systems() const { return (Eigen::Index)systems.size(); }
  Eigen::Index grid_len() const { return time_grid.size(); }

  void validate() const {
    if (sensor_ids.empty()) throw std::invalid_argument("dataset: no sensors");
    if (time_grid.size() < 3) throw std::invalid_argument("dataset: grid too short");
    for (Eigen::Index g = 1; g < time_grid.size(); ++g)
      if (!(time_grid[g] > time_grid[g - 1]))
        throw std::invalid_argument("dataset: grid not strictly increasing");
    for (const auto& s : systems) {
      if (s.values.rows() != n_sensors() || s.values.cols() != grid_len())
        throw std::invalid_argument("dataset: system '" + s.id + "' shape mismatch");
    }
  }
};

struct StandardizedTtf {
  Eigen::VectorXd y;
  double ln_mean = 0;
  double ln_var = 0;  // sample variance of ln TTF (divisor N-1)
};

struct SmoothingConfig {
  double bandwidth = 0.5;   // fraction of the series length in the local window
  int robust_iterations = 5;
  int polynomial_order = 2;
};

inline SignalDataset truncate_to_min_ttf(const SignalDataset& d) {
  if (d.systems.empty()) throw std::invalid_argument("truncate: empty dataset");
  double tmin = std::numeric_limits<double>::infinity();
  for (const auto& s : d.systems) {
    if (!s.ttf) throw std::invalid_argument("truncate: system '" + s.id + "' has no ttf");
    tmin = std::min(tmin, *s.ttf);
  }
  Eigen::Index g = 0;
  while (g < d.time_grid.size() && d.time_grid[g] <= tmin) ++g;
  if (g < 2) throw std::invalid_argument("truncate: min ttf leaves fewer than 2 grid points");
  SignalDataset out;
  out.sensor_ids = d.sensor_ids;
  out.time_grid = d.time_grid.head(g);
  out.truncated_at = tmin;
  out.systems.reserve(d.systems.size());
  for (const auto& s : d.systems) {
    SystemRecord r;
    r.id = s.id;
    r.ttf = s.ttf;
    r.values = s.values.leftCols(g);
    out.systems.push_back(std::move(r));
  }
  return out;
}

inline StandardizedTtf standardize_ln_ttf(const SignalDataset& d) {
  const Eigen::Index n = d.n_systems();
  if (n < 2) throw std::invalid_argument("standardize_ln_ttf: need at least 2 systems");
  Eigen::VectorXd ln(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!d.systems[i].ttf || *d.systems[i].ttf <= 0)
      throw std::invalid_argument("standardize_ln_ttf: nonpositive or missing ttf");
    ln[i] = std::log(*d.systems[i].ttf);
  }
  StandardizedTtf s;
  s.ln_mean = ln.mean();
  s.ln_var = (ln.array() - s.ln_mean).square().sum() / double(n - 1);
  if (s.ln_var <= 0)
    throw std::invalid_argument("standardize_ln_ttf: zero variance (all ttf equal)");
  // Note: the denominator is the sample variance itself, not its square root.
  // The RUL destandardization applies the same ln_var, so the round trip is
  // self-consistent.
  s.y = (ln.array() - s.ln_mean) / s.ln_var;
  return s;
}

// ---- CSV schemas ----------------------------------------------------------
// signals (long form): system_id,sensor_id,time,value
// ttf:                 system_id,ttf

inline void write_signals_csv(const std::string& path, const SignalDataset& d) {
  csv::Table t;
  t.header = {"system_id", "sensor_id", "time", "value"};
  for (const auto& s : d.systems)
    for (Eigen::Index p = 0; p < d.n_sensors(); ++p)
      for (Eigen::Index g = 0; g < s.observed(); ++g)
        t.rows.push_back({s.id, d.sensor_ids[p], csv::fmt(d.time_grid[g]),
                          csv::fmt(s.values(p, g))});
  csv::write_table(path, t);
}

inline void write_ttf_csv(const std::string& path, const SignalDataset& d) {
  csv::Table t;
  t.header = {"system_id", "ttf"};
  for (const auto& s : d.systems)
    if (s.ttf) t.rows.push_back({s.id, csv::fmt(*s.ttf)});
  csv::write_table(path, t);
}

inline SignalDataset read_signals_csv(const std::string& signals_path,
                                      const std::string& ttf_path = "") {
  auto t = csv::read_table(signals_path);
  if (t.header != std::vector<std::string>{"system_id", "sensor_id", "time", "value"})
    throw csv::DataError("unexpected signal CSV header in " + signals_path);

  std::vector<std::string> sys_order, sensor_order;
  std::map<std::string, int> sys_ix, sensor_ix;
  std::vector<double> times;
  std::map<double, int> time_ix;
  for (const auto& r : t.rows) {
    if (!sys_ix.count(r[0])) { sys_ix[r[0]] = (int)sys_order.size(); sys_order.push_back(r[0]); }
    if (!sensor_ix.count(r[1])) { sensor_ix[r[1]] = (int)sensor_order.size(); sensor_order.push_back(r[1]); }
    double tv = csv::parse_double(r[2], signals_path);
    if (!time_ix.count(tv)) { time_ix[tv] = 0; }
  }
  for (auto& [tv, ix] : time_ix) { ix = (int)times.size(); times.push_back(tv); }

  SignalDataset d;
  d.sensor_ids = sensor_order;
  d.time_grid = Eigen::Map<Eigen::VectorXd>(times.data(), (Eigen::Index)times.size());
  const auto P = (Eigen::Index)sensor_order.size();
  const auto G = (Eigen::Index)times.size();
  std::vector<Eigen::MatrixXi> seen(sys_order.size(), Eigen::MatrixXi::Zero(P, G));
  d.systems.resize(sys_order.size());
  for (size_t i = 0; i < sys_order.size(); ++i) {
    d.systems[i].id = sys_order[i];
    d.systems[i].values = Eigen::MatrixXd::Constant(P, G, std::nan(""));
  }
  for (const auto& r : t.rows) {
    int i = sys_ix[r[0]], p = sensor_ix[r[1]];
    int g = time_ix[csv::parse_double(r[2], signals_path)];
    d.systems[i].values(p, g) = csv::parse_double(r[3], signals_path);
    seen[i](p, g) = 1;
  }
  // Units may be observed only through a grid prefix; require that prefix to
  // be complete across sensors.
  for (size_t i = 0; i < d.systems.size(); ++i) {
    Eigen::Index thru = G;
    for (Eigen::Index g = 0; g < G; ++g)
      if (seen[i].col(g).sum() == 0) { thru = g; break; }
    for (Eigen::Index g = 0; g < thru; ++g)
      if (seen[i].col(g).sum() != P)
        throw csv::DataError("system " + d.systems[i].id + ": incomplete sensor row at time index " +
                             std::to_string(g));
    d.systems[i].observed_through = thru;
  }
  if (!ttf_path.empty()) {
    auto tt = csv::read_table(ttf_path);
    if (tt.header != std::vector<std::string>{"system_id", "ttf"})
      throw csv::DataError("unexpected ttf CSV header in " + ttf_path);
    for (const auto& r : tt.rows) {
      auto it = sys_ix.find(r[0]);
      if (it == sys_ix.end()) throw csv::DataError("ttf for unknown system " + r[0]);
      d.systems[it->second].ttf = csv::parse_double(r[1], ttf_path);
    }
  }
  d.validate();
  return d;
}

}  // namespace prognos
