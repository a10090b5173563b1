#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prognos/csv.hpp"
#include "prognos/signal_data.hpp"

namespace prognos {

// One line of raw C-MAPSS telemetry: 26 whitespace-separated columns.
struct CmapssRecord {
  int unit = 0;
  int cycle = 0;
  double op_settings[3] = {0, 0, 0};
  double sensors[21] = {0};
};

inline std::vector<CmapssRecord> read_cmapss_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw csv::DataError("cannot open " + path);
  std::vector<CmapssRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (v.size() != 26)
      throw csv::DataError(path + ": line " + std::to_string(line_no) + " has " +
                           std::to_string(v.size()) + " columns, expected 26");
    CmapssRecord r;
    r.unit = (int)v[0];
    r.cycle = (int)v[1];
    for (int j = 0; j < 3; ++j) r.op_settings[j] = v[(size_t)(2 + j)];
    for (int j = 0; j < 21; ++j) r.sensors[j] = v[(size_t)(5 + j)];
    out.push_back(r);
  }
  return out;
}

struct CmapssDataset {
  SignalDataset train_full;  // full histories; truncate_to_min_ttf before offline
  SignalDataset test;        // partially observed units (observed_through set)
  std::vector<double> true_rul;  // per test unit
  std::vector<int> kept_sensors;  // 1-based ids of active channels
};

struct CmapssOptions {
  // Sensors with little to no information, dropped by default.
  std::vector<int> excluded = {1, 5, 6, 10, 16, 18, 19};
  bool z_normalize = true;  // per-sensor z-normalization over the training set
};

namespace detail {

inline SignalDataset cmapss_to_dataset(const std::vector<CmapssRecord>& recs,
                                       const std::vector<int>& kept, Eigen::Index grid_len,
                                       bool is_train) {
  SignalDataset d;
  for (int s : kept) d.sensor_ids.push_back("s" + std::to_string(s));
  d.time_grid = Eigen::VectorXd::LinSpaced(grid_len, 1.0, (double)grid_len);
  int cur_unit = -1;
  int expect_cycle = 1;
  for (const auto& r : recs) {
    if (r.unit != cur_unit) {
      if (cur_unit >= 0 && r.unit != cur_unit + 1)
        throw csv::DataError("unit ids not contiguous near unit " + std::to_string(r.unit));
      cur_unit = r.unit;
      expect_cycle = 1;
      SystemRecord rec;
      rec.id = "u" + std::to_string(r.unit);
      rec.values = Eigen::MatrixXd::Constant((Eigen::Index)kept.size(), grid_len, std::nan(""));
      rec.observed_through = 0;
      d.systems.push_back(std::move(rec));
    }
    if (r.cycle != expect_cycle)
      throw csv::DataError("unit " + std::to_string(r.unit) + ": non-contiguous cycle " +
                           std::to_string(r.cycle));
    ++expect_cycle;
    auto& rec = d.systems.back();
    for (size_t j = 0; j < kept.size(); ++j)
      rec.values((Eigen::Index)j, r.cycle - 1) = r.sensors[(size_t)(kept[j] - 1)];
    rec.observed_through = r.cycle;
  }
  if (is_train)
    for (auto& rec : d.systems) rec.ttf = (double)rec.observed_through;
  return d;
}

}  // namespace detail

inline CmapssDataset ingest_cmapss(const std::string& train_path, const std::string& test_path,
                                   const std::string& rul_path, const CmapssOptions& opt = {}) {
  auto train_recs = read_cmapss_file(train_path);
  auto test_recs = read_cmapss_file(test_path);
  if (train_recs.empty()) throw csv::DataError("empty train file " + train_path);

  CmapssDataset out;
  std::set<int> excl(opt.excluded.begin(), opt.excluded.end());
  for (int s = 1; s <= 21; ++s)
    if (!excl.count(s)) out.kept_sensors.push_back(s);

  Eigen::Index max_cycle = 0;
  for (const auto& r : train_recs) max_cycle = std::max<Eigen::Index>(max_cycle, r.cycle);
  for (const auto& r : test_recs) max_cycle = std::max<Eigen::Index>(max_cycle, r.cycle);

  out.train_full = detail::cmapss_to_dataset(train_recs, out.kept_sensors, max_cycle, true);
  out.test = detail::cmapss_to_dataset(test_recs, out.kept_sensors, max_cycle, false);

  {
    std::ifstream in(rul_path);
    if (!in) throw csv::DataError("cannot open " + rul_path);
    double r;
    while (in >> r) out.true_rul.push_back(r);
  }
  if (out.true_rul.size() != out.test.systems.size())
    throw csv::DataError("RUL row count (" + std::to_string(out.true_rul.size()) +
                         ") != test unit count (" + std::to_string(out.test.systems.size()) + ")");

  if (opt.z_normalize) {
    const Eigen::Index p_count = (Eigen::Index)out.kept_sensors.size();
    for (Eigen::Index p = 0; p < p_count; ++p) {
      double sum = 0, sum2 = 0;
      long n = 0;
      for (const auto& rec : out.train_full.systems)
        for (Eigen::Index g = 0; g < rec.observed(); ++g) {
          sum += rec.values(p, g);
          sum2 += rec.values(p, g) * rec.values(p, g);
          ++n;
        }
      double mean = sum / (double)n;
      double var = sum2 / (double)n - mean * mean;
      double sd = var > 1e-12 ? std::sqrt(var) : 1.0;
      auto apply = [&](SignalDataset& d) {
        for (auto& rec : d.systems)
          for (Eigen::Index g = 0; g < rec.observed(); ++g)
            rec.values(p, g) = (rec.values(p, g) - mean) / sd;
      };
      apply(out.train_full);
      apply(out.test);
    }
  }
  return out;
}

}  // namespace prognos
