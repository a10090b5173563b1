// Command-line surface for the prognostics toolkit: dataset simulation,
// offline model fitting, penalty cross-validation, RUL prediction,
// evaluation, C-MAPSS ingestion, and report generation.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prognos/cmapss.hpp"
#include "prognos/pipeline.hpp"
#include "prognos/simgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prognos;

namespace {

// ---- error plumbing ---------------------------------------------------------
// exit codes: 0 success, 1 usage, 2 data, 3 numerical

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& m) : std::runtime_error(m), code(c) {}
};

[[noreturn]] void fail(int code, const std::string& kind, const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  json rec = {{"error", {{"type", kind}, {"message", msg}, {"exit_code", code}}}};
  std::cerr << rec.dump() << "\n";
  std::exit(code);
}

// ---- output-directory lock --------------------------------------------------

struct DirLock {
  fs::path lock_path;
  bool held = false;

  explicit DirLock(const fs::path& dir) {
    fs::create_directories(dir);
    lock_path = dir / ".prognos.lock";
    if (fs::exists(lock_path))
      throw CliError(2, "output directory " + dir.string() +
                            " is locked by another run (remove " + lock_path.string() +
                            " if stale)");
    std::ofstream out(lock_path);
    out << "locked\n";
    held = true;
  }
  ~DirLock() {
    if (held) {
      std::error_code ec;
      fs::remove(lock_path, ec);
    }
  }
};

// ---- run manifest -----------------------------------------------------------

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

// Records what produced the directory's contents; the digest covers the
// command and every parameter that affects the result (never output paths).
void write_run_info(const fs::path& dir, const std::string& command, const json& params) {
  json info;
  info["command"] = command;
  info["params"] = params;
  info["digest"] = hex64(fnv1a(command + params.dump()));
  std::ofstream out(dir / "run_info.json");
  out << info.dump(2) << "\n";
}

// ---- flat key = value config files ------------------------------------------

std::map<std::string, std::string> read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(2, "cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError(2, path + ":" + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r\"");
      auto b = s.find_last_not_of(" \t\r\"");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) throw CliError(2, path + ":" + std::to_string(line_no) + ": empty key");
    if (kv.count(key)) throw CliError(2, path + ": duplicate key '" + key + "'");
    kv[key] = val;
  }
  return kv;
}

double num(const std::map<std::string, std::string>& kv, const std::string& key, double dflt) {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  try {
    return csv::parse_double(it->second, "config key " + key);
  } catch (const csv::DataError& e) {
    throw CliError(2, e.what());
  }
}

// ---- small csv helpers ------------------------------------------------------

double median(std::vector<double> v) {
  if (v.empty()) throw CliError(3, "median of an empty set");
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + (long)mid, v.end());
  double hi = v[mid];
  if (v.size() % 2) return hi;
  std::nth_element(v.begin(), v.begin() + (long)mid - 1, v.end());
  return (v[mid - 1] + hi) / 2.0;
}

void write_selection_csv(const fs::path& path, const OfflineModel& m,
                         const std::vector<std::string>& sensor_ids) {
  csv::Table t;
  t.header = {"mode", "sensor", "norm", "significant"};
  for (const auto& e : m.fit.selection)
    t.rows.push_back({std::to_string(e.mode + 1), sensor_ids[(size_t)e.sensor],
                      csv::fmt(e.norm), e.significant ? "1" : "0"});
  csv::write_table(path.string(), t);
}

void write_labels_csv(const fs::path& path, const SignalDataset& d, const std::vector<int>& labels) {
  csv::Table t;
  t.header = {"system_id", "mode"};
  for (size_t i = 0; i < d.systems.size(); ++i)
    t.rows.push_back({d.systems[i].id, std::to_string(labels[i] + 1)});
  csv::write_table(path.string(), t);
}

void write_model_bundle(const fs::path& out, const OfflineModel& m, const SignalDataset& train) {
  // parameters in long form
  csv::Table params;
  params.header = {"name", "mode", "sensor", "component", "value"};
  const auto& th = m.fit.params;
  for (Eigen::Index k = 0; k < th.n_modes(); ++k) {
    std::string mk = std::to_string(k + 1);
    params.rows.push_back({"pi", mk, "", "", csv::fmt(th.pi[k])});
    params.rows.push_back({"rho", mk, "", "", csv::fmt(th.rho[k])});
    params.rows.push_back({"phi0", mk, "", "", csv::fmt(th.phi0[k])});
    for (Eigen::Index p = 0; p < m.features.n_groups(); ++p) {
      Eigen::Index lo = m.features.group_offsets[(size_t)p];
      Eigen::Index hi = m.features.group_offsets[(size_t)p + 1];
      for (Eigen::Index j = lo; j < hi; ++j)
        params.rows.push_back({"phi", mk, train.sensor_ids[(size_t)p],
                               std::to_string(j - lo + 1), csv::fmt(th.phi[(size_t)k][j])});
    }
  }
  csv::write_table((out / "params.csv").string(), params);

  csv::Table gamma;
  gamma.header = {"system_id", "mode", "gamma"};
  for (Eigen::Index i = 0; i < m.fit.gamma.rows(); ++i)
    for (Eigen::Index k = 0; k < m.fit.gamma.cols(); ++k)
      gamma.rows.push_back({train.systems[(size_t)i].id, std::to_string(k + 1),
                            csv::fmt(m.fit.gamma(i, k))});
  csv::write_table((out / "gamma.csv").string(), gamma);

  csv::Table trace;
  trace.header = {"iteration", "objective"};
  for (size_t t = 0; t < m.fit.objective_trace.size(); ++t)
    trace.rows.push_back({std::to_string(t), csv::fmt(m.fit.objective_trace[t])});
  csv::write_table((out / "objective_trace.csv").string(), trace);

  write_selection_csv(out / "selection.csv", m, train.sensor_ids);
  write_labels_csv(out / "labels.csv", train, m.labels);
}

struct ModelConfig {
  int k = 2;
  double lambda = 0.05, alpha = 0.5;
  std::uint64_t seed = 0;
  bool kmeans_init = true;
};

void write_model_config(const fs::path& dir, const ModelConfig& mc) {
  json j = {{"k", mc.k},
            {"lambda", mc.lambda},
            {"alpha", mc.alpha},
            {"seed", mc.seed},
            {"kmeans_init", mc.kmeans_init}};
  std::ofstream out(dir / "model.json");
  out << j.dump(2) << "\n";
}

ModelConfig read_model_config(const fs::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw CliError(2, "missing model.json in " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CliError(2, std::string("bad model.json: ") + e.what());
  }
  ModelConfig mc;
  mc.k = j.at("k").get<int>();
  mc.lambda = j.at("lambda").get<double>();
  mc.alpha = j.at("alpha").get<double>();
  mc.seed = j.at("seed").get<std::uint64_t>();
  mc.kmeans_init = j.at("kmeans_init").get<bool>();
  return mc;
}

OfflineModel refit_offline(const SignalDataset& train_full, const ModelConfig& mc) {
  SignalDataset train = truncate_to_min_ttf(train_full);
  EmConfig em;
  em.seed = mc.seed;
  OfflineOptions opt;
  opt.cluster_seed = mc.seed;
  opt.kmeans_init_labels = mc.kmeans_init;
  return offline_fit(train, mc.k, mc.lambda, mc.alpha, em, opt);
}

// ---- subcommand implementations ----------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed_flag, bool seed_set) {
  std::map<std::string, std::string> kv;
  std::set<std::string> allowed = {"seed",
                                   "n_sensors",
                                   "n_per_mode",
                                   "train_per_mode",
                                   "grid_len",
                                   "snr_informative_lo",
                                   "snr_informative_hi",
                                   "snr_noninformative_lo",
                                   "snr_noninformative_hi"};
  if (!config_path.empty()) {
    kv = read_flat_config(config_path);
    for (const auto& [k, v] : kv)
      if (!allowed.count(k)) throw CliError(2, "unknown config key '" + k + "'");
  }
  SimConfig cfg;
  cfg.seed = seed_set ? seed_flag : (std::uint64_t)num(kv, "seed", 0);
  cfg.n_sensors = (int)num(kv, "n_sensors", cfg.n_sensors);
  cfg.n_per_mode = (int)num(kv, "n_per_mode", cfg.n_per_mode);
  cfg.train_per_mode = (int)num(kv, "train_per_mode", cfg.train_per_mode);
  cfg.grid_len = (int)num(kv, "grid_len", cfg.grid_len);
  cfg.snr_informative[0] = num(kv, "snr_informative_lo", cfg.snr_informative[0]);
  cfg.snr_informative[1] = num(kv, "snr_informative_hi", cfg.snr_informative[1]);
  cfg.snr_noninformative[0] = num(kv, "snr_noninformative_lo", cfg.snr_noninformative[0]);
  cfg.snr_noninformative[1] = num(kv, "snr_noninformative_hi", cfg.snr_noninformative[1]);
  if (cfg.train_per_mode >= cfg.n_per_mode)
    throw CliError(2, "train_per_mode must be below n_per_mode");

  fs::path out(out_dir);
  DirLock lock(out);
  SimDataset d = gen_dataset(cfg);
  write_signals_csv((out / "train_signals.csv").string(), d.train_full);
  write_ttf_csv((out / "train_ttf.csv").string(), d.train_full);
  write_truth_csv((out / "train_truth.csv").string(), d.train_full, d.train_modes, d.train_theta);
  write_signals_csv((out / "test_signals.csv").string(), d.test);
  write_ttf_csv((out / "test_ttf.csv").string(), d.test);
  write_truth_csv((out / "test_truth.csv").string(), d.test, d.test_modes, d.test_theta);
  json params = {{"seed", cfg.seed},
                 {"n_sensors", cfg.n_sensors},
                 {"n_per_mode", cfg.n_per_mode},
                 {"train_per_mode", cfg.train_per_mode},
                 {"grid_len", cfg.grid_len},
                 {"snr_informative", {cfg.snr_informative[0], cfg.snr_informative[1]}},
                 {"snr_noninformative", {cfg.snr_noninformative[0], cfg.snr_noninformative[1]}}};
  write_run_info(out, "simulate", params);
  std::cout << "simulated " << d.train_full.systems.size() << " train and "
            << d.test.systems.size() << " test units in " << out_dir << "\n";
  return 0;
}

int cmd_fit_offline(const std::string& data_dir, const std::string& out_dir,
                    const ModelConfig& mc) {
  fs::path data(data_dir), out(out_dir);
  SignalDataset train_full = read_signals_csv((data / "train_signals.csv").string(),
                                              (data / "train_ttf.csv").string());
  DirLock lock(out);
  OfflineModel m = refit_offline(train_full, mc);
  // self-contained bundle: carry the training data so prediction can rebuild
  // the model deterministically
  write_signals_csv((out / "train_signals.csv").string(), train_full);
  write_ttf_csv((out / "train_ttf.csv").string(), train_full);
  write_model_config(out, mc);
  SignalDataset train = truncate_to_min_ttf(train_full);
  write_model_bundle(out, m, train);
  json params = {{"k", mc.k},     {"lambda", mc.lambda},          {"alpha", mc.alpha},
                 {"seed", mc.seed}, {"kmeans_init", mc.kmeans_init}};
  write_run_info(out, "fit-offline", params);
  std::cout << "fitted " << mc.k << "-mode model";
  if (m.fit.degenerate_mode >= 0)
    std::cout << " (mode " << m.fit.degenerate_mode + 1 << " degenerate)";
  std::cout << ", objective " << csv::fmt(m.fit.objective_trace.back()) << "\n";
  return 0;
}

int cmd_cv(const std::string& data_dir, const std::string& out_dir, int k, int folds,
           std::vector<double> lambda_grid, std::vector<double> alpha_grid,
           std::uint64_t seed) {
  fs::path data(data_dir), out(out_dir);
  SignalDataset train_full = read_signals_csv((data / "train_signals.csv").string(),
                                              (data / "train_ttf.csv").string());
  SignalDataset train = truncate_to_min_ttf(train_full);
  CvConfig cv;
  cv.folds = folds;
  cv.seed = seed;
  if (!lambda_grid.empty()) cv.lambda_grid = lambda_grid;
  if (!alpha_grid.empty()) cv.alpha_grid = alpha_grid;
  EmConfig em;
  em.seed = seed;
  OfflineOptions opt;
  opt.cluster_seed = seed;
  opt.kmeans_init_labels = true;

  DirLock lock(out);
  CvResult res = cross_validate(train, k, cv, em, opt);
  csv::Table t;
  t.header = {"lambda", "alpha", "mse", "folds_used"};
  for (const auto& c : res.table)
    t.rows.push_back({csv::fmt(c.lambda), csv::fmt(c.alpha), csv::fmt(c.mse),
                      std::to_string(c.folds_used)});
  csv::write_table((out / "cv_table.csv").string(), t);
  csv::Table chosen;
  chosen.header = {"lambda", "alpha"};
  chosen.rows.push_back({csv::fmt(res.best_lambda), csv::fmt(res.best_alpha)});
  csv::write_table((out / "chosen.csv").string(), chosen);
  json params = {{"k", k},
                 {"folds", folds},
                 {"seed", seed},
                 {"lambda_grid", cv.lambda_grid},
                 {"alpha_grid", cv.alpha_grid}};
  write_run_info(out, "cv", params);
  std::cout << "selected lambda=" << csv::fmt(res.best_lambda)
            << " alpha=" << csv::fmt(res.best_alpha) << " over " << res.table.size()
            << " grid cells\n";
  return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& data_dir,
                const std::string& out_dir, std::optional<double> t_star,
                std::optional<double> percentile) {
  if (t_star.has_value() == percentile.has_value())
    throw CliError(1, "predict: exactly one of --t-star and --percentile is required");
  fs::path model(model_dir), data(data_dir), out(out_dir);
  ModelConfig mc = read_model_config(model);
  SignalDataset train_full = read_signals_csv((model / "train_signals.csv").string(),
                                              (model / "train_ttf.csv").string());
  bool need_ttf = percentile.has_value();
  std::string ttf_path = (data / "test_ttf.csv").string();
  SignalDataset test = read_signals_csv((data / "test_signals.csv").string(),
                                        need_ttf ? ttf_path : "");

  DirLock lock(out);
  OfflineModel m = refit_offline(train_full, mc);

  csv::Table t;
  t.header = {"unit_id", "percentile", "t_star", "mode", "rul", "estimated_life", "clamped"};
  std::map<Eigen::Index, std::shared_ptr<OnlineContext>> ctx_cache;
  std::map<std::pair<Eigen::Index, int>, std::shared_ptr<RegressionModel>> reg_cache;
  long emitted = 0, skipped = 0;
  for (const auto& unit : test.systems) {
    double t_raw;
    if (t_star) {
      t_raw = *t_star;
    } else {
      if (!unit.ttf) throw CliError(2, "unit " + unit.id + " has no ttf for percentile mode");
      t_raw = *percentile * *unit.ttf;
    }
    Eigen::Index g = 0;
    while (g < train_full.grid_len() && train_full.time_grid[g] <= t_raw) ++g;
    if (g < 3 || g > unit.observed()) {
      ++skipped;
      continue;
    }
    double snapped = train_full.time_grid[g - 1];
    auto it = ctx_cache.find(g);
    if (it == ctx_cache.end())
      it = ctx_cache
               .emplace(g, std::make_shared<OnlineContext>(
                               online_prepare(train_full, m, snapped)))
               .first;
    const OnlineContext& ctx = *it->second;
    int k_star = diagnose(ctx, unit);
    auto rit = reg_cache.find({g, k_star});
    if (rit == reg_cache.end())
      rit = reg_cache
                .emplace(std::make_pair(g, k_star),
                         std::make_shared<RegressionModel>(
                             fit_weighted_regression(ctx, k_star, train_full, m.ttf_std)))
                .first;
    RulPrediction pred = predict_rul(*rit->second, ctx, unit);
    t.rows.push_back({unit.id, percentile ? csv::fmt(*percentile) : "-1",
                      csv::fmt(pred.t_star), std::to_string(pred.mode + 1),
                      csv::fmt(pred.rul), csv::fmt(pred.estimated_life),
                      pred.clamped ? "1" : "0"});
    ++emitted;
  }
  csv::write_table((out / "rul_predictions.csv").string(), t);
  json params = {{"k", mc.k},
                 {"lambda", mc.lambda},
                 {"alpha", mc.alpha},
                 {"seed", mc.seed},
                 {"t_star", t_star ? json(*t_star) : json()},
                 {"percentile", percentile ? json(*percentile) : json()}};
  write_run_info(out, "predict", params);
  std::cout << "predicted " << emitted << " units (" << skipped << " skipped: too few cycles)\n";
  return 0;
}

int cmd_evaluate(const std::string& preds_dir, const std::string& truth_path,
                 const std::string& out_dir) {
  fs::path preds(preds_dir), out(out_dir);
  csv::Table p = csv::read_table((preds / "rul_predictions.csv").string());
  std::vector<std::string> expect = {"unit_id", "percentile", "t_star",
                                     "mode",    "rul",        "estimated_life",
                                     "clamped"};
  if (p.header != expect)
    throw CliError(2, "unexpected rul_predictions.csv header in " + preds_dir);

  csv::Table truth = csv::read_table(truth_path);
  std::map<std::string, double> ttf_of_unit;
  std::map<std::string, int> mode_of_unit;
  bool have_modes = false;
  if (truth.header == std::vector<std::string>{"system_id", "mode", "theta", "ttf"}) {
    have_modes = true;
    for (const auto& r : truth.rows) {
      ttf_of_unit[r[0]] = csv::parse_double(r[3], truth_path);
      mode_of_unit[r[0]] = (int)csv::parse_double(r[1], truth_path);
    }
  } else if (truth.header == std::vector<std::string>{"system_id", "ttf"}) {
    for (const auto& r : truth.rows) ttf_of_unit[r[0]] = csv::parse_double(r[1], truth_path);
  } else {
    throw CliError(2, "unrecognized truth schema in " + truth_path);
  }

  struct Slice {
    std::vector<double> errors;
    long mode_hits = 0, mode_total = 0;
  };
  std::map<std::string, Slice> slices;
  Slice overall;
  csv::Table per_unit;
  per_unit.header = {"unit_id", "percentile", "estimated_life", "actual_life", "rel_error"};
  for (const auto& r : p.rows) {
    auto it = ttf_of_unit.find(r[0]);
    if (it == ttf_of_unit.end()) throw CliError(2, "no truth row for unit " + r[0]);
    double actual = it->second;
    double est = csv::parse_double(r[5], "rul_predictions.csv");
    double err = relative_error(est, actual);
    per_unit.rows.push_back({r[0], r[1], r[5], csv::fmt(actual), csv::fmt(err)});
    for (Slice* s : {&slices[r[1]], &overall}) {
      s->errors.push_back(err);
      if (have_modes) {
        ++s->mode_total;
        if ((int)csv::parse_double(r[3], "rul_predictions.csv") == mode_of_unit[r[0]])
          ++s->mode_hits;
      }
    }
  }
  if (overall.errors.empty()) throw CliError(2, "no prediction rows to evaluate");

  DirLock lock(out);
  csv::write_table((out / "per_unit_errors.csv").string(), per_unit);
  csv::Table summary;
  summary.header = {"percentile", "count", "mean_rel_error", "median_rel_error",
                    "mode_accuracy"};
  auto add_row = [&](const std::string& name, const Slice& s) {
    double mean = 0;
    for (double e : s.errors) mean += e;
    mean /= (double)s.errors.size();
    std::string acc =
        s.mode_total ? csv::fmt((double)s.mode_hits / (double)s.mode_total) : "-1";
    summary.rows.push_back({name, std::to_string(s.errors.size()), csv::fmt(mean),
                            csv::fmt(median(s.errors)), acc});
  };
  for (const auto& [name, s] : slices) add_row(name, s);
  add_row("all", overall);
  csv::write_table((out / "error_summary.csv").string(), summary);
  write_run_info(out, "evaluate", json{{"rows", p.rows.size()}});
  std::cout << "evaluated " << overall.errors.size() << " predictions, median error "
            << csv::fmt(median(overall.errors)) << "%\n";
  return 0;
}

int cmd_ingest_cmapss(const std::string& train_path, const std::string& test_path,
                      const std::string& rul_path, const std::string& out_dir,
                      bool no_normalize) {
  CmapssOptions opt;
  opt.z_normalize = !no_normalize;
  CmapssDataset d = ingest_cmapss(train_path, test_path, rul_path, opt);
  fs::path out(out_dir);
  DirLock lock(out);
  write_signals_csv((out / "train_signals.csv").string(), d.train_full);
  write_ttf_csv((out / "train_ttf.csv").string(), d.train_full);
  write_signals_csv((out / "test_signals.csv").string(), d.test);
  csv::Table rul;
  rul.header = {"system_id", "true_rul"};
  for (size_t i = 0; i < d.test.systems.size(); ++i)
    rul.rows.push_back({d.test.systems[i].id, csv::fmt(d.true_rul[i])});
  csv::write_table((out / "test_rul.csv").string(), rul);
  json params = {{"z_normalize", opt.z_normalize},
                 {"kept_sensors", d.kept_sensors},
                 {"train_units", d.train_full.systems.size()},
                 {"test_units", d.test.systems.size()}};
  write_run_info(out, "ingest-cmapss", params);
  std::cout << "ingested " << d.train_full.systems.size() << " train units, "
            << d.test.systems.size() << " test units, " << d.kept_sensors.size()
            << " active sensors\n";
  return 0;
}

void append_table_section(std::ostream& md, const fs::path& file, const std::string& title,
                          size_t max_rows) {
  if (!fs::exists(file)) return;
  csv::Table t = csv::read_table(file.string());
  md << "## " << title << "\n\n|";
  for (const auto& h : t.header) md << " " << h << " |";
  md << "\n|";
  for (size_t j = 0; j < t.header.size(); ++j) md << " --- |";
  md << "\n";
  for (size_t i = 0; i < t.rows.size() && i < max_rows; ++i) {
    md << "|";
    for (const auto& c : t.rows[i]) md << " " << c << " |";
    md << "\n";
  }
  if (t.rows.size() > max_rows)
    md << "\n(" << t.rows.size() - max_rows << " more rows in " << file.filename().string()
       << ")\n";
  md << "\n";
}

int cmd_report(const std::string& run_dir) {
  fs::path run(run_dir);
  if (!fs::exists(run)) throw CliError(2, "run directory " + run_dir + " does not exist");
  std::ofstream md(run / "report.md");
  md << "# Run report\n\n";
  if (fs::exists(run / "run_info.json")) {
    std::ifstream in(run / "run_info.json");
    json info;
    in >> info;
    md << "- command: `" << info.value("command", "?") << "`\n";
    md << "- config digest: `" << info.value("digest", "?") << "`\n\n";
  }
  append_table_section(md, run / "chosen.csv", "Selected penalty", 10);
  append_table_section(md, run / "cv_table.csv", "Cross-validation grid", 120);
  append_table_section(md, run / "selection.csv", "Sensor selection", 200);
  append_table_section(md, run / "error_summary.csv", "Prediction error summary", 50);
  append_table_section(md, run / "objective_trace.csv", "Objective trace (head)", 15);
  md.close();
  std::cout << "wrote " << (run / "report.md").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sensor-fusion prognostics toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a seeded degradation dataset");
  std::string sim_config, sim_out;
  std::uint64_t sim_seed = 0;
  sim->add_option("--config", sim_config, "flat key = value config file");
  sim->add_option("--out", sim_out, "output directory")->required();
  auto* seed_opt = sim->add_option("--seed", sim_seed, "overrides the config seed");

  // fit-offline
  auto* fit = app.add_subcommand("fit-offline", "fit the offline mixture model");
  std::string fit_data, fit_out;
  ModelConfig mc;
  fit->add_option("--data", fit_data, "dataset directory")->required();
  fit->add_option("--out", fit_out, "model output directory")->required();
  fit->add_option("--k", mc.k, "number of failure modes");
  fit->add_option("--lambda", mc.lambda, "penalty weight")->required();
  fit->add_option("--alpha", mc.alpha, "l1 share of the penalty")->required();
  fit->add_option("--seed", mc.seed, "fit seed");
  fit->add_flag("!--no-kmeans-init", mc.kmeans_init, "random responsibilities instead of K-means");

  // cv
  auto* cvc = app.add_subcommand("cv", "cross-validate the penalty grid");
  std::string cv_data, cv_out;
  int cv_k = 2, cv_folds = 5;
  std::uint64_t cv_seed = 0;
  std::vector<double> cv_lambda, cv_alpha;
  cvc->add_option("--data", cv_data)->required();
  cvc->add_option("--out", cv_out)->required();
  cvc->add_option("--k", cv_k);
  cvc->add_option("--folds", cv_folds);
  cvc->add_option("--seed", cv_seed);
  cvc->add_option("--lambda-grid", cv_lambda, "overrides the default 20-point grid");
  cvc->add_option("--alpha-grid", cv_alpha, "overrides the default {0,.25,.5,.75,1}");

  // predict
  auto* pred = app.add_subcommand("predict", "diagnose and predict remaining life");
  std::string pred_model, pred_data, pred_out;
  double pred_t = 0, pred_pct = 0;
  pred->add_option("--model", pred_model)->required();
  pred->add_option("--data", pred_data)->required();
  pred->add_option("--out", pred_out)->required();
  auto* opt_t = pred->add_option("--t-star", pred_t, "fixed observation time");
  auto* opt_p = pred->add_option("--percentile", pred_pct, "fraction of each unit's life");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "summarize prediction errors against truth");
  std::string ev_preds, ev_truth, ev_out;
  ev->add_option("--preds", ev_preds)->required();
  ev->add_option("--truth", ev_truth)->required();
  ev->add_option("--out", ev_out)->required();

  // ingest-cmapss
  auto* ing = app.add_subcommand("ingest-cmapss", "convert raw turbofan telemetry");
  std::string ing_train, ing_test, ing_rul, ing_out;
  bool ing_raw = false;
  ing->add_option("--train", ing_train)->required();
  ing->add_option("--test", ing_test)->required();
  ing->add_option("--rul", ing_rul)->required();
  ing->add_option("--out", ing_out)->required();
  ing->add_flag("--no-normalize", ing_raw, "skip per-sensor z-normalization");

  // report
  auto* rep = app.add_subcommand("report", "render markdown summary of a run directory");
  std::string rep_run;
  rep->add_option("--run", rep_run)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    json rec = {{"error", {{"type", "usage"}, {"message", e.what()}, {"exit_code", 1}}}};
    std::cerr << rec.dump() << "\n";
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed, seed_opt->count() > 0);
    if (fit->parsed()) return cmd_fit_offline(fit_data, fit_out, mc);
    if (cvc->parsed()) return cmd_cv(cv_data, cv_out, cv_k, cv_folds, cv_lambda, cv_alpha, cv_seed);
    if (pred->parsed())
      return cmd_predict(pred_model, pred_data, pred_out,
                         opt_t->count() ? std::optional<double>(pred_t) : std::nullopt,
                         opt_p->count() ? std::optional<double>(pred_pct) : std::nullopt);
    if (ev->parsed()) return cmd_evaluate(ev_preds, ev_truth, ev_out);
    if (ing->parsed()) return cmd_ingest_cmapss(ing_train, ing_test, ing_rul, ing_out, ing_raw);
    if (rep->parsed()) return cmd_report(rep_run);
  } catch (const CliError& e) {
    std::string kind = e.code == 1 ? "usage" : e.code == 2 ? "data" : "numerical";
    fail(e.code, kind, e.what());
  } catch (const csv::DataError& e) {
    fail(2, "data", e.what());
  } catch (const std::invalid_argument& e) {
    fail(2, "data", e.what());
  } catch (const std::exception& e) {
    fail(3, "numerical", e.what());
  }
  return 0;
}
