#include "ising/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ising::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + name);
  out << content;
}

json num_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json(nullptr);
  return json(v);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.contains("seed") || !j["seed"].is_number()) {
    throw std::invalid_argument("config: field \"seed\" is required (no nondeterministic default)");
  }
  cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.out_dir = j.value("output", json::object()).value("dir", ".");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  return from_json(j);
}

DegreeModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw std::invalid_argument("config: model requires a \"kind\" field");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "regular") return DegreeModel::regular(j.at("d").get<int>());
  if (kind == "poisson") return DegreeModel::poisson(j.at("lambda").get<double>());
  if (kind == "power_law") {
    return DegreeModel::power_law(j.at("tau").get<double>(), j.value("k_min", 1));
  }
  if (kind == "empirical") {
    std::map<std::int64_t, double> pmf;
    for (const auto& [k, v] : j.at("pmf").items()) pmf[std::stoll(k)] = v.get<double>();
    return DegreeModel::empirical(pmf);
  }
  throw std::invalid_argument("config: unknown model kind \"" + kind + "\"");
}

DegreeModel ExperimentConfig::model() const {
  if (!raw.contains("model")) throw std::invalid_argument("config: missing \"model\"");
  return model_from_json(raw["model"]);
}

SolverConfig ExperimentConfig::solver() const {
  SolverConfig s;
  const json j = raw.value("solver", json::object());
  s.population_size = j.value("population_size", s.population_size);
  s.max_iters = j.value("max_iters", s.max_iters);
  s.window = j.value("window", s.window);
  s.tol = j.value("tol", s.tol);
  s.ks_conv_tol = j.value("ks_conv_tol", s.ks_conv_tol);
  s.ks_tol = j.value("ks_tol", s.ks_tol);
  s.check_uniqueness = j.value("check_uniqueness", s.check_uniqueness);
  s.seed = seed;
  return s;
}

SweepConfig ExperimentConfig::sweep() const {
  SweepConfig s;
  s.solver = solver();
  const json j = raw.value("sweep", json::object());
  s.n_mag = j.value("n_mag", s.n_mag);
  s.n_spines = j.value("n_spines", s.n_spines);
  s.ell_max = j.value("ell_max", s.ell_max);
  s.warm_start = j.value("warm_start", s.warm_start);
  return s;
}

std::vector<std::pair<double, double>> ExperimentConfig::sweep_grid() const {
  const json j = raw.value("sweep", json::object());
  if (!j.contains("grid") || !j["grid"].is_array() || j["grid"].empty()) {
    throw std::invalid_argument("config: sweep requires a nonempty \"grid\" of [beta, B] pairs");
  }
  std::vector<std::pair<double, double>> grid;
  for (const auto& e : j["grid"]) {
    if (!e.is_array() || e.size() != 2) {
      throw std::invalid_argument("config: each grid entry must be [beta, B]");
    }
    grid.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return grid;
}

ExponentFitConfig ExperimentConfig::exponents() const {
  ExponentFitConfig c;
  c.solver = solver();
  const json j = raw.value("exponents", json::object());
  c.n_mag = j.value("n_mag", c.n_mag);
  c.n_spines = j.value("n_spines", c.n_spines);
  c.n_points = j.value("n_points", c.n_points);
  c.eps_min = j.value("eps_min", c.eps_min);
  c.eps_max = j.value("eps_max", c.eps_max);
  if (j.contains("B_grid")) c.B_grid = j["B_grid"].get<std::vector<double>>();
  c.delta_B_min = j.value("delta_B_min", c.delta_B_min);
  c.delta_B_max = j.value("delta_B_max", c.delta_B_max);
  c.gamma_eps_min = j.value("gamma_eps_min", c.gamma_eps_min);
  c.gamma_eps_max = j.value("gamma_eps_max", c.gamma_eps_max);
  c.gp_eps_min = j.value("gp_eps_min", c.gp_eps_min);
  c.gp_eps_max = j.value("gp_eps_max", c.gp_eps_max);
  c.gp_points = j.value("gp_points", c.gp_points);
  c.gp_field = j.value("gp_field", c.gp_field);
  c.log_correction = j.value("log_correction", c.log_correction);
  c.r2_min = j.value("r2_min", c.r2_min);
  c.reject_below_r2 = j.value("reject_below_r2", c.reject_below_r2);
  return c;
}

std::vector<std::string> ExperimentConfig::exponent_fits() const {
  const json j = raw.value("exponents", json::object());
  std::vector<std::string> fits = {"beta", "delta", "gamma", "gamma_prime_lb"};
  if (j.contains("fits")) fits = j["fits"].get<std::vector<std::string>>();
  if (fits.empty()) throw std::invalid_argument("config: exponents.fits must be nonempty");
  return fits;
}

oracle::OracleSuiteConfig ExperimentConfig::oracle_suite() const {
  oracle::OracleSuiteConfig c;
  const json j = raw.value("oracle", json::object());
  c.n_trees = j.value("n_trees", c.n_trees);
  c.max_tree_n = j.value("max_tree_n", c.max_tree_n);
  c.n_graphs = j.value("n_graphs", c.n_graphs);
  c.max_graph_n = j.value("max_graph_n", c.max_graph_n);
  c.seed = seed;
  return c;
}

std::optional<std::string> ExperimentConfig::oracle_enumerate_file() const {
  const json j = raw.value("oracle", json::object());
  if (j.contains("enumerate_file")) return j["enumerate_file"].get<std::string>();
  return std::nullopt;
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(raw.dump()); }

std::string ExperimentConfig::provenance() const {
  std::ostringstream os;
  os << "ising_cavity " << kVersion << " config=" << hex64(config_hash()) << " seed=" << seed;
  return os.str();
}

json fit_to_json(const ExponentFit& fit) {
  json points = json::array();
  for (const auto& p : fit.points) {
    points.push_back({{"param", p.param},
                      {"x", p.x},
                      {"y", p.y},
                      {"y_se", p.y_se},
                      {"value", p.value},
                      {"value_se", p.value_se},
                      {"extrap_residual", p.extrap_residual}});
  }
  json out{{"exponent", fit.exponent_name},
           {"estimate", fit.estimate},
           {"ci95", {fit.ci95.first, fit.ci95.second}},
           {"r2", fit.r_squared},
           {"window", {fit.window.first, fit.window.second}},
           {"log_correction", fit.log_correction},
           {"points_used", fit.points_used},
           {"unconverged_solves", fit.unconverged_solves},
           {"amplitude", fit.amplitude},
           {"points", points}};
  if (!std::isnan(fit.limit_constant)) {
    out["limit_constant"] = fit.limit_constant;
    out["limit_constant_stated"] = fit.limit_constant_stated;
    out["limit_constant_closed_form"] = fit.limit_constant_closed_form;
  }
  if (!fit.plateau.empty()) {
    json plateau = json::array();
    for (const auto& [gap, val] : fit.plateau) plateau.push_back({gap, val});
    out["plateau"] = plateau;
    out["plateau_conjecture"] = fit.plateau_conjecture;
    out["note"] = fit.note;
  }
  return out;
}

int cmd_critical(const ExperimentConfig& cfg, std::ostream& out) {
  const DegreeModel model = cfg.model();
  const ForwardModel fm(model);
  const double bc = critical_beta(fm);
  json j{{"model", model.describe()},
         {"E_D", model.mean()},
         {"nu", num_or_inf(fm.nu())},
         {"nu_2", num_or_inf(fm.nu2())},
         {"nu_3", num_or_inf(fm.nu3())},
         {"beta_c", num_or_inf(bc)},
         {"provenance", cfg.provenance()}};
  write_file(cfg.out_dir, "critical.json", j.dump(2) + "\n");
  out << "model:  " << model.describe() << "\n";
  out << "E[D]:   " << model.mean() << "\n";
  out << "nu:     " << (fm.nu_finite() ? std::to_string(fm.nu()) : "inf") << "\n";
  out << "nu_2:   " << (std::isfinite(fm.nu2()) ? std::to_string(fm.nu2()) : "inf") << "\n";
  out << "nu_3:   " << (std::isfinite(fm.nu3()) ? std::to_string(fm.nu3()) : "inf") << "\n";
  out << "beta_c: ";
  if (std::isinf(bc)) {
    out << "inf (nu <= 1: no transition)\n";
  } else {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", bc);
    out << buf << "\n";
  }
  return kExitOk;
}

std::string sweep_csv_for_config(const ExperimentConfig& cfg) {
  const DegreeModel model = cfg.model();
  const ForwardModel fm(model);
  const auto points = thermo_sweep(model, fm, cfg.sweep_grid(), cfg.sweep());
  return thermo_csv(points, cfg.provenance());
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  const DegreeModel model = cfg.model();
  const ForwardModel fm(model);
  const auto points = thermo_sweep(model, fm, cfg.sweep_grid(), cfg.sweep());
  write_file(cfg.out_dir, "sweep.csv", thermo_csv(points, cfg.provenance()));
  bool all_ok = true;
  for (const auto& p : points) {
    if (!p.error.empty()) {
      out << "point beta=" << p.beta << " B=" << p.field_B << " failed: " << p.error << "\n";
      all_ok = false;
    } else if (!p.converged) {
      out << "point beta=" << p.beta << " B=" << p.field_B << " did not converge\n";
      all_ok = false;
    }
  }
  out << "wrote sweep.csv (" << points.size() << " points)\n";
  return all_ok ? kExitOk : kExitSweepPartial;
}

int cmd_exponents(const ExperimentConfig& cfg, std::ostream& out) {
  const DegreeModel model = cfg.model();
  const ForwardModel fm(model);
  const ExponentFitConfig fit_cfg = cfg.exponents();
  json fits = json::array();
  int exit_code = kExitOk;
  for (const std::string& name : cfg.exponent_fits()) {
    try {
      ExponentFit fit;
      if (name == "beta") {
        fit = fit_exponent_beta(model, fm, fit_cfg);
      } else if (name == "delta") {
        fit = fit_exponent_delta(model, fm, fit_cfg);
      } else if (name == "gamma") {
        fit = fit_exponent_gamma(model, fm, fit_cfg);
      } else if (name == "gamma_prime_lb") {
        fit = gamma_prime_diagnostic(model, fm, fit_cfg);
      } else {
        throw std::invalid_argument("config: unknown fit \"" + name + "\"");
      }
      fits.push_back(fit_to_json(fit));
      out << name << ": estimate=" << fit.estimate << " ci95=[" << fit.ci95.first << ","
          << fit.ci95.second << "] r2=" << fit.r_squared << "\n";
    } catch (const FitRejected& e) {
      fits.push_back({{"exponent", name}, {"rejected", true}, {"what", e.what()}});
      out << name << ": REJECTED (" << e.what() << ")\n";
      exit_code = kExitFitRejected;
    }
  }
  json j{{"provenance", cfg.provenance()}, {"fits", fits}};
  write_file(cfg.out_dir, "exponents.json", j.dump(2) + "\n");
  return exit_code;
}

int cmd_oracle(const ExperimentConfig& cfg, std::ostream& out) {
  if (const auto file = cfg.oracle_enumerate_file()) {
    std::ifstream in(*file);
    if (!in) throw std::invalid_argument("oracle: cannot open " + *file);
    const oracle::GraphInstance g = oracle::read_graph(in);
    // Surfaces the n <= 24 precondition cleanly before the suite runs.
    oracle::enumerate_gibbs(g, 0.1, 0.1);
    out << "enumerated explicit graph with n=" << g.n << "\n";
  }
  const oracle::OracleReport report = oracle::run_oracle_suite(cfg.oracle_suite());
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " — " << c.detail << "\n";
  }
  json j{{"provenance", cfg.provenance()}, {"all_pass", report.all_pass}, {"checks", checks}};
  write_file(cfg.out_dir, "oracle.json", j.dump(2) + "\n");
  return report.all_pass ? kExitOk : kExitOracleFailure;
}

}  // namespace ising::cli
