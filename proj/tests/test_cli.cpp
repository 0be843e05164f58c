#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ising/experiment.hpp"

using namespace ising;
using namespace ising::cli;
using nlohmann::json;

namespace {

json base_config() {
  return json{{"seed", 424242},
              {"model", {{"kind", "regular"}, {"d", 3}}},
              {"solver", {{"population_size", 2000}, {"max_iters", 4000}}},
              {"sweep",
               {{"grid", json::array({json::array({0.0, 0.3}), json::array({0.2, 0.01})})},
                {"n_mag", 5000},
                {"n_spines", 5000}}}};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ising_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json{{"model", {{"kind", "regular"}}}}),
                       doctest::Contains("seed"), std::invalid_argument);
  const auto cfg = ExperimentConfig::from_json(base_config());
  CHECK(cfg.seed == 424242);
  CHECK(cfg.model().kind() == DegreeModel::Kind::Regular);
  CHECK(cfg.sweep_grid().size() == 2);

  CHECK_THROWS_AS(model_from_json(json{{"kind", "nonsense"}}), std::invalid_argument);
  CHECK_THROWS_AS(model_from_json(json{{"kind", "power_law"}, {"tau", 1.5}, {"k_min", 1}}),
                  std::invalid_argument);
  CHECK(model_from_json(json{{"kind", "power_law"}, {"tau", 4.5}, {"k_min", 2}}).describe() ==
        "power_law(tau=4.5,k_min=2)");
  CHECK(model_from_json(json{{"kind", "empirical"}, {"pmf", {{"1", 0.5}, {"3", 0.5}}}}).mean() ==
        doctest::Approx(2.0));

  json no_grid = base_config();
  no_grid["sweep"].erase("grid");
  CHECK_THROWS_AS(ExperimentConfig::from_json(no_grid).sweep_grid(), std::invalid_argument);
}

TEST_CASE("cmd_critical writes provenance-stamped exact values") {
  TempDir dir;
  auto cfg = ExperimentConfig::from_json(base_config());
  cfg.out_dir = dir.path.string();
  std::ostringstream out;
  CHECK(cmd_critical(cfg, out) == kExitOk);
  std::ifstream in(dir.path / "critical.json");
  REQUIRE(in.good());
  const json j = json::parse(in);
  CHECK(j["beta_c"].get<double>() == doctest::Approx(0.54930614433405485).epsilon(1e-14));
  CHECK(j["nu"].get<double>() == doctest::Approx(2.0));
  const std::string prov = j["provenance"].get<std::string>();
  CHECK(prov.find("seed=424242") != std::string::npos);
  CHECK(prov.find("config=") != std::string::npos);
  CHECK(out.str().find("beta_c") != std::string::npos);
}

TEST_CASE("sweep CSV is byte-identical across runs and worker counts") {
  auto cfg = ExperimentConfig::from_json(base_config());
  const int saved = default_workers();
  set_default_workers(1);
  const std::string a = sweep_csv_for_config(cfg);
  const std::string b = sweep_csv_for_config(cfg);
  set_default_workers(3);
  const std::string c = sweep_csv_for_config(cfg);
  set_default_workers(saved);
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a.find("beta,B,M,M_se,chi,chi_se,chi_method,trunc_bound,seed") != std::string::npos);
  CHECK(a.find("ClosedFormSubcritical") != std::string::npos);

  // different seed changes the Monte Carlo rows
  auto cfg2 = cfg;
  cfg2.seed = 7;
  cfg2.raw["seed"] = 7;
  CHECK(sweep_csv_for_config(cfg2) != a);
}

TEST_CASE("cmd_sweep exit codes") {
  TempDir dir;
  {
    auto cfg = ExperimentConfig::from_json(base_config());
    cfg.out_dir = dir.path.string();
    std::ostringstream out;
    CHECK(cmd_sweep(cfg, out) == kExitOk);
  }
  {
    // nu = inf at beta > 0: the chi dispatch fails on that point -> exit 2
    json j = base_config();
    j["model"] = {{"kind", "power_law"}, {"tau", 2.5}, {"k_min", 1}};
    j["solver"] = {{"population_size", 200}, {"max_iters", 10}};
    j["sweep"]["n_mag"] = 1000;
    auto cfg = ExperimentConfig::from_json(j);
    cfg.out_dir = dir.path.string();
    std::ostringstream out;
    CHECK(cmd_sweep(cfg, out) == kExitSweepPartial);
    std::ifstream in(dir.path / "sweep.csv");
    std::stringstream csv;
    csv << in.rdbuf();
    CHECK(csv.str().find("FAILED") != std::string::npos);
  }
}

TEST_CASE("cmd_exponents emits fit JSON and raw points") {
  TempDir dir;
  json j = base_config();
  j["exponents"] = {{"fits", json::array({"gamma"})}};
  auto cfg = ExperimentConfig::from_json(j);
  cfg.out_dir = dir.path.string();
  std::ostringstream out;
  CHECK(cmd_exponents(cfg, out) == kExitOk);
  std::ifstream in(dir.path / "exponents.json");
  REQUIRE(in.good());
  const json r = json::parse(in);
  REQUIRE(r["fits"].size() == 1);
  const auto& fit = r["fits"][0];
  CHECK(fit["exponent"] == "gamma");
  CHECK(std::abs(fit["estimate"].get<double>() - 1.0) < 0.02);
  CHECK(fit["points"].size() == 12);
  CHECK(fit.contains("limit_constant"));

  // rejected fits surface with exit code 3
  json j2 = base_config();
  j2["exponents"] = {{"fits", json::array({"gamma"})}, {"r2_min", 1.01}};
  auto cfg2 = ExperimentConfig::from_json(j2);
  cfg2.out_dir = dir.path.string();
  std::ostringstream out2;
  CHECK(cmd_exponents(cfg2, out2) == kExitFitRejected);
  CHECK(out2.str().find("REJECTED") != std::string::npos);
}

TEST_CASE("cmd_oracle runs the suite and surfaces enumeration rejection") {
  TempDir dir;
  {
    json j = base_config();
    j["oracle"] = {{"n_trees", 10}, {"n_graphs", 2}, {"max_graph_n", 10}};
    auto cfg = ExperimentConfig::from_json(j);
    cfg.out_dir = dir.path.string();
    std::ostringstream out;
    CHECK(cmd_oracle(cfg, out) == kExitOk);
    CHECK(out.str().find("[PASS]") != std::string::npos);
  }
  {
    // an explicit 25-vertex graph violates the enumeration cap, cleanly
    const auto graph_path = dir.path / "big.graph";
    std::ofstream g(graph_path);
    g << "25 1\n0 1\n";
    g.close();
    json j = base_config();
    j["oracle"] = {{"enumerate_file", graph_path.string()}};
    auto cfg = ExperimentConfig::from_json(j);
    cfg.out_dir = dir.path.string();
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(cmd_oracle(cfg, out), doctest::Contains("cap of 24"),
                         std::invalid_argument);
  }
}
