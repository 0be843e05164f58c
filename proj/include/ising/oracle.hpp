#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ising/cavity.hpp"
#include "ising/degree_models.hpp"

namespace ising::oracle {

// ---------------------------------------------------------------------------
// Instances

struct TreeInstance {
  int root = 0;
  std::vector<std::vector<int>> children;  // parent -> ordered child list

  int n() const { return static_cast<int>(children.size()); }
  std::vector<int> parents() const;        // -1 at the root
  std::vector<std::pair<int, int>> edges() const;
};

struct GraphInstance {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // undirected, no self-loops after cleanup
  std::vector<int> degrees;                // realized degrees
  int erased_edges = 0;                    // self-loops / duplicate edges removed

  void recompute_degrees();
};

// Edge-list text format: "n m" then one "u v" line per edge (0-indexed);
// trees carry the root as a third field on line 1.
std::string write_graph(const GraphInstance& g);
GraphInstance read_graph(std::istream& in);
std::string write_tree(const TreeInstance& t);
TreeInstance read_tree(std::istream& in);

// ---------------------------------------------------------------------------
// Exact Gibbs enumeration (n <= 24)

class ExactGibbs {
 public:
  ExactGibbs(const GraphInstance& g, double beta, std::vector<double> fields);

  double log_partition() const { return log_z_; }
  double magnetization(int i) const { return mag_[static_cast<std::size_t>(i)]; }
  double mean_magnetization() const;
  /// <sigma_i sigma_j>, computed on demand with a fresh pass.
  double pair_correlation(int i, int j) const;
  /// chi_n = (1/n) sum_ij (<s_i s_j> - <s_i><s_j>).
  double susceptibility() const;

 private:
  GraphInstance g_;
  double beta_;
  std::vector<double> fields_;
  double log_z_ = 0.0;
  std::vector<double> mag_;
  double s2_ = 0.0;  // < (sum_i sigma_i)^2 >
};

ExactGibbs enumerate_gibbs(const GraphInstance& g, double beta, std::vector<double> fields);
ExactGibbs enumerate_gibbs(const GraphInstance& g, double beta, double uniform_field);

// ---------------------------------------------------------------------------
// Exact tree computations

using XiFn = std::function<double(const IsingParams&, double)>;

struct PrunedTree {
  std::vector<double> fields;  // effective field per vertex (sentinel allowed)
  double root_magnetization = 0.0;
};

/// Leaf-to-root pruning pass: h(v) = B + sum_children xi(h(child)); Free
/// leaves start at B, Plus leaves at the saturation sentinel. xi_override is
/// a test hook replacing the propagation map.
PrunedTree prune_tree(const TreeInstance& t, double beta, double B, Init boundary,
                      const XiFn& xi_override = {});

/// Exact truncated correlation <s_root s_v> - <s_root><s_v> along the root
/// path via the product formula with pruned fields.
double path_correlation(const TreeInstance& t, double beta, double B, int v, Init boundary,
                        const XiFn& xi_override = {});

// ---------------------------------------------------------------------------
// Random instances

enum class GwRoot { Degree, Forward };  // root offspring D, or K

TreeInstance sample_galton_watson(const DegreeModel& model, const ForwardModel& fm,
                                  GwRoot root_law, int depth, std::size_t size_cap,
                                  CounterRng& rng);

GraphInstance sample_configuration_model(const DegreeModel& model, int n, CounterRng& rng);

// ---------------------------------------------------------------------------
// Glauber (heat-bath) dynamics

struct GlauberResult {
  double M = 0.0;
  double M_se = 0.0;
  double chi = 0.0;
  double tau_int = 0.0;  // integrated autocorrelation time of the mean spin
  bool warned = false;   // tau_int exceeds measurement window / 50
};

GlauberResult glauber_estimate(const GraphInstance& g, double beta, double B, int burn_sweeps,
                               int measure_sweeps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Equivalence suite

struct OracleCheck {
  std::string name;
  bool pass = false;
  std::string detail;  // worst-case numbers; failing instance text on failure
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  bool all_pass = true;
};

struct OracleSuiteConfig {
  int n_trees = 100;
  int max_tree_n = 14;
  int n_graphs = 20;
  int max_graph_n = 16;
  std::uint64_t seed = 1;
  double tol_exact = 1e-10;
  double tol_fd = 1e-6;
  double fd_step = 1e-5;
};

OracleReport run_oracle_suite(const OracleSuiteConfig& cfg, const XiFn& xi_override = {});

}  // namespace ising::oracle
