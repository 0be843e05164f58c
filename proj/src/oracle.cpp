#include "ising/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "ising/common.hpp"

namespace ising::oracle {

namespace {

constexpr int kEnumerationCap = 24;

double xi_eval(const XiFn& override_fn, const IsingParams& p, double h) {
  return override_fn ? override_fn(p, h) : xi(p, h);
}

}  // namespace

// ---------------------------------------------------------------------------
// Instances

std::vector<int> TreeInstance::parents() const {
  std::vector<int> par(static_cast<std::size_t>(n()), -1);
  for (int v = 0; v < n(); ++v) {
    for (int c : children[static_cast<std::size_t>(v)]) par[static_cast<std::size_t>(c)] = v;
  }
  return par;
}

std::vector<std::pair<int, int>> TreeInstance::edges() const {
  std::vector<std::pair<int, int>> e;
  for (int v = 0; v < n(); ++v) {
    for (int c : children[static_cast<std::size_t>(v)]) e.emplace_back(v, c);
  }
  return e;
}

void GraphInstance::recompute_degrees() {
  degrees.assign(static_cast<std::size_t>(n), 0);
  for (const auto& [u, v] : edges) {
    ++degrees[static_cast<std::size_t>(u)];
    ++degrees[static_cast<std::size_t>(v)];
  }
}

std::string write_graph(const GraphInstance& g) {
  std::ostringstream os;
  os << g.n << ' ' << g.edges.size() << '\n';
  for (const auto& [u, v] : g.edges) os << u << ' ' << v << '\n';
  return os.str();
}

GraphInstance read_graph(std::istream& in) {
  GraphInstance g;
  std::size_t m = 0;
  if (!(in >> g.n >> m)) throw std::invalid_argument("read_graph: bad header");
  g.edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    int u = 0, v = 0;
    if (!(in >> u >> v)) throw std::invalid_argument("read_graph: truncated edge list");
    if (u < 0 || v < 0 || u >= g.n || v >= g.n) {
      throw std::invalid_argument("read_graph: edge endpoint out of range");
    }
    g.edges.emplace_back(u, v);
  }
  g.recompute_degrees();
  return g;
}

std::string write_tree(const TreeInstance& t) {
  std::ostringstream os;
  const auto e = t.edges();
  os << t.n() << ' ' << e.size() << ' ' << t.root << '\n';
  for (const auto& [u, v] : e) os << u << ' ' << v << '\n';
  return os.str();
}

TreeInstance read_tree(std::istream& in) {
  int n = 0, root = 0;
  std::size_t m = 0;
  if (!(in >> n >> m >> root)) throw std::invalid_argument("read_tree: bad header");
  if (root < 0 || root >= n) throw std::invalid_argument("read_tree: root out of range");
  if (m + 1 != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("read_tree: edge count must be n-1");
  }
  TreeInstance t;
  t.root = root;
  t.children.assign(static_cast<std::size_t>(n), {});
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  seen[static_cast<std::size_t>(root)] = 1;
  for (std::size_t i = 0; i < m; ++i) {
    int u = 0, v = 0;
    if (!(in >> u >> v)) throw std::invalid_argument("read_tree: truncated edge list");
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw std::invalid_argument("read_tree: edge endpoint out of range");
    }
    t.children[static_cast<std::size_t>(u)].push_back(v);
    if (seen[static_cast<std::size_t>(v)]++) {
      throw std::invalid_argument("read_tree: vertex has two parents (not a rooted tree)");
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("read_tree: disconnected vertex");
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exact Gibbs

ExactGibbs::ExactGibbs(const GraphInstance& g, double beta, std::vector<double> fields)
    : g_(g), beta_(beta), fields_(std::move(fields)) {
  if (g_.n < 1) throw std::invalid_argument("enumerate_gibbs: empty graph");
  if (g_.n > kEnumerationCap) {
    throw std::invalid_argument("enumerate_gibbs: n exceeds the 2^n enumeration cap of 24");
  }
  if (fields_.size() != static_cast<std::size_t>(g_.n)) {
    throw std::invalid_argument("enumerate_gibbs: field vector size mismatch");
  }
  const std::uint32_t n_conf = 1u << g_.n;
  // Pass 1: maximum log-weight for the log-sum-exp shift.
  auto energy = [&](std::uint32_t c) {
    double e = 0.0;
    for (const auto& [u, v] : g_.edges) {
      const bool su = (c >> u) & 1u, sv = (c >> v) & 1u;
      e += (su == sv) ? beta_ : -beta_;
    }
    for (int i = 0; i < g_.n; ++i) {
      e += ((c >> i) & 1u) ? fields_[static_cast<std::size_t>(i)]
                           : -fields_[static_cast<std::size_t>(i)];
    }
    return e;
  };
  double emax = -std::numeric_limits<double>::infinity();
  for (std::uint32_t c = 0; c < n_conf; ++c) emax = std::max(emax, energy(c));
  // Pass 2: accumulate the shifted weights.
  double z = 0.0, s2 = 0.0;
  std::vector<double> mag(static_cast<std::size_t>(g_.n), 0.0);
  for (std::uint32_t c = 0; c < n_conf; ++c) {
    const double w = std::exp(energy(c) - emax);
    z += w;
    const int pop = std::popcount(c);
    const double s_tot = 2.0 * pop - g_.n;
    s2 += w * s_tot * s_tot;
    for (int i = 0; i < g_.n; ++i) {
      mag[static_cast<std::size_t>(i)] += ((c >> i) & 1u) ? w : -w;
    }
  }
  log_z_ = emax + std::log(z);
  for (double& m : mag) m /= z;
  mag_ = std::move(mag);
  s2_ = s2 / z;
}

double ExactGibbs::mean_magnetization() const {
  return pairwise_sum(mag_) / static_cast<double>(g_.n);
}

double ExactGibbs::pair_correlation(int i, int j) const {
  const std::uint32_t n_conf = 1u << g_.n;
  double num = 0.0, z = 0.0;
  for (std::uint32_t c = 0; c < n_conf; ++c) {
    double e = 0.0;
    for (const auto& [u, v] : g_.edges) {
      const bool su = (c >> u) & 1u, sv = (c >> v) & 1u;
      e += (su == sv) ? beta_ : -beta_;
    }
    for (int k = 0; k < g_.n; ++k) {
      e += ((c >> k) & 1u) ? fields_[static_cast<std::size_t>(k)]
                           : -fields_[static_cast<std::size_t>(k)];
    }
    const double w = std::exp(e - log_z_);
    z += w;
    const double si = ((c >> i) & 1u) ? 1.0 : -1.0;
    const double sj = ((c >> j) & 1u) ? 1.0 : -1.0;
    num += w * si * sj;
  }
  return num / z;
}

double ExactGibbs::susceptibility() const {
  const double s_mean = pairwise_sum(mag_);
  return (s2_ - s_mean * s_mean) / static_cast<double>(g_.n);
}

ExactGibbs enumerate_gibbs(const GraphInstance& g, double beta, std::vector<double> fields) {
  return ExactGibbs(g, beta, std::move(fields));
}

ExactGibbs enumerate_gibbs(const GraphInstance& g, double beta, double uniform_field) {
  return ExactGibbs(g, beta, std::vector<double>(static_cast<std::size_t>(g.n), uniform_field));
}

// ---------------------------------------------------------------------------
// Tree computations

PrunedTree prune_tree(const TreeInstance& t, double beta, double B, Init boundary,
                      const XiFn& xi_override) {
  const IsingParams params(beta, B);
  const int n = t.n();
  PrunedTree out;
  out.fields.assign(static_cast<std::size_t>(n), 0.0);
  // Post-order via an explicit stack (children before parents).
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<int> stack{t.root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int c : t.children[static_cast<std::size_t>(v)]) stack.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    const auto& kids = t.children[static_cast<std::size_t>(v)];
    if (kids.empty()) {
      out.fields[static_cast<std::size_t>(v)] = boundary == Init::Free ? B : kPlusSentinel;
      continue;
    }
    double h = B;
    for (int c : kids) h += xi_eval(xi_override, params, out.fields[static_cast<std::size_t>(c)]);
    out.fields[static_cast<std::size_t>(v)] = h;
  }
  out.root_magnetization = std::tanh(out.fields[static_cast<std::size_t>(t.root)]);
  return out;
}

double path_correlation(const TreeInstance& t, double beta, double B, int v, Init boundary,
                        const XiFn& xi_override) {
  if (v < 0 || v >= t.n()) throw std::invalid_argument("path_correlation: vertex out of range");
  const PrunedTree pruned = prune_tree(t, beta, B, boundary, xi_override);
  const auto par = t.parents();
  // Path from v up to the root; every vertex except the root must have one.
  std::vector<int> path;
  for (int u = v; u != t.root; u = par[static_cast<std::size_t>(u)]) {
    if (u < 0) throw std::invalid_argument("path_correlation: target is not a descendant");
    path.push_back(u);
    if (static_cast<int>(path.size()) > t.n()) {
      throw std::invalid_argument("path_correlation: malformed tree");
    }
  }
  const double m0 = pruned.root_magnetization;
  double corr = 1.0 - m0 * m0;
  const double s2b = std::sinh(2.0 * beta);
  const double c2b = std::cosh(2.0 * beta);
  for (int u : path) {
    const double h = pruned.fields[static_cast<std::size_t>(u)];
    corr *= s2b / (c2b + std::cosh(2.0 * h));  // h = +inf gives a zero factor
  }
  return corr;
}

// ---------------------------------------------------------------------------
// Random instances

TreeInstance sample_galton_watson(const DegreeModel& model, const ForwardModel& fm,
                                  GwRoot root_law, int depth, std::size_t size_cap,
                                  CounterRng& rng) {
  if (depth < 0) throw std::invalid_argument("sample_galton_watson: depth must be >= 0");
  TreeInstance t;
  t.root = 0;
  t.children.emplace_back();
  if (depth == 0) return t;
  std::vector<int> frontier{0};
  for (int gen = 0; gen < depth && !frontier.empty(); ++gen) {
    std::vector<int> next;
    for (int v : frontier) {
      const std::int64_t k = gen == 0 && root_law == GwRoot::Degree
                                 ? model.sample(rng)
                                 : fm.sample(rng);
      for (std::int64_t c = 0; c < k; ++c) {
        if (t.children.size() >= size_cap) {
          throw SizeCapExceeded("sample_galton_watson: vertex count exceeded cap");
        }
        const int id = t.n();
        t.children.emplace_back();
        t.children[static_cast<std::size_t>(v)].push_back(id);
        next.push_back(id);
      }
    }
    frontier = std::move(next);
  }
  return t;
}

GraphInstance sample_configuration_model(const DegreeModel& model, int n, CounterRng& rng) {
  if (n < 2) throw std::invalid_argument("sample_configuration_model: n must be >= 2");
  std::vector<std::int64_t> deg(static_cast<std::size_t>(n));
  std::int64_t total = 0;
  for (auto& d : deg) {
    d = model.sample(rng);
    total += d;
  }
  // Odd total degree: resample one vertex (bounded retries; some models such
  // as Regular(odd d) cannot be fixed this way).
  int retries = 0;
  while (total % 2 != 0) {
    if (++retries > 64) {
      throw std::invalid_argument(
          "sample_configuration_model: cannot reach even total degree by resampling one vertex");
    }
    total -= deg[0];
    deg[0] = model.sample(rng);
    total += deg[0];
  }
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(total));
  for (int v = 0; v < n; ++v) {
    for (std::int64_t j = 0; j < deg[static_cast<std::size_t>(v)]; ++j) stubs.push_back(v);
  }
  // Fisher-Yates with our own RNG keeps the matching bit-exact across
  // standard library versions.
  for (std::size_t i = stubs.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(stubs[i - 1], stubs[j]);
  }
  GraphInstance g;
  g.n = n;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    int u = stubs[i], v = stubs[i + 1];
    if (u == v) {
      ++g.erased_edges;
      continue;
    }
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second) {
      ++g.erased_edges;
      continue;
    }
    g.edges.emplace_back(u, v);
  }
  g.recompute_degrees();
  return g;
}

// ---------------------------------------------------------------------------
// Glauber dynamics

GlauberResult glauber_estimate(const GraphInstance& g, double beta, double B, int burn_sweeps,
                               int measure_sweeps, std::uint64_t seed) {
  if (!(B > 0.0)) throw std::invalid_argument("glauber_estimate: requires B > 0");
  if (measure_sweeps < 10) throw std::invalid_argument("glauber_estimate: too few sweeps");
  const int n = g.n;
  // CSR adjacency.
  std::vector<int> offs(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [u, v] : g.edges) {
    ++offs[static_cast<std::size_t>(u) + 1];
    ++offs[static_cast<std::size_t>(v) + 1];
  }
  for (int i = 0; i < n; ++i) offs[static_cast<std::size_t>(i) + 1] += offs[static_cast<std::size_t>(i)];
  std::vector<int> adj(static_cast<std::size_t>(offs.back()));
  {
    std::vector<int> cur(offs.begin(), offs.end() - 1);
    for (const auto& [u, v] : g.edges) {
      adj[static_cast<std::size_t>(cur[static_cast<std::size_t>(u)]++)] = v;
      adj[static_cast<std::size_t>(cur[static_cast<std::size_t>(v)]++)] = u;
    }
  }
  CounterRng rng(derive_key(seed, Stream::Glauber));
  std::vector<signed char> spin(static_cast<std::size_t>(n));
  for (auto& s : spin) s = rng.uniform() < 0.5 ? -1 : 1;

  std::vector<double> m_series;
  m_series.reserve(static_cast<std::size_t>(measure_sweeps));
  const int total = burn_sweeps + measure_sweeps;
  for (int sweep = 0; sweep < total; ++sweep) {
    for (int i = 0; i < n; ++i) {
      double field = B;
      for (int k = offs[static_cast<std::size_t>(i)]; k < offs[static_cast<std::size_t>(i) + 1]; ++k) {
        field += beta * spin[static_cast<std::size_t>(adj[static_cast<std::size_t>(k)])];
      }
      const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * field));
      spin[static_cast<std::size_t>(i)] = rng.uniform() < p_plus ? 1 : -1;
    }
    if (sweep >= burn_sweeps) {
      std::int64_t s_tot = 0;
      for (signed char s : spin) s_tot += s;
      m_series.push_back(static_cast<double>(s_tot) / static_cast<double>(n));
    }
  }

  GlauberResult out;
  const double m_mean = mean(m_series);
  out.M = m_mean;
  double var = 0.0;
  for (double m : m_series) var += (m - m_mean) * (m - m_mean);
  var /= static_cast<double>(m_series.size());
  out.chi = static_cast<double>(n) * var;

  // Integrated autocorrelation time with Sokal's automatic window
  // (smallest W with W >= 5 tau_int(W)).
  const std::size_t t_len = m_series.size();
  double tau = 0.5;
  if (var > 0.0) {
    double acc = 0.5;
    for (std::size_t lag = 1; lag < t_len / 4; ++lag) {
      double c = 0.0;
      for (std::size_t i = 0; i + lag < t_len; ++i) {
        c += (m_series[i] - m_mean) * (m_series[i + lag] - m_mean);
      }
      c /= static_cast<double>(t_len - lag);
      acc += c / var;
      if (static_cast<double>(lag) >= 5.0 * acc) break;
    }
    tau = std::max(0.5, acc);
  }
  out.tau_int = tau;
  out.M_se = std::sqrt(var * 2.0 * tau / static_cast<double>(t_len));
  out.warned = tau > static_cast<double>(measure_sweeps) / 50.0;
  return out;
}

// ---------------------------------------------------------------------------
// Equivalence suite

namespace {

DegreeModel corpus_model(int idx) {
  switch (idx % 4) {
    case 0:
      return DegreeModel::poisson(2.0);
    case 1:
      return DegreeModel::empirical({{1, 0.5}, {3, 0.5}});
    case 2:
      return DegreeModel::power_law(3.5, 1);
    default:
      return DegreeModel::poisson(3.0);
  }
}

TreeInstance corpus_tree(int idx, int max_n, std::uint64_t seed) {
  const DegreeModel model = corpus_model(idx);
  const ForwardModel fm(model);
  for (std::uint64_t attempt = 0;; ++attempt) {
    CounterRng rng(derive_key(seed, Stream::Oracle, static_cast<std::uint64_t>(idx), attempt));
    try {
      TreeInstance t = sample_galton_watson(model, fm, GwRoot::Degree, 3,
                                            static_cast<std::size_t>(max_n) + 1, rng);
      if (t.n() >= 2 && t.n() <= max_n) return t;
    } catch (const SizeCapExceeded&) {
      // resample
    }
  }
}

GraphInstance corpus_graph(int idx, int max_n, std::uint64_t seed) {
  const DegreeModel model = DegreeModel::poisson(2.5);
  for (std::uint64_t attempt = 0;; ++attempt) {
    CounterRng rng(derive_key(seed, Stream::Oracle, 1000 + static_cast<std::uint64_t>(idx), attempt));
    GraphInstance g = sample_configuration_model(model, max_n, rng);
    if (!g.edges.empty()) return g;
  }
}

std::pair<double, double> corpus_params(int idx, std::uint64_t seed) {
  CounterRng rng(derive_key(seed, Stream::Oracle, 2000 + static_cast<std::uint64_t>(idx)));
  const double beta = rng.uniform();               // [0, 1]
  const double B = 0.01 + 0.99 * rng.uniform();    // [0.01, 1]
  return {beta, B};
}

}  // namespace

OracleReport run_oracle_suite(const OracleSuiteConfig& cfg, const XiFn& xi_override) {
  OracleReport report;

  // Pruning vs. enumeration and GKS sandwich on the tree corpus.
  {
    OracleCheck prune_check{"prune_vs_enumeration", true, ""};
    OracleCheck path_check{"path_correlation_vs_enumeration", true, ""};
    OracleCheck gks_check{"gks_sandwich_free_le_plus", true, ""};
    double worst_prune = 0.0, worst_path = 0.0;
    for (int i = 0; i < cfg.n_trees; ++i) {
      const TreeInstance t = corpus_tree(i, cfg.max_tree_n, cfg.seed);
      const auto [beta, B] = corpus_params(i, cfg.seed);
      const PrunedTree free_pass = prune_tree(t, beta, B, Init::Free, xi_override);
      const PrunedTree plus_pass = prune_tree(t, beta, B, Init::Plus, xi_override);

      GraphInstance as_graph;
      as_graph.n = t.n();
      as_graph.edges = t.edges();
      as_graph.recompute_degrees();
      const ExactGibbs exact = enumerate_gibbs(as_graph, beta, B);

      const double d_prune = std::abs(free_pass.root_magnetization - exact.magnetization(t.root));
      worst_prune = std::max(worst_prune, d_prune);
      if (d_prune > cfg.tol_exact && prune_check.pass) {
        prune_check.pass = false;
        prune_check.detail = "delta=" + std::to_string(d_prune) + " on instance:\n" + write_tree(t);
      }

      // Deepest vertex exercises the longest product.
      const auto par = t.parents();
      int deepest = t.root, best_depth = 0;
      for (int v = 0; v < t.n(); ++v) {
        int d = 0;
        for (int u = v; u != t.root; u = par[static_cast<std::size_t>(u)]) ++d;
        if (d > best_depth) {
          best_depth = d;
          deepest = v;
        }
      }
      if (deepest != t.root) {
        const double lhs = path_correlation(t, beta, B, deepest, Init::Free, xi_override);
        const double rhs = exact.pair_correlation(t.root, deepest) -
                           exact.magnetization(t.root) * exact.magnetization(deepest);
        const double d_path = std::abs(lhs - rhs);
        worst_path = std::max(worst_path, d_path);
        if (d_path > cfg.tol_exact && path_check.pass) {
          path_check.pass = false;
          path_check.detail =
              "delta=" + std::to_string(d_path) + " on instance:\n" + write_tree(t);
        }
      }

      if (free_pass.root_magnetization > plus_pass.root_magnetization + 1e-12 && gks_check.pass) {
        gks_check.pass = false;
        gks_check.detail = "free=" + std::to_string(free_pass.root_magnetization) +
                           " plus=" + std::to_string(plus_pass.root_magnetization) +
                           " on instance:\n" + write_tree(t);
      }
    }
    if (prune_check.pass) {
      prune_check.detail = "worst |free - exact| = " + std::to_string(worst_prune);
    }
    if (path_check.pass) {
      path_check.detail = "worst |formula - exact| = " + std::to_string(worst_path);
    }
    report.checks.push_back(prune_check);
    report.checks.push_back(path_check);
    report.checks.push_back(gks_check);
  }

  // Finite-difference susceptibility identity on small graphs.
  {
    OracleCheck fd_check{"susceptibility_derivative_identity", true, ""};
    double worst = 0.0;
    for (int i = 0; i < cfg.n_graphs; ++i) {
      const GraphInstance g = corpus_graph(i, cfg.max_graph_n, cfg.seed);
      const auto [beta, B] = corpus_params(5000 + i, cfg.seed);
      const ExactGibbs exact = enumerate_gibbs(g, beta, B);
      const double chi = exact.susceptibility();
      double chi_fd = 0.0;
      for (int j = 0; j < g.n; ++j) {
        std::vector<double> fields(static_cast<std::size_t>(g.n), B);
        fields[static_cast<std::size_t>(j)] = B + cfg.fd_step;
        const double up = enumerate_gibbs(g, beta, fields).mean_magnetization();
        fields[static_cast<std::size_t>(j)] = B - cfg.fd_step;
        const double dn = enumerate_gibbs(g, beta, fields).mean_magnetization();
        chi_fd += (up - dn) / (2.0 * cfg.fd_step) * static_cast<double>(g.n);
      }
      chi_fd /= static_cast<double>(g.n);
      const double rel = std::abs(chi_fd - chi) / std::max(1e-30, std::abs(chi));
      worst = std::max(worst, rel);
      if (rel > cfg.tol_fd && fd_check.pass) {
        fd_check.pass = false;
        fd_check.detail = "rel=" + std::to_string(rel) + " on instance:\n" + write_graph(g);
      }
    }
    if (fd_check.pass) fd_check.detail = "worst relative error = " + std::to_string(worst);
    report.checks.push_back(fd_check);
  }

  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

}  // namespace ising::oracle
