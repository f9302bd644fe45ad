#pragma once

// Configuration ingestion, command dispatch, and machine-readable reporting.
// One JSON config document drives every suite; a fixed seed pins all random
// draws, so identical (config, seed, precision) runs emit identical reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "bethe.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "qqoper.hpp"
#include "random.hpp"
#include "spinchain.hpp"
#include "vertex.hpp"

namespace bethegeom {
namespace cli {

using json = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  ChainSpec chain;
  int magnons = 1;
  cplx kahler{0.0, 0.0};
  HomotopyConfig solver;
  int truncation = 6;
  std::uint64_t seed = 2026;
  std::string precision = "std";
  std::string format = "json";
  std::string out;
  std::vector<std::string> suites;
  json echo;
};

struct CheckRecord {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double seconds = 0.0;
  json values;
};

struct Report {
  RunConfig config;
  std::vector<CheckRecord> checks;
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace detail {

inline cplx parse_complex(const json& node, const std::string& path) {
  if (node.is_number()) return cplx(node.get<double>(), 0.0);
  if (node.is_array() && node.size() == 2 && node[0].is_number() &&
      node[1].is_number())
    return cplx(node[0].get<double>(), node[1].get<double>());
  throw InvariantViolation(path + ": expected a number or [re, im] pair");
}

inline json dump_complex(cplx v) { return json::array({v.real(), v.imag()}); }

inline void reject_unknown_keys(const json& node, const std::string& path,
                                const std::vector<std::string>& known) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw InvariantViolation(path + it.key() + ": unknown field");
  }
}

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds = {
      "spectrum", "bethe", "vertex", "qq", "oper", "trs", "verify-all"};
  return cmds;
}

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> names = {
      "spinchain", "bethe", "qoperator", "vertex", "qqoper", "trs"};
  return names;
}

}  // namespace detail

struct CliOverrides {
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  std::string precision;
};

inline RunConfig validate_config(const std::string& text,
                                 const std::string& command,
                                 const CliOverrides& over = {}) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!root.is_object())
    throw InvariantViolation("config: expected a JSON object");
  detail::reject_unknown_keys(
      root, "",
      {"command", "chain", "magnons", "kahler", "solver", "truncation",
       "seed", "precision", "format", "out", "suites"});

  RunConfig cfg;
  cfg.command = command;
  if (std::find(detail::known_commands().begin(), detail::known_commands().end(),
                cfg.command) == detail::known_commands().end())
    throw InvariantViolation("command: expected one of spectrum, bethe, vertex, "
                             "qq, oper, trs, verify-all");

  cfg.seed = root.value("seed", std::uint64_t(2026));
  if (over.has_seed) cfg.seed = over.seed;

  cfg.precision = root.value("precision", std::string("std"));
  if (!over.precision.empty()) cfg.precision = over.precision;
  if (cfg.precision != "std" && cfg.precision != "extended")
    throw InvariantViolation("precision: expected std or extended");

  cfg.format = root.value("format", std::string("json"));
  if (!over.format.empty()) cfg.format = over.format;
  if (cfg.format != "json" && cfg.format != "csv")
    throw InvariantViolation("format: expected json or csv");

  cfg.out = root.value("out", std::string());
  if (!over.out.empty()) cfg.out = over.out;

  Rng rng(cfg.seed);
  json chainNode = root.value("chain", json::object());
  if (!chainNode.is_object())
    throw InvariantViolation("chain: expected an object");
  detail::reject_unknown_keys(chainNode, "chain.", {"n", "a", "hbar", "zeta"});
  cfg.chain.n = chainNode.value("n", 2);
  if (cfg.chain.n < 1 || cfg.chain.n > 12)
    throw InvariantViolation("chain.n: expected 1 <= n <= 12");
  if (chainNode.contains("a")) {
    const json& arr = chainNode["a"];
    if (!arr.is_array() || static_cast<int>(arr.size()) != cfg.chain.n)
      throw InvariantViolation("chain.a: expected an array of n entries");
    for (size_t i = 0; i < arr.size(); ++i)
      cfg.chain.a.push_back(detail::parse_complex(
          arr[i], "chain.a[" + std::to_string(i) + "]"));
  } else {
    for (int i = 0; i < cfg.chain.n; ++i)
      cfg.chain.a.push_back(rng.annulus(0.5, 2.0));
  }
  cfg.chain.hbar = chainNode.contains("hbar")
                       ? detail::parse_complex(chainNode["hbar"], "chain.hbar")
                       : rng.annulus(0.3, 0.7);
  cfg.chain.zeta = chainNode.contains("zeta")
                       ? detail::parse_complex(chainNode["zeta"], "chain.zeta")
                       : rng.annulus(0.6, 1.8);
  validate_chain(cfg.chain);

  cfg.magnons = root.value("magnons", 1);
  if (cfg.magnons < 0 || cfg.magnons > cfg.chain.n)
    throw InvariantViolation("magnons: expected 0 <= k <= n");

  if (root.contains("kahler"))
    cfg.kahler = detail::parse_complex(root["kahler"], "kahler");

  json solverNode = root.value("solver", json::object());
  if (!solverNode.is_object())
    throw InvariantViolation("solver: expected an object");
  detail::reject_unknown_keys(solverNode, "solver.",
                              {"steps", "retries", "accept_tol", "distinct_tol"});
  cfg.solver.steps = solverNode.value("steps", cfg.solver.steps);
  cfg.solver.retries = solverNode.value("retries", cfg.solver.retries);
  cfg.solver.accept_tol = solverNode.value("accept_tol", cfg.solver.accept_tol);
  cfg.solver.distinct_tol =
      solverNode.value("distinct_tol", cfg.solver.distinct_tol);
  cfg.solver.seed = cfg.seed;
  if (cfg.solver.steps < 1 || cfg.solver.retries < 0)
    throw InvariantViolation("solver.steps: expected positive step count");
  if (cfg.solver.accept_tol <= 0.0 || cfg.solver.distinct_tol <= 0.0)
    throw InvariantViolation("solver.accept_tol: tolerances must be positive");

  cfg.truncation = root.value("truncation", 6);
  if (cfg.truncation < 0 || cfg.truncation > 12)
    throw InvariantViolation("truncation: expected 0 <= D <= 12");

  if (root.contains("suites")) {
    const json& arr = root["suites"];
    if (!arr.is_array())
      throw InvariantViolation("suites: expected an array of suite names");
    for (const json& entry : arr) {
      if (!entry.is_string())
        throw InvariantViolation("suites: expected an array of suite names");
      std::string name = entry.get<std::string>();
      if (std::find(detail::known_suites().begin(), detail::known_suites().end(),
                    name) == detail::known_suites().end())
        throw InvariantViolation("suites: unknown suite " + name);
      cfg.suites.push_back(name);
    }
  } else {
    cfg.suites = detail::known_suites();
  }

  cfg.echo = json::object();
  cfg.echo["command"] = cfg.command;
  cfg.echo["seed"] = cfg.seed;
  cfg.echo["precision"] = cfg.precision;
  cfg.echo["format"] = cfg.format;
  cfg.echo["out"] = cfg.out;
  json chainEcho = json::object();
  chainEcho["n"] = cfg.chain.n;
  json aEcho = json::array();
  for (cplx ai : cfg.chain.a) aEcho.push_back(detail::dump_complex(ai));
  chainEcho["a"] = aEcho;
  chainEcho["hbar"] = detail::dump_complex(cfg.chain.hbar);
  chainEcho["zeta"] = detail::dump_complex(cfg.chain.zeta);
  cfg.echo["chain"] = chainEcho;
  cfg.echo["magnons"] = cfg.magnons;
  cfg.echo["kahler"] = detail::dump_complex(cfg.kahler);
  json solverEcho = json::object();
  solverEcho["steps"] = cfg.solver.steps;
  solverEcho["retries"] = cfg.solver.retries;
  solverEcho["accept_tol"] = cfg.solver.accept_tol;
  solverEcho["distinct_tol"] = cfg.solver.distinct_tol;
  cfg.echo["solver"] = solverEcho;
  cfg.echo["truncation"] = cfg.truncation;
  json suitesEcho = json::array();
  for (const std::string& name : cfg.suites) suitesEcho.push_back(name);
  cfg.echo["suites"] = suitesEcho;
  return cfg;
}

// ---------------------------------------------------------------------------
// Check plumbing
// ---------------------------------------------------------------------------

namespace detail {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline CheckRecord make_check(const std::string& name, double residual,
                              double tolerance, double seconds,
                              json values = json::object()) {
  CheckRecord rec;
  rec.name = name;
  rec.residual = residual;
  rec.tolerance = tolerance;
  rec.pass = residual < tolerance;
  rec.seconds = seconds;
  rec.values = std::move(values);
  return rec;
}

inline Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

// Long-double recomputation of the Bethe residual from solved roots.
inline double extended_bethe_residual(const ChainSpec& s,
                                      const std::vector<cplx>& roots) {
  using cld = std::complex<long double>;
  auto lift = [](cplx v) {
    return cld(static_cast<long double>(v.real()),
               static_cast<long double>(v.imag()));
  };
  cld h = lift(s.hbar);
  cld hs = std::sqrt(std::sqrt(h)) * std::sqrt(std::sqrt(h));
  cld zinv2 = cld(1.0L) / (lift(s.zeta) * lift(s.zeta));
  long double worst = 0.0L;
  for (size_t i = 0; i < roots.size(); ++i) {
    cld vi = lift(roots[i]);
    cld lhs(1.0L);
    for (cplx aj : s.a) lhs *= (hs * vi - lift(aj) / hs) / (vi - lift(aj));
    cld rhs = zinv2;
    for (size_t j = 0; j < roots.size(); ++j) {
      if (j == i) continue;
      cld vj = lift(roots[j]);
      rhs *= (vi * hs - vj / hs) / (vi / hs - vj * hs);
    }
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return static_cast<double>(worst);
}

// Long-double recomputation of one relative-to-scale Hamiltonian law value.
inline double extended_trs_law(const TRSData& data, const std::vector<cplx>& a,
                               int k, long scalePower) {
  using cld = std::complex<long double>;
  auto lift = [](cplx v) {
    return cld(static_cast<long double>(v.real()),
               static_cast<long double>(v.imag()));
  };
  int n = static_cast<int>(data.xi.size());
  cld h = lift(data.h);
  cld out(0.0L);
  for (const std::vector<int>& J : subsets_of_size(n, k)) {
    std::vector<char> in(static_cast<size_t>(n), 0);
    for (int i : J) in[static_cast<size_t>(i)] = 1;
    cld term(1.0L);
    for (int i : J)
      for (int j = 0; j < n; ++j) {
        if (in[static_cast<size_t>(j)]) continue;
        cld xi = lift(data.xi[static_cast<size_t>(i)]);
        cld xj = lift(data.xi[static_cast<size_t>(j)]);
        term *= (xi - h * xj) / (xi - xj);
      }
    for (int i : J) term *= lift(data.p[static_cast<size_t>(i)]);
    out += term;
  }
  for (long m = 0; m < scalePower; ++m) out *= h;
  cld ek(0.0L);
  for (const std::vector<int>& J : subsets_of_size(n, k)) {
    cld term(1.0L);
    for (int i : J) term *= lift(a[static_cast<size_t>(i)]);
    ek += term;
  }
  long double scale = std::max(1.0L, std::abs(ek));
  return static_cast<double>(std::abs(out - ek) / scale);
}

inline std::vector<cplx> seeded_weights(Rng& rng, int n) {
  std::vector<cplx> xi;
  cplx prod(1);
  for (int i = 0; i + 1 < n; ++i) {
    xi.push_back(rng.annulus(0.7, 1.6));
    prod *= xi.back();
  }
  xi.push_back(cplx(1.0) / prod);
  return xi;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Suite runners
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> run_spectrum(const RunConfig& cfg) {
  const ChainSpec& s = cfg.chain;
  std::vector<CheckRecord> out;
  Rng rng(cfg.seed + 11);

  {
    detail::Timer t;
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      cplx u = rng.annulus(0.5, 2.0);
      cplx v = rng.annulus(0.5, 2.0);
      worst = std::max(worst,
                       rel_commutator_norm(transfer(s, u), transfer(s, v)));
    }
    out.push_back(detail::make_check("transfer_family_commutes", worst, 1e-10,
                                     t.seconds()));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      cplx x = rng.annulus(0.5, 2.0);
      cplx y = rng.annulus(0.5, 2.0);
      Matrix R12 = embed_pair(r_matrix(x / y, s.hbar), 1, 2, 3);
      Matrix R13 = embed_pair(r_matrix(x, s.hbar), 1, 3, 3);
      Matrix R23 = embed_pair(r_matrix(y, s.hbar), 2, 3, 3);
      Matrix lhs = R12 * R13 * R23;
      Matrix rhs = R23 * R13 * R12;
      worst = std::max(worst, (lhs - rhs).norm() / std::max(lhs.norm(), 1e-30));
    }
    out.push_back(
        detail::make_check("yang_baxter_residual", worst, 1e-12, t.seconds()));
  }
  {
    detail::Timer t;
    std::vector<Matrix> coeffs = transfer_coefficients(s);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      cplx x = rng.annulus(0.5, 2.0);
      Matrix rebuilt = Matrix::Zero(coeffs[0].rows(), coeffs[0].cols());
      cplx xp(1);
      for (const Matrix& c : coeffs) {
        rebuilt += xp * c;
        xp *= x;
      }
      Matrix direct = transfer(s, cplx(1) / x);
      worst = std::max(worst,
                       (rebuilt - direct).norm() / std::max(direct.norm(), 1e-30));
    }
    json values = json::object();
    values["polynomial_degree"] = s.n;
    out.push_back(detail::make_check("transfer_polynomial_reconstruction",
                                     worst, 1e-9, t.seconds(), values));
  }
  {
    detail::Timer t;
    std::vector<Matrix> ops;
    for (int i = 1; i <= s.n; ++i) ops.push_back(qkz_operator(s, i, cplx(1)));
    double worst = 0.0;
    for (size_t i = 0; i < ops.size(); ++i)
      for (size_t j = i + 1; j < ops.size(); ++j)
        worst = std::max(worst, rel_commutator_norm(ops[i], ops[j]));
    out.push_back(detail::make_check("difference_connection_commutes", worst,
                                     1e-9, t.seconds()));
  }
  return out;
}

inline std::vector<CheckRecord> run_bethe(const RunConfig& cfg) {
  const ChainSpec& s = cfg.chain;
  int k = cfg.magnons;
  std::vector<CheckRecord> out;
  Rng rng(cfg.seed + 23);

  detail::Timer solveTimer;
  BetheInstance inst{s, k, BetheForm::ABA, cplx(0.0)};
  CompletenessReport rep = solve_all(inst, cfg.solver);
  double solveSeconds = solveTimer.seconds();

  {
    json values = json::object();
    values["expected"] = rep.expected;
    values["found"] = static_cast<int>(rep.solutions.size());
    values["min_pair_distance"] = rep.min_pair_distance;
    json sols = json::array();
    for (const RootSet& sol : rep.solutions) {
      json roots = json::array();
      for (cplx v : sol.roots) roots.push_back(detail::dump_complex(v));
      json entry = json::object();
      entry["roots"] = roots;
      entry["residual"] = sol.residual;
      sols.push_back(entry);
    }
    values["solutions"] = sols;
    double miss = std::abs(static_cast<double>(rep.expected) -
                           static_cast<double>(rep.solutions.size()));
    out.push_back(detail::make_check("solution_count_matches_binomial", miss,
                                     0.5, solveSeconds, values));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    for (const RootSet& sol : rep.solutions) {
      double r = sol.residual;
      if (cfg.precision == "extended")
        r = detail::extended_bethe_residual(s, sol.roots);
      worst = std::max(worst, r);
    }
    out.push_back(detail::make_check("bethe_equation_residuals", worst,
                                     10.0 * cfg.solver.accept_tol, t.seconds()));
  }
  if (k == 1) {
    detail::Timer t;
    Poly pol{cplx(0)};
    {
      cplx hs = quarter_root(s.hbar) * quarter_root(s.hbar);
      std::vector<cplx> scaled;
      for (cplx ai : s.a) scaled.push_back(ai / s.hbar);
      Poly lhs = poly_scale(poly_from_roots(scaled), pow_int(hs, s.n));
      Poly rhs = poly_scale(poly_from_roots(s.a),
                            cplx(1.0) / (s.zeta * s.zeta));
      pol = poly_sub(lhs, rhs);
    }
    std::vector<cplx> oracle = poly_roots(pol);
    std::sort(oracle.begin(), oracle.end(), [](cplx x, cplx y) {
      if (x.real() != y.real()) return x.real() < y.real();
      return x.imag() < y.imag();
    });
    std::vector<cplx> found;
    for (const RootSet& sol : rep.solutions) found.push_back(sol.roots[0]);
    std::sort(found.begin(), found.end(), [](cplx x, cplx y) {
      if (x.real() != y.real()) return x.real() < y.real();
      return x.imag() < y.imag();
    });
    double dist = 0.0;
    for (size_t i = 0; i < oracle.size() && i < found.size(); ++i)
      dist = std::max(dist, std::abs(oracle[i] - found[i]) /
                                std::max(1.0, std::abs(oracle[i])));
    if (oracle.size() != found.size()) dist = 1.0;
    json values = json::object();
    values["oracle_degree"] = static_cast<int>(oracle.size());
    out.push_back(detail::make_check("one_magnon_polynomial_oracle", dist, 1e-8,
                                     t.seconds(), values));
  }
  if (s.n <= 6) {
    detail::Timer t;
    double worst = 0.0;
    for (const RootSet& sol : rep.solutions) {
      Vector psi = weight_block_vector(bethe_vector(s, sol.roots), s.n, k);
      for (int trial = 0; trial < 3; ++trial) {
        cplx u = rng.annulus(0.5, 2.0);
        Matrix T = weight_block(transfer(s, u), s.n, k);
        cplx lam = transfer_eigenvalue(s, u, sol.roots);
        double err = (T * psi - lam * psi).norm() /
                     std::max(psi.norm() * std::abs(lam), 1e-30);
        worst = std::max(worst, err);
      }
    }
    out.push_back(detail::make_check("transfer_eigenvalue_cross_check", worst,
                                     1e-8, t.seconds()));
  }
  {
    detail::Timer t;
    BetheInstance saddle = saddle_counterpart(inst);
    double worst = 0.0;
    for (const RootSet& sol : rep.solutions)
      worst = std::max(worst, ratio_residual(saddle, sol.roots));
    json values = json::object();
    values["hbar_prime"] = detail::dump_complex(saddle.spec.hbar);
    values["kahler"] = detail::dump_complex(saddle.z);
    out.push_back(detail::make_check("saddle_dictionary_certificate", worst,
                                     1e-8, t.seconds(), values));
  }
  return out;
}

inline std::vector<CheckRecord> run_qoperator(const RunConfig& cfg) {
  const ChainSpec& s = cfg.chain;
  std::vector<CheckRecord> out;
  Rng rng(cfg.seed + 31);
  cplx z = (s.n % 2 == 0 ? cplx(1) : cplx(-1)) / (s.zeta * s.zeta);

  {
    detail::Timer t;
    double worst = 0.0;
    QOperatorTower tower = q_tower(s, +1);
    for (int trial = 0; trial < 5; ++trial) {
      cplx x = rng.annulus(0.5, 1.5);
      cplx u = rng.annulus(0.5, 2.0);
      worst = std::max(worst, rel_commutator_norm(tower_eval(tower, x),
                                                  transfer(s, u)));
    }
    out.push_back(detail::make_check("q_operator_commutes_with_transfer",
                                     worst, 1e-9, t.seconds()));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      cplx x = rng.annulus(0.5, 1.5);
      IdentityResiduals res = operator_identity_residuals(s, x);
      worst = std::max({worst, res.tq_plus, res.tq_minus, res.wronskian});
    }
    out.push_back(detail::make_check("tq_and_wronskian_residuals", worst, 1e-8,
                                     t.seconds()));
  }
  {
    detail::Timer t;
    BetheInstance inst{s, cfg.magnons, BetheForm::ABA, cplx(0.0)};
    CompletenessReport rep = solve_all(inst, cfg.solver);
    double worst = rep.complete ? 0.0 : 1.0;
    QOperatorTower tower = q_tower(s, +1);
    for (const RootSet& sol : rep.solutions) {
      Vector psi = bethe_vector(s, sol.roots);
      for (int trial = 0; trial < 2; ++trial) {
        cplx x = rng.annulus(0.4, 1.2);
        cplx want(1);
        for (cplx v : sol.roots) want *= cplx(1) - x * v;
        Vector img = tower_eval(tower, x) * psi;
        worst = std::max(worst, (img - want * psi).norm() /
                                    std::max(psi.norm() * std::abs(want), 1e-30));
      }
    }
    json values = json::object();
    values["kahler"] = detail::dump_complex(z);
    out.push_back(detail::make_check("q_eigenvalue_matches_root_polynomial",
                                     worst, 1e-7, t.seconds(), values));
  }
  return out;
}

inline std::vector<CheckRecord> run_vertex(const RunConfig& cfg) {
  const ChainSpec& s = cfg.chain;
  int k = cfg.magnons;
  std::vector<CheckRecord> out;
  if (s.n > 4 || k > 2)
    throw InvariantViolation(
        "vertex: desk-scale command supports n <= 4 and magnons <= 2");
  int D = std::min(cfg.truncation, 3);

  std::vector<int> sites;
  for (int i = 1; i <= k; ++i) sites.push_back(i);
  FixedPoint point = fixed_point(s, sites);

  {
    detail::Timer t;
    double worst = 0.0;
    for (int l = 1; l <= k; ++l) {
      SchurInsertion tau = SchurInsertion::elementary(l);
      cplx q(0.3, 0.2);
      VertexSeries v = vertex_series(s, point, tau, q, 0);
      double err = std::abs(v.series[0] - classical_restriction(point, tau)) /
                   std::max(1.0, std::abs(classical_restriction(point, tau)));
      worst = std::max(worst, err);
    }
    out.push_back(detail::make_check("classical_limit_matches_fixed_point",
                                     worst, 1e-10, t.seconds()));
  }
  {
    detail::Timer t;
    BetheInstance saddle{s, k, BetheForm::SADDLE, cplx(0.0)};
    SeriesRootSet roots = perturbative_roots(saddle, sites, D);
    double worst = 0.0;
    for (int l = 1; l <= k; ++l) {
      SchurInsertion tau = SchurInsertion::elementary(l);
      Series limit = eigenvalue_limit(s, point, tau, D);
      Series target = bethe_symmetric_series(point, tau, roots);
      for (int m = 0; m <= D; ++m) {
        cplx want = (m < static_cast<int>(target.size()))
                        ? target[static_cast<size_t>(m)]
                        : cplx(0);
        double err = std::abs(limit[static_cast<size_t>(m)] - want) /
                     std::max(1.0, std::abs(want));
        worst = std::max(worst, err);
      }
    }
    json values = json::object();
    values["orders_compared"] = D + 1;
    out.push_back(detail::make_check("eigenvalue_limit_matches_bethe_series",
                                     worst, 1e-3, t.seconds(), values));
  }
  return out;
}

inline std::vector<CheckRecord> run_qq(const RunConfig& cfg) {
  const ChainSpec& s = cfg.chain;
  int k = cfg.magnons;
  std::vector<CheckRecord> out;

  detail::Timer solveTimer;
  BetheInstance inst{s, k, BetheForm::ABA, cplx(0.0)};
  CompletenessReport rep = solve_all(inst, cfg.solver);
  std::vector<QQInstance> instances;
  for (const RootSet& sol : rep.solutions)
    instances.push_back(sl2_from_chain(s, sol.roots));
  double solveSeconds = solveTimer.seconds();

  {
    double worst = rep.complete ? 0.0 : 1.0;
    for (const QQInstance& qi : instances)
      worst = std::max(worst, qq_residual_norm(qi, s.hbar));
    json values = json::object();
    values["instances"] = static_cast<int>(instances.size());
    out.push_back(detail::make_check("qq_relation_residual", worst, 1e-9,
                                     solveSeconds, values));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    cplx want = sl2_qminus_leading(s, k);
    for (const QQInstance& qi : instances) {
      cplx lead = qi.qminus[0][qi.qminus[0].size() - 1];
      worst = std::max(worst, std::abs(lead - want) / std::abs(want));
    }
    json values = json::object();
    values["expected_leading"] = detail::dump_complex(want);
    out.push_back(detail::make_check("minus_polynomial_leading_coefficient",
                                     worst, 1e-8, t.seconds(), values));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    for (const QQInstance& qi : instances)
      for (cplx r : qq_to_bethe_residual(qi, s.hbar))
        worst = std::max(worst, std::abs(r));
    out.push_back(detail::make_check("bethe_equations_from_qq_roots", worst,
                                     1e-9, t.seconds()));
  }
  {
    detail::Timer t;
    cplx z = (s.n % 2 == 0 ? cplx(1) : cplx(-1)) / (s.zeta * s.zeta);
    double res = 1.0;
    try {
      check_kahler_dictionary(s, z);
      res = 0.0;
    } catch (const InvariantViolation&) {
    }
    json values = json::object();
    values["kahler"] = detail::dump_complex(z);
    out.push_back(detail::make_check("kahler_twist_dictionary", res, 0.5,
                                     t.seconds(), values));
  }
  return out;
}

inline std::vector<CheckRecord> run_oper(const RunConfig& cfg) {
  const ChainSpec& s = cfg.chain;
  std::vector<CheckRecord> out;
  if (s.n < 2 || s.n > 3)
    throw InvariantViolation("oper: desk-scale command supports n = 2 or 3");
  Rng rng(cfg.seed + 41);

  detail::Timer solveTimer;
  BetheInstance inst{s, cfg.magnons, BetheForm::ABA, cplx(0.0)};
  CompletenessReport rep = solve_all(inst, cfg.solver);
  std::vector<QQInstance> instances;
  for (const RootSet& sol : rep.solutions)
    instances.push_back(sl2_from_chain(s, sol.roots));
  double solveSeconds = solveTimer.seconds();

  {
    double worst = 0.0;
    for (const QQInstance& qi : instances) {
      MiuraConnection conn = miura_connection(qi, s.hbar);
      for (int trial = 0; trial < 5; ++trial) {
        cplx u = rng.annulus(0.6, 1.9);
        Matrix A = conn.eval(u);
        worst = std::max(worst, std::abs(A.determinant() - cplx(1)));
        worst = std::max(worst, std::abs(A(1, 0)));
      }
    }
    out.push_back(detail::make_check("connection_unimodular_upper_triangular",
                                     worst, 1e-10, solveSeconds));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    for (const QQInstance& qi : instances) {
      MiuraConnection conn = miura_connection(qi, s.hbar);
      MatrixEvaluator A = [conn](cplx u) { return conn.eval(u); };
      Rng inner(cfg.seed + 43);
      worst = std::max(worst, z_twist_verify(A, block_twist(qi, 1),
                                             block_gauge(qi, 1), s.hbar, inner));
    }
    out.push_back(
        detail::make_check("z_twist_gauge_rank_one", worst, 1e-9, t.seconds()));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    for (const QQInstance& qi : instances) {
      MiuraConnection conn = miura_connection(qi, s.hbar);
      Rng inner(cfg.seed + 47);
      worst = std::max(worst, backlund_residual(conn, 1, inner));
    }
    out.push_back(detail::make_check("backlund_swap_rank_one", worst, 1e-9,
                                     t.seconds()));
  }
  if (s.n == 3) {
    detail::Timer t;
    std::vector<cplx> xi = detail::seeded_weights(rng, 3);
    WronskianData flag = solve_flag_sections(2, s.a, xi, s.hbar, cfg.seed + 53);
    QQInstance nested = qq_from_flag_sections(flag, s.hbar);
    double qqres = qq_residual_norm(nested, s.hbar);
    out.push_back(detail::make_check("flag_sections_nested_qq_residual", qqres,
                                     1e-9, t.seconds()));

    detail::Timer t2;
    MiuraConnection conn = miura_connection(nested, s.hbar);
    double worst = 0.0;
    for (int node = 1; node <= 2; ++node) {
      Rng inner(cfg.seed + 59 + node);
      worst = std::max(worst, z_twist_verify(miura_block(conn, node),
                                             block_twist(nested, node),
                                             block_gauge(nested, node), s.hbar,
                                             inner));
    }
    out.push_back(detail::make_check("z_twist_gauge_rank_two_blocks", worst,
                                     1e-9, t2.seconds()));

    detail::Timer t3;
    double worstB = 0.0;
    for (int node = 1; node <= 2; ++node) {
      Rng inner(cfg.seed + 67 + node);
      worstB = std::max(worstB, backlund_residual(conn, node, inner));
    }
    out.push_back(detail::make_check("backlund_swap_rank_two", worstB, 1e-9,
                                     t3.seconds()));

    detail::Timer t4;
    flag.lambda_tower = {flag.lambda1, Poly{cplx(1)}};
    Poly top = quantum_wronskian(flag, 3, s.hbar);
    Poly diff = poly_sub(top, flag.lambda1);
    double err = 0.0, scale = 0.0;
    for (cplx c : flag.lambda1) scale = std::max(scale, std::abs(c));
    for (cplx c : diff) err = std::max(err, std::abs(c));
    out.push_back(detail::make_check("wronskian_top_level_is_characteristic",
                                     err / std::max(scale, 1e-30), 1e-9,
                                     t4.seconds()));
  }
  return out;
}

inline std::vector<CheckRecord> run_trs(const RunConfig& cfg) {
  const ChainSpec& s = cfg.chain;
  int n = s.n;
  std::vector<CheckRecord> out;
  if (n > 4)
    throw InvariantViolation("trs: desk-scale command supports n <= 4");
  Rng rng(cfg.seed + 71);
  cplx h = s.hbar;

  detail::Timer solveTimer;
  std::vector<cplx> xi = detail::seeded_weights(rng, n);
  WronskianData data = solve_flag_sections(n - 1, s.a, xi, h, cfg.seed + 73);
  double solveSeconds = solveTimer.seconds();

  {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      cplx u = rng.annulus(0.4, 2.1);
      Matrix M(n, n);
      for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m)
          M(i, m) = pow_int(data.xi[static_cast<size_t>(i)], n - 1 - m) *
                    poly_eval(data.s[static_cast<size_t>(i)], pow_int(h, m) * u);
      cplx want = poly_eval(data.lambda1, u);
      worst = std::max(worst, std::abs(M.determinant() - want) /
                                  std::max(1.0, std::abs(want)));
    }
    out.push_back(detail::make_check("sections_determinant_residual", worst,
                                     1e-10, solveSeconds));
  }

  TRSData raw = sections_to_trs(data, h);
  TRSData bridged = trs_momentum_bridge(raw);
  TRSData balanced = trs_momentum_bridge_balanced(raw);

  {
    detail::Timer t;
    double worst = 0.0;
    for (int k = 1; k <= n; ++k) {
      cplx ek = elementary_symmetric(s.a, k);
      long power = static_cast<long>(k) * (k - 1) / 2 +
                   static_cast<long>(k) * (n - k);
      cplx got = trs_hamiltonian(raw, k, TrsKernel::Flipped) * pow_int(h, -power);
      worst = std::max(worst, std::abs(got - ek) / std::max(1.0, std::abs(ek)));
    }
    out.push_back(detail::make_check("elementary_symmetric_law_flipped_kernel",
                                     worst, 1e-8, t.seconds()));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    for (int k = 1; k <= n; ++k) {
      cplx ek = elementary_symmetric(s.a, k);
      cplx got = trs_hamiltonian(balanced, k, TrsKernel::Balanced);
      worst = std::max(worst, std::abs(got - ek) / std::max(1.0, std::abs(ek)));
    }
    out.push_back(detail::make_check("elementary_symmetric_law_balanced_kernel",
                                     worst, 1e-8, t.seconds()));
  }
  {
    detail::Timer t;
    cplx e1 = elementary_symmetric(s.a, 1);
    cplx got = trs_hamiltonian(bridged, 1, TrsKernel::Standard);
    double res = std::abs(got - e1) / std::max(1.0, std::abs(e1));
    if (cfg.precision == "extended")
      res = detail::extended_trs_law(bridged, s.a, 1, 0);
    out.push_back(detail::make_check("first_hamiltonian_matches_e1", res, 1e-8,
                                     t.seconds()));
  }
  {
    detail::Timer t;
    double worst = 0.0;
    json table = json::array();
    for (int k = 1; k <= n; ++k) {
      cplx ek = elementary_symmetric(s.a, k);
      long power = static_cast<long>(k) * (k - 1) / 2;
      cplx lawScaled =
          trs_hamiltonian(bridged, k, TrsKernel::Standard) * pow_int(h, power);
      double res = std::abs(lawScaled - ek) / std::max(1.0, std::abs(ek));
      if (cfg.precision == "extended")
        res = detail::extended_trs_law(bridged, s.a, k, power);
      worst = std::max(worst, res);
      cplx hk = trs_hamiltonian(raw, k, TrsKernel::Standard);
      json row = json::object();
      row["k"] = k;
      row["hamiltonian"] = detail::dump_complex(hk);
      row["elementary_symmetric"] = detail::dump_complex(ek);
      row["raw_deviation"] = std::abs(hk - ek);
      row["law_residual"] = res;
      table.push_back(row);
    }
    json values = json::object();
    values["per_level"] = table;
    out.push_back(detail::make_check("lagrangian_deviation_matches_measured_law",
                                     worst, 1e-8, t.seconds(), values));
  }
  return out;
}

inline std::vector<CheckRecord> run_verify_all(const RunConfig& cfg) {
  std::vector<CheckRecord> out;
  auto prefix_and_append = [&out](const std::string& tag,
                                  std::vector<CheckRecord> recs) {
    for (CheckRecord& rec : recs) {
      rec.name = tag + "." + rec.name;
      out.push_back(std::move(rec));
    }
  };
  for (const std::string& suite : cfg.suites) {
    if (suite == "spinchain") prefix_and_append("spinchain", run_spectrum(cfg));
    if (suite == "bethe") prefix_and_append("bethe", run_bethe(cfg));
    if (suite == "qoperator") prefix_and_append("qoperator", run_qoperator(cfg));
    if (suite == "vertex" && cfg.chain.n <= 4 && cfg.magnons <= 2)
      prefix_and_append("vertex", run_vertex(cfg));
    if (suite == "qqoper") {
      prefix_and_append("qq", run_qq(cfg));
      if (cfg.chain.n >= 2 && cfg.chain.n <= 3)
        prefix_and_append("oper", run_oper(cfg));
    }
    if (suite == "trs" && cfg.chain.n <= 4)
      prefix_and_append("trs", run_trs(cfg));
  }
  return out;
}

inline Report run(const RunConfig& cfg) {
  Report report;
  report.config = cfg;
  if (cfg.command == "spectrum") report.checks = run_spectrum(cfg);
  else if (cfg.command == "bethe") report.checks = run_bethe(cfg);
  else if (cfg.command == "vertex") report.checks = run_vertex(cfg);
  else if (cfg.command == "qq") report.checks = run_qq(cfg);
  else if (cfg.command == "oper") report.checks = run_oper(cfg);
  else if (cfg.command == "trs") report.checks = run_trs(cfg);
  else if (cfg.command == "verify-all") report.checks = run_verify_all(cfg);
  else
    throw InvariantViolation("command: expected one of spectrum, bethe, vertex, "
                             "qq, oper, trs, verify-all");
  return report;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline int failed_count(const Report& report) {
  int failed = 0;
  for (const CheckRecord& rec : report.checks)
    if (!rec.pass) ++failed;
  return failed;
}

inline std::string emit_json(const Report& report) {
  json root = json::object();
  root["command"] = report.config.command;
  root["config"] = report.config.echo;
  json checks = json::array();
  for (const CheckRecord& rec : report.checks) {
    json row = json::object();
    row["name"] = rec.name;
    row["residual"] = rec.residual;
    row["tolerance"] = rec.tolerance;
    row["pass"] = rec.pass;
    if (!rec.values.empty()) row["values"] = rec.values;
    checks.push_back(row);
  }
  root["checks"] = checks;
  json summary = json::object();
  summary["total"] = static_cast<int>(report.checks.size());
  summary["failed"] = failed_count(report);
  summary["passed"] = static_cast<int>(report.checks.size()) -
                      failed_count(report);
  root["summary"] = summary;
  return root.dump(2) + "\n";
}

inline std::string emit_csv(const Report& report) {
  std::string out = "name,residual,tolerance,pass,seconds\n";
  char buf[256];
  for (const CheckRecord& rec : report.checks) {
    std::snprintf(buf, sizeof(buf), "%s,%.12g,%.3g,%s,%.6f\n",
                  rec.name.c_str(), rec.residual, rec.tolerance,
                  rec.pass ? "true" : "false", rec.seconds);
    out += buf;
  }
  return out;
}

}  // namespace cli
}  // namespace bethegeom
