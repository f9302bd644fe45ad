#pragma once

// Bethe-equation solvers: homotopy continuation from the small-twist limit
// (where the roots sit at shifted evaluation points), truncated power-series
// solutions around that limit, and the parameter dictionary between the
// twist form (hbar, zeta) and the Kahler form (hbar^{-1}, z).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "numerics.hpp"
#include "random.hpp"
#include "spinchain.hpp"

namespace bethegeom {

enum class BetheForm { ABA, SADDLE };

struct BetheInstance {
  ChainSpec spec;
  int k = 0;
  BetheForm form = BetheForm::ABA;
  cplx z{0.0, 0.0};
};

inline void validate_instance(const BetheInstance& inst) {
  validate_chain(inst.spec);
  if (inst.k < 0 || inst.k > inst.spec.n)
    throw InvariantViolation("bethe.k: expected 0 <= k <= n");
}

struct RootSet {
  std::vector<cplx> roots;
  double residual = 0.0;
  std::vector<int> origin_subset;
};

struct SeriesRootSet {
  std::vector<Series> roots;
  std::vector<int> origin_subset;
  double residual = 0.0;
};

struct HomotopyConfig {
  int steps = 60;
  int retries = 8;
  double accept_tol = 1e-9;
  double distinct_tol = 1e-6;
  std::uint64_t seed = 2026;
};

struct CompletenessReport {
  std::vector<RootSet> solutions;
  int expected = 0;
  bool complete = false;
  double min_pair_distance = 0.0;
  std::vector<std::string> path_errors;
};

// Per-root LHS - RHS of the selected presentation.  ABA:
//   prod_j (hs v_i - a_j/hs)/(v_i - a_j)
//     - zeta^{-2} prod_{j!=i} (v_i hs - v_j/hs)/(v_i/hs - v_j hs);
// SADDLE:
//   prod_{j!=i} (s_i - s_j h)/(s_i h - s_j)
//     * prod_j (s_i - a_j)/(a_j h - s_i)  -  z h^{-n/2}.
inline std::vector<cplx> bethe_residual(const BetheInstance& inst,
                                        const std::vector<cplx>& roots) {
  validate_instance(inst);
  const ChainSpec& s = inst.spec;
  int k = static_cast<int>(roots.size());
  cplx h = s.hbar;
  cplx hs = quarter_root(h) * quarter_root(h);
  std::vector<cplx> out;
  out.reserve(static_cast<size_t>(k));
  auto guard = [](cplx den, double scale, const std::string& what) {
    if (std::abs(den) < 1e-12 * std::max(scale, 1e-30))
      throw PoleCollision("bethe_residual: " + what);
    return den;
  };
  for (int i = 0; i < k; ++i) {
    cplx vi = roots[static_cast<size_t>(i)];
    if (inst.form == BetheForm::ABA) {
      cplx lhs(1.0, 0.0);
      for (int j = 0; j < s.n; ++j) {
        cplx aj = s.a[static_cast<size_t>(j)];
        lhs *= (hs * vi - aj / hs) /
               guard(vi - aj, std::abs(vi) + std::abs(aj), "root at evaluation point");
      }
      cplx pr(1.0, 0.0);
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        cplx vj = roots[static_cast<size_t>(j)];
        pr *= (vi * hs - vj / hs) /
              guard(vi / hs - vj * hs, std::abs(vi) + std::abs(vj), "root pair at hbar shift");
      }
      out.push_back(lhs - pr / (s.zeta * s.zeta));
    } else {
      cplx pr1(1.0, 0.0);
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        cplx vj = roots[static_cast<size_t>(j)];
        pr1 *= (vi - vj * h) /
               guard(vi * h - vj, std::abs(vi) + std::abs(vj), "root pair at hbar shift");
      }
      cplx pr2(1.0, 0.0);
      for (int j = 0; j < s.n; ++j) {
        cplx aj = s.a[static_cast<size_t>(j)];
        pr2 *= (vi - aj) /
               guard(aj * h - vi, std::abs(vi) + std::abs(aj), "root at shifted evaluation point");
      }
      out.push_back(pr1 * pr2 - inst.z * pow_int(hs, -s.n));
    }
  }
  return out;
}

// Scale-free certificate |LHS_i/RHS_i - 1|, maximized over roots.
inline double ratio_residual(const BetheInstance& inst,
                             const std::vector<cplx>& roots) {
  const ChainSpec& s = inst.spec;
  int k = static_cast<int>(roots.size());
  cplx h = s.hbar;
  cplx hs = quarter_root(h) * quarter_root(h);
  double worst = 0.0;
  for (int i = 0; i < k; ++i) {
    cplx vi = roots[static_cast<size_t>(i)];
    cplx lhs(1.0, 0.0), rhs(1.0, 0.0);
    if (inst.form == BetheForm::ABA) {
      for (int j = 0; j < s.n; ++j) {
        cplx aj = s.a[static_cast<size_t>(j)];
        lhs *= (hs * vi - aj / hs) / (vi - aj);
      }
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        cplx vj = roots[static_cast<size_t>(j)];
        rhs *= (vi * hs - vj / hs) / (vi / hs - vj * hs);
      }
      rhs /= s.zeta * s.zeta;
    } else {
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        cplx vj = roots[static_cast<size_t>(j)];
        lhs *= (vi - vj * h) / (vi * h - vj);
      }
      for (int j = 0; j < s.n; ++j) {
        cplx aj = s.a[static_cast<size_t>(j)];
        lhs *= (vi - aj) / (aj * h - vi);
      }
      rhs = inst.z * pow_int(hs, -s.n);
    }
    worst = std::max(worst, std::abs(lhs / rhs - cplx(1)));
  }
  return worst;
}

// Dictionary between the two presentations: same root set solves the twist
// form at (hbar, zeta) and the Kahler form at (hbar^{-1}, (-1)^n zeta^2).
struct TransformedParams {
  cplx hbar_prime;
  cplx z;
};

inline TransformedParams convention_transform(cplx hbar, cplx zeta, int n) {
  if (std::abs(hbar) < 1e-12)
    throw InvariantViolation("convention_transform: hbar must be nonzero");
  cplx sign = (n % 2 == 0) ? cplx(1.0) : cplx(-1.0);
  return {cplx(1.0) / hbar, sign * zeta * zeta};
}

inline BetheInstance saddle_counterpart(const BetheInstance& aba) {
  if (aba.form != BetheForm::ABA)
    throw InvariantViolation("saddle_counterpart: expected an ABA instance");
  TransformedParams tp =
      convention_transform(aba.spec.hbar, aba.spec.zeta, aba.spec.n);
  BetheInstance out = aba;
  out.form = BetheForm::SADDLE;
  out.spec.hbar = tp.hbar_prime;
  out.z = tp.z;
  return out;
}

namespace detail {

// Denominator-cleared residual for the path tracker.  ABA at path twist c2:
//   F_i = prod_j (hs v_i - a_j/hs) prod_{j!=i} (v_i/hs - v_j hs)
//         - c2 prod_j (v_i - a_j) prod_{j!=i} (v_i hs - v_j/hs).
// SADDLE at path parameter zt:
//   F_i = prod_{j!=i} (s_i - s_j h) prod_j (s_i - a_j)
//         - zt h^{-n/2} prod_{j!=i} (s_i h - s_j) prod_j (a_j h - s_i).
inline Vector cleared_residual(const BetheInstance& inst, cplx path_param,
                               const Vector& v) {
  const ChainSpec& s = inst.spec;
  int k = static_cast<int>(v.size());
  cplx h = s.hbar;
  cplx hs = quarter_root(h) * quarter_root(h);
  Vector out(k);
  for (int i = 0; i < k; ++i) {
    cplx main(1.0, 0.0), clear(1.0, 0.0);
    if (inst.form == BetheForm::ABA) {
      for (int j = 0; j < s.n; ++j) {
        cplx aj = s.a[static_cast<size_t>(j)];
        main *= hs * v(i) - aj / hs;
        clear *= v(i) - aj;
      }
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        main *= v(i) / hs - v(j) * hs;
        clear *= v(i) * hs - v(j) / hs;
      }
    } else {
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        main *= v(i) - v(j) * h;
        clear *= v(i) * h - v(j);
      }
      for (int j = 0; j < s.n; ++j) {
        cplx aj = s.a[static_cast<size_t>(j)];
        main *= v(i) - aj;
        clear *= aj * h - v(i);
      }
      clear *= pow_int(hs, -s.n);
    }
    out(i) = main - path_param * clear;
  }
  return out;
}

inline bool newton_correct(const BetheInstance& inst, cplx path_param,
                           Vector& v, int itmax = 60) {
  int k = static_cast<int>(v.size());
  for (int it = 0; it < itmax; ++it) {
    Vector f = cleared_residual(inst, path_param, v);
    if (f.cwiseAbs().maxCoeff() < 1e-13) return true;
    Matrix jac(k, k);
    for (int j = 0; j < k; ++j) {
      double step = 1e-7 * std::max(1.0, std::abs(v(j)));
      Vector vp = v;
      vp(j) += step;
      jac.col(j) = (cleared_residual(inst, path_param, vp) - f) / step;
    }
    Eigen::PartialPivLU<Matrix> lu(jac);
    v -= lu.solve(f);
  }
  return cleared_residual(inst, path_param, v).cwiseAbs().maxCoeff() < 1e-10;
}

// Walk the path parameter from 0 to its target along t exp(i gamma t (1-t)),
// starting from the exact small-twist roots of the subset.
inline bool track_path(const BetheInstance& inst, const std::vector<int>& subset,
                       int steps, double gamma, Vector& v) {
  const ChainSpec& s = inst.spec;
  int k = static_cast<int>(subset.size());
  v.resize(k);
  cplx target;
  if (inst.form == BetheForm::ABA) {
    target = cplx(1.0) / (s.zeta * s.zeta);
    for (int i = 0; i < k; ++i)
      v(i) = s.a[static_cast<size_t>(subset[static_cast<size_t>(i)] - 1)] / s.hbar;
  } else {
    target = inst.z;
    for (int i = 0; i < k; ++i)
      v(i) = s.a[static_cast<size_t>(subset[static_cast<size_t>(i)] - 1)];
  }
  for (int step = 1; step <= steps; ++step) {
    double t = static_cast<double>(step) / steps;
    cplx path = target * t * std::exp(cplx(0.0, gamma * t * (1.0 - t)));
    if (!newton_correct(inst, path, v)) return false;
  }
  return true;
}

inline double min_relative_gap(const Vector& v) {
  int k = static_cast<int>(v.size());
  double best = 1e300;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      double scale = std::max(std::abs(v(i)), std::abs(v(j)));
      best = std::min(best, std::abs(v(i) - v(j)) / std::max(scale, 1e-30));
    }
  return (k > 1) ? best : 1e300;
}

inline std::vector<cplx> sorted_roots(const Vector& v) {
  std::vector<cplx> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), [](cplx x, cplx y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return out;
}

inline std::string dedup_key(const std::vector<cplx>& sorted) {
  std::string key;
  char buf[64];
  for (cplx r : sorted) {
    std::snprintf(buf, sizeof(buf), "%.7g,%.7g;", r.real(), r.imag());
    key += buf;
  }
  return key;
}

}  // namespace detail

// Track one branch from the exact small-twist start at the given subset of
// sites (1-based), with randomized detour arcs on retry.
inline RootSet solve_from_subset(const BetheInstance& inst,
                                 const std::vector<int>& subset,
                                 const HomotopyConfig& config = {}) {
  validate_instance(inst);
  if (static_cast<int>(subset.size()) != inst.k)
    throw InvariantViolation("solve_from_subset: subset size must equal k");
  for (int p : subset)
    if (p < 1 || p > inst.spec.n)
      throw IndexOutOfRange("solve_from_subset: subset site out of range");
  if (inst.k == 0) return RootSet{{}, 0.0, subset};
  if (inst.form == BetheForm::SADDLE && std::abs(inst.z) == 0.0) {
    std::vector<cplx> roots;
    for (int p : subset) roots.push_back(inst.spec.a[static_cast<size_t>(p - 1)]);
    return RootSet{roots, 0.0, subset};
  }
  Rng rng(config.seed);
  bool collided = false;
  for (int attempt = 0; attempt < std::max(1, config.retries); ++attempt) {
    double gamma = (attempt == 0) ? 0.0 : rng.range(0.7, 5.6);
    Vector v;
    if (!detail::track_path(inst, subset, config.steps + 40 * attempt, gamma, v))
      continue;
    if (detail::min_relative_gap(v) < config.distinct_tol) {
      collided = true;
      continue;
    }
    std::vector<cplx> roots(v.data(), v.data() + v.size());
    double res = ratio_residual(inst, roots);
    if (res < config.accept_tol) return RootSet{roots, res, subset};
  }
  if (collided)
    throw PathCollision("solve_from_subset: tracked roots merged on every retry");
  throw PathDivergence("solve_from_subset: tracker failed on every retry");
}

namespace detail {

inline std::vector<std::vector<int>> site_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  for (const std::vector<int>& idx : subsets_of_size(n, k)) {
    std::vector<int> sites;
    sites.reserve(idx.size());
    for (int i : idx) sites.push_back(i + 1);
    out.push_back(sites);
  }
  return out;
}

}  // namespace detail

// All C(n,k) branches, deduplicated as unordered root multisets, with fresh
// detours to separate branches that land on the same solution.  For k = n the
// single branch falls back to the inverted-parameter chain (roots map by
// v = w / hbar) when the direct path fails.
inline CompletenessReport solve_all(const BetheInstance& inst,
                                    const HomotopyConfig& config = {}) {
  validate_instance(inst);
  const int n = inst.spec.n;
  const int k = inst.k;
  CompletenessReport report;
  report.expected = static_cast<int>(binomial(n, k));
  if (k == 0) {
    report.solutions.push_back(RootSet{{}, 0.0, {}});
    report.complete = true;
    return report;
  }
  std::vector<std::vector<int>> subsets = detail::site_subsets(n, k);
  struct Branch {
    RootSet sol;
    std::vector<int> subset;
  };
  std::vector<Branch> found;
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  for (size_t si = 0; si < subsets.size(); ++si) {
    HomotopyConfig per = config;
    per.seed = config.seed + 101 * static_cast<std::uint64_t>(si);
    try {
      RootSet sol = solve_from_subset(inst, subsets[si], per);
      found.push_back(Branch{sol, subsets[si]});
    } catch (const Error& e) {
      bool recovered = false;
      if (k == n && inst.form == BetheForm::ABA) {
        BetheInstance flip = inst;
        flip.spec.hbar = cplx(1.0) / inst.spec.hbar;
        flip.spec.zeta = cplx(1.0) / inst.spec.zeta;
        try {
          RootSet sol = solve_from_subset(flip, subsets[si], per);
          for (cplx& r : sol.roots) r /= inst.spec.hbar;
          sol.residual = ratio_residual(inst, sol.roots);
          if (sol.residual < config.accept_tol) {
            found.push_back(Branch{sol, subsets[si]});
            recovered = true;
          }
        } catch (const Error&) {
        }
      }
      if (!recovered) report.path_errors.push_back(e.what());
    }
  }
  for (int round = 0; round < 20; ++round) {
    std::vector<std::string> keys;
    int dup = -1;
    for (size_t i = 0; i < found.size(); ++i) {
      std::string key = detail::dedup_key([&] {
        Vector v(found[i].sol.roots.size());
        for (size_t j = 0; j < found[i].sol.roots.size(); ++j)
          v(static_cast<Eigen::Index>(j)) = found[i].sol.roots[j];
        return detail::sorted_roots(v);
      }());
      for (size_t j = 0; j < keys.size(); ++j)
        if (keys[j] == key) {
          dup = static_cast<int>(i);
          break;
        }
      if (dup >= 0) break;
      keys.push_back(key);
    }
    if (dup < 0) break;
    bool fixed = false;
    for (int attempt = 0; attempt < 10 && !fixed; ++attempt) {
      double gamma = rng.range(0.7, 5.6);
      Vector v;
      if (!detail::track_path(inst, found[static_cast<size_t>(dup)].subset,
                              80 + 40 * attempt, gamma, v))
        continue;
      if (detail::min_relative_gap(v) < config.distinct_tol) continue;
      std::vector<cplx> roots(v.data(), v.data() + v.size());
      if (ratio_residual(inst, roots) > config.accept_tol) continue;
      std::string key = detail::dedup_key(detail::sorted_roots(v));
      bool clash = false;
      for (size_t i = 0; i < found.size(); ++i) {
        if (static_cast<int>(i) == dup) continue;
        Vector w(found[i].sol.roots.size());
        for (size_t j = 0; j < found[i].sol.roots.size(); ++j)
          w(static_cast<Eigen::Index>(j)) = found[i].sol.roots[j];
        if (detail::dedup_key(detail::sorted_roots(w)) == key) clash = true;
      }
      if (clash) continue;
      found[static_cast<size_t>(dup)].sol.roots = roots;
      found[static_cast<size_t>(dup)].sol.residual = ratio_residual(inst, roots);
      fixed = true;
    }
    if (!fixed) {
      report.path_errors.push_back("duplicate branch from subset could not be separated");
      found.erase(found.begin() + dup);
      break;
    }
  }
  double min_dist = 1e300;
  for (size_t i = 0; i < found.size(); ++i)
    for (size_t j = i + 1; j < found.size(); ++j) {
      Vector vi(found[i].sol.roots.size()), vj(found[j].sol.roots.size());
      for (size_t m = 0; m < found[i].sol.roots.size(); ++m)
        vi(static_cast<Eigen::Index>(m)) = found[i].sol.roots[m];
      for (size_t m = 0; m < found[j].sol.roots.size(); ++m)
        vj(static_cast<Eigen::Index>(m)) = found[j].sol.roots[m];
      std::vector<cplx> si = detail::sorted_roots(vi), sj = detail::sorted_roots(vj);
      double d = 0.0;
      for (size_t m = 0; m < si.size(); ++m) d = std::max(d, std::abs(si[m] - sj[m]));
      min_dist = std::min(min_dist, d);
    }
  report.min_pair_distance = (found.size() > 1) ? min_dist : 0.0;
  for (Branch& b : found) report.solutions.push_back(b.sol);
  report.complete = (static_cast<int>(found.size()) == report.expected);
  return report;
}

// Truncated power-series roots of the Kahler-form system around z = 0, where
// the roots are exactly the a-values of the subset.  Order-by-order Newton
// with the diagonal z = 0 Jacobian; the residual series vanishes through
// order D once the passes converge.
inline SeriesRootSet perturbative_roots(const BetheInstance& inst,
                                        const std::vector<int>& subset, int D) {
  validate_instance(inst);
  if (inst.form != BetheForm::SADDLE)
    throw InvariantViolation("perturbative_roots: expected a SADDLE instance");
  if (static_cast<int>(subset.size()) != inst.k)
    throw InvariantViolation("perturbative_roots: subset size must equal k");
  if (D < 0) throw InvariantViolation("perturbative_roots: order must be >= 0");
  const ChainSpec& s = inst.spec;
  const int n = s.n;
  const int k = inst.k;
  cplx h = s.hbar;
  cplx hs = quarter_root(h) * quarter_root(h);
  std::vector<cplx> x(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i)
    x[static_cast<size_t>(i)] = s.a[static_cast<size_t>(subset[static_cast<size_t>(i)] - 1)];

  std::vector<Series> roots(static_cast<size_t>(k), Series(static_cast<size_t>(D) + 1, cplx(0)));
  for (int i = 0; i < k; ++i) roots[static_cast<size_t>(i)][0] = x[static_cast<size_t>(i)];
  Series zser(static_cast<size_t>(D) + 1, cplx(0));
  if (D >= 1) zser[1] = pow_int(hs, -n);

  // The expansion is in z itself, so the instance z plays no role here; the
  // series argument stands for z.
  auto residual_in_z = [&](const std::vector<Series>& S) {
    std::vector<Series> out(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
      Series r(static_cast<size_t>(D) + 1, cplx(0));
      r[0] = cplx(1);
      const Series& Si = S[static_cast<size_t>(i)];
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        const Series& Sj = S[static_cast<size_t>(j)];
        Series num = series_sub(Si, series_scale(Sj, h), D);
        Series den = series_sub(series_scale(Si, h), Sj, D);
        r = series_mul(r, series_div(num, den, D), D);
      }
      for (int j = 0; j < n; ++j) {
        cplx aj = s.a[static_cast<size_t>(j)];
        Series num = Si;
        num[0] -= aj;
        Series den = series_scale(Si, cplx(-1));
        den[0] += aj * h;
        r = series_mul(r, series_div(num, den, D), D);
      }
      out[static_cast<size_t>(i)] = series_sub(r, zser, D);
    }
    return out;
  };

  std::vector<cplx> jd(static_cast<size_t>(k));
  double jmin = 1e300, jmax = 0.0;
  for (int i = 0; i < k; ++i) {
    cplx A(1.0, 0.0);
    for (int j = 0; j < k; ++j)
      if (j != i)
        A *= (x[static_cast<size_t>(i)] - h * x[static_cast<size_t>(j)]) /
             (h * x[static_cast<size_t>(i)] - x[static_cast<size_t>(j)]);
    cplx ap = s.a[static_cast<size_t>(subset[static_cast<size_t>(i)] - 1)];
    cplx dB = cplx(1.0) / (ap * h - ap);
    for (int j = 0; j < n; ++j) {
      if (j == subset[static_cast<size_t>(i)] - 1) continue;
      cplx aj = s.a[static_cast<size_t>(j)];
      dB *= (ap - aj) / (aj * h - ap);
    }
    jd[static_cast<size_t>(i)] = A * dB;
    jmin = std::min(jmin, std::abs(jd[static_cast<size_t>(i)]));
    jmax = std::max(jmax, std::abs(jd[static_cast<size_t>(i)]));
  }
  if (k > 0 && (jmin < 1e-300 || jmax / jmin > 1e8))
    throw SingularJacobian("perturbative_roots: base-point Jacobian ill conditioned");

  for (int pass = 0; pass < 2 * (D + 1); ++pass) {
    std::vector<Series> F = residual_in_z(roots);
    for (int i = 0; i < k; ++i)
      roots[static_cast<size_t>(i)] = series_sub(
          roots[static_cast<size_t>(i)],
          series_scale(F[static_cast<size_t>(i)], cplx(1.0) / jd[static_cast<size_t>(i)]), D);
  }
  std::vector<Series> F = residual_in_z(roots);
  double worst = 0.0;
  for (const Series& f : F)
    for (cplx c : f) worst = std::max(worst, std::abs(c));
  return SeriesRootSet{roots, subset, worst};
}

}  // namespace bethegeom
