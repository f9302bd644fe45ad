#pragma once

// Quasimap vertex functions of the cotangent Grassmannian as truncated
// z-series, their q -> 1 limits by per-coefficient extrapolation, and the
// comparison series built from power-series Bethe roots.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "bethe.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "spinchain.hpp"

namespace bethegeom {

struct FixedPoint {
  std::vector<int> sites;
  std::vector<cplx> x;
};

inline FixedPoint fixed_point(const ChainSpec& s, const std::vector<int>& sites) {
  validate_chain(s);
  FixedPoint out;
  out.sites = sites;
  for (int p : sites) {
    if (p < 1 || p > s.n)
      throw IndexOutOfRange("fixed_point: site out of range");
    out.x.push_back(s.a[static_cast<size_t>(p - 1)]);
  }
  for (size_t i = 0; i < sites.size(); ++i)
    for (size_t j = i + 1; j < sites.size(); ++j)
      if (sites[i] == sites[j])
        throw InvariantViolation("fixed_point: repeated site");
  return out;
}

// Symmetric insertion tau(s_1, ..., s_k).  The series evaluator composes the
// same polynomial with truncated-series arguments; custom evaluators are
// pointwise only.
struct SchurInsertion {
  enum class Kind { One, Elementary, PowerSum, Monomial, Custom };
  Kind kind = Kind::One;
  int degree = 0;
  std::vector<int> exponents;
  std::function<cplx(const std::vector<cplx>&)> custom;

  static SchurInsertion one() { return {}; }
  static SchurInsertion elementary(int l) {
    SchurInsertion t;
    t.kind = Kind::Elementary;
    t.degree = l;
    return t;
  }
  static SchurInsertion power_sum(int m) {
    SchurInsertion t;
    t.kind = Kind::PowerSum;
    t.degree = m;
    return t;
  }
  static SchurInsertion monomial(std::vector<int> lambda) {
    SchurInsertion t;
    t.kind = Kind::Monomial;
    t.exponents = std::move(lambda);
    return t;
  }

  cplx eval(const std::vector<cplx>& s) const {
    switch (kind) {
      case Kind::One:
        return cplx(1);
      case Kind::Elementary:
        return elementary_symmetric(s, degree);
      case Kind::PowerSum: {
        cplx out(0);
        for (cplx v : s) out += pow_int(v, degree);
        return out;
      }
      case Kind::Monomial: {
        std::vector<int> lam = exponents;
        if (lam.size() > s.size())
          throw InvariantViolation("insertion: monomial longer than argument list");
        lam.resize(s.size(), 0);
        std::sort(lam.begin(), lam.end());
        cplx out(0);
        do {
          cplx term(1);
          for (size_t i = 0; i < s.size(); ++i) term *= pow_int(s[i], lam[i]);
          out += term;
        } while (std::next_permutation(lam.begin(), lam.end()));
        return out;
      }
      case Kind::Custom:
        if (!custom) throw InvariantViolation("insertion: empty custom evaluator");
        return custom(s);
    }
    return cplx(0);
  }

  Series eval_series(const std::vector<Series>& s, int order) const {
    Series one_series(static_cast<size_t>(order) + 1, cplx(0));
    one_series[0] = cplx(1);
    switch (kind) {
      case Kind::One:
        return one_series;
      case Kind::Elementary: {
        if (degree < 0)
          throw IndexOutOfRange("insertion: negative elementary degree");
        if (degree > static_cast<int>(s.size()))
          return Series(static_cast<size_t>(order) + 1, cplx(0));
        Series out(static_cast<size_t>(order) + 1, cplx(0));
        for (const std::vector<int>& idx :
             subsets_of_size(static_cast<int>(s.size()), degree)) {
          Series term = one_series;
          for (int i : idx) term = series_mul(term, s[static_cast<size_t>(i)], order);
          out = series_add(out, term, order);
        }
        return out;
      }
      case Kind::PowerSum: {
        Series out(static_cast<size_t>(order) + 1, cplx(0));
        for (const Series& v : s) {
          Series term = one_series;
          for (int m = 0; m < degree; ++m) term = series_mul(term, v, order);
          out = series_add(out, term, order);
        }
        return out;
      }
      case Kind::Monomial: {
        std::vector<int> lam = exponents;
        if (lam.size() > s.size())
          throw InvariantViolation("insertion: monomial longer than argument list");
        lam.resize(s.size(), 0);
        std::sort(lam.begin(), lam.end());
        Series out(static_cast<size_t>(order) + 1, cplx(0));
        do {
          Series term = one_series;
          for (size_t i = 0; i < s.size(); ++i)
            for (int m = 0; m < lam[i]; ++m) term = series_mul(term, s[i], order);
          out = series_add(out, term, order);
        } while (std::next_permutation(lam.begin(), lam.end()));
        return out;
      }
      case Kind::Custom:
        throw InvariantViolation("insertion: custom evaluators are pointwise only");
    }
    return one_series;
  }
};

struct VertexSeries {
  Series series;
  FixedPoint point;
  SchurInsertion insertion;
  cplx q{0.0, 0.0};
  cplx hbar{0.0, 0.0};
};

inline cplx classical_restriction(const FixedPoint& point, const SchurInsertion& tau) {
  return tau.eval(point.x);
}

// V^{(tau)}_p(z) = sum over (d_1..d_k >= 0, sum <= D) of
//   z^{sum d} q^{n sum d / 2}
//   prod_{i != j} {x_i/x_j}^{-1}_{d_i - d_j}
//   prod_{i,j} {x_i/a_j}_{d_i}
//   tau(x q^{-d}),
// coefficients gathered by total degree.
inline VertexSeries vertex_series(const ChainSpec& s, const FixedPoint& point,
                                  const SchurInsertion& tau, cplx q, int D) {
  validate_chain(s);
  if (D < 0) throw InvariantViolation("vertex_series: order must be >= 0");
  double qa = std::abs(q);
  if (qa == 0.0 || qa >= 1.0)
    throw InvariantViolation("vertex_series: expected 0 < |q| < 1");
  const int n = s.n;
  const int k = static_cast<int>(point.x.size());
  Series c(static_cast<size_t>(D) + 1, cplx(0));
  std::vector<int> d(static_cast<size_t>(std::max(k, 1)), 0);
  cplx qh = std::sqrt(q);
  for (int dtot = 0; dtot <= D; ++dtot) {
    if (k == 0) {
      c[static_cast<size_t>(dtot)] = (dtot == 0) ? tau.eval({}) : cplx(0);
      continue;
    }
    std::fill(d.begin(), d.end(), 0);
    d[0] = dtot;
    cplx tot(0);
    while (true) {
      cplx term = pow_int(qh, static_cast<long>(n) * dtot);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          if (i == j) continue;
          term /= bracket_function(point.x[static_cast<size_t>(i)] /
                                       point.x[static_cast<size_t>(j)],
                                   d[static_cast<size_t>(i)] - d[static_cast<size_t>(j)],
                                   q, s.hbar);
        }
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j)
          term *= bracket_function(point.x[static_cast<size_t>(i)] /
                                       s.a[static_cast<size_t>(j)],
                                   d[static_cast<size_t>(i)], q, s.hbar);
      std::vector<cplx> shifted(static_cast<size_t>(k));
      for (int i = 0; i < k; ++i)
        shifted[static_cast<size_t>(i)] =
            point.x[static_cast<size_t>(i)] * pow_int(q, -d[static_cast<size_t>(i)]);
      term *= tau.eval(shifted);
      tot += term;
      // next composition of dtot into k parts
      int idx = k - 1;
      while (idx > 0 && d[static_cast<size_t>(idx - 1)] == 0) --idx;
      if (idx == 0) break;
      --d[static_cast<size_t>(idx - 1)];
      int rest = dtot;
      for (int i = 0; i < idx; ++i) rest -= d[static_cast<size_t>(i)];
      d[static_cast<size_t>(idx)] = rest;
      for (int i = idx + 1; i < k; ++i) d[static_cast<size_t>(i)] = 0;
    }
    c[static_cast<size_t>(dtot)] = tot;
  }
  return VertexSeries{c, point, tau, q, s.hbar};
}

// q -> 1 limit of V^{(tau)}/V^{(1)}, one z-coefficient at a time, over the
// nodes q = 1 - 2^{-j}, j = 4..10.
inline Series eigenvalue_limit(const ChainSpec& s, const FixedPoint& point,
                               const SchurInsertion& tau, int D,
                               double tol = 1e-3) {
  std::vector<double> eps;
  std::vector<Series> ratios;
  for (int j = 4; j <= 10; ++j) {
    double e = std::ldexp(1.0, -j);
    cplx q(1.0 - e, 0.0);
    Series vt = vertex_series(s, point, tau, q, D).series;
    Series v1 = vertex_series(s, point, SchurInsertion::one(), q, D).series;
    ratios.push_back(series_div(vt, v1, D));
    eps.push_back(e);
  }
  Series out(static_cast<size_t>(D) + 1, cplx(0));
  for (int m = 0; m <= D; ++m) {
    std::vector<cplx> vals;
    for (const Series& r : ratios) vals.push_back(r[static_cast<size_t>(m)]);
    Extrapolated ex = richardson_extrapolate(eps, vals);
    if (ex.spread > 10.0 * tol)
      throw ExtrapolationDiverged("eigenvalue_limit: spread " +
                                  std::to_string(ex.spread) + " at order " +
                                  std::to_string(m));
    out[static_cast<size_t>(m)] = ex.value;
  }
  return out;
}

// tau evaluated on power-series Bethe roots from the same fixed point.
inline Series bethe_symmetric_series(const FixedPoint& point,
                                     const SchurInsertion& tau,
                                     const SeriesRootSet& roots) {
  if (roots.origin_subset != point.sites)
    throw InvariantViolation(
        "bethe_symmetric_series: root series from a different fixed point");
  if (roots.roots.empty()) {
    Series out(1, cplx(1));
    return tau.kind == SchurInsertion::Kind::One ? out
                                                 : Series{tau.eval({})};
  }
  size_t len = roots.roots[0].size();
  for (const Series& r : roots.roots)
    if (r.size() != len)
      throw TruncationMismatch("bethe_symmetric_series: ragged root series");
  int order = static_cast<int>(len) - 1;
  return tau.eval_series(roots.roots, order);
}

}  // namespace bethegeom
