#pragma once

// Scalar, polynomial, and truncated-series utilities shared by the rest of
// the library.  Polynomials store coefficients in ascending powers; a series
// of order D is a coefficient vector of length D + 1.  Fractional powers of
// a fixed base are always assembled as integer powers of one principal root,
// so every routine that shares a base shares a branch.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace bethegeom {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Poly = std::vector<cplx>;
using Series = std::vector<cplx>;

template <class Real>
using cx = std::complex<Real>;

template <class Real>
cx<Real> pow_int(const cx<Real>& base, long e) {
  if (e == 0) return cx<Real>(1);
  if (e < 0) return cx<Real>(1) / pow_int(base, -e);
  cx<Real> out(1);
  cx<Real> b = base;
  long m = e;
  while (m > 0) {
    if (m & 1) out *= b;
    b *= b;
    m >>= 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// q-Pochhammer and bracket factors
// ---------------------------------------------------------------------------

// (x; q)_d for d >= 0, and the reflected value prod_{i=1..-d} (1 - x q^{-i})^{-1}
// for d < 0, so that (x; q)_{c+d} = (x; q)_c (x q^c; q)_d holds for all signs.
template <class Real>
cx<Real> qpoch_finite(const cx<Real>& x, const cx<Real>& q, long d) {
  cx<Real> out(1);
  if (d >= 0) {
    cx<Real> qp(1);
    for (long i = 0; i < d; ++i) {
      out *= cx<Real>(1) - x * qp;
      qp *= q;
    }
    return out;
  }
  if (std::abs(q) == Real(0))
    throw DegenerateFactor("qpoch_finite: q = 0 with negative index");
  cx<Real> qi(1);
  for (long i = 1; i <= -d; ++i) {
    qi /= q;
    cx<Real> f = cx<Real>(1) - x * qi;
    if (std::abs(f) < Real(1e-14) * (Real(1) + std::abs(x * qi)))
      throw DegenerateFactor("qpoch_finite: vanishing factor at reflected index " +
                             std::to_string(i));
    out /= f;
  }
  return out;
}

// {x}_d = (hbar/x; q)_d / (q/x; q)_d * (-q^{1/2} hbar^{-1/2})^d, principal roots.
template <class Real>
cx<Real> bracket_function(const cx<Real>& x, long d, const cx<Real>& q,
                          const cx<Real>& hbar) {
  if (std::abs(x) == Real(0))
    throw DegenerateFactor("bracket_function: x = 0");
  if (std::abs(hbar) == Real(0))
    throw DegenerateFactor("bracket_function: hbar = 0");
  cx<Real> num = qpoch_finite(hbar / x, q, d);
  cx<Real> den = qpoch_finite(q / x, q, d);
  if (std::abs(den) < Real(1e-300))
    throw DegenerateFactor("bracket_function: vanishing denominator");
  cx<Real> s = -std::sqrt(q) / std::sqrt(hbar);
  return num / den * pow_int(s, d);
}

// ---------------------------------------------------------------------------
// Elementary symmetric polynomials
// ---------------------------------------------------------------------------

inline cplx elementary_symmetric(const std::vector<cplx>& vals, int l) {
  if (l < 0) throw IndexOutOfRange("elementary_symmetric: negative degree");
  const int n = static_cast<int>(vals.size());
  if (l > n) return cplx(0);
  std::vector<cplx> e(static_cast<size_t>(l) + 1, cplx(0));
  e[0] = cplx(1);
  for (int i = 0; i < n; ++i)
    for (int j = std::min(l, i + 1); j >= 1; --j) e[j] += vals[i] * e[j - 1];
  return e[l];
}

// ---------------------------------------------------------------------------
// Polynomial helpers (ascending coefficients)
// ---------------------------------------------------------------------------

inline cplx poly_eval(const Poly& c, cplx x) {
  cplx out(0);
  for (size_t i = c.size(); i-- > 0;) out = out * x + c[i];
  return out;
}

inline int poly_degree(const Poly& c) {
  for (size_t i = c.size(); i-- > 0;)
    if (std::abs(c[i]) != 0.0) return static_cast<int>(i);
  return -1;
}

inline Poly poly_trim(Poly c, double rel = 1e-9) {
  double top = 0;
  for (const cplx& v : c) top = std::max(top, std::abs(v));
  size_t keep = 1;
  for (size_t i = 0; i < c.size(); ++i)
    if (std::abs(c[i]) > rel * top) keep = i + 1;
  c.resize(std::max<size_t>(keep, 1));
  return c;
}

inline Poly poly_add(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), cplx(0));
  for (size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

inline Poly poly_sub(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), cplx(0));
  for (size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

inline Poly poly_scale(Poly a, cplx s) {
  for (cplx& v : a) v *= s;
  return a;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {cplx(0)};
  Poly out(a.size() + b.size() - 1, cplx(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline Poly poly_from_roots(const std::vector<cplx>& roots) {
  Poly out{cplx(1)};
  for (const cplx& r : roots) out = poly_mul(out, Poly{-r, cplx(1)});
  return out;
}

// p(x) -> p(lambda x): c_j -> c_j lambda^j.
inline Poly poly_dilate(const Poly& c, cplx lambda) {
  Poly out(c.size());
  cplx p(1);
  for (size_t j = 0; j < c.size(); ++j) {
    out[j] = c[j] * p;
    p *= lambda;
  }
  return out;
}

inline Poly poly_monic(const Poly& c) {
  int d = poly_degree(c);
  if (d < 0) throw InvariantViolation("poly_monic: zero polynomial");
  Poly out(c.begin(), c.begin() + d + 1);
  cplx lead = out.back();
  for (cplx& v : out) v /= lead;
  return out;
}

// Quotient of an exact division; the remainder norm must stay below
// rel_tol * max |dividend coefficient|.
inline Poly poly_divide_exact(const Poly& num, const Poly& den,
                              double rel_tol = 1e-8) {
  int dn = poly_degree(num);
  int dd = poly_degree(den);
  if (dd < 0) throw InexactDivision("poly_divide_exact: zero divisor");
  if (dn < dd) throw InexactDivision("poly_divide_exact: degree of divisor too high");
  Poly rem(num.begin(), num.begin() + dn + 1);
  Poly quot(static_cast<size_t>(dn - dd) + 1, cplx(0));
  double top = 0;
  for (const cplx& v : rem) top = std::max(top, std::abs(v));
  for (int i = dn - dd; i >= 0; --i) {
    cplx f = rem[static_cast<size_t>(i + dd)] / den[static_cast<size_t>(dd)];
    quot[static_cast<size_t>(i)] = f;
    for (int j = 0; j <= dd; ++j)
      rem[static_cast<size_t>(i + j)] -= f * den[static_cast<size_t>(j)];
  }
  double rnorm = 0;
  for (const cplx& v : rem) rnorm = std::max(rnorm, std::abs(v));
  if (rnorm > rel_tol * std::max(top, 1.0))
    throw InexactDivision("poly_divide_exact: remainder " + std::to_string(rnorm));
  return quot;
}

inline std::vector<cplx> poly_roots(Poly c) {
  c = poly_trim(c, 1e-13);
  int n = poly_degree(c);
  if (n < 1) return {};
  Matrix comp = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<size_t>(i)] / c[static_cast<size_t>(n)];
  for (int i = 1; i < n; ++i) comp(i, i - 1) = cplx(1);
  Eigen::ComplexEigenSolver<Matrix> es(comp);
  std::vector<cplx> roots(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) roots[static_cast<size_t>(i)] = es.eigenvalues()(i);
  return roots;
}

// ---------------------------------------------------------------------------
// Truncated series (order = length - 1)
// ---------------------------------------------------------------------------

inline Series series_mul(const Series& a, const Series& b, int order) {
  Series out(static_cast<size_t>(order) + 1, cplx(0));
  for (size_t i = 0; i < a.size() && i <= static_cast<size_t>(order); ++i)
    for (size_t j = 0; j + i <= static_cast<size_t>(order) && j < b.size(); ++j)
      out[i + j] += a[i] * b[j];
  return out;
}

inline Series series_invert(const Series& a, int order) {
  if (a.empty() || std::abs(a[0]) == 0.0)
    throw ZeroConstantTerm("series_invert: vanishing constant term");
  Series out(static_cast<size_t>(order) + 1, cplx(0));
  out[0] = cplx(1) / a[0];
  for (int m = 1; m <= order; ++m) {
    cplx acc(0);
    for (int j = 1; j <= m; ++j) {
      cplx aj = (static_cast<size_t>(j) < a.size()) ? a[static_cast<size_t>(j)] : cplx(0);
      acc += aj * out[static_cast<size_t>(m - j)];
    }
    out[static_cast<size_t>(m)] = -acc / a[0];
  }
  return out;
}

inline Series series_div(const Series& a, const Series& b, int order) {
  return series_mul(a, series_invert(b, order), order);
}

inline Series series_add(const Series& a, const Series& b, int order) {
  Series out(static_cast<size_t>(order) + 1, cplx(0));
  for (size_t i = 0; i < out.size(); ++i) {
    if (i < a.size()) out[i] += a[i];
    if (i < b.size()) out[i] += b[i];
  }
  return out;
}

inline Series series_scale(Series a, cplx s) {
  for (cplx& c : a) c *= s;
  return a;
}

inline Series series_sub(const Series& a, const Series& b, int order) {
  Series out(static_cast<size_t>(order) + 1, cplx(0));
  for (size_t i = 0; i < out.size(); ++i) {
    if (i < a.size()) out[i] += a[i];
    if (i < b.size()) out[i] -= b[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Richardson extrapolation (Neville tableau toward eps -> 0)
// ---------------------------------------------------------------------------

struct Extrapolated {
  cplx value;
  double spread;
};

inline Extrapolated richardson_extrapolate(const std::vector<double>& eps,
                                           const std::vector<cplx>& vals) {
  if (eps.size() != vals.size())
    throw InsufficientSamples("richardson_extrapolate: size mismatch");
  const size_t m = eps.size();
  if (m < 2) throw InsufficientSamples("richardson_extrapolate: need at least 2 samples");
  std::vector<std::vector<cplx>> tableau;
  tableau.push_back(vals);
  for (size_t k = 1; k < m; ++k) {
    std::vector<cplx> row;
    for (size_t i = 0; i + k < m; ++i) {
      double e0 = eps[i];
      double e1 = eps[i + k];
      if (e0 == e1) throw InsufficientSamples("richardson_extrapolate: repeated sample");
      row.push_back((e0 * tableau[k - 1][i + 1] - e1 * tableau[k - 1][i]) / (e0 - e1));
    }
    tableau.push_back(row);
  }
  Extrapolated out;
  out.value = tableau[m - 1][0];
  out.spread = std::abs(tableau[m - 1][0] - tableau[m - 2][0]);
  return out;
}

// ---------------------------------------------------------------------------
// Combinatorics
// ---------------------------------------------------------------------------

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

// All k-subsets of {0, ..., n-1} in increasing lexicographic order.
inline std::vector<std::vector<int>> subsets_of_size(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<size_t>(i)] = i;
  if (k == 0) {
    out.push_back({});
    return out;
  }
  if (k > n) return out;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      cur[static_cast<size_t>(j)] = cur[static_cast<size_t>(j - 1)] + 1;
  }
  return out;
}

}  // namespace bethegeom
