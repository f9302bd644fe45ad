#pragma once

// Twisted inhomogeneous spin chain on n two-dimensional sites.  Basis states
// are bitmasks: bit (i-1) holds the state of site i, so site 1 is the least
// significant bit and state 0 is the highest-weight vector.  All fractional
// powers of hbar are integer powers of the principal fourth root, fixed once
// here and shared by every routine (see CONVENTIONS.md).

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "numerics.hpp"
#include "random.hpp"

namespace bethegeom {

struct ChainSpec {
  int n = 0;
  std::vector<cplx> a;
  cplx hbar{0.0, 0.0};
  cplx zeta{1.0, 0.0};
};

inline void validate_chain(const ChainSpec& s) {
  if (s.n < 1 || s.n > 12)
    throw InvariantViolation("chain.n: expected 1 <= n <= 12");
  if (static_cast<int>(s.a.size()) != s.n)
    throw InvariantViolation("chain.a: expected exactly n evaluation points");
  for (int i = 0; i < s.n; ++i) {
    if (std::abs(s.a[static_cast<size_t>(i)]) < 1e-12)
      throw InvariantViolation("chain.a[" + std::to_string(i) + "]: must be nonzero");
    for (int j = i + 1; j < s.n; ++j) {
      double sep = std::abs(s.a[static_cast<size_t>(i)] - s.a[static_cast<size_t>(j)]);
      double scale = std::max(std::abs(s.a[static_cast<size_t>(i)]),
                              std::abs(s.a[static_cast<size_t>(j)]));
      if (sep <= 1e-8 * scale)
        throw InvariantViolation("chain.a: entries " + std::to_string(i) + "," +
                                 std::to_string(j) + " too close");
    }
  }
  if (std::abs(s.hbar) < 1e-12)
    throw InvariantViolation("chain.hbar: must be nonzero");
  cplx hp(1.0, 0.0);
  for (int m = 1; m <= 2 * s.n; ++m) {
    hp *= s.hbar;
    if (std::abs(hp - cplx(1)) <= 1e-8)
      throw InvariantViolation("chain.hbar: hbar^" + std::to_string(m) +
                               " too close to 1");
  }
  if (std::abs(s.zeta) < 1e-12)
    throw InvariantViolation("chain.zeta: must be nonzero");
  if (std::abs(s.zeta * s.zeta - cplx(1)) <= 1e-8)
    throw InvariantViolation("chain.zeta: zeta^2 too close to 1");
}

inline cplx quarter_root(cplx h) { return std::sqrt(std::sqrt(h)); }

// Generic parameter draw: evaluation points on an annulus, |hbar| in [0.3, 0.7],
// moderate twist; rejects draws that land on an excluded locus.
inline ChainSpec sample_chain(Rng& rng, int n) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    ChainSpec s;
    s.n = n;
    s.a.resize(static_cast<size_t>(n));
    for (cplx& ai : s.a) ai = rng.annulus(0.5, 2.0);
    s.hbar = rng.annulus(0.3, 0.7);
    s.zeta = rng.annulus(0.6, 1.8);
    try {
      validate_chain(s);
      return s;
    } catch (const InvariantViolation&) {
    }
  }
  throw InvariantViolation("sample_chain: no valid draw after 200 attempts");
}

// ---------------------------------------------------------------------------
// Basis bookkeeping
// ---------------------------------------------------------------------------

inline int weight_of_state(int n, int state) {
  return n - 2 * std::popcount(static_cast<unsigned>(state));
}

// States of magnon number k in increasing bitmask order (canonical subset order).
inline std::vector<int> block_states(int n, int k) {
  std::vector<int> out;
  for (int s = 0; s < (1 << n); ++s)
    if (std::popcount(static_cast<unsigned>(s)) == k) out.push_back(s);
  return out;
}

inline Matrix weight_block(const Matrix& op, int n, int k) {
  std::vector<int> states = block_states(n, k);
  Matrix out(states.size(), states.size());
  for (size_t r = 0; r < states.size(); ++r)
    for (size_t c = 0; c < states.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          op(states[r], states[c]);
  return out;
}

inline Vector weight_block_vector(const Vector& v, int n, int k) {
  std::vector<int> states = block_states(n, k);
  Vector out(states.size());
  for (size_t r = 0; r < states.size(); ++r)
    out(static_cast<Eigen::Index>(r)) = v(states[r]);
  return out;
}

inline double off_block_norm(const Matrix& op, int n) {
  double acc = 0;
  int dim = 1 << n;
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      if (std::popcount(static_cast<unsigned>(r)) !=
          std::popcount(static_cast<unsigned>(c)))
        acc += std::norm(op(r, c));
  return std::sqrt(acc);
}

inline double rel_commutator_norm(const Matrix& x, const Matrix& y) {
  double denom = x.norm() * y.norm();
  if (denom == 0) return 0;
  return (x * y - y * x).norm() / denom;
}

// Embed a single-site operator at site (1-based), identity elsewhere.
inline Matrix embed_site(const Eigen::Matrix2cd& op, int site, int n) {
  int dim = 1 << n;
  int bitpos = site - 1;
  Matrix out = Matrix::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    int b = (col >> bitpos) & 1;
    for (int rbit = 0; rbit < 2; ++rbit) {
      cplx val = op(rbit, b);
      if (val == cplx(0)) continue;
      int row = (col & ~(1 << bitpos)) | (rbit << bitpos);
      out(row, col) += val;
    }
  }
  return out;
}

// Embed a two-site operator; the 4x4 index is 2 * (state of site p) + (state of q).
inline Matrix embed_pair(const Eigen::Matrix4cd& op4, int p, int q, int n) {
  if (p == q) throw IndexOutOfRange("embed_pair: sites must differ");
  int dim = 1 << n;
  int bp = p - 1, bq = q - 1;
  Matrix out = Matrix::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    int cb = 2 * ((col >> bp) & 1) + ((col >> bq) & 1);
    int base = col & ~(1 << bp) & ~(1 << bq);
    for (int rp = 0; rp < 2; ++rp)
      for (int rq = 0; rq < 2; ++rq) {
        cplx val = op4(2 * rp + rq, cb);
        if (val == cplx(0)) continue;
        int row = base | (rp << bp) | (rq << bq);
        out(row, col) += val;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation modules
// ---------------------------------------------------------------------------

struct SiteRep {
  int m = 1;  // highest weight; dimension m + 1
  Matrix E, F, H;
};

// [k]_hbar as the pole-free form hbar^{-(k-1)/2} (1 + hbar + ... + hbar^{k-1}).
inline cplx weight_bracket(int k, cplx hs) {
  cplx acc(0);
  cplx h = hs * hs;
  cplx hp(1);
  for (int j = 0; j < k; ++j) {
    acc += hp;
    hp *= h;
  }
  return acc * pow_int(hs, -(k - 1));
}

inline SiteRep evaluation_module(int m, cplx hbar) {
  if (m < 1) throw InvalidWeight("evaluation_module: highest weight must be >= 1");
  cplx hq = quarter_root(hbar);
  cplx hs = hq * hq;
  int d = m + 1;
  SiteRep rep;
  rep.m = m;
  rep.E = Matrix::Zero(d, d);
  rep.F = Matrix::Zero(d, d);
  rep.H = Matrix::Zero(d, d);
  for (int k = 0; k <= m; ++k) {
    rep.H(k, k) = cplx(m - 2 * k);
    if (k < m) rep.F(k + 1, k) = cplx(1);
    if (k > 0) rep.E(k - 1, k) = weight_bracket(k, hs) * weight_bracket(m - k + 1, hs);
  }
  return rep;
}

inline SiteRep fundamental_rep(cplx hbar) { return evaluation_module(1, hbar); }

// ---------------------------------------------------------------------------
// L-operator (auxiliary 2x2 blocks of site-space matrices)
// ---------------------------------------------------------------------------

struct LOperator {
  int dim = 2;
  Matrix A, B, C, D;
};

inline LOperator l_operator(const SiteRep& rep, cplx x, cplx hbar) {
  if (std::abs(x) == 0.0)
    throw ZeroSpectralParameter("l_operator: x = 0");
  cplx hq = quarter_root(hbar);
  cplx hs = hq * hq;
  int d = rep.m + 1;
  Matrix hH4 = Matrix::Zero(d, d);
  Matrix hH4i = Matrix::Zero(d, d);
  for (int k = 0; k <= rep.m; ++k) {
    hH4(k, k) = pow_int(hq, rep.m - 2 * k);
    hH4i(k, k) = pow_int(hq, -(rep.m - 2 * k));
  }
  LOperator L;
  L.dim = d;
  cplx xi = cplx(1) / x;
  cplx coeff = hs - cplx(1) / hs;
  L.A = hH4 - (xi / hs) * hH4i;
  L.B = coeff * (rep.F * hH4i);
  L.C = xi * coeff * (rep.E * hH4);
  L.D = hH4i - (xi / hs) * hH4;
  return L;
}

// ---------------------------------------------------------------------------
// Monodromy, transfer, vacuum eigenvalues
// ---------------------------------------------------------------------------

struct Monodromy {
  Matrix A, B, C, D;
};

inline Monodromy monodromy(const ChainSpec& s, cplx u) {
  if (std::abs(u) < 1e-12)
    throw SpectralParameterAtPole("monodromy: u = 0");
  SiteRep fund = fundamental_rep(s.hbar);
  std::array<std::array<Matrix, 2>, 2> cur;
  bool first = true;
  for (int i = 1; i <= s.n; ++i) {
    LOperator L = l_operator(fund, u / s.a[static_cast<size_t>(i - 1)], s.hbar);
    std::array<std::array<Matrix, 2>, 2> site;
    site[0][0] = embed_site(Eigen::Matrix2cd(L.A), i, s.n);
    site[0][1] = embed_site(Eigen::Matrix2cd(L.B), i, s.n);
    site[1][0] = embed_site(Eigen::Matrix2cd(L.C), i, s.n);
    site[1][1] = embed_site(Eigen::Matrix2cd(L.D), i, s.n);
    if (first) {
      cur = site;
      first = false;
      continue;
    }
    std::array<std::array<Matrix, 2>, 2> next;
    for (int al = 0; al < 2; ++al)
      for (int be = 0; be < 2; ++be)
        next[al][be] = cur[al][0] * site[0][be] + cur[al][1] * site[1][be];
    cur = next;
  }
  Monodromy M;
  M.A = cur[0][0] * s.zeta;
  M.B = cur[0][1] / s.zeta;
  M.C = cur[1][0] * s.zeta;
  M.D = cur[1][1] / s.zeta;
  return M;
}

inline cplx vacuum_alpha(const ChainSpec& s, cplx u) {
  cplx hq = quarter_root(s.hbar);
  cplx out = s.zeta * pow_int(hq, s.n);
  for (const cplx& ai : s.a) out *= cplx(1) - ai / (u * s.hbar);
  return out;
}

inline cplx vacuum_delta(const ChainSpec& s, cplx u) {
  cplx hq = quarter_root(s.hbar);
  cplx out = pow_int(hq, -s.n) / s.zeta;
  for (const cplx& ai : s.a) out *= cplx(1) - ai / u;
  return out;
}

inline Matrix transfer(const ChainSpec& s, cplx u) {
  Monodromy M = monodromy(s, u);
  return M.A + M.D;
}

inline Vector bethe_vector(const ChainSpec& s, const std::vector<cplx>& roots) {
  for (size_t i = 0; i < roots.size(); ++i) {
    if (std::abs(roots[i]) < 1e-12)
      throw RootAtPole("bethe_vector: root at origin");
    for (size_t j = i + 1; j < roots.size(); ++j)
      if (std::abs(roots[i] - roots[j]) <=
          1e-10 * std::max(std::abs(roots[i]), std::abs(roots[j])))
        throw CoincidentRoots("bethe_vector: coincident roots");
  }
  int dim = 1 << s.n;
  Vector psi = Vector::Zero(dim);
  psi(0) = cplx(1);
  for (const cplx& v : roots) {
    Monodromy M = monodromy(s, v);
    psi = M.B * psi;
  }
  return psi;
}

inline cplx transfer_eigenvalue(const ChainSpec& s, cplx u,
                                const std::vector<cplx>& roots) {
  cplx hq = quarter_root(s.hbar);
  cplx hs = hq * hq;
  for (const cplx& v : roots)
    if (std::abs(u - v) <= 1e-12 * std::max(std::abs(u), std::abs(v)))
      throw EvaluationAtRoot("transfer_eigenvalue: u at a Bethe root");
  cplx pa(1), pd(1);
  for (const cplx& v : roots) {
    pa *= (v * hs - u / hs) / (v - u);
    pd *= (v / hs - u * hs) / (v - u);
  }
  return vacuum_alpha(s, u) * pa + vacuum_delta(s, u) * pd;
}

// ---------------------------------------------------------------------------
// R-matrix and discrete connection operators
// ---------------------------------------------------------------------------

// Two-site solution; index 2 * s1 + s2 with slot 1 carrying the ratio x.
inline Eigen::Matrix4cd r_matrix(cplx x, cplx hbar) {
  SiteRep fund = fundamental_rep(hbar);
  LOperator L = l_operator(fund, x, hbar);
  Eigen::Matrix4cd R = Eigen::Matrix4cd::Zero();
  const Matrix* blocks[2][2] = {{&L.A, &L.B}, {&L.C, &L.D}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          R(2 * i + a, 2 * j + b) = (*blocks[a][b])(i, j);
  double top = R.cwiseAbs().maxCoeff();
  if (std::abs(R(0, 0)) < 1e-12 * top)
    throw ResonantRatio("r_matrix: normalizing entry vanishes at this ratio");
  return R / R(0, 0);
}

inline Matrix qkz_operator(const ChainSpec& s, int i, cplx q) {
  if (i < 1 || i > s.n) throw IndexOutOfRange("qkz_operator: site out of range");
  int dim = 1 << s.n;
  Matrix H = Matrix::Identity(dim, dim);
  for (int j = i - 1; j >= 1; --j)
    H = H * embed_pair(r_matrix(q * s.a[static_cast<size_t>(i - 1)] /
                                    s.a[static_cast<size_t>(j - 1)],
                                s.hbar),
                       i, j, s.n);
  Eigen::Matrix2cd Z;
  Z << s.zeta, cplx(0), cplx(0), cplx(1) / s.zeta;
  H = H * embed_site(Z, i, s.n);
  for (int j = s.n; j >= i + 1; --j)
    H = H * embed_pair(r_matrix(s.a[static_cast<size_t>(i - 1)] /
                                    s.a[static_cast<size_t>(j - 1)],
                                s.hbar),
                       i, j, s.n);
  return H;
}

// ---------------------------------------------------------------------------
// Q-operator tower from the degree-n difference relation
// ---------------------------------------------------------------------------

// T(u = 1/x) is a degree-n matrix polynomial in x; recover its coefficients
// by interpolation at n + 1 nodes off the real axis.
inline std::vector<Matrix> transfer_coefficients(const ChainSpec& s) {
  int m = s.n + 1;
  std::vector<cplx> xs(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    double t = 2.0 * M_PI * k / m;
    xs[static_cast<size_t>(k)] = 1.7 * cplx(std::cos(t), std::sin(t));
  }
  std::vector<Matrix> vals;
  vals.reserve(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k)
    vals.push_back(transfer(s, cplx(1) / xs[static_cast<size_t>(k)]));
  Matrix V(m, m);
  for (int k = 0; k < m; ++k)
    for (int p = 0; p < m; ++p) V(k, p) = pow_int(xs[static_cast<size_t>(k)], p);
  Matrix Vinv = V.inverse();
  int dim = 1 << s.n;
  std::vector<Matrix> coeffs(static_cast<size_t>(m), Matrix::Zero(dim, dim));
  for (int p = 0; p < m; ++p)
    for (int k = 0; k < m; ++k)
      coeffs[static_cast<size_t>(p)] += Vinv(p, k) * vals[static_cast<size_t>(k)];
  return coeffs;
}

struct QOperatorTower {
  int n = 0;
  int sign = +1;
  std::vector<Matrix> coeff;  // Q_0 .. Q_n, with Q_0 = identity
};

inline QOperatorTower q_tower(const ChainSpec& s, int sign) {
  cplx hq = quarter_root(s.hbar);
  cplx h = s.hbar;
  int dim = 1 << s.n;

  // cA multiplies the Q(hbar x) terms, cB the Q(x / hbar) terms; the minus
  // tower flips both the twist and the weight diagonal.
  Vector cA(dim), cB(dim);
  for (int st = 0; st < dim; ++st) {
    int w = weight_of_state(s.n, st);
    cplx hh4 = pow_int(hq, w);
    if (sign >= 0) {
      cA(st) = s.zeta * hh4;
      cB(st) = cplx(1) / (s.zeta * hh4);
    } else {
      cA(st) = cplx(1) / (s.zeta * hh4);
      cB(st) = s.zeta * hh4;
    }
  }

  Poly ctil{cplx(1)}, cpl{cplx(1)};
  for (const cplx& ai : s.a) {
    ctil = poly_mul(ctil, Poly{cplx(1), -ai / h});
    cpl = poly_mul(cpl, Poly{cplx(1), -ai});
  }

  std::vector<Matrix> tcoef = transfer_coefficients(s);

  QOperatorTower tower;
  tower.n = s.n;
  tower.sign = (sign >= 0) ? +1 : -1;
  tower.coeff.assign(static_cast<size_t>(s.n) + 1, Matrix::Zero(dim, dim));
  tower.coeff[0] = Matrix::Identity(dim, dim);

  for (int r = 1; r <= s.n; ++r) {
    Matrix rhs = Matrix::Zero(dim, dim);
    for (int p = 1; p <= r; ++p) {
      const Matrix& Qprev = tower.coeff[static_cast<size_t>(r - p)];
      Vector diag(dim);
      for (int st = 0; st < dim; ++st)
        diag(st) = cA(st) * ctil[static_cast<size_t>(p)] * pow_int(h, r - p) +
                   cB(st) * cpl[static_cast<size_t>(p)] * pow_int(h, -(r - p));
      rhs += diag.asDiagonal() * Qprev;
      rhs -= tcoef[static_cast<size_t>(p)] * Qprev;
    }
    Vector lhs(dim);
    for (int st = 0; st < dim; ++st) {
      cplx t1 = cA(st) * (cplx(1) - pow_int(h, r));
      cplx t2 = cB(st) * (cplx(1) - pow_int(h, -r));
      lhs(st) = t1 + t2;
      double scale = std::abs(t1) + std::abs(t2);
      if (std::abs(lhs(st)) < 1e-12 * std::max(scale, 1e-30))
        throw SingularDenominator("q_tower: resonant twist at level " +
                                  std::to_string(r));
    }
    Matrix Qr(dim, dim);
    for (int st = 0; st < dim; ++st) Qr.row(st) = rhs.row(st) / lhs(st);
    tower.coeff[static_cast<size_t>(r)] = Qr;
  }
  return tower;
}

inline void check_kahler_dictionary(const ChainSpec& s, cplx z) {
  cplx signn = (s.n % 2 == 0) ? cplx(1) : cplx(-1);
  if (std::abs(z * s.zeta * s.zeta * signn - cplx(1)) > 1e-9)
    throw InvariantViolation(
        "kahler parameter: expected z = (-1)^n zeta^{-2} for this chain");
}

inline Matrix quantum_exterior_power(const ChainSpec& s, cplx z, int l) {
  if (l < 0 || l > s.n)
    throw IndexOutOfRange("quantum_exterior_power: level out of range");
  check_kahler_dictionary(s, z);
  QOperatorTower tower = q_tower(s, +1);
  cplx sign = (l % 2 == 0) ? cplx(1) : cplx(-1);
  return sign * tower.coeff[static_cast<size_t>(l)];
}

inline Matrix q_operator(const ChainSpec& s, cplx z, cplx x, int sign) {
  check_kahler_dictionary(s, z);
  QOperatorTower tower = q_tower(s, sign);
  int dim = 1 << s.n;
  Matrix out = Matrix::Zero(dim, dim);
  cplx xp(1);
  for (size_t r = 0; r < tower.coeff.size(); ++r) {
    out += xp * tower.coeff[r];
    xp *= x;
  }
  return out;
}

inline Matrix tower_eval(const QOperatorTower& tower, cplx x) {
  Matrix out = Matrix::Zero(tower.coeff[0].rows(), tower.coeff[0].cols());
  cplx xp(1);
  for (size_t r = 0; r < tower.coeff.size(); ++r) {
    out += xp * tower.coeff[r];
    xp *= x;
  }
  return out;
}

struct IdentityResiduals {
  double tq_plus = 0;
  double tq_minus = 0;
  double wronskian = 0;
};

// Residuals of the degree-n difference relation for both towers and of the
// quantum Wronskian pairing, evaluated at spectral point x.
inline IdentityResiduals operator_identity_residuals(const ChainSpec& s, cplx x) {
  cplx hq = quarter_root(s.hbar);
  cplx hs = hq * hq;
  cplx h = s.hbar;
  int dim = 1 << s.n;

  QOperatorTower qp = q_tower(s, +1);
  QOperatorTower qm = q_tower(s, -1);
  std::vector<Matrix> tcoef = transfer_coefficients(s);

  Matrix T1 = Matrix::Zero(dim, dim);
  cplx xp(1);
  for (size_t p = 0; p < tcoef.size(); ++p) {
    T1 += xp * tcoef[p];
    xp *= x;
  }

  Vector hh4(dim), hh4i(dim);
  for (int st = 0; st < dim; ++st) {
    int w = weight_of_state(s.n, st);
    hh4(st) = pow_int(hq, w);
    hh4i(st) = pow_int(hq, -w);
  }

  cplx G(1), Gh(1), Wr(1);
  for (const cplx& ai : s.a) {
    G *= cplx(1) - ai * x;
    Gh *= cplx(1) - ai * x / h;
    Wr *= cplx(1) - ai * x / hs;
  }

  auto relnorm = [](const Matrix& diff, const Matrix& ref) {
    double d = ref.norm();
    return diff.norm() / std::max(d, 1e-30);
  };

  IdentityResiduals out;
  {
    Matrix lhs = T1 * tower_eval(qp, x);
    Matrix rhs = s.zeta * Gh * (hh4.asDiagonal() * tower_eval(qp, h * x)) +
                 (cplx(1) / s.zeta) * G * (hh4i.asDiagonal() * tower_eval(qp, x / h));
    out.tq_plus = relnorm(lhs - rhs, lhs);
  }
  {
    Matrix lhs = T1 * tower_eval(qm, x);
    Matrix rhs = (cplx(1) / s.zeta) * Gh * (hh4i.asDiagonal() * tower_eval(qm, h * x)) +
                 s.zeta * G * (hh4.asDiagonal() * tower_eval(qm, x / h));
    out.tq_minus = relnorm(lhs - rhs, lhs);
  }
  {
    Matrix lhs = s.zeta * (hh4.asDiagonal() * (tower_eval(qp, hs * x) * tower_eval(qm, x / hs))) -
                 (cplx(1) / s.zeta) *
                     (hh4i.asDiagonal() * (tower_eval(qp, x / hs) * tower_eval(qm, hs * x)));
    Vector wdiag(dim);
    for (int st = 0; st < dim; ++st)
      wdiag(st) = (s.zeta * hh4(st) - hh4i(st) / s.zeta) * Wr;
    Matrix rhs = Matrix(wdiag.asDiagonal());
    out.wronskian = relnorm(lhs - rhs, rhs);
  }
  return out;
}

}  // namespace bethegeom
