#pragma once

// QQ-systems over simply-laced Cartan data, Miura difference connections in
// the defining SL(r+1) representation, Backlund swaps, quantum Wronskians of
// flag sections, and the trigonometric Ruijsenaars-Schneider side of the
// quantum/classical duality.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bethe.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "random.hpp"
#include "spinchain.hpp"

namespace bethegeom {

// ---------------------------------------------------------------------------
// Cartan data and twist monomials
// ---------------------------------------------------------------------------

struct CartanData {
  int r = 1;
  std::vector<std::vector<int>> a;
  std::vector<int> ordering;
};

inline CartanData sl_cartan(int r) {
  CartanData c;
  c.r = r;
  c.a.assign(static_cast<size_t>(r), std::vector<int>(static_cast<size_t>(r), 0));
  for (int i = 0; i < r; ++i) {
    c.a[static_cast<size_t>(i)][static_cast<size_t>(i)] = 2;
    if (i + 1 < r) {
      c.a[static_cast<size_t>(i)][static_cast<size_t>(i + 1)] = -1;
      c.a[static_cast<size_t>(i + 1)][static_cast<size_t>(i)] = -1;
    }
  }
  for (int i = 1; i <= r; ++i) c.ordering.push_back(i);
  return c;
}

inline void validate_cartan(const CartanData& c) {
  if (c.r < 1) throw InvariantViolation("cartan.r: rank must be >= 1");
  if (static_cast<int>(c.a.size()) != c.r)
    throw InvariantViolation("cartan.a: expected r rows");
  for (int i = 0; i < c.r; ++i) {
    if (static_cast<int>(c.a[static_cast<size_t>(i)].size()) != c.r)
      throw InvariantViolation("cartan.a: expected r columns");
    if (c.a[static_cast<size_t>(i)][static_cast<size_t>(i)] != 2)
      throw InvariantViolation("cartan.a: diagonal entries must equal 2");
    for (int j = 0; j < c.r; ++j) {
      if (i == j) continue;
      int aij = c.a[static_cast<size_t>(i)][static_cast<size_t>(j)];
      int aji = c.a[static_cast<size_t>(j)][static_cast<size_t>(i)];
      if (aij > 0) throw InvariantViolation("cartan.a: off-diagonal must be <= 0");
      if (aij != aji)
        throw InvariantViolation("cartan.a: matrix must be symmetric");
    }
  }
  std::vector<int> seen(static_cast<size_t>(c.r), 0);
  if (static_cast<int>(c.ordering.size()) != c.r)
    throw InvariantViolation("cartan.ordering: expected a permutation of 1..r");
  for (int node : c.ordering) {
    if (node < 1 || node > c.r || seen[static_cast<size_t>(node - 1)]++)
      throw InvariantViolation("cartan.ordering: expected a permutation of 1..r");
  }
}

struct TwistMonomials {
  std::vector<cplx> xi;
  std::vector<cplx> xit;
};

// xit_i = zeta_i prod_{j after i} zeta_j^{a_ji};
// xi_i  = zeta_i^{-1} prod_{j before i} zeta_j^{-a_ji},
// with before/after taken in the configured ordering.
inline TwistMonomials xi_factors(const std::vector<cplx>& zeta,
                                 const CartanData& cartan) {
  validate_cartan(cartan);
  if (static_cast<int>(zeta.size()) != cartan.r)
    throw InvariantViolation("xi_factors: expected r twist values");
  for (cplx z : zeta)
    if (std::abs(z) < 1e-300) throw ZeroTwist("xi_factors: vanishing twist");
  std::vector<int> pos(static_cast<size_t>(cartan.r), 0);
  for (int p = 0; p < cartan.r; ++p)
    pos[static_cast<size_t>(cartan.ordering[static_cast<size_t>(p)] - 1)] = p;
  TwistMonomials out;
  out.xi.resize(static_cast<size_t>(cartan.r));
  out.xit.resize(static_cast<size_t>(cartan.r));
  for (int i = 0; i < cartan.r; ++i) {
    cplx t = zeta[static_cast<size_t>(i)];
    cplx q = cplx(1.0) / zeta[static_cast<size_t>(i)];
    for (int j = 0; j < cartan.r; ++j) {
      if (j == i) continue;
      int aji = cartan.a[static_cast<size_t>(j)][static_cast<size_t>(i)];
      if (aji == 0) continue;
      if (pos[static_cast<size_t>(j)] > pos[static_cast<size_t>(i)])
        t *= pow_int(zeta[static_cast<size_t>(j)], aji);
      else
        q *= pow_int(zeta[static_cast<size_t>(j)], -aji);
    }
    out.xit[static_cast<size_t>(i)] = t;
    out.xi[static_cast<size_t>(i)] = q;
  }
  return out;
}

// ---------------------------------------------------------------------------
// QQ instances
// ---------------------------------------------------------------------------

struct QQInstance {
  CartanData cartan;
  std::vector<Poly> lambda;
  std::vector<cplx> zeta;
  std::vector<Poly> qplus;
  std::vector<Poly> qminus;
  std::vector<cplx> xi;
  std::vector<cplx> xit;
};

inline QQInstance make_qq_instance(const CartanData& cartan,
                                   std::vector<Poly> lambda,
                                   std::vector<cplx> zeta,
                                   std::vector<Poly> qplus,
                                   std::vector<Poly> qminus = {}) {
  validate_cartan(cartan);
  size_t r = static_cast<size_t>(cartan.r);
  if (lambda.size() != r || zeta.size() != r || qplus.size() != r)
    throw InvariantViolation("qq instance: expected r entries per field");
  if (!qminus.empty() && qminus.size() != r)
    throw InvariantViolation("qq instance: expected r minus-polynomials");
  QQInstance inst;
  inst.cartan = cartan;
  inst.lambda = std::move(lambda);
  inst.zeta = std::move(zeta);
  inst.qplus = std::move(qplus);
  inst.qminus = qminus.empty() ? std::vector<Poly>(r) : std::move(qminus);
  TwistMonomials tw = xi_factors(inst.zeta, cartan);
  inst.xi = tw.xi;
  inst.xit = tw.xit;
  return inst;
}

// Nondegeneracy at working precision: no shared plus/minus roots at a node,
// and no adjacent-node plus-root pairs with ratio an hbar power.
inline void check_nondegenerate(const QQInstance& inst, cplx h) {
  int r = inst.cartan.r;
  std::vector<std::vector<cplx>> proots(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i)
    if (poly_degree(inst.qplus[static_cast<size_t>(i)]) > 0)
      proots[static_cast<size_t>(i)] = poly_roots(inst.qplus[static_cast<size_t>(i)]);
  for (int i = 0; i < r; ++i) {
    if (poly_degree(inst.qminus[static_cast<size_t>(i)]) > 0) {
      for (cplx wm : poly_roots(inst.qminus[static_cast<size_t>(i)]))
        for (cplx wp : proots[static_cast<size_t>(i)])
          if (std::abs(wm - wp) < 1e-8 * (1.0 + std::abs(wp)))
            throw InvariantViolation("qq instance: shared plus/minus root at node " +
                                     std::to_string(i + 1));
    }
    for (int j = 0; j < r; ++j) {
      if (j == i || inst.cartan.a[static_cast<size_t>(i)][static_cast<size_t>(j)] == 0)
        continue;
      for (cplx wi : proots[static_cast<size_t>(i)])
        for (cplx wj : proots[static_cast<size_t>(j)])
          for (int m = -(r + 1); m <= r + 1; ++m)
            if (std::abs(wi - wj * pow_int(h, m)) < 1e-8 * (1.0 + std::abs(wi)))
              throw InvariantViolation(
                  "qq instance: adjacent plus-roots related by an hbar power");
    }
  }
}

// Coefficient polynomials of
//   xit_i Qm_i(u) Qp_i(h u) - xi_i Qm_i(h u) Qp_i(u)
//     - Lambda_i(u) prod_{j after i} Qp_j(h u)^{-a_ji}
//                   prod_{j before i} Qp_j(u)^{-a_ji}.
inline std::vector<Poly> qq_residual(const QQInstance& inst, cplx h) {
  int r = inst.cartan.r;
  std::vector<int> pos(static_cast<size_t>(r), 0);
  for (int p = 0; p < r; ++p)
    pos[static_cast<size_t>(inst.cartan.ordering[static_cast<size_t>(p)] - 1)] = p;
  std::vector<Poly> out;
  for (int i = 0; i < r; ++i) {
    const Poly& qp = inst.qplus[static_cast<size_t>(i)];
    const Poly& qm = inst.qminus[static_cast<size_t>(i)];
    Poly lhs = poly_sub(
        poly_scale(poly_mul(qm, poly_dilate(qp, h)), inst.xit[static_cast<size_t>(i)]),
        poly_scale(poly_mul(poly_dilate(qm, h), qp), inst.xi[static_cast<size_t>(i)]));
    Poly dress = inst.lambda[static_cast<size_t>(i)];
    for (int j = 0; j < r; ++j) {
      if (j == i) continue;
      int power = -inst.cartan.a[static_cast<size_t>(j)][static_cast<size_t>(i)];
      if (power <= 0) continue;
      Poly factor = (pos[static_cast<size_t>(j)] > pos[static_cast<size_t>(i)])
                        ? poly_dilate(inst.qplus[static_cast<size_t>(j)], h)
                        : inst.qplus[static_cast<size_t>(j)];
      for (int m = 0; m < power; ++m) dress = poly_mul(dress, factor);
    }
    out.push_back(poly_sub(lhs, dress));
  }
  return out;
}

inline double qq_residual_norm(const QQInstance& inst, cplx h) {
  double scale = 0.0;
  for (const Poly& lam : inst.lambda)
    for (cplx c : lam) scale = std::max(scale, std::abs(c));
  double worst = 0.0;
  for (const Poly& res : qq_residual(inst, h))
    for (cplx c : res) worst = std::max(worst, std::abs(c));
  return worst / std::max(scale, 1e-30);
}

// Right-hand side the minus-polynomial at one node must reproduce.
inline Poly qq_node_rhs(const QQInstance& inst, int node, cplx h) {
  int r = inst.cartan.r;
  int i = node - 1;
  std::vector<int> pos(static_cast<size_t>(r), 0);
  for (int p = 0; p < r; ++p)
    pos[static_cast<size_t>(inst.cartan.ordering[static_cast<size_t>(p)] - 1)] = p;
  Poly rhs = inst.lambda[static_cast<size_t>(i)];
  for (int j = 0; j < r; ++j) {
    if (j == i) continue;
    int power = -inst.cartan.a[static_cast<size_t>(j)][static_cast<size_t>(i)];
    if (power <= 0) continue;
    Poly factor = (pos[static_cast<size_t>(j)] > pos[static_cast<size_t>(i)])
                      ? poly_dilate(inst.qplus[static_cast<size_t>(j)], h)
                      : inst.qplus[static_cast<size_t>(j)];
    for (int m = 0; m < power; ++m) rhs = poly_mul(rhs, factor);
  }
  return rhs;
}

// Solve xit qm(u) qp(h u) - xi qm(h u) qp(u) = rhs for qm at the given degree.
namespace detail {

struct QminusAttempt {
  Poly qminus;
  double residual = 0.0;
  double condition = 0.0;
  bool ok = false;
};

inline QminusAttempt solve_qminus_at_degree(const Poly& qplus, const Poly& rhs,
                                            cplx xit, cplx xi, cplx h, int degm) {
  QminusAttempt out;
  if (degm < 0) return out;
  int dq = poly_degree(qplus);
  int rows = std::max(degm + dq, poly_degree(rhs)) + 1;
  Poly qph = poly_dilate(qplus, h);
  Matrix A = Matrix::Zero(rows, degm + 1);
  for (int m = 0; m <= degm; ++m)
    for (int j = 0; j <= dq; ++j) {
      A(m + j, m) += xit * qph[static_cast<size_t>(j)];
      A(m + j, m) -= xi * pow_int(h, m) * qplus[static_cast<size_t>(j)];
    }
  Vector b = Vector::Zero(rows);
  for (size_t j = 0; j < rhs.size() && j < static_cast<size_t>(rows); ++j)
    b(static_cast<Eigen::Index>(j)) = rhs[j];
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smax = svd.singularValues().maxCoeff();
  double smin = svd.singularValues().minCoeff();
  out.condition = (smin > 0.0) ? smax / smin : 1e300;
  Vector sol = svd.solve(b);
  double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  out.residual = (A * sol - b).cwiseAbs().maxCoeff() / scale;
  out.qminus.assign(sol.data(), sol.data() + sol.size());
  out.ok = (out.condition < 1e10) && (out.residual < 1e-10);
  return out;
}

}  // namespace detail

inline Poly solve_qminus_node(const Poly& qplus, const Poly& rhs, cplx xit,
                              cplx xi, cplx h) {
  int base = poly_degree(rhs) - poly_degree(qplus);
  bool sawIllConditioned = false;
  for (int delta : {0, 1, -1}) {
    detail::QminusAttempt attempt =
        detail::solve_qminus_at_degree(qplus, rhs, xit, xi, h, base + delta);
    if (attempt.ok) return poly_trim(attempt.qminus);
    if (attempt.condition >= 1e10) sawIllConditioned = true;
  }
  if (sawIllConditioned)
    throw IllConditioned("solve_qminus: twist data makes the linear system singular");
  throw NoPolynomialSolution(
      "solve_qminus: no polynomial of the expected degree satisfies the relation");
}

inline QQInstance solve_qminus(QQInstance inst, cplx h) {
  for (int node = 1; node <= inst.cartan.r; ++node) {
    Poly rhs = qq_node_rhs(inst, node, h);
    inst.qminus[static_cast<size_t>(node - 1)] =
        solve_qminus_node(inst.qplus[static_cast<size_t>(node - 1)], rhs,
                          inst.xit[static_cast<size_t>(node - 1)],
                          inst.xi[static_cast<size_t>(node - 1)], h);
  }
  return inst;
}

// Per-root check that a rank-one instance encodes Bethe equations:
// Lambda(w)/Lambda(w/h) + zeta^2 Qp(h w)/Qp(w/h) at every root w of Qp.
inline std::vector<cplx> qq_to_bethe_residual(const QQInstance& inst, cplx h) {
  if (inst.cartan.r != 1)
    throw InvariantViolation("qq_to_bethe_residual: rank-one instances only");
  const Poly& qp = inst.qplus[0];
  const Poly& lam = inst.lambda[0];
  cplx z2 = inst.zeta[0] * inst.zeta[0];
  std::vector<cplx> out;
  if (poly_degree(qp) == 0) return out;
  for (cplx w : poly_roots(qp)) {
    cplx lamDown = poly_eval(lam, w / h);
    cplx qpDown = poly_eval(qp, w / h);
    double scale = 0.0;
    for (cplx c : lam) scale = std::max(scale, std::abs(c));
    if (std::abs(lamDown) < 1e-12 * std::max(scale, 1e-30) ||
        std::abs(qpDown) < 1e-12)
      throw RootAtPole("qq_to_bethe_residual: shifted root hits a zero");
    out.push_back(poly_eval(lam, w) / lamDown + z2 * poly_eval(qp, h * w) / qpDown);
  }
  return out;
}

// Rank-one instance carrying a chain Bethe solution: Qp(u) = prod(u - h v_i),
// Lambda(u) = prod(u - a_i), twist zeta^{-1} h^{(n-2k)/4}.
inline QQInstance sl2_from_chain(const ChainSpec& s, const std::vector<cplx>& roots,
                                 bool fill_minus = true) {
  validate_chain(s);
  cplx hq = quarter_root(s.hbar);
  std::vector<cplx> shifted;
  for (cplx v : roots) shifted.push_back(s.hbar * v);
  Poly qp = poly_from_roots(shifted);
  Poly lam = poly_from_roots(s.a);
  int k = static_cast<int>(roots.size());
  cplx zqq = pow_int(hq, s.n - 2 * k) / s.zeta;
  QQInstance inst = make_qq_instance(sl_cartan(1), {lam}, {zqq}, {qp});
  if (fill_minus) inst = solve_qminus(inst, s.hbar);
  return inst;
}

// Expected leading coefficient of the rank-one minus-polynomial at magnon
// number k: 1 / (zeta h^k - zeta^{-1} h^{n-k}).
inline cplx sl2_qminus_leading(const ChainSpec& s, int k) {
  cplx hq = quarter_root(s.hbar);
  cplx zqq = pow_int(hq, s.n - 2 * k) / s.zeta;
  return cplx(1.0) / (zqq * pow_int(s.hbar, k) -
                      pow_int(s.hbar, s.n - k) / zqq);
}

// ---------------------------------------------------------------------------
// Miura connections
// ---------------------------------------------------------------------------

struct MiuraConnection {
  QQInstance inst;
  cplx h{0.0, 0.0};

  int size() const { return inst.cartan.r + 1; }

  cplx g(int node, cplx u) const {
    const Poly& qp = inst.qplus[static_cast<size_t>(node - 1)];
    cplx den = poly_eval(qp, u);
    double scale = 0.0;
    for (cplx c : qp) scale = std::max(scale, std::abs(c));
    if (std::abs(den) < 1e-12 * std::max(scale, 1e-30))
      throw PoleAtEvaluation("miura connection: evaluation at a plus-root");
    return inst.zeta[static_cast<size_t>(node - 1)] * poly_eval(qp, h * u) / den;
  }

  Matrix eval(cplx u) const {
    int N = size();
    Matrix A = Matrix::Identity(N, N);
    for (int node : inst.cartan.ordering) {
      cplx gv = g(node, u);
      if (std::abs(gv) < 1e-300)
        throw PoleAtEvaluation("miura connection: vanishing Cartan factor");
      cplx beta = poly_eval(inst.lambda[static_cast<size_t>(node - 1)], u) / gv;
      Matrix G = Matrix::Identity(N, N);
      G(node - 1, node - 1) = gv;
      G(node, node) = cplx(1.0) / gv;
      Matrix E = Matrix::Identity(N, N);
      E(node - 1, node) = beta;
      A = A * G * E;
    }
    return A;
  }
};

inline MiuraConnection miura_connection(const QQInstance& inst, cplx h) {
  if (inst.cartan.r > 4)
    throw InvariantViolation("miura_connection: rank capped at 4");
  return MiuraConnection{inst, h};
}

using MatrixEvaluator = std::function<Matrix(cplx)>;

// Max over sample points of |A(u) - v(h u) Z v(u)^{-1}| / |A(u)|.
inline double z_twist_verify(const MatrixEvaluator& A, const Matrix& Z,
                             const MatrixEvaluator& v, cplx h, Rng& rng,
                             int samples = 20) {
  double worst = 0.0;
  for (int t = 0; t < samples; ++t) {
    cplx u = rng.annulus(0.5, 2.0);
    Matrix vu = v(u);
    Eigen::FullPivLU<Matrix> lu(vu);
    if (!lu.isInvertible())
      throw SingularGauge("z_twist_verify: gauge matrix singular at sample point");
    Matrix lhs = A(u);
    Matrix rhs = v(h * u) * Z * lu.inverse();
    worst = std::max(worst, (lhs - rhs).norm() / std::max(lhs.norm(), 1e-30));
  }
  return worst;
}

inline Matrix wedge_square(const Matrix& M) {
  int N = static_cast<int>(M.rows());
  std::vector<std::pair<int, int>> idx;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) idx.push_back({i, j});
  Matrix W(idx.size(), idx.size());
  for (size_t I = 0; I < idx.size(); ++I)
    for (size_t J = 0; J < idx.size(); ++J)
      W(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J)) =
          M(idx[I].first, idx[J].first) * M(idx[I].second, idx[J].second) -
          M(idx[I].first, idx[J].second) * M(idx[I].second, idx[J].first);
  return W;
}

// 2x2 flag block of the connection at the given node: node 1 is the top-left
// block of A, node 2 the top-left block of the wedge square.
inline MatrixEvaluator miura_block(const MiuraConnection& conn, int node) {
  if (conn.inst.cartan.r == 1 || node == 1)
    return [conn](cplx u) { return Matrix(conn.eval(u).topLeftCorner(2, 2)); };
  if (node == 2)
    return [conn](cplx u) {
      return Matrix(wedge_square(conn.eval(u)).topLeftCorner(2, 2));
    };
  throw InvariantViolation("miura_block: flag blocks implemented for nodes 1, 2");
}

// Gauge candidate built from the node's own QQ data; the companion node j is
// the other member of the two-node flag.
inline MatrixEvaluator block_gauge(const QQInstance& inst, int node) {
  int r = inst.cartan.r;
  int other = (r == 1) ? node : ((node == 1) ? 2 : 1);
  Poly qpi = inst.qplus[static_cast<size_t>(node - 1)];
  Poly qmi = inst.qminus[static_cast<size_t>(node - 1)];
  Poly qpj = (r == 1) ? Poly{cplx(1)} : inst.qplus[static_cast<size_t>(other - 1)];
  return [qpi, qmi, qpj](cplx u) {
    cplx pi = poly_eval(qpi, u);
    if (std::abs(pi) < 1e-300)
      throw SingularGauge("block_gauge: evaluation at a plus-root");
    Matrix v(2, 2);
    v(0, 0) = pi;
    v(0, 1) = -poly_eval(qmi, u);
    v(1, 0) = cplx(0);
    v(1, 1) = poly_eval(qpj, u) / pi;
    return v;
  };
}

inline Matrix block_twist(const QQInstance& inst, int node) {
  Matrix Z = Matrix::Zero(2, 2);
  if (inst.cartan.r == 1) {
    Z(0, 0) = inst.zeta[0];
    Z(1, 1) = cplx(1.0) / inst.zeta[0];
    return Z;
  }
  cplx z1 = inst.zeta[0], z2 = inst.zeta[1];
  if (node == 1) {
    Z(0, 0) = z1;
    Z(1, 1) = z2 / z1;
  } else {
    Z(0, 0) = z2;
    Z(1, 1) = z1 / z2;
  }
  return Z;
}

// ---------------------------------------------------------------------------
// Backlund transformation
// ---------------------------------------------------------------------------

// mu_i(u) = prod_{j adjacent} Qp_j(u)^{-a_ji} / (Qp_i(u) Qm_i(u)).
inline cplx backlund_mu(const QQInstance& inst, int node, cplx u) {
  int r = inst.cartan.r;
  int i = node - 1;
  cplx num(1.0, 0.0);
  for (int j = 0; j < r; ++j) {
    if (j == i) continue;
    int power = -inst.cartan.a[static_cast<size_t>(j)][static_cast<size_t>(i)];
    for (int m = 0; m < power; ++m)
      num *= poly_eval(inst.qplus[static_cast<size_t>(j)], u);
  }
  cplx den = poly_eval(inst.qplus[static_cast<size_t>(i)], u) *
             poly_eval(inst.qminus[static_cast<size_t>(i)], u);
  if (std::abs(den) < 1e-300)
    throw PoleAtEvaluation("backlund: evaluation at a plus- or minus-root");
  return num / den;
}

inline MatrixEvaluator backlund(const MiuraConnection& conn, int node) {
  MiuraConnection base = conn;
  return [base, node](cplx u) {
    int N = base.size();
    Matrix F = Matrix::Zero(N, N);
    F(node, node - 1) = cplx(1);
    Matrix left = Matrix::Identity(N, N) + backlund_mu(base.inst, node, base.h * u) * F;
    Matrix right = Matrix::Identity(N, N) - backlund_mu(base.inst, node, u) * F;
    return Matrix(left * base.eval(u) * right);
  };
}

// Companion connection with Qp_i <-> Qm_i and the node twist sent to its
// simple-reflection image zeta_{i-1} zeta_{i+1} / zeta_i (boundary twists 1).
inline MiuraConnection backlund_swapped(const MiuraConnection& conn, int node) {
  QQInstance swapped = conn.inst;
  std::swap(swapped.qplus[static_cast<size_t>(node - 1)],
            swapped.qminus[static_cast<size_t>(node - 1)]);
  int r = conn.inst.cartan.r;
  cplx below = (node - 2 >= 0) ? conn.inst.zeta[static_cast<size_t>(node - 2)]
                               : cplx(1);
  cplx above = (node < r) ? conn.inst.zeta[static_cast<size_t>(node)] : cplx(1);
  swapped.zeta[static_cast<size_t>(node - 1)] =
      below * above / conn.inst.zeta[static_cast<size_t>(node - 1)];
  TwistMonomials tw = xi_factors(swapped.zeta, swapped.cartan);
  swapped.xi = tw.xi;
  swapped.xit = tw.xit;
  return MiuraConnection{swapped, conn.h};
}

inline double backlund_residual(const MiuraConnection& conn, int node, Rng& rng,
                                int samples = 20) {
  MatrixEvaluator gauge = backlund(conn, node);
  MiuraConnection swapped = backlund_swapped(conn, node);
  double worst = 0.0;
  for (int t = 0; t < samples; ++t) {
    cplx u = rng.annulus(0.5, 2.0);
    Matrix lhs = gauge(u);
    Matrix rhs = swapped.eval(u);
    worst = std::max(worst, (lhs - rhs).norm() / std::max(lhs.norm(), 1e-30));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Quantum Wronskians of flag sections
// ---------------------------------------------------------------------------

struct WronskianData {
  int rank = 1;
  std::vector<Poly> s;
  std::vector<cplx> xi;
  Poly lambda1;
  std::vector<Poly> lambda_tower;
  std::vector<cplx> c;
  std::vector<cplx> p;
};

// D_k(u): determinant with identity columns e_1..e_{rank-k} followed by the
// section columns xi_i^{k-1-m} s_i(h^m u), m = 0..k-1, interpolated from
// evaluations on a circle.
inline Poly quantum_wronskian(const WronskianData& data, int k, cplx h) {
  int N = data.rank;
  if (k < 0 || k > N)
    throw IndexOutOfRange("quantum_wronskian: level out of range");
  if (k == 0) return Poly{cplx(1)};
  if (static_cast<int>(data.s.size()) != N ||
      static_cast<int>(data.xi.size()) != N)
    throw InvariantViolation("quantum_wronskian: expected rank sections and twists");
  int maxdeg = 0;
  for (const Poly& sec : data.s) maxdeg = std::max(maxdeg, poly_degree(sec));
  int count = k * maxdeg + 1;
  std::vector<cplx> nodes, vals;
  for (int t = 0; t < count; ++t) {
    cplx u = cplx(1.45) * std::exp(cplx(0.0, 2.0 * M_PI * t / count));
    Matrix M = Matrix::Zero(N, N);
    for (int col = 0; col < N - k; ++col) M(col, col) = cplx(1);
    for (int m = 0; m < k; ++m)
      for (int i = 0; i < N; ++i)
        M(i, N - k + m) = pow_int(data.xi[static_cast<size_t>(i)], k - 1 - m) *
                          poly_eval(data.s[static_cast<size_t>(i)], pow_int(h, m) * u);
    nodes.push_back(u);
    vals.push_back(M.determinant());
  }
  Matrix V(count, count);
  Vector b(count);
  for (int row = 0; row < count; ++row) {
    cplx up(1);
    for (int colm = 0; colm < count; ++colm) {
      V(row, colm) = up;
      up *= nodes[static_cast<size_t>(row)];
    }
    b(row) = vals[static_cast<size_t>(row)];
  }
  Vector coef = V.colPivHouseholderQr().solve(b);
  Poly out(coef.data(), coef.data() + coef.size());
  return poly_trim(out);
}

// Factor D_k = alpha_k W_k V_k with monic V_k, where W_k collects shifted
// Drinfeld-polynomial products; several shift arrangements are attempted and
// the one dividing exactly wins.
struct ExtractedSection {
  cplx alpha;
  Poly v;
};

inline ExtractedSection extract_vk(const WronskianData& data, int k, cplx h) {
  int N = data.rank;
  int r = N - 1;
  if (k < 0 || k > N)
    throw IndexOutOfRange("extract_vk: level out of range");
  if (k == 0) return ExtractedSection{cplx(1), Poly{cplx(1)}};
  std::vector<Poly> tower = data.lambda_tower;
  if (tower.empty()) {
    tower.assign(static_cast<size_t>(std::max(r, 1)), Poly{cplx(1)});
    tower[0] = data.lambda1;
  }
  Poly dk = quantum_wronskian(data, k, h);
  auto tower_at = [&](int index) -> Poly {
    if (index < 1 || index > static_cast<int>(tower.size())) return Poly{cplx(1)};
    return tower[static_cast<size_t>(index - 1)];
  };
  for (int variant = 0; variant < 4; ++variant) {
    Poly w{cplx(1)};
    for (int i = 1; i <= k; ++i) {
      int low = (variant < 2) ? (r - i + 2) : (r - i + 1);
      Poly pi{cplx(1)};
      for (int m = low; m <= r; ++m) pi = poly_mul(pi, tower_at(m));
      cplx shift = (variant % 2 == 0) ? pow_int(h, k - i) : pow_int(h, i - 1);
      w = poly_mul(w, poly_dilate(pi, shift));
    }
    try {
      Poly quotient = poly_divide_exact(dk, w, 1e-9);
      Poly monicv = poly_monic(quotient);
      cplx alpha = quotient[quotient.size() - 1];
      return ExtractedSection{alpha, monicv};
    } catch (const InexactDivision&) {
    }
  }
  throw InexactDivision(
      "extract_vk: no shifted product arrangement divides the determinant");
}

// ---------------------------------------------------------------------------
// Degree-one flag sections and the tRS side
// ---------------------------------------------------------------------------

// Determinant D_rank for all-degree-one sections s_i = c_i (u - p_i).
namespace detail {

inline cplx sections_determinant(const std::vector<cplx>& c,
                                 const std::vector<cplx>& p,
                                 const std::vector<cplx>& xi, cplx h, cplx u) {
  int N = static_cast<int>(c.size());
  Matrix M(N, N);
  for (int i = 0; i < N; ++i)
    for (int m = 0; m < N; ++m)
      M(i, m) = pow_int(xi[static_cast<size_t>(i)], N - 1 - m) *
                c[static_cast<size_t>(i)] * (pow_int(h, m) * u - p[static_cast<size_t>(i)]);
  return M.determinant();
}

}  // namespace detail

// Newton solve of D_rank(s)(u) = prod(u - a_i) for degree-one sections
// s_i = c_i (u - p_i), with the scale gauge c = (C, 1, ..., 1).
inline WronskianData solve_flag_sections(int r, const std::vector<cplx>& a,
                                         const std::vector<cplx>& xi, cplx h,
                                         std::uint64_t seed = 4242) {
  int N = r + 1;
  if (static_cast<int>(a.size()) != N || static_cast<int>(xi.size()) != N)
    throw InvariantViolation("solve_flag_sections: expected r+1 values");
  WronskianData data;
  data.rank = N;
  data.xi = xi;
  data.lambda1 = poly_from_roots(a);
  if (N == 1) {
    data.c = {cplx(1)};
    data.p = {a[0]};
    data.s = {Poly{-a[0], cplx(1)}};
    return data;
  }
  std::vector<cplx> nodes;
  for (int t = 0; t <= N; ++t)
    nodes.push_back(cplx(1.3) * std::exp(cplx(0.0, 2.0 * M_PI * t / (N + 1))));
  std::vector<cplx> target;
  for (cplx u : nodes) target.push_back(poly_eval(data.lambda1, u));
  auto F = [&](const Vector& x) {
    std::vector<cplx> p(x.data(), x.data() + N);
    std::vector<cplx> c(static_cast<size_t>(N), cplx(1));
    c[0] = x(N);
    Vector out(N + 1);
    for (int t = 0; t <= N; ++t)
      out(t) = detail::sections_determinant(c, p, xi, h, nodes[static_cast<size_t>(t)]) -
               target[static_cast<size_t>(t)];
    return out;
  };
  Rng rng(seed);
  for (int attempt = 0; attempt < 20; ++attempt) {
    Vector x(N + 1);
    for (int i = 0; i <= N; ++i) x(i) = rng.annulus(0.5, 2.0);
    for (int it = 0; it < 100; ++it) {
      Vector f = F(x);
      Matrix J(N + 1, N + 1);
      for (int j = 0; j <= N; ++j) {
        Vector xp = x;
        xp(j) += cplx(1e-7);
        J.col(j) = (F(xp) - f) / cplx(1e-7);
      }
      Eigen::PartialPivLU<Matrix> lu(J);
      Vector step = lu.solve(f);
      x -= step;
      if (step.cwiseAbs().maxCoeff() > 1e6) break;
    }
    if (F(x).cwiseAbs().maxCoeff() < 1e-10) {
      data.p.assign(x.data(), x.data() + N);
      data.c.assign(static_cast<size_t>(N), cplx(1));
      data.c[0] = x(N);
      for (int i = 0; i < N; ++i)
        data.s.push_back(Poly{-data.c[static_cast<size_t>(i)] * data.p[static_cast<size_t>(i)],
                              data.c[static_cast<size_t>(i)]});
      return data;
    }
  }
  throw NewtonDiverged("solve_flag_sections: no solution after 20 restarts");
}

struct TRSData {
  std::vector<cplx> xi;
  std::vector<cplx> p;
  cplx h{0.0, 0.0};
};

inline TRSData sections_to_trs(const WronskianData& data, cplx h) {
  if (data.p.empty())
    throw InvariantViolation("sections_to_trs: degree-one section data required");
  return TRSData{data.xi, data.p, h};
}

enum class TrsKernel { Standard, Flipped, Balanced };

// H_k = sum over |J| = k of prod_{i in J, j not in J} kernel(xi_i, xi_j)
// times prod_{m in J} p_m.  Standard kernel (xi_i - h xi_j)/(xi_i - xi_j);
// Flipped puts h on the first slot; Balanced splits it across both.
inline cplx trs_hamiltonian(const TRSData& data, int k,
                            TrsKernel kernel = TrsKernel::Standard) {
  int n = static_cast<int>(data.xi.size());
  if (k < 1 || k > n) throw IndexOutOfRange("trs_hamiltonian: level out of range");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double scale = std::max(std::abs(data.xi[static_cast<size_t>(i)]),
                              std::abs(data.xi[static_cast<size_t>(j)]));
      if (std::abs(data.xi[static_cast<size_t>(i)] - data.xi[static_cast<size_t>(j)]) <
          1e-12 * std::max(scale, 1e-30))
        throw CoincidentCoordinates("trs_hamiltonian: coordinates coincide");
    }
  cplx hq = quarter_root(data.h);
  cplx hs = hq * hq;
  cplx out(0);
  for (const std::vector<int>& J : subsets_of_size(n, k)) {
    std::vector<char> in(static_cast<size_t>(n), 0);
    for (int i : J) in[static_cast<size_t>(i)] = 1;
    cplx term(1);
    for (int i : J)
      for (int j = 0; j < n; ++j) {
        if (in[static_cast<size_t>(j)]) continue;
        cplx xi_i = data.xi[static_cast<size_t>(i)];
        cplx xi_j = data.xi[static_cast<size_t>(j)];
        cplx num;
        switch (kernel) {
          case TrsKernel::Standard:
            num = xi_i - data.h * xi_j;
            break;
          case TrsKernel::Flipped:
            num = data.h * xi_i - xi_j;
            break;
          case TrsKernel::Balanced:
            num = hs * xi_i - xi_j / hs;
            break;
        }
        term *= num / (xi_i - xi_j);
      }
    for (int i : J) term *= data.p[static_cast<size_t>(i)];
    out += term;
  }
  return out;
}

// Momentum dressings that realize the elementary-symmetric laws exactly:
// the standard kernel needs P_i = h^{-(n-1)} g_i p_i with
// g_i = prod_{j != i} (h xi_i - xi_j)/(xi_i - h xi_j); the balanced kernel
// needs only P_i = h^{-(n-1)/2} p_i.
inline TRSData trs_momentum_bridge(const TRSData& data) {
  int n = static_cast<int>(data.xi.size());
  TRSData out = data;
  for (int i = 0; i < n; ++i) {
    cplx gi(1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      gi *= (data.h * data.xi[static_cast<size_t>(i)] - data.xi[static_cast<size_t>(j)]) /
            (data.xi[static_cast<size_t>(i)] - data.h * data.xi[static_cast<size_t>(j)]);
    }
    out.p[static_cast<size_t>(i)] =
        pow_int(data.h, -(n - 1)) * gi * data.p[static_cast<size_t>(i)];
  }
  return out;
}

inline TRSData trs_momentum_bridge_balanced(const TRSData& data) {
  int n = static_cast<int>(data.xi.size());
  cplx hq = quarter_root(data.h);
  cplx hs = hq * hq;
  TRSData out = data;
  for (int i = 0; i < n; ++i)
    out.p[static_cast<size_t>(i)] = pow_int(hs, -(n - 1)) * data.p[static_cast<size_t>(i)];
  return out;
}

inline std::vector<cplx> lagrangian_residual(const TRSData& data,
                                             const std::vector<cplx>& a) {
  if (a.size() != data.xi.size())
    throw InvariantViolation("lagrangian_residual: length mismatch");
  int n = static_cast<int>(a.size());
  std::vector<cplx> out;
  for (int k = 1; k <= n; ++k)
    out.push_back(trs_hamiltonian(data, k) - elementary_symmetric(a, k));
  return out;
}

// Rank-one chain instances as degree-one Wronskian data: sections (Qm, Qp),
// twist diagonal (zeta, 1/zeta).
inline WronskianData wronskian_from_sl2(const QQInstance& inst) {
  if (inst.cartan.r != 1)
    throw InvariantViolation("wronskian_from_sl2: rank-one instances only");
  WronskianData data;
  data.rank = 2;
  data.s = {inst.qminus[0], inst.qplus[0]};
  data.xi = {inst.zeta[0], cplx(1.0) / inst.zeta[0]};
  data.lambda1 = inst.lambda[0];
  data.lambda_tower = {inst.lambda[0]};
  if (poly_degree(inst.qminus[0]) == 1 && poly_degree(inst.qplus[0]) == 1) {
    cplx cm = inst.qminus[0][1];
    cplx cp = inst.qplus[0][1];
    data.c = {cm, cp};
    data.p = {-inst.qminus[0][0] / cm, -inst.qplus[0][0] / cp};
  }
  return data;
}

// Full-flag QQ instance from degree-one sections: plus-polynomials are the
// monic Wronskians Qp_i = V_{rank-i}, twists accumulate the xi diagonal.
inline QQInstance qq_from_flag_sections(const WronskianData& data, cplx h) {
  int N = data.rank;
  int r = N - 1;
  if (r < 1)
    throw InvariantViolation("qq_from_flag_sections: rank must exceed one");
  std::vector<Poly> qplus(static_cast<size_t>(r));
  for (int node = 1; node <= r; ++node)
    qplus[static_cast<size_t>(node - 1)] =
        poly_monic(quantum_wronskian(data, N - node, h));
  std::vector<cplx> zeta(static_cast<size_t>(r));
  cplx acc(1);
  for (int i = 0; i < r; ++i) {
    acc *= data.xi[static_cast<size_t>(i)];
    zeta[static_cast<size_t>(i)] = acc;
  }
  std::vector<Poly> lambda(static_cast<size_t>(r), Poly{cplx(1)});
  lambda[0] = data.lambda1;
  QQInstance inst = make_qq_instance(sl_cartan(r), lambda, zeta, qplus);
  return solve_qminus(inst, h);
}

}  // namespace bethegeom
