#include <gtest/gtest.h>

#include <algorithm>
#include <complex>
#include <vector>

#include "bethegeom/numerics.hpp"
#include "bethegeom/random.hpp"
#include "bethegeom/spinchain.hpp"

using namespace bethegeom;

namespace {

// Degree-n companion solve of the one-magnon equations: roots of
// hs^n prod(v - a_j / hbar) - zeta^{-2} prod(v - a_j).
std::vector<cplx> one_magnon_roots(const ChainSpec& s) {
  cplx hs = quarter_root(s.hbar) * quarter_root(s.hbar);
  Poly lhs{cplx(1)}, rhs{cplx(1)};
  for (const cplx& ai : s.a) {
    lhs = poly_mul(lhs, Poly{-ai / s.hbar, cplx(1)});
    rhs = poly_mul(rhs, Poly{-ai, cplx(1)});
  }
  lhs = poly_scale(lhs, pow_int(hs, s.n));
  rhs = poly_scale(rhs, cplx(1) / (s.zeta * s.zeta));
  return poly_roots(poly_sub(lhs, rhs));
}

ChainSpec fixed_chain_n2() {
  ChainSpec s;
  s.n = 2;
  s.a = {cplx(1.0, 0.3), cplx(-1.2, 0.5)};
  s.hbar = cplx(0.55, -0.2);
  s.zeta = cplx(1.3, 0.4);
  validate_chain(s);
  return s;
}

ChainSpec fixed_chain_n3() {
  ChainSpec s;
  s.n = 3;
  s.a = {cplx(1.1, 0.2), cplx(-0.9, 0.8), cplx(0.3, -1.2)};
  s.hbar = cplx(0.6, 0.15);
  s.zeta = cplx(0.8, -0.7);
  validate_chain(s);
  return s;
}

TEST(ChainSpecValidation, RejectsDegenerateData) {
  ChainSpec s = fixed_chain_n2();
  EXPECT_NO_THROW(validate_chain(s));
  ChainSpec bad = s;
  bad.a[1] = bad.a[0];
  EXPECT_THROW(validate_chain(bad), InvariantViolation);
  bad = s;
  bad.hbar = cplx(1.0, 0.0);
  EXPECT_THROW(validate_chain(bad), InvariantViolation);
  bad = s;
  bad.zeta = cplx(-1.0, 0.0);
  EXPECT_THROW(validate_chain(bad), InvariantViolation);
  bad = s;
  bad.a[0] = cplx(0.0, 0.0);
  EXPECT_THROW(validate_chain(bad), InvariantViolation);
}

TEST(EvaluationModule, CommutatorReproducesWeightBracket) {
  Rng rng(21);
  for (int m = 1; m <= 4; ++m) {
    cplx hbar = rng.annulus(0.3, 0.7);
    SiteRep rep = evaluation_module(m, hbar);
    cplx hs = quarter_root(hbar) * quarter_root(hbar);
    Matrix comm = rep.E * rep.F - rep.F * rep.E;
    for (int k = 0; k <= m; ++k) {
      cplx want = weight_bracket(m - 2 * k, hs);
      if (m - 2 * k < 0) want = -weight_bracket(2 * k - m, hs);
      EXPECT_LT(std::abs(comm(k, k) - want), 1e-12);
    }
    double off = (comm - Matrix(comm.diagonal().asDiagonal())).norm();
    EXPECT_LT(off, 1e-12);
  }
  EXPECT_THROW(evaluation_module(0, cplx(0.5, 0.1)), InvalidWeight);
}

TEST(EvaluationModule, SpinOneRaisingMatchesHandValue) {
  cplx hbar(0.45, 0.2);
  SiteRep rep = evaluation_module(2, hbar);
  cplx hs = quarter_root(hbar) * quarter_root(hbar);
  EXPECT_LT(std::abs(rep.E(0, 1) - (hs + cplx(1) / hs)), 1e-13);
}

TEST(LOperator, ScalarAtUnitHbarAndZeroArgumentThrows) {
  SiteRep fund = fundamental_rep(cplx(1.0, 0.0));
  cplx x(1.7, 0.4);
  LOperator L = l_operator(fund, x, cplx(1.0, 0.0));
  cplx want = cplx(1) - cplx(1) / x;
  EXPECT_LT(std::abs(L.A(0, 0) - want), 1e-14);
  EXPECT_LT(std::abs(L.A(1, 1) - want), 1e-14);
  EXPECT_LT(std::abs(L.D(0, 0) - want), 1e-14);
  EXPECT_LT(std::abs(L.D(1, 1) - want), 1e-14);
  EXPECT_LT(L.B.norm() + L.C.norm(), 1e-14);
  EXPECT_THROW(l_operator(fund, cplx(0), cplx(0.5, 0.1)), ZeroSpectralParameter);
}

TEST(Monodromy, SingleSiteMatchesDirectProduct) {
  ChainSpec s;
  s.n = 1;
  s.a = {cplx(0.9, -0.4)};
  s.hbar = cplx(0.5, 0.2);
  s.zeta = cplx(1.4, 0.3);
  validate_chain(s);
  cplx u(1.3, 0.7);
  Monodromy M = monodromy(s, u);
  SiteRep fund = fundamental_rep(s.hbar);
  LOperator L = l_operator(fund, u / s.a[0], s.hbar);
  EXPECT_LT((M.A - Matrix(L.A * s.zeta)).norm(), 1e-13);
  EXPECT_LT((M.B - Matrix(L.B / s.zeta)).norm(), 1e-13);
  EXPECT_LT((M.C - Matrix(L.C * s.zeta)).norm(), 1e-13);
  EXPECT_LT((M.D - Matrix(L.D / s.zeta)).norm(), 1e-13);
  EXPECT_THROW(monodromy(s, cplx(0)), SpectralParameterAtPole);
}

TEST(Monodromy, VacuumIsEigenvectorOfDiagonalEntries) {
  Rng rng(22);
  for (int n = 1; n <= 3; ++n) {
    ChainSpec s = sample_chain(rng, n);
    for (int rep = 0; rep < 3; ++rep) {
      cplx u = rng.annulus(0.7, 1.8);
      Monodromy M = monodromy(s, u);
      Vector omega = Vector::Zero(1 << n);
      omega(0) = cplx(1);
      Vector av = M.A * omega;
      Vector dv = M.D * omega;
      Vector cv = M.C * omega;
      EXPECT_LT((av - vacuum_alpha(s, u) * omega).norm(), 1e-12 * std::abs(vacuum_alpha(s, u)) + 1e-13);
      EXPECT_LT((dv - vacuum_delta(s, u) * omega).norm(), 1e-12 * std::abs(vacuum_delta(s, u)) + 1e-13);
      EXPECT_LT(cv.norm(), 1e-13);
    }
  }
}

TEST(Transfer, FamilyCommutesAndConservesWeight) {
  Rng rng(23);
  for (int n = 2; n <= 4; ++n) {
    for (int draw = 0; draw < 3; ++draw) {
      ChainSpec s = sample_chain(rng, n);
      cplx u1 = rng.annulus(0.7, 1.9);
      cplx u2 = rng.annulus(0.7, 1.9);
      Matrix t1 = transfer(s, u1);
      Matrix t2 = transfer(s, u2);
      EXPECT_LT(rel_commutator_norm(t1, t2), 1e-12);
      EXPECT_LT(off_block_norm(t1, n), 1e-13 * std::max(1.0, t1.norm()));
    }
  }
}

TEST(BetheVector, WeightSupportAndOrderInvariance) {
  ChainSpec s = fixed_chain_n3();
  std::vector<cplx> roots{cplx(0.8, 0.3), cplx(-0.5, 0.9)};
  Vector psi = bethe_vector(s, roots);
  for (int st = 0; st < (1 << s.n); ++st)
    if (std::popcount(static_cast<unsigned>(st)) != 2)
      EXPECT_LT(std::abs(psi(st)), 1e-12 * psi.norm());
  std::vector<cplx> swapped{roots[1], roots[0]};
  Vector psi2 = bethe_vector(s, swapped);
  EXPECT_LT((psi - psi2).norm(), 1e-10 * psi.norm());
  EXPECT_THROW(bethe_vector(s, {cplx(0)}), RootAtPole);
  EXPECT_THROW(bethe_vector(s, {cplx(0.5, 0.5), cplx(0.5, 0.5)}), CoincidentRoots);
}

TEST(TransferEigenvalue, OneMagnonEigenpairsAndPoleCancellation) {
  Rng rng(24);
  for (int n = 2; n <= 4; ++n) {
    ChainSpec s = sample_chain(rng, n);
    std::vector<cplx> roots = one_magnon_roots(s);
    ASSERT_EQ(static_cast<int>(roots.size()), n);
    for (const cplx& v : roots) {
      Vector psi = bethe_vector(s, {v});
      double pnorm = psi.norm();
      ASSERT_GT(pnorm, 1e-12);
      for (int draw = 0; draw < 3; ++draw) {
        cplx u = rng.annulus(0.6, 2.1);
        cplx lam = transfer_eigenvalue(s, u, {v});
        Vector res = transfer(s, u) * psi - lam * psi;
        EXPECT_LT(res.norm() / (std::abs(lam) * pnorm + 1e-30), 1e-10);
      }
      cplx up = v * (1.0 + 1e-5);
      cplx dn = v * (1.0 - 1e-5);
      cplx a = transfer_eigenvalue(s, up, {v});
      cplx b = transfer_eigenvalue(s, dn, {v});
      EXPECT_LT(std::abs(a - b), 1e-3 * std::max(1.0, std::abs(a)));
      EXPECT_THROW(transfer_eigenvalue(s, v, {v}), EvaluationAtRoot);
    }
  }
}

TEST(RMatrix, NormalizationIdentityAndYangBaxter) {
  Rng rng(25);
  for (int trial = 0; trial < 25; ++trial) {
    cplx h = rng.annulus(0.3, 0.7);
    cplx x = rng.annulus(0.5, 1.8);
    cplx y = rng.annulus(0.5, 1.8);
    Eigen::Matrix4cd R = r_matrix(x, h);
    EXPECT_LT(std::abs(R(0, 0) - cplx(1)), 1e-14);
    for (int j = 1; j < 4; ++j) EXPECT_LT(std::abs(R(0, j)), 1e-14);

    Matrix r12 = embed_pair(r_matrix(x, h), 1, 2, 3);
    Matrix r13 = embed_pair(r_matrix(x * y, h), 1, 3, 3);
    Matrix r23 = embed_pair(r_matrix(y, h), 2, 3, 3);
    Matrix lhs = r12 * r13 * r23;
    Matrix rhs = r23 * r13 * r12;
    EXPECT_LT((lhs - rhs).norm() / std::max(lhs.norm(), 1e-30), 1e-12);
  }
  cplx h(0.5, 0.1);
  EXPECT_THROW(r_matrix(cplx(1) / h, h), ResonantRatio);
}

TEST(QkzOperators, SingleSiteIsTwistAndUnitShiftCommutes) {
  ChainSpec s1;
  s1.n = 1;
  s1.a = {cplx(1.1, 0.2)};
  s1.hbar = cplx(0.55, -0.2);
  s1.zeta = cplx(1.3, 0.4);
  validate_chain(s1);
  Matrix h1 = qkz_operator(s1, 1, cplx(0.9, 0.1));
  EXPECT_LT(std::abs(h1(0, 0) - s1.zeta), 1e-13);
  EXPECT_LT(std::abs(h1(1, 1) - cplx(1) / s1.zeta), 1e-13);
  EXPECT_LT(std::abs(h1(0, 1)) + std::abs(h1(1, 0)), 1e-13);

  Rng rng(26);
  for (int n = 2; n <= 4; ++n) {
    ChainSpec s;
    std::vector<Matrix> ops;
    for (int attempt = 0; attempt < 20 && ops.empty(); ++attempt) {
      s = sample_chain(rng, n);
      try {
        std::vector<Matrix> built;
        for (int i = 1; i <= n; ++i) built.push_back(qkz_operator(s, i, cplx(1)));
        ops = built;
      } catch (const ResonantRatio&) {
      }
    }
    ASSERT_EQ(static_cast<int>(ops.size()), n);
    for (size_t i = 0; i < ops.size(); ++i)
      for (size_t j = i + 1; j < ops.size(); ++j)
        EXPECT_LT(rel_commutator_norm(ops[i], ops[j]), 1e-12);

    Matrix prod = Matrix::Identity(1 << n, 1 << n);
    for (const Matrix& op : ops) prod = prod * op;
    Eigen::ComplexEigenSolver<Matrix> es(prod);
    std::vector<cplx> got(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
    std::vector<cplx> want;
    for (int st = 0; st < (1 << n); ++st)
      want.push_back(pow_int(s.zeta, weight_of_state(n, st)));
    auto key = [](const cplx& z) {
      return std::make_pair(std::round(z.real() * 1e8), std::round(z.imag() * 1e8));
    };
    std::sort(got.begin(), got.end(),
              [&](const cplx& a, const cplx& b) { return key(a) < key(b); });
    std::sort(want.begin(), want.end(),
              [&](const cplx& a, const cplx& b) { return key(a) < key(b); });
    for (size_t i = 0; i < got.size(); ++i)
      EXPECT_LT(std::abs(got[i] - want[i]), 1e-8 * std::max(1.0, std::abs(want[i])));
  }
}

TEST(QOperatorTower, NormalizationCommutationAndOneMagnonSpectrum) {
  Rng rng(27);
  for (int n = 2; n <= 4; ++n) {
    ChainSpec s = sample_chain(rng, n);
    QOperatorTower tower = q_tower(s, +1);
    EXPECT_LT((tower.coeff[0] - Matrix::Identity(1 << n, 1 << n)).norm(), 1e-14);
    cplx u = rng.annulus(0.7, 1.6);
    Matrix T = transfer(s, u);
    for (const Matrix& Qr : tower.coeff)
      EXPECT_LT(rel_commutator_norm(Qr, T), 1e-10);

    std::vector<cplx> roots = one_magnon_roots(s);
    for (const cplx& v : roots) {
      Vector psi = bethe_vector(s, {v});
      for (int draw = 0; draw < 2; ++draw) {
        cplx x = rng.annulus(0.4, 1.2);
        Matrix Q = tower_eval(tower, x);
        cplx want = cplx(1) - x * v;
        Vector res = Q * psi - want * psi;
        EXPECT_LT(res.norm() / (psi.norm() * std::max(1.0, std::abs(want))), 1e-9);
      }
    }
  }
}

TEST(QOperatorTower, DifferenceRelationAndWronskianResiduals) {
  Rng rng(28);
  for (int n = 2; n <= 4; ++n) {
    ChainSpec s = sample_chain(rng, n);
    for (int draw = 0; draw < 2; ++draw) {
      cplx x = rng.annulus(0.4, 1.3);
      IdentityResiduals res = operator_identity_residuals(s, x);
      EXPECT_LT(res.tq_plus, 1e-10);
      EXPECT_LT(res.tq_minus, 1e-10);
      EXPECT_LT(res.wronskian, 1e-10);
    }
  }
}

// Closed form for the level-1 coefficient on a magnon block: diagonal
// dressing 1 + Bdn on e_1 of the occupied evaluation points, single-site
// hops weighted by Bdn / Bup and half-integer hbar powers.
Matrix dressed_level_one(const ChainSpec& s, int k) {
  cplx hq = quarter_root(s.hbar);
  cplx hs = hq * hq;
  cplx h = s.hbar;
  cplx z2 = s.zeta * s.zeta;
  cplx K = pow_int(hs, s.n - 2 * k);
  cplx Bdn = (h - cplx(1)) * K * z2 / (cplx(1) - h * K * z2);
  cplx Bup = (h - cplx(1)) / h / (cplx(1) - h * K * z2);
  std::vector<int> states = block_states(s.n, k);
  auto sites_of = [&](int mask) {
    std::vector<int> out;
    for (int b = 0; b < s.n; ++b)
      if (mask & (1 << b)) out.push_back(b + 1);
    return out;
  };
  Matrix out = Matrix::Zero(states.size(), states.size());
  for (size_t rT = 0; rT < states.size(); ++rT) {
    for (size_t cS = 0; cS < states.size(); ++cS) {
      int Tm = states[rT], Sm = states[cS];
      if (Tm == Sm) {
        cplx e1(0);
        for (int site : sites_of(Sm)) e1 += s.a[static_cast<size_t>(site - 1)];
        out(static_cast<Eigen::Index>(rT), static_cast<Eigen::Index>(cS)) =
            e1 * (cplx(1) + Bdn);
        continue;
      }
      int diff = Tm ^ Sm;
      if (std::popcount(static_cast<unsigned>(diff)) != 2) continue;
      int annOnly = Sm & diff, creOnly = Tm & diff;
      if (std::popcount(static_cast<unsigned>(annOnly)) != 1) continue;
      int ann = std::countr_zero(static_cast<unsigned>(annOnly)) + 1;
      int cre = std::countr_zero(static_cast<unsigned>(creOnly)) + 1;
      int lo = std::min(ann, cre), hi = std::max(ann, cre);
      int between = 0;
      for (int b = 0; b < s.n; ++b)
        if ((Sm & Tm) & (1 << b) && b + 1 > lo && b + 1 < hi) ++between;
      cplx amp = s.a[static_cast<size_t>(ann - 1)] * pow_int(hs, cre - ann) *
                 pow_int(h, (cre < ann) ? between : -between);
      out(static_cast<Eigen::Index>(rT), static_cast<Eigen::Index>(cS)) =
          ((cre < ann) ? Bdn : Bup) * amp;
    }
  }
  return out;
}

TEST(QuantumExteriorPower, LevelOneMatchesClosedFormDressing) {
  Rng rng(29);
  for (int n = 2; n <= 3; ++n) {
    ChainSpec s = sample_chain(rng, n);
    cplx signn = (n % 2 == 0) ? cplx(1) : cplx(-1);
    cplx z = signn / (s.zeta * s.zeta);
    Matrix lam1 = quantum_exterior_power(s, z, 1);
    for (int k = 0; k <= n; ++k) {
      Matrix got = weight_block(lam1, n, k);
      Matrix want = dressed_level_one(s, k);
      EXPECT_LT((got - want).norm() / (1.0 + want.norm()), 1e-10)
          << "n=" << n << " k=" << k;
    }
  }
}

TEST(QuantumExteriorPower, ClassicalLimitEigenvaluesAtSmallKahler) {
  ChainSpec s = fixed_chain_n3();
  s.zeta = cplx(700.0, 300.0);
  validate_chain(s);
  cplx signn = (s.n % 2 == 0) ? cplx(1) : cplx(-1);
  cplx z = signn / (s.zeta * s.zeta);
  for (int l = 1; l <= 2; ++l) {
    Matrix lam = quantum_exterior_power(s, z, l);
    for (int k = 0; k <= s.n; ++k) {
      Matrix blk = weight_block(lam, s.n, k);
      Eigen::ComplexEigenSolver<Matrix> es(blk);
      std::vector<cplx> got(es.eigenvalues().data(),
                            es.eigenvalues().data() + es.eigenvalues().size());
      std::vector<cplx> want;
      for (const std::vector<int>& sub : subsets_of_size(s.n, k)) {
        std::vector<cplx> vals;
        for (int p : sub) vals.push_back(s.a[static_cast<size_t>(p)] / s.hbar);
        want.push_back(elementary_symmetric(vals, l));
      }
      for (const cplx& w : want) {
        double best = 1e99;
        for (const cplx& g : got) best = std::min(best, std::abs(g - w));
        EXPECT_LT(best, 1e-4 * std::max(1.0, std::abs(w)))
            << "l=" << l << " k=" << k;
      }
    }
  }
}

TEST(QuantumExteriorPower, DictionaryMismatchAndResonanceThrow) {
  ChainSpec s = fixed_chain_n2();
  EXPECT_THROW(quantum_exterior_power(s, cplx(0.3, 0.1), 1), InvariantViolation);
  cplx signn = (s.n % 2 == 0) ? cplx(1) : cplx(-1);
  cplx z = signn / (s.zeta * s.zeta);
  EXPECT_NO_THROW(quantum_exterior_power(s, z, 1));
  EXPECT_THROW(quantum_exterior_power(s, z, 5), IndexOutOfRange);

  ChainSpec res = fixed_chain_n2();
  res.zeta = cplx(1) / res.hbar;  // zeta^2 hbar^{(n-2k)/2 + r} = 1 at k=0, r=...
  validate_chain(res);
  cplx zres = signn / (res.zeta * res.zeta);
  EXPECT_THROW(q_tower(res, +1), SingularDenominator);
}

}  // namespace
