#include <gtest/gtest.h>

#include <complex>
#include <vector>

#include "bethegeom/numerics.hpp"
#include "bethegeom/random.hpp"

using namespace bethegeom;

namespace {

double rel_err(cplx got, cplx want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

TEST(QPochhammer, RecurrenceHoldsForPositiveIndex) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    cplx x = rng.annulus(0.2, 1.5);
    cplx q = rng.annulus(0.3, 0.9);
    for (long d = 0; d < 6; ++d) {
      cplx lhs = qpoch_finite(x, q, d + 1);
      cplx rhs = qpoch_finite(x, q, d) * (cplx(1) - x * pow_int(q, d));
      EXPECT_LT(rel_err(lhs, rhs), 1e-13);
    }
  }
}

TEST(QPochhammer, ReflectionRoundTrip) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    cplx x = rng.annulus(0.2, 1.5);
    cplx q = rng.annulus(0.4, 0.9);
    for (long m = 1; m <= 5; ++m) {
      cplx refl = qpoch_finite(x, q, -m);
      cplx prod(1);
      for (long i = 1; i <= m; ++i) prod *= cplx(1) - x * pow_int(q, -i);
      EXPECT_LT(std::abs(refl * prod - cplx(1)), 1e-12);
    }
  }
}

TEST(QPochhammer, SplittingIdentityAcrossSigns) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    cplx x = rng.annulus(0.2, 1.5);
    cplx q = rng.annulus(0.4, 0.9);
    for (long c = -3; c <= 3; ++c) {
      for (long d = -3; d <= 3; ++d) {
        cplx lhs = qpoch_finite(x, q, c + d);
        cplx rhs = qpoch_finite(x, q, c) * qpoch_finite(x * pow_int(q, c), q, d);
        EXPECT_LT(rel_err(lhs, rhs), 1e-12);
      }
    }
  }
}

TEST(QPochhammer, VanishingReflectedFactorThrows) {
  cplx q(0.7, 0.1);
  EXPECT_THROW(qpoch_finite(q, q, -1), DegenerateFactor);
}

TEST(BracketFunction, MultiplicativeInIndex) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    cplx x = rng.annulus(0.3, 1.8);
    cplx q = rng.annulus(0.4, 0.9);
    cplx h = rng.annulus(0.3, 0.8);
    for (long c = -3; c <= 3; ++c) {
      for (long d = -3; d <= 3; ++d) {
        cplx lhs, rhs;
        try {
          lhs = bracket_function(x, c + d, q, h);
          rhs = bracket_function(x, c, q, h) *
                bracket_function(x * pow_int(q, -c), d, q, h);
        } catch (const DegenerateFactor&) {
          continue;
        }
        EXPECT_LT(rel_err(lhs, rhs), 1e-12);
      }
    }
  }
}

TEST(BracketFunction, CollapsesToSignWhenHbarEqualsQ) {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    cplx x = rng.annulus(0.3, 1.8);
    cplx q = rng.annulus(0.4, 0.9);
    for (long d = -4; d <= 4; ++d) {
      cplx got = bracket_function(x, d, q, q);
      cplx want = (d % 2 == 0) ? cplx(1) : cplx(-1);
      EXPECT_LT(std::abs(got - want), 1e-12);
    }
  }
}

TEST(ElementarySymmetric, MatchesHandValueAndExpansion) {
  std::vector<cplx> vals{cplx(2), cplx(3), cplx(5)};
  EXPECT_LT(std::abs(elementary_symmetric(vals, 2) - cplx(31)), 1e-14);
  EXPECT_LT(std::abs(elementary_symmetric(vals, 0) - cplx(1)), 1e-14);
  EXPECT_LT(std::abs(elementary_symmetric(vals, 4)), 1e-14);
  EXPECT_THROW(elementary_symmetric(vals, -1), IndexOutOfRange);

  Rng rng(16);
  std::vector<cplx> xs;
  for (int i = 0; i < 6; ++i) xs.push_back(rng.annulus(0.5, 2.0));
  Poly prod = poly_from_roots(std::vector<cplx>(xs.size(), cplx(0)));
  prod = Poly{cplx(1)};
  for (const cplx& x : xs) prod = poly_mul(prod, Poly{cplx(1), x});
  for (int l = 0; l <= 6; ++l)
    EXPECT_LT(rel_err(prod[static_cast<size_t>(l)], elementary_symmetric(xs, l)), 1e-12);
}

TEST(PolyOps, DilateEvalRootsDivision) {
  Rng rng(17);
  std::vector<cplx> roots{rng.annulus(0.5, 2.0), rng.annulus(0.5, 2.0),
                          rng.annulus(0.5, 2.0)};
  Poly p = poly_from_roots(roots);
  cplx lambda = rng.annulus(0.5, 1.5);
  Poly pd = poly_dilate(p, lambda);
  cplx x = rng.annulus(0.5, 1.5);
  EXPECT_LT(rel_err(poly_eval(pd, x), poly_eval(p, lambda * x)), 1e-12);

  Poly factor = poly_from_roots({roots[0]});
  Poly quot = poly_divide_exact(p, factor);
  Poly rest = poly_from_roots({roots[1], roots[2]});
  for (size_t i = 0; i < rest.size(); ++i)
    EXPECT_LT(std::abs(quot[i] - rest[i]), 1e-10);

  Poly bad = poly_from_roots({roots[0] + cplx(0.5)});
  EXPECT_THROW(poly_divide_exact(p, bad), InexactDivision);

  std::vector<cplx> found = poly_roots(p);
  ASSERT_EQ(found.size(), 3u);
  for (const cplx& r : roots) {
    double best = 1e99;
    for (const cplx& f : found) best = std::min(best, std::abs(f - r));
    EXPECT_LT(best, 1e-9);
  }
}

TEST(SeriesOps, InvertMatchesHandExampleAndRoundTrips) {
  Series lin{cplx(2), cplx(1)};
  Series inv = series_invert(lin, 1);
  EXPECT_LT(std::abs(inv[0] - cplx(0.5)), 1e-15);
  EXPECT_LT(std::abs(inv[1] - cplx(-0.25)), 1e-15);

  Rng rng(18);
  Series p(7);
  for (cplx& c : p) c = rng.annulus(0.3, 1.2);
  Series q = series_invert(p, 6);
  Series one = series_mul(p, q, 6);
  EXPECT_LT(std::abs(one[0] - cplx(1)), 1e-13);
  for (size_t i = 1; i < one.size(); ++i) EXPECT_LT(std::abs(one[i]), 1e-13);

  Series zero{cplx(0), cplx(1)};
  EXPECT_THROW(series_invert(zero, 3), ZeroConstantTerm);
}

TEST(Richardson, ReconstructsLimitOfPolynomialData) {
  std::vector<double> eps;
  std::vector<cplx> vals;
  cplx target(0.7, -0.3);
  for (int j = 4; j <= 10; ++j) {
    double e = std::pow(2.0, -j);
    eps.push_back(e);
    vals.push_back(target + cplx(1.3, 0.4) * e + cplx(-0.2, 0.9) * e * e +
                   cplx(0.05, -0.02) * e * e * e);
  }
  Extrapolated ex = richardson_extrapolate(eps, vals);
  EXPECT_LT(std::abs(ex.value - target), 1e-12);
  EXPECT_LT(ex.spread, 1e-10);
  EXPECT_THROW(richardson_extrapolate({0.1}, {cplx(1)}), InsufficientSamples);
}

TEST(Combinatorics, SubsetsAndBinomial) {
  EXPECT_EQ(binomial(6, 3), 20);
  EXPECT_EQ(binomial(4, 0), 1);
  auto subs = subsets_of_size(5, 2);
  EXPECT_EQ(subs.size(), 10u);
  EXPECT_EQ(subs.front(), (std::vector<int>{0, 1}));
  EXPECT_EQ(subs.back(), (std::vector<int>{3, 4}));
  EXPECT_EQ(subsets_of_size(3, 0).size(), 1u);
}

TEST(Rng, DeterministicStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.unit(), b.unit());
  Rng c(43);
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) differs = differs || (a2.unit() != c.unit());
  EXPECT_TRUE(differs);
}

}  // namespace
