#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cxhess/oracles.hpp"
#include "cxhess/subsolution.hpp"
#include "cxhess/trig_poly.hpp"

using namespace cxhess;

TEST(InCone, StatedValues) {
  EXPECT_TRUE(in_cone(ConeSpec::positive_orthant(3), std::vector<double>{1, 1, 1}).inside);

  const std::vector<double> boundary{2, 2, -1};
  EXPECT_DOUBLE_EQ(oracles::sigma_bruteforce(boundary, 2), 0.0);
  const auto t = in_cone(ConeSpec::garding(2, 3), boundary);
  EXPECT_FALSE(t.inside);
  EXPECT_DOUBLE_EQ(t.margin, 0.0);

  const auto half = in_cone(ConeSpec::garding(1, 3), std::vector<double>{-1, -1, 3});
  EXPECT_TRUE(half.inside);
  EXPECT_DOUBLE_EQ(half.margin, 1.0);
}

TEST(InTildeCone, StatedValues) {
  EXPECT_FALSE(in_tilde_cone(ConeSpec::positive_orthant(3), std::vector<double>{1, 1, -0.5}).inside);
  EXPECT_TRUE(in_tilde_cone(ConeSpec::garding(1, 3), std::vector<double>{-5, -5, -5}).inside);
}

TEST(InTildeCone, MatchesDyadicScan) {
  // Oracle: scan t in {2^k} with direct membership checks.
  auto scan = [](const ConeSpec& c, std::vector<double> mu) {
    for (int k = -20; k <= 40; ++k) {
      const double t = std::ldexp(1.0, k);
      bool all = true;
      for (std::size_t i = 0; i < mu.size() && all; ++i) {
        auto p = mu;
        p[i] += t;
        all = in_cone(c, p).inside;
      }
      if (all) return true;
    }
    return false;
  };
  const auto g2 = ConeSpec::garding(2, 3);
  EXPECT_EQ(in_tilde_cone(g2, std::vector<double>{1, 1, -0.9}).inside, scan(g2, {1, 1, -0.9}));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-3, 3);
  for (const auto& c : {ConeSpec::garding(2, 3), ConeSpec::garding(3, 4), ConeSpec::positive_orthant(3),
                        ConeSpec::n_minus_one_positive(3)}) {
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> mu(c.n);
      for (auto& v : mu) v = d(rng);
      EXPECT_EQ(in_tilde_cone(c, mu).inside, scan(c, mu)) << c.describe();
    }
  }
}

TEST(ConeProperties, SymmetricConvexContainsOrthantAndHalfSpace) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(-2, 4), pos(0.001, 5);
  for (const auto& c : {ConeSpec::garding(1, 3), ConeSpec::garding(2, 3), ConeSpec::garding(3, 3),
                        ConeSpec::garding(2, 4), ConeSpec::positive_orthant(4), ConeSpec::n_minus_one_positive(3)}) {
    int hits = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<double> a(c.n), b(c.n), p(c.n);
      for (auto& v : a) v = d(rng);
      for (auto& v : b) v = d(rng);
      for (auto& v : p) v = pos(rng);
      EXPECT_TRUE(in_cone(c, p).inside);
      const bool ia = in_cone(c, a).inside, ib = in_cone(c, b).inside;
      auto perm = a;
      std::shuffle(perm.begin(), perm.end(), rng);
      EXPECT_EQ(in_cone(c, perm).inside, ia);
      if (ia) {
        ++hits;
        double sum = 0;
        for (double v : a) sum += v;
        EXPECT_GT(sum, 0.0);
        EXPECT_TRUE(in_tilde_cone(c, a).inside);  // Gamma inside the Trudinger cone
      }
      if (ia && ib) {
        std::vector<double> mid(c.n);
        for (int k = 0; k < c.n; ++k) mid[k] = 0.5 * (a[k] + b[k]);
        EXPECT_TRUE(in_cone(c, mid).inside);
      }
      // Trudinger cone is a cone
      if (in_tilde_cone(c, a).inside) {
        auto scaled = a;
        const double t = pos(rng);
        for (auto& v : scaled) v *= t;
        EXPECT_TRUE(in_tilde_cone(c, scaled).inside) << c.describe();
      }
    }
    EXPECT_GT(hits, 50) << c.describe();
  }
}

namespace {

struct Fixture {
  PeriodicGrid g{3, 8};
  ScalarField zero{g, 0.0};
};

}  // namespace

TEST(Subsolution, HessianWithPositiveThetaIsAccepted) {
  PeriodicGrid g(2, 8);
  ScalarField u0(g, 0.0);
  TrigPolynomial hp{0.3, {{{1, 0, 0, 1}, 0.7, 0.2}}};
  for (int m = 1; m <= 2; ++m) {
    const auto c = subsolution_check(EigenOperator::hessian_log(2, m), HermitianFormField::identity(g), u0, hp.sample(g));
    EXPECT_TRUE(c.accepted);
    EXPECT_DOUBLE_EQ(c.sigma_0, 1.0);
  }
}

TEST(Subsolution, MongeAmpereIdentity) {
  Fixture f;
  const auto c = subsolution_check(EigenOperator::monge_ampere(3), HermitianFormField::identity(f.g), f.zero, f.zero);
  EXPECT_TRUE(c.accepted);
  EXPECT_DOUBLE_EQ(c.sigma_0, 1.0);
}

TEST(Subsolution, QuotientRejectedWithExactMargin) {
  Fixture f;
  const auto op = EigenOperator::quotient(3, 2, 1);
  // numeric-limit oracle for f_inf at mu = (1,1,1)
  std::vector<double> probe{1 + 1e6, 1, 1};
  EXPECT_NEAR(f_eval(op, probe), 2.0, 1e-5);
  const auto c = subsolution_check(op, HermitianFormField::identity(f.g), f.zero, ScalarField(f.g, 3.0));
  EXPECT_FALSE(c.accepted);
  EXPECT_NEAR(c.worst_margin, -1.0, 1e-14);
}

TEST(Subsolution, OutsideTrudingerConeReportsWitness) {
  PeriodicGrid g(2, 8);
  Eigen::MatrixXcd theta(2, 2);
  theta << 1.0, 0.0, 0.0, -1.0;
  const auto c = subsolution_check(EigenOperator::monge_ampere(2), HermitianFormField::constant(g, theta),
                                   ScalarField(g, 0.0), ScalarField(g, 0.0));
  EXPECT_FALSE(c.accepted);
  EXPECT_FALSE(c.tilde_cone_ok);
  EXPECT_TRUE(std::isinf(c.worst_margin));
}

TEST(Subsolution, MonotoneInHAndStableUnderSigma0Perturbation) {
  PeriodicGrid g(2, 8);
  const auto op = EigenOperator::quotient(2, 2, 1);
  Eigen::MatrixXcd theta(2, 2);
  theta << 2.0, cplx(0.3, 0.1), cplx(0.3, -0.1), 1.5;
  const auto th = HermitianFormField::constant(g, theta);
  TrigPolynomial usub{0.0, {{{1, 0, 0, 0}, 0.01, 0.0}, {{0, 1, 1, 0}, 0.01, 0.5}}};
  TrigPolynomial hp{0.5, {{{0, 0, 1, 1}, 0.2, 0.0}}};
  const auto u = usub.sample(g);
  const auto h = hp.sample(g);
  const auto c = subsolution_check(op, th, u, h);
  ASSERT_TRUE(c.accepted);
  EXPECT_GT(c.sigma_0, 0.0);
  EXPECT_NEAR(c.sigma_0, 0.5 * c.worst_margin, 1e-15);
  // raising h never increases the margin
  double prev = c.worst_margin;
  for (double bump : {0.05, 0.1, 0.2}) {
    const auto cb = subsolution_check(op, th, u, h + bump);
    EXPECT_LE(cb.worst_margin, prev + 1e-15);
    prev = cb.worst_margin;
  }
  EXPECT_TRUE(subsolution_check(op, th, u, h + c.sigma_0).accepted);
}

TEST(Subsolution, GridMismatch) {
  PeriodicGrid a(1, 8), b(1, 16);
  EXPECT_THROW(subsolution_check(EigenOperator::monge_ampere(1), HermitianFormField::identity(a), ScalarField(a),
                                 ScalarField(b)),
               GridMismatch);
}
