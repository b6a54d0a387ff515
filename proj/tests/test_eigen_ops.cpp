#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cxhess/eigen_ops.hpp"
#include "cxhess/oracles.hpp"

using namespace cxhess;

namespace {

// Interior sample: shift a random vector until it sits inside the cone.
std::vector<double> random_interior(const EigenOperator& op, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-2.0, 3.0);
  std::vector<double> l(op.n);
  for (auto& v : l) v = d(rng);
  while (in_cone(op.cone(), l).margin < 0.05)
    for (auto& v : l) v += 0.25;
  return l;
}

std::vector<EigenOperator> catalog() {
  return {EigenOperator::monge_ampere(3),  EigenOperator::hessian_log(3, 2), EigenOperator::hessian_root(4, 2),
          EigenOperator::quotient(3, 2, 1), EigenOperator::quotient(4, 3, 1), EigenOperator::n_minus_one(3)};
}

}  // namespace

TEST(SigmaM, StatedValues) {
  EXPECT_DOUBLE_EQ(sigma_m(std::vector<double>{1, 1, 1}, 2), 3.0);
  const std::vector<double> l{1, 2, 3};
  EXPECT_DOUBLE_EQ(oracles::sigma_bruteforce(l, 2), 11.0);
  EXPECT_DOUBLE_EQ(sigma_m(l, 2), oracles::sigma_bruteforce(l, 2));
  EXPECT_DOUBLE_EQ(sigma_m(std::vector<double>{0, 5, 7}, 3), 0.0);
}

TEST(SigmaM, RangeErrors) {
  const std::vector<double> l{1, 2};
  EXPECT_THROW(sigma_m(l, 3), DomainError);
  EXPECT_THROW(sigma_m(l, -1), DomainError);
  EXPECT_THROW(sigma_m_partial(l, 1, 2), DomainError);
  EXPECT_THROW(sigma_m_partial(l, 0, 0), DomainError);
}

TEST(SigmaM, Partials) {
  EXPECT_DOUBLE_EQ(sigma_m_partial(std::vector<double>{1, 2, 3}, 2, 0), 5.0);
  EXPECT_DOUBLE_EQ(sigma_m_partial(std::vector<double>{1, 1, 1}, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(sigma_m_partial(std::vector<double>{4, 9}, 2, 0), 9.0);
}

TEST(SigmaM, Homogeneity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-3, 3), ts(0.1, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> l(5);
    for (auto& v : l) v = d(rng);
    const double t = ts(rng);
    std::vector<double> tl(l);
    for (auto& v : tl) v *= t;
    for (int m = 1; m <= 5; ++m) {
      const double a = sigma_m(tl, m), b = std::pow(t, m) * sigma_m(l, m);
      EXPECT_NEAR(a, b, 1e-12 * (std::abs(b) + std::pow(t * 3, m)));
    }
  }
}

TEST(FEval, StatedValues) {
  EXPECT_DOUBLE_EQ(f_eval(EigenOperator::monge_ampere(3), std::vector<double>{1, 1, 1}), 0.0);
  EXPECT_NEAR(f_eval(EigenOperator::hessian_log(3, 2), std::vector<double>{1, 1, 1}), std::log(3.0), 1e-15);
  const std::vector<double> l{1, 2, 3};
  const double oracle = oracles::sigma_bruteforce(l, 2) / oracles::sigma_bruteforce(l, 1);
  EXPECT_NEAR(f_eval(EigenOperator::quotient(3, 2, 1), l), oracle, 1e-15);
  EXPECT_NEAR(oracle, 11.0 / 6.0, 1e-15);
}

TEST(FEval, ConeViolationCarriesInequality) {
  try {
    f_eval(EigenOperator::hessian_log(3, 2), std::vector<double>{2, 2, -1});
    FAIL() << "expected cone violation";
  } catch (const ConeViolation& e) {
    EXPECT_EQ(e.inequality(), "sigma_2 > 0");
  }
  EXPECT_THROW(f_eval(EigenOperator::monge_ampere(2), std::vector<double>{1, -1}), ConeViolation);
}

TEST(FEval, NMinusOneIsMongeAmpereOfTransform) {
  const auto op = EigenOperator::n_minus_one(3, 0.5);
  const std::vector<double> l{3, 1, -0.5};
  const auto mu = n_minus_one_transform(l, 0.5);
  EXPECT_NEAR(f_eval(op, l), f_eval(EigenOperator::monge_ampere(3), mu), 1e-14);
}

TEST(FGrad, StatedValues) {
  auto g = f_grad(EigenOperator::monge_ampere(2), std::vector<double>{2, 4});
  EXPECT_DOUBLE_EQ(g[0], 0.5);
  EXPECT_DOUBLE_EQ(g[1], 0.25);
  g = f_grad(EigenOperator::hessian_log(2, 1), std::vector<double>{3, 5});
  EXPECT_DOUBLE_EQ(g[0], 0.125);
  EXPECT_DOUBLE_EQ(g[1], 0.125);
  EXPECT_LE(oracles::fd_check(EigenOperator::quotient(3, 2, 1), std::vector<double>{1, 2, 3}), 1e-6);
}

TEST(FInf, StatedValues) {
  EXPECT_EQ(f_inf(EigenOperator::monge_ampere(3), std::vector<double>{1, 1, 1}, 0),
            std::numeric_limits<double>::infinity());
  EXPECT_NEAR(f_inf(EigenOperator::quotient(2, 2, 1), std::vector<double>{2, 2}, 0), 2.0, 1e-15);
  EXPECT_NEAR(f_inf(EigenOperator::quotient(3, 2, 1), std::vector<double>{1, 1, 1}, 2), 2.0, 1e-15);
}

TEST(FInf, ClosedFormMatchesNumericLimit) {
  // Richardson-style check: f(mu + t e_i) approaches the limit like 1/t.
  std::mt19937_64 rng(11);
  for (const auto& op : {EigenOperator::quotient(2, 2, 1), EigenOperator::quotient(3, 2, 1),
                         EigenOperator::quotient(4, 3, 1), EigenOperator::quotient(4, 3, 2)}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto mu = random_interior(op, rng);
      for (std::size_t i = 0; i < mu.size(); ++i) {
        std::vector<double> vals;
        for (double t : {1e2, 1e4, 1e6}) {
          auto p = mu;
          p[i] += t;
          vals.push_back(f_eval(op, p));
        }
        const double closed = f_inf(op, mu, i);
        // extrapolate the 1/t tail from the last two samples
        const double extrapolated = vals[2] + (vals[2] - vals[1]) / 99.0;
        EXPECT_NEAR(extrapolated, closed, 1e-6 * (1 + closed));
        EXPECT_LE(vals[0], vals[1] + 1e-12);
        EXPECT_LE(vals[1], vals[2] + 1e-12);
      }
    }
  }
}

TEST(FInf, OutsideTildeConeIsDomainError) {
  EXPECT_THROW(f_inf(EigenOperator::monge_ampere(3), std::vector<double>{1, 1, -0.5}, 0), DomainError);
}

TEST(MatrixDerivatives, StatedValues) {
  auto d = matrix_derivatives(EigenOperator::hessian_log(2, 1), std::vector<double>{3, 1});
  EXPECT_DOUBLE_EQ(d.first[0], 0.25);
  EXPECT_DOUBLE_EQ(d.first[1], 0.25);
  EXPECT_NEAR(d.pair(0, 1), 0.0, 1e-15);

  d = matrix_derivatives(EigenOperator::monge_ampere(2), std::vector<double>{3, 1});
  EXPECT_NEAR(d.first[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.first[1], 1.0, 1e-15);
  EXPECT_NEAR(d.pair(0, 1), -1.0 / 3.0, 1e-15);

  // limit oracle: divided differences at (2 + delta, 2 - delta)
  d = matrix_derivatives(EigenOperator::monge_ampere(2), std::vector<double>{2, 2});
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const auto g = f_grad(EigenOperator::monge_ampere(2), std::vector<double>{2 + delta, 2 - delta});
    EXPECT_NEAR((g[0] - g[1]) / (2 * delta), -0.25, 2 * delta * delta);
  }
  EXPECT_NEAR(d.pair(0, 1), -0.25, 1e-15);
}

TEST(MatrixDerivatives, PairTermMatchesFullMatrixFiniteDifference) {
  // F(A) = f(eig(A)); for A = diag(3,1) perturbed by s (E_12 + E_21), the second
  // derivative d^2F/ds^2 at s = 0 equals 2 * pair(0,1).
  const auto op = EigenOperator::monge_ampere(2);
  auto F = [&](double s) {
    Eigen::Matrix2d A;
    A << 3, s, s, 1;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
    std::vector<double> l{es.eigenvalues()[1], es.eigenvalues()[0]};
    return f_eval(op, l);
  };
  const double s = 1e-4;
  const double second = (F(s) - 2 * F(0) + F(-s)) / (s * s);
  const auto d = matrix_derivatives(op, std::vector<double>{3, 1});
  EXPECT_NEAR(second, 2 * d.pair(0, 1), 1e-6);
}

TEST(MatrixDerivatives, OrderingAndUnsortedInput) {
  std::mt19937_64 rng(3);
  for (const auto& op : catalog()) {
    for (int trial = 0; trial < 100; ++trial) {
      auto l = random_interior(op, rng);
      std::sort(l.begin(), l.end(), std::greater<>());
      const auto d = matrix_derivatives(op, l);
      for (std::size_t i = 1; i < l.size(); ++i) EXPECT_LE(d.first[i - 1], d.first[i] + 1e-12) << op.name();
    }
  }
  EXPECT_THROW(matrix_derivatives(EigenOperator::monge_ampere(2), std::vector<double>{1, 3}), DomainError);
}

TEST(EigenOpsProperties, MonotoneConcaveSymmetric) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& op : catalog()) {
    for (int trial = 0; trial < 1000; ++trial) {
      auto a = random_interior(op, rng);
      auto b = random_interior(op, rng);
      const double fa = f_eval(op, a);
      // monotone along a random coordinate
      const std::size_t i = static_cast<std::size_t>(unit(rng) * op.n) % op.n;
      auto bumped = a;
      bumped[i] += 0.01 + unit(rng);
      EXPECT_GT(f_eval(op, bumped), fa) << op.name();
      // concave along the segment
      const double s = unit(rng);
      std::vector<double> mid(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) mid[k] = s * a[k] + (1 - s) * b[k];
      EXPECT_GE(f_eval(op, mid), s * fa + (1 - s) * f_eval(op, b) - 1e-10) << op.name();
      // symmetric
      auto perm = a;
      std::shuffle(perm.begin(), perm.end(), rng);
      EXPECT_NEAR(f_eval(op, perm), fa, 1e-13 * (1 + std::abs(fa))) << op.name();
      // positive gradient and negative semidefinite Hessian
      for (double gi : f_grad(op, a)) EXPECT_GT(gi, 0.0) << op.name();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f_hess(op, a));
      EXPECT_LE(es.eigenvalues().maxCoeff(), 1e-10 * (1 + es.eigenvalues().cwiseAbs().maxCoeff())) << op.name();
    }
  }
}

TEST(EigenOpsProperties, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(99);
  for (const auto& op : catalog())
    for (int trial = 0; trial < 200; ++trial) EXPECT_LE(oracles::fd_check(op, random_interior(op, rng)), 1e-6);
}

TEST(EigenOpsProperties, GrowsPastAnyLevelAlongRays) {
  std::mt19937_64 rng(5);
  for (const auto& op : catalog())
    for (int trial = 0; trial < 100; ++trial) {
      auto l = random_interior(op, rng);
      const double level = f_eval(op, l) + 5.0;
      for (auto& v : l) v *= 1e6;
      EXPECT_GT(f_eval(op, l), level) << op.name();
    }
}
