#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cxhess/cones.hpp"
#include "cxhess/errors.hpp"
#include "cxhess/symmetric.hpp"

namespace cxhess {

enum class OperatorKind { monge_ampere, hessian_log_sigma_m, hessian_root_sigma_m, hessian_quotient, n_minus_one_ma };

inline std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::monge_ampere: return "monge_ampere";
    case OperatorKind::hessian_log_sigma_m: return "hessian_log_sigma_m";
    case OperatorKind::hessian_root_sigma_m: return "hessian_root_sigma_m";
    case OperatorKind::hessian_quotient: return "hessian_quotient";
    case OperatorKind::n_minus_one_ma: return "n_minus_one_ma";
  }
  return "?";
}

inline OperatorKind operator_kind_from_string(const std::string& s) {
  for (auto k : {OperatorKind::monge_ampere, OperatorKind::hessian_log_sigma_m, OperatorKind::hessian_root_sigma_m,
                 OperatorKind::hessian_quotient, OperatorKind::n_minus_one_ma})
    if (to_string(k) == s) return k;
  throw DomainError("unknown operator '" + s + "'");
}

/// A concave symmetric function f of the eigenvalues on an open cone.
///
///   monge_ampere          f = sum log lambda_i                 on Gamma_n
///   hessian_log_sigma_m   f = log sigma_m                      on Gamma_m
///   hessian_root_sigma_m  f = sigma_m^{1/m}                    on Gamma_m
///   hessian_quotient      f = (sigma_m / sigma_ell)^{1/(m-ell)} on Gamma_m
///   n_minus_one_ma        f = sum log mu_i, mu_i = shift + (1/(n-1)) sum_{j!=i} lambda_j
///
/// `shift` is the scalar multiple of the identity standing in for omega_h.
struct EigenOperator {
  OperatorKind kind = OperatorKind::monge_ampere;
  int n = 1;
  int m = 1;
  int ell = 0;
  double shift = 0.0;

  static EigenOperator monge_ampere(int n) { return make(OperatorKind::monge_ampere, n, n, 0); }
  static EigenOperator hessian_log(int n, int m) { return make(OperatorKind::hessian_log_sigma_m, n, m, 0); }
  static EigenOperator hessian_root(int n, int m) { return make(OperatorKind::hessian_root_sigma_m, n, m, 0); }
  static EigenOperator quotient(int n, int m, int ell) { return make(OperatorKind::hessian_quotient, n, m, ell); }
  static EigenOperator n_minus_one(int n, double shift = 0.0) {
    auto op = make(OperatorKind::n_minus_one_ma, n, n, 0);
    op.shift = shift;
    return op;
  }

  static EigenOperator make(OperatorKind kind, int n, int m, int ell) {
    EigenOperator op;
    op.kind = kind;
    op.n = n;
    op.m = (kind == OperatorKind::monge_ampere || kind == OperatorKind::n_minus_one_ma) ? n : m;
    op.ell = kind == OperatorKind::hessian_quotient ? ell : 0;
    op.validate();
    return op;
  }

  void validate() const {
    if (n < 1) throw DomainError("operator: n must be positive");
    if (m < 1 || m > n) throw DomainError("operator: m=" + std::to_string(m) + " outside [1, n]");
    if (kind == OperatorKind::hessian_quotient && (ell < 0 || ell > m - 1))
      throw DomainError("operator: ell=" + std::to_string(ell) + " outside [0, m-1]");
    if (kind == OperatorKind::n_minus_one_ma && n < 2) throw DomainError("operator: n_minus_one_ma needs n >= 2");
    if (kind == OperatorKind::n_minus_one_ma && shift < 0.0) throw DomainError("operator: shift must be >= 0");
  }

  ConeSpec cone() const {
    switch (kind) {
      case OperatorKind::monge_ampere: return ConeSpec::positive_orthant(n);
      case OperatorKind::n_minus_one_ma: return ConeSpec::n_minus_one_positive(n, shift);
      default: return ConeSpec::garding(m, n);
    }
  }

  /// sup over the boundary of the cone of the upper limits of f.
  double sup_boundary_f() const {
    switch (kind) {
      case OperatorKind::hessian_root_sigma_m:
      case OperatorKind::hessian_quotient: return 0.0;
      default: return -std::numeric_limits<double>::infinity();
    }
  }

  double sup_f() const { return std::numeric_limits<double>::infinity(); }

  /// True when f_{inf,i} is +infinity for every admissible mu.
  bool f_inf_unbounded() const { return !(kind == OperatorKind::hessian_quotient && ell >= 1); }

  std::string name() const { return to_string(kind); }
};

namespace detail {

inline void require_in_cone(const EigenOperator& op, std::span<const double> lambda) {
  if (static_cast<int>(lambda.size()) != op.n)
    throw DomainError("eigenvalue vector has length " + std::to_string(lambda.size()) + ", expected " +
                      std::to_string(op.n));
  const auto t = in_cone(op.cone(), lambda);
  if (!t.inside) throw ConeViolation(t.inequality, t.margin);
}

// value, gradient and Hessian of log sigma_k at lambda (k >= 1, sigma_k > 0).
struct LogSigma {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

inline LogSigma log_sigma(std::span<const double> lambda, int k, bool want_hess) {
  const auto n = static_cast<Eigen::Index>(lambda.size());
  LogSigma out;
  out.grad = Eigen::VectorXd::Zero(n);
  if (want_hess) out.hess = Eigen::MatrixXd::Zero(n, n);
  if (k == 0) return out;
  const double s = sigma_m(lambda, k);
  out.value = std::log(s);
  for (Eigen::Index i = 0; i < n; ++i) out.grad[i] = sigma_without(lambda, k - 1, i) / s;
  if (want_hess) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double sij = i == j ? 0.0 : sigma_without_pair(lambda, k - 2, i, j) / s;
        out.hess(i, j) = sij - out.grad[i] * out.grad[j];
      }
  }
  return out;
}

struct Jet {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

inline Jet evaluate(const EigenOperator& op, std::span<const double> lambda, int order) {
  require_in_cone(op, lambda);
  const auto n = static_cast<Eigen::Index>(op.n);
  const bool want_hess = order >= 2;
  Jet j;
  j.grad = Eigen::VectorXd::Zero(n);
  if (want_hess) j.hess = Eigen::MatrixXd::Zero(n, n);

  switch (op.kind) {
    case OperatorKind::monge_ampere:
      for (Eigen::Index i = 0; i < n; ++i) {
        j.value += std::log(lambda[i]);
        j.grad[i] = 1.0 / lambda[i];
        if (want_hess) j.hess(i, i) = -1.0 / (lambda[i] * lambda[i]);
      }
      break;
    case OperatorKind::hessian_log_sigma_m: {
      auto g = log_sigma(lambda, op.m, want_hess);
      j.value = g.value;
      j.grad = g.grad;
      if (want_hess) j.hess = g.hess;
      break;
    }
    case OperatorKind::hessian_root_sigma_m:
    case OperatorKind::hessian_quotient: {
      // f = exp(g), g = (log sigma_m - log sigma_ell) / (m - ell)
      const double k = op.m - op.ell;
      auto top = log_sigma(lambda, op.m, want_hess);
      auto bot = log_sigma(lambda, op.ell, want_hess);
      const double g = (top.value - bot.value) / k;
      const Eigen::VectorXd gg = (top.grad - bot.grad) / k;
      j.value = std::exp(g);
      j.grad = j.value * gg;
      if (want_hess) j.hess = j.value * ((top.hess - bot.hess) / k + gg * gg.transpose());
      break;
    }
    case OperatorKind::n_minus_one_ma: {
      const auto mu = n_minus_one_transform(lambda, op.shift);
      const double w = 1.0 / static_cast<double>(op.n - 1);
      // df/dlambda_a = sum_i T_ia / mu_i with T_ia = w (1 - delta_ia)
      double inv_sum = 0.0, inv_sq_sum = 0.0;
      for (double v : mu) {
        j.value += std::log(v);
        inv_sum += 1.0 / v;
        inv_sq_sum += 1.0 / (v * v);
      }
      for (Eigen::Index a = 0; a < n; ++a) j.grad[a] = w * (inv_sum - 1.0 / mu[a]);
      if (want_hess)
        for (Eigen::Index a = 0; a < n; ++a)
          for (Eigen::Index b = 0; b < n; ++b) {
            double s = inv_sq_sum - 1.0 / (mu[a] * mu[a]) - 1.0 / (mu[b] * mu[b]);
            if (a == b) s += 1.0 / (mu[a] * mu[a]);
            j.hess(a, b) = -w * w * s;
          }
      break;
    }
  }
  return j;
}

}  // namespace detail

/// f(lambda); throws ConeViolation outside the open cone.
inline double f_eval(const EigenOperator& op, std::span<const double> lambda) {
  return detail::evaluate(op, lambda, 0).value;
}

/// (df/dlambda_i)_i; every component is strictly positive inside the cone.
inline std::vector<double> f_grad(const EigenOperator& op, std::span<const double> lambda) {
  const auto g = detail::evaluate(op, lambda, 1).grad;
  return {g.data(), g.data() + g.size()};
}

/// Second derivatives d^2 f / dlambda_i dlambda_j.
inline Eigen::MatrixXd f_hess(const EigenOperator& op, std::span<const double> lambda) {
  return detail::evaluate(op, lambda, 2).hess;
}

/// lim_{t -> inf} f(mu + t e_i) for mu in the Trudinger cone (i zero-based).
inline double f_inf(const EigenOperator& op, std::span<const double> mu, std::size_t i) {
  if (static_cast<int>(mu.size()) != op.n) throw DomainError("f_inf: vector length mismatch");
  if (i >= mu.size()) throw DomainError("f_inf: index out of range");
  if (!in_tilde_cone(op.cone(), mu).inside) throw DomainError("f_inf: mu is outside the Trudinger cone");
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (op.f_inf_unbounded()) return inf;
  const double num = sigma_without(mu, op.m - 1, i);
  const double den = sigma_without(mu, op.ell - 1, i);
  if (den <= 0.0) return num > 0.0 ? inf : 0.0;
  if (num <= 0.0) return 0.0;
  return std::pow(num / den, 1.0 / (op.m - op.ell));
}

inline double f_inf_min(const EigenOperator& op, std::span<const double> mu) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) best = std::min(best, f_inf(op, mu, i));
  return best;
}

struct MatrixDerivatives {
  std::vector<double> first;  // F^{i i} = f_i in the eigenframe
  Eigen::MatrixXd pair;       // (f_i - f_j) / (lambda_i - lambda_j), zero diagonal
};

/// Eigenframe derivatives of F(A) = f(lambda(A)); `lambda` sorted descending.
/// Near-ties |lambda_i - lambda_j| < 1e-8 (1 + |lambda_i| + |lambda_j|) use the
/// limit (f_ii + f_jj)/2 - f_ij.
inline MatrixDerivatives matrix_derivatives(const EigenOperator& op, std::span<const double> lambda) {
  for (std::size_t i = 1; i < lambda.size(); ++i)
    if (lambda[i] > lambda[i - 1]) throw DomainError("matrix_derivatives: eigenvalues must be sorted descending");
  const auto jet = detail::evaluate(op, lambda, 2);
  const auto n = static_cast<Eigen::Index>(lambda.size());
  MatrixDerivatives d;
  d.first.assign(jet.grad.data(), jet.grad.data() + n);
  d.pair = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double gap = lambda[i] - lambda[j];
      const double tie = 1e-8 * (1.0 + std::abs(lambda[i]) + std::abs(lambda[j]));
      d.pair(i, j) = std::abs(gap) < tie ? 0.5 * (jet.hess(i, i) + jet.hess(j, j)) - jet.hess(i, j)
                                         : (jet.grad[i] - jet.grad[j]) / gap;
    }
  return d;
}

}  // namespace cxhess
