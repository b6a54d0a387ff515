#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cxhess/symmetric.hpp"

namespace cxhess {

/// Open symmetric convex domains of eigenvalue vectors.
///
/// `gamma_n` is the positive orthant, `gamma_m` the Garding cone
/// {sigma_l > 0, l = 1..m}, and `n_minus_one` the domain of the Monge-Ampere
/// equation for (n-1)-plurisubharmonic functions:
/// {shift + (1/(n-1)) sum_{j != i} lambda_j > 0 for every i}.
struct ConeSpec {
  enum class Kind { gamma_n, gamma_m, n_minus_one };

  Kind kind = Kind::gamma_n;
  int n = 1;
  int m = 1;           // gamma_m only
  double shift = 0.0;  // n_minus_one only; 0 keeps the domain conic

  static ConeSpec positive_orthant(int n) { return {Kind::gamma_n, n, n, 0.0}; }
  static ConeSpec garding(int m, int n) { return {Kind::gamma_m, n, m, 0.0}; }
  static ConeSpec n_minus_one_positive(int n, double shift = 0.0) {
    return {Kind::n_minus_one, n, n, shift};
  }

  std::string describe() const {
    switch (kind) {
      case Kind::gamma_n: return "Gamma_" + std::to_string(n);
      case Kind::gamma_m: return "Gamma_" + std::to_string(m) + "(n=" + std::to_string(n) + ")";
      case Kind::n_minus_one: return "P_{n-1}(n=" + std::to_string(n) + ")";
    }
    return "?";
  }
};

struct ConeTest {
  bool inside = false;
  double margin = 0.0;     // min over the defining inequalities; > 0 iff interior
  std::string inequality;  // the inequality attaining the margin
};

/// Transformed vector mu_i = shift + (1/(n-1)) sum_{j != i} lambda_j.
inline std::vector<double> n_minus_one_transform(std::span<const double> lambda, double shift) {
  const std::size_t n = lambda.size();
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) mu[i] = shift + (total - lambda[i]) / static_cast<double>(n - 1);
  return mu;
}

inline ConeTest in_cone(const ConeSpec& cone, std::span<const double> lambda) {
  ConeTest t;
  t.margin = std::numeric_limits<double>::infinity();
  switch (cone.kind) {
    case ConeSpec::Kind::gamma_n:
      for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < t.margin) {
          t.margin = lambda[i];
          t.inequality = "lambda_" + std::to_string(i + 1) + " > 0";
        }
      }
      break;
    case ConeSpec::Kind::gamma_m: {
      const auto s = sigma_all(lambda, cone.m);
      for (int l = 1; l <= cone.m; ++l) {
        if (s[l] < t.margin) {
          t.margin = s[l];
          t.inequality = "sigma_" + std::to_string(l) + " > 0";
        }
      }
      break;
    }
    case ConeSpec::Kind::n_minus_one: {
      const auto mu = n_minus_one_transform(lambda, cone.shift);
      for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] < t.margin) {
          t.margin = mu[i];
          t.inequality = "mu_" + std::to_string(i + 1) + " > 0";
        }
      }
      break;
    }
  }
  t.inside = t.margin > 0.0 && std::isfinite(t.margin);
  return t;
}

struct TildeConeTest {
  bool inside = false;
  double t_required = 0.0;  // smallest common t (up to bisection accuracy)
  double t_max = 0.0;
};

/// Trudinger cone: mu + t e_i lies in the cone for all i and one t > 0.
/// Membership of mu + t e_i is monotone in t for every cataloged cone, so the
/// per-direction threshold is found by bisection below t_max = 1e6 (1 + |mu|).
inline TildeConeTest in_tilde_cone(const ConeSpec& cone, std::span<const double> mu) {
  double norm = 0.0;
  for (double v : mu) norm += v * v;
  TildeConeTest out;
  out.t_max = 1e6 * (1.0 + std::sqrt(norm));

  std::vector<double> probe(mu.begin(), mu.end());
  auto member = [&](std::size_t i, double t) {
    probe[i] = mu[i] + t;
    const bool inside = in_cone(cone, probe).inside;
    probe[i] = mu[i];
    return inside;
  };

  double t_needed = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (member(i, 0.0)) continue;
    if (!member(i, out.t_max)) {
      out.inside = false;
      out.t_required = std::numeric_limits<double>::infinity();
      return out;
    }
    double lo = 0.0, hi = out.t_max;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (member(i, mid) ? hi : lo) = mid;
    }
    t_needed = std::max(t_needed, hi);
  }
  out.inside = true;
  out.t_required = t_needed;
  return out;
}

}  // namespace cxhess
