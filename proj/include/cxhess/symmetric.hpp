#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cxhess/errors.hpp"

namespace cxhess {

namespace detail {

// e_0..e_kmax of `lambda` with entries `skip_a`/`skip_b` removed, by the prefix
// recurrence e_k <- e_k + x e_{k-1}. Accumulates in long double so that the
// final rounding to double dominates the error.
inline std::vector<long double> elementary_prefix(std::span<const double> lambda, int kmax,
                                                  std::size_t skip_a = std::size_t(-1),
                                                  std::size_t skip_b = std::size_t(-1)) {
  std::vector<long double> e(static_cast<std::size_t>(kmax) + 1, 0.0L);
  e[0] = 1.0L;
  int seen = 0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (i == skip_a || i == skip_b) continue;
    ++seen;
    const long double x = lambda[i];
    for (int k = std::min(seen, kmax); k >= 1; --k) e[k] += x * e[k - 1];
  }
  return e;
}

}  // namespace detail

/// m-th elementary symmetric polynomial of `lambda`, 0 <= m <= n (sigma_0 = 1).
inline double sigma_m(std::span<const double> lambda, int m) {
  const int n = static_cast<int>(lambda.size());
  if (m < 0 || m > n)
    throw DomainError("sigma_m: m=" + std::to_string(m) + " outside [0, " + std::to_string(n) + "]");
  return static_cast<double>(detail::elementary_prefix(lambda, m)[m]);
}

/// All of sigma_0 .. sigma_kmax in one pass.
inline std::vector<double> sigma_all(std::span<const double> lambda, int kmax) {
  const auto e = detail::elementary_prefix(lambda, kmax);
  return {e.begin(), e.end()};
}

/// d sigma_m / d lambda_i = sigma_{m-1}(lambda | i); `i` is zero-based.
inline double sigma_m_partial(std::span<const double> lambda, int m, std::size_t i) {
  const int n = static_cast<int>(lambda.size());
  if (m < 1 || m > n)
    throw DomainError("sigma_m_partial: m=" + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  if (i >= lambda.size()) throw DomainError("sigma_m_partial: index " + std::to_string(i) + " out of range");
  return static_cast<double>(detail::elementary_prefix(lambda, m - 1, i)[m - 1]);
}

/// sigma_k of `lambda` with entries i and j removed (i != j); 0 for k < 0.
inline double sigma_without_pair(std::span<const double> lambda, int k, std::size_t i, std::size_t j) {
  if (k < 0) return 0.0;
  if (k > static_cast<int>(lambda.size()) - 2) return 0.0;
  return static_cast<double>(detail::elementary_prefix(lambda, k, i, j)[k]);
}

/// sigma_k of `lambda` with entry i removed; 0 for k < 0 or k > n-1.
inline double sigma_without(std::span<const double> lambda, int k, std::size_t i) {
  if (k < 0) return 0.0;
  if (k > static_cast<int>(lambda.size()) - 1) return 0.0;
  return static_cast<double>(detail::elementary_prefix(lambda, k, i)[k]);
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace cxhess
