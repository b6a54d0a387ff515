#pragma once

// Independent reference computations used to check the solver paths. Nothing
// here calls into the spectral differentiation or Newton code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <bit>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "cxhess/eigen_ops.hpp"
#include "cxhess/errors.hpp"
#include "cxhess/torus_field.hpp"

namespace cxhess::oracles {

struct OracleConfig {
  double psor_relaxation = 1.8;
  double psor_tol = 1e-10;
  long psor_max_sweeps = 100000;
  double fd_step = 1e-5;

  void validate() const {
    if (!(psor_relaxation > 0.0 && psor_relaxation < 2.0)) throw DomainError("psor relaxation must lie in (0,2)");
    if (!(psor_tol > 0.0) || !(fd_step > 0.0) || psor_max_sweeps <= 0)
      throw DomainError("oracle tolerances must be positive");
  }
};

/// sigma_m by explicit enumeration of all m-subsets (n <= 20).
inline double sigma_bruteforce(std::span<const double> lambda, int m) {
  const std::size_t n = lambda.size();
  if (n > 20) throw DomainError("sigma_bruteforce: n > 20 refused");
  if (m < 0 || m > static_cast<int>(n)) throw DomainError("sigma_bruteforce: m out of range");
  long double total = 0.0L;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != m) continue;
    long double prod = 1.0L;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) prod *= lambda[i];
    total += prod;
  }
  return static_cast<double>(total);
}

/// max_i |f_i - central difference_i| / max(1, |f_i|) with step fd_step (1 + |lambda_i|).
inline double fd_check(const EigenOperator& op, std::span<const double> lambda, const OracleConfig& cfg = {}) {
  const double margin = in_cone(op.cone(), lambda).margin;
  double scale = 1.0;
  for (double v : lambda) scale = std::max(scale, std::abs(v));
  if (!(margin > 10.0 * cfg.fd_step * scale)) throw DomainError("fd_check: lambda too close to the cone boundary");
  const auto grad = f_grad(op, lambda);
  std::vector<double> probe(lambda.begin(), lambda.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double h = cfg.fd_step * (1.0 + std::abs(lambda[i]));
    auto at = [&](double offset) {
      probe[i] = lambda[i] + offset;
      const double v = f_eval(op, probe);
      probe[i] = lambda[i];
      return v;
    };
    // fourth-order central stencil
    const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
  }
  return worst;
}

namespace detail {

// Discrete symbol of the complex Laplacian sum_j d^2/dz^j dzbar^j for the
// spectral convention: each real axis contributes -(2 pi k)^2 / 4.
inline double complex_laplacian_symbol(const PeriodicGrid& g, std::size_t index) {
  double s = 0.0;
  for (int a = 0; a < g.axes(); ++a) {
    const int q = g.coord(index, a);
    const int k = q < g.N() / 2 ? q : q - g.N();
    const double w = 2.0 * std::numbers::pi * k;
    s -= 0.25 * w * w;
  }
  return s;
}

// Naive O(M^2) discrete Fourier transform is too slow for 4-d grids, so the
// transform is done axis by axis with a direct O(N^2) DFT per line.
inline void dft_lines(std::vector<std::complex<double>>& data, const PeriodicGrid& g, int sign) {
  const int N = g.N();
  std::vector<std::complex<double>> twiddle(N), line(N), out(N);
  for (int k = 0; k < N; ++k) twiddle[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * k / N);
  std::size_t stride = 1;
  for (int a = 0; a < g.axes(); ++a) {
    for (std::size_t base = 0; base < g.size(); ++base) {
      if (g.coord(base, a) != 0) continue;
      for (int q = 0; q < N; ++q) line[q] = data[base + q * stride];
      for (int k = 0; k < N; ++k) {
        std::complex<double> s{};
        for (int q = 0; q < N; ++q) s += line[q] * twiddle[(static_cast<long>(k) * q) % N];
        out[k] = s;
      }
      for (int q = 0; q < N; ++q) data[base + q * stride] = out[q];
    }
    stride *= static_cast<std::size_t>(N);
  }
}

}  // namespace detail

/// Exact solution of sigma_1(theta + i ddbar u) = h + b, i.e. tr theta + Delta_C u = h + b,
/// by wavenumber division. Returns the mean-zero u; `b` receives the constant.
inline ScalarField linear_solve_sigma1(const HermitianFormField& theta, const ScalarField& h, double* b = nullptr) {
  const auto& g = h.grid;
  if (!(theta.grid() == g)) throw GridMismatch("linear_solve_sigma1: grid mismatch");
  std::vector<std::complex<double>> rhs(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    double tr = 0.0;
    for (int j = 0; j < g.n(); ++j) tr += theta.entry(p, j, j).real();
    rhs[p] = h[p] - tr;
  }
  detail::dft_lines(rhs, g, -1);
  const double scale = 1.0 / static_cast<double>(g.size());
  if (b) *b = -rhs[0].real() * scale;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = detail::complex_laplacian_symbol(g, i);
    rhs[i] = i == 0 ? std::complex<double>{} : rhs[i] * scale / s;
  }
  detail::dft_lines(rhs, g, +1);
  ScalarField u(g);
  for (std::size_t p = 0; p < g.size(); ++p) u[p] = rhs[p].real();
  return u;
}

struct PsorResult {
  ScalarField u;
  long sweeps = 0;
  double complementarity_residual = 0.0;
};

/// Finite-difference complementarity residual max |min(tr theta + Delta_h u, h - u)|.
inline double complementarity_residual(const HermitianFormField& theta, const ScalarField& h, const ScalarField& u) {
  const auto& g = h.grid;
  const double inv_dx2 = 1.0 / (g.spacing() * g.spacing());
  double worst = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    double tr = 0.0;
    for (int j = 0; j < g.n(); ++j) tr += theta.entry(p, j, j).real();
    double lap = 0.0;
    for (int a = 0; a < g.axes(); ++a) lap += u[g.neighbor(p, a, 1)] + u[g.neighbor(p, a, -1)] - 2.0 * u[p];
    const double op = tr + 0.25 * lap * inv_dx2;
    worst = std::max(worst, std::abs(std::min(op, h[p] - u[p])));
  }
  return worst;
}

/// Projected SOR for the m = 1 envelope: find u <= h with tr theta + Delta_C u >= 0
/// and equality off the contact set, using the second-order finite-difference
/// Laplacian (3-point stencil per real axis).
inline PsorResult psor_obstacle(const HermitianFormField& theta, const ScalarField& h, const OracleConfig& cfg = {}) {
  cfg.validate();
  const auto& g = h.grid;
  if (!(theta.grid() == g)) throw GridMismatch("psor_obstacle: grid mismatch");
  const double dx2 = g.spacing() * g.spacing();
  const double diag = 2.0 * g.axes();
  std::vector<double> trace(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    double tr = 0.0;
    for (int j = 0; j < g.n(); ++j) tr += theta.entry(p, j, j).real();
    trace[p] = tr;
  }
  std::vector<std::size_t> nb(g.size() * g.axes() * 2);
  for (std::size_t p = 0; p < g.size(); ++p)
    for (int a = 0; a < g.axes(); ++a) {
      nb[(p * g.axes() + a) * 2] = g.neighbor(p, a, 1);
      nb[(p * g.axes() + a) * 2 + 1] = g.neighbor(p, a, -1);
    }

  PsorResult r{ScalarField(g, h.min()), 0, 0.0};
  auto& u = r.u;
  for (r.sweeps = 1; r.sweeps <= cfg.psor_max_sweeps; ++r.sweeps) {
    for (std::size_t p = 0; p < g.size(); ++p) {
      double s = 0.0;
      for (int k = 0; k < 2 * g.axes(); ++k) s += u[nb[p * g.axes() * 2 + k]];
      // tr + (1/4)(s - diag u)/dx2 = 0  =>  u = (s + 4 dx2 tr) / diag
      const double gs = (s + 4.0 * dx2 * trace[p]) / diag;
      u[p] = std::min(h[p], u[p] + cfg.psor_relaxation * (gs - u[p]));
    }
    if (r.sweeps % 25 == 0) {
      r.complementarity_residual = complementarity_residual(theta, h, u);
      if (r.complementarity_residual <= cfg.psor_tol) return r;
    }
  }
  throw NonConvergence("psor_obstacle: sweep budget exhausted (residual " +
                       std::to_string(complementarity_residual(theta, h, u)) + ")");
}

}  // namespace cxhess::oracles
