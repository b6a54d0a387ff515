#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "cxhess/eigen_ops.hpp"
#include "cxhess/torus_field.hpp"

namespace cxhess {

/// Outcome of certifying u_sub as a C-subsolution of f(lambda) = h.
struct SubsolutionCertificate {
  bool accepted = false;
  bool sigma0_unbounded = false;  // f_{inf,min} is identically +inf; sigma_0 is then 1
  double sigma_0 = 0.0;
  std::size_t worst_point = 0;
  double worst_margin = 0.0;  // min_x f_{inf,min}(mu(x)) - h(x); -inf if mu leaves the Trudinger cone
  bool tilde_cone_ok = true;
};

/// Pointwise test mu(x) = lambda(theta + i ddbar u_sub) in the Trudinger cone
/// with f_{inf,min}(mu(x)) > h(x). sigma_0 is half the worst margin, or 1 when
/// the limits are all infinite.
inline SubsolutionCertificate subsolution_check(const EigenOperator& op, const HermitianFormField& theta,
                                               const ScalarField& u_sub, const ScalarField& h) {
  if (!(theta.grid() == u_sub.grid) || !(u_sub.grid == h.grid)) throw GridMismatch("subsolution_check: grid mismatch");
  if (theta.n() != op.n) throw DomainError("subsolution_check: operator dimension differs from grid");
  const auto mu = eigenvalues_chi(theta + spectral_ddbar(u_sub));
  const auto cone = op.cone();
  const std::size_t M = h.size();

  std::vector<double> margin(M);
  std::vector<char> tilde(M);
  parallel_for(M, [&](std::size_t p) {
    const auto v = mu.at(p);
    tilde[p] = in_tilde_cone(cone, v).inside;
    margin[p] = tilde[p] ? f_inf_min(op, v) - h[p] : -std::numeric_limits<double>::infinity();
  });

  SubsolutionCertificate c;
  c.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < M; ++p) {
    if (!tilde[p]) {
      c.tilde_cone_ok = false;
      c.worst_point = p;
      c.worst_margin = -std::numeric_limits<double>::infinity();
      break;
    }
    if (margin[p] < c.worst_margin) {
      c.worst_margin = margin[p];
      c.worst_point = p;
    }
  }
  c.accepted = c.tilde_cone_ok && c.worst_margin > 0.0;
  c.sigma0_unbounded = op.f_inf_unbounded();
  if (c.accepted) c.sigma_0 = c.sigma0_unbounded ? 1.0 : 0.5 * c.worst_margin;
  return c;
}

}  // namespace cxhess
