#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cxhess/eigen_ops.hpp"
#include "cxhess/envelope.hpp"
#include "cxhess/torus_field.hpp"

namespace cxhess {

/// xi(s) = -1/3 log(c - s); xi'' = 3 xi'^2 for any c.
struct LogBarrier {
  double c = 0.0;
  double value(double s) const { return -std::log(c - s) / 3.0; }
  double d1(double s) const { return 1.0 / (3.0 * (c - s)); }
  double d2(double s) const { return 1.0 / (3.0 * (c - s) * (c - s)); }
};

struct EstimateReport {
  FieldNorms norms;
  double lambda1_max = 0.0;
  double L = 0.0;
  double rho_norm_max = 0.0;   // sup |rho|^2, rho = Hess u + L g
  double rho_min_eig = 0.0;    // inf of the smallest eigenvalue of rho
  double A_const = 1.0;
  double Q_max = -std::numeric_limits<double>::infinity();
  double xi_at_max = std::numeric_limits<double>::quiet_NaN();
  double eta_at_max = std::numeric_limits<double>::quiet_NaN();
  double xi_prime_at_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t Q_argmax = 0;
  std::optional<std::string> degenerate;  // "degenerate: lambda_1 <= 0" when Q has no finite value

  // widened barrier pair: 100 n^2 L^2 inside xi, eta shifted by 4 sup|dh|^2
  double Q_max_wide = -std::numeric_limits<double>::infinity();
  double xi_wide_at_max = std::numeric_limits<double>::quiet_NaN();
  double eta_wide_at_max = std::numeric_limits<double>::quiet_NaN();

  double F_diag_min = std::numeric_limits<double>::infinity();  // min over grid of min_i F^{i ibar}
  double F_trace_max = 0.0;                                     // max over grid of sum_i F^{i ibar}
  bool F_ordering_ok = true;
  std::size_t cone_violations = 0;  // points skipped in the F^{i ibar} scan
  std::optional<std::string> partial;
};

namespace detail {
inline void update_argmax(double q, std::size_t p, double& best, std::size_t& arg) {
  if (q > best) {
    best = q;
    arg = p;
  }
}
}  // namespace detail

/// Evaluates the maximum-principle quantities of u on the grid. `h`, when given,
/// widens the eta barrier of the alternate pair by 4 sup|dh|^2.
inline EstimateReport estimate_monitor(const ScalarField& u, const HermitianFormField& theta, const EigenOperator& op,
                                       double A_const = 1.0, const std::optional<ScalarField>& h = std::nullopt) {
  if (!(theta.grid() == u.grid)) throw GridMismatch("estimate_monitor: grid mismatch");
  if (h && !(h->grid == u.grid)) throw GridMismatch("estimate_monitor: h grid mismatch");
  op.validate();
  if (op.n != u.grid.n()) throw DomainError("estimate_monitor: operator dimension differs from grid");
  const auto& g = u.grid;
  const std::size_t M = g.size();
  const int axes = g.axes();
  const int n = g.n();

  EstimateReport rep;
  rep.A_const = A_const;
  rep.norms = norms(u);
  const auto hess = real_hessian(u);
  const auto grad = spectral_gradient(u);

  std::vector<double> lam1(M), rho2(M), rho_min(M), grad2(M);
  parallel_for(M, [&](std::size_t p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess.at(p), Eigen::EigenvaluesOnly);
    lam1[p] = es.eigenvalues()[axes - 1];
    double s = 0.0;
    for (int a = 0; a < axes; ++a) s += grad[a][p] * grad[a][p];
    grad2[p] = s;
  });
  rep.lambda1_max = *std::max_element(lam1.begin(), lam1.end());
  rep.L = rep.norms.sup_hess + 1.0;
  parallel_for(M, [&](std::size_t p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess.at(p), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()[0] + rep.L, hi = es.eigenvalues()[axes - 1] + rep.L;
    rho_min[p] = lo;
    const double nrm = std::max(std::abs(lo), std::abs(hi));
    rho2[p] = nrm * nrm;
  });
  rep.rho_norm_max = *std::max_element(rho2.begin(), rho2.end());
  rep.rho_min_eig = *std::min_element(rho_min.begin(), rho_min.end());

  const double grad_sup2 = rep.norms.sup_grad * rep.norms.sup_grad;
  double dh_sup2 = 0.0;
  if (h) {
    const double s = norms(*h).sup_grad;
    dh_sup2 = s * s;
  }
  const LogBarrier xi{5.0 * rep.L * rep.L}, eta{1.0 + grad_sup2};
  const LogBarrier xi_w{100.0 * n * n * rep.L * rep.L}, eta_w{1.0 + grad_sup2 + 4.0 * dh_sup2};
  std::size_t arg_w = 0;
  for (std::size_t p = 0; p < M; ++p) {
    if (!(lam1[p] > 0.0)) continue;
    const double base = std::log(lam1[p]) + std::exp(-A_const * u[p]);
    detail::update_argmax(base + xi.value(rho2[p]) + eta.value(grad2[p]), p, rep.Q_max, rep.Q_argmax);
    detail::update_argmax(base + xi_w.value(rho2[p]) + eta_w.value(grad2[p]), p, rep.Q_max_wide, arg_w);
  }
  if (std::isfinite(rep.Q_max)) {
    rep.xi_at_max = xi.value(rho2[rep.Q_argmax]);
    rep.xi_prime_at_max = xi.d1(rho2[rep.Q_argmax]);
    rep.eta_at_max = eta.value(grad2[rep.Q_argmax]);
    rep.xi_wide_at_max = xi_w.value(rho2[arg_w]);
    rep.eta_wide_at_max = eta_w.value(grad2[arg_w]);
  } else {
    rep.degenerate = "degenerate: lambda_1 <= 0";
  }

  // F^{i ibar} = f_i in the eigenframe; sorted lambda descending => f_i ascending
  const auto lam = eigenvalues_chi(theta + spectral_ddbar(u));
  const auto cone = op.cone();
  for (std::size_t p = 0; p < M; ++p) {
    const auto l = lam.at(p);
    if (!in_cone(cone, l).inside) {
      ++rep.cone_violations;
      continue;
    }
    const auto f = f_grad(op, l);
    double tr = 0.0;
    for (int i = 0; i < n; ++i) {
      rep.F_diag_min = std::min(rep.F_diag_min, f[i]);
      tr += f[i];
      if (i > 0 && f[i] < f[i - 1] * (1.0 - 1e-9) - 1e-12) rep.F_ordering_ok = false;
    }
    rep.F_trace_max = std::max(rep.F_trace_max, tr);
  }
  if (rep.cone_violations > 0)
    rep.partial = "cone violation at " + std::to_string(rep.cone_violations) + " grid points";
  return rep;
}

struct TrendRecord {
  double overshoot_ratio_min = 0.0;
  double overshoot_ratio_max = 0.0;
  double hessian_variation_factor = 0.0;
  std::vector<double> sup_hessian;  // per rung
  // least-squares slopes of log(value) against log(eps); NaN when fewer than two positive samples
  double slope_overshoot = std::numeric_limits<double>::quiet_NaN();
  double slope_offK = std::numeric_limits<double>::quiet_NaN();
  double slope_onK = std::numeric_limits<double>::quiet_NaN();
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
  }
  if (k < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = k * sxx - sx * sx;
  return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (k * sxy - sx * sy) / den;
}

inline TrendRecord epsilon_trend(const std::vector<PenalizationState>& states) {
  if (states.size() < 3) throw DataError("epsilon_trend: need at least 3 rungs, got " + std::to_string(states.size()));
  TrendRecord t;
  t.overshoot_ratio_min = std::numeric_limits<double>::infinity();
  t.overshoot_ratio_max = -std::numeric_limits<double>::infinity();
  std::vector<double> eps, over, off, on;
  for (const auto& s : states) {
    t.overshoot_ratio_min = std::min(t.overshoot_ratio_min, s.overshoot_ratio);
    t.overshoot_ratio_max = std::max(t.overshoot_ratio_max, s.overshoot_ratio);
    t.sup_hessian.push_back(norms(s.u).sup_hess);
    eps.push_back(s.eps);
    over.push_back(s.sup_overshoot);
    off.push_back(s.residual_offK);
    on.push_back(s.residual_onK);
  }
  const auto [lo, hi] = std::minmax_element(t.sup_hessian.begin(), t.sup_hessian.end());
  t.hessian_variation_factor = *lo > 0.0 ? *hi / *lo : (*hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  t.slope_overshoot = loglog_slope(eps, over);
  t.slope_offK = loglog_slope(eps, off);
  t.slope_onK = loglog_slope(eps, on);
  return t;
}

}  // namespace cxhess
