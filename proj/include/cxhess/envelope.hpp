#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cxhess/newton_solver.hpp"
#include "cxhess/symmetric.hpp"

namespace cxhess {

using Mask = std::vector<char>;

struct PenalizationState {
  double eps = 0.0;
  ScalarField u;
  Mask contact_mask;
  double residual_offK = 0.0;
  double residual_onK = 0.0;
  double sup_overshoot = 0.0;   // max(0, sup(u - h))
  double overshoot_ratio = 0.0; // sup_overshoot / eps
  double contact_tol = 0.0;
  SolveReport report;
};

struct EnvelopeResidual {
  double offK_L1 = 0.0;
  double onK_L1 = 0.0;
};

struct EnvelopeResult {
  ScalarField P;
  Mask K;
  std::vector<PenalizationState> states;
  double c_ratio = 0.0;                 // measured overshoot constant used for the contact band
  std::vector<double> rung_distances;   // sup |u_k - u_{k-1}|
  bool monotone_trend = true;           // rung distances decrease
  std::optional<std::string> error;     // set when a rung failed; states hold the rungs before it
};

/// Band width for the numerical contact set; the residual_tol term absorbs
/// roundoff when the measured overshoot is exactly zero.
inline double contact_tol(double eps, double c_ratio, const SolverConfig& cfg = {}) {
  return 10.0 * c_ratio * eps + 10.0 * cfg.residual_tol;
}

inline Mask contact_set(const ScalarField& u_eps, const ScalarField& h, double eps, double c_ratio,
                        const SolverConfig& cfg = {}) {
  if (!(u_eps.grid == h.grid)) throw GridMismatch("contact_set: grid mismatch");
  const double tol = contact_tol(eps, c_ratio, cfg);
  Mask mask(h.size());
  for (std::size_t p = 0; p < h.size(); ++p) mask[p] = h[p] - u_eps[p] <= tol;
  return mask;
}

/// sigma_m(lambda(theta + i ddbar v)) at every grid point (the plain polynomial; no cone check).
inline ScalarField sigma_m_field(const HermitianFormField& theta, const ScalarField& v, int m) {
  const auto lam = eigenvalues_chi(theta + spectral_ddbar(v));
  ScalarField out(v.grid);
  parallel_for(v.size(), [&](std::size_t p) { out[p] = sigma_m(lam.at(p), m); });
  return out;
}

inline EnvelopeResidual envelope_residual(const PenalizationState& state, const HermitianFormField& theta,
                                          const ScalarField& h, int m) {
  if (!(state.u.grid == h.grid) || !(theta.grid() == h.grid)) throw GridMismatch("envelope_residual: grid mismatch");
  const auto su = sigma_m_field(theta, state.u, m);
  const auto sh = sigma_m_field(theta, h, m);
  EnvelopeResidual r;
  for (std::size_t p = 0; p < h.size(); ++p) {
    if (state.contact_mask[p])
      r.onK_L1 += std::abs(su[p] - sh[p]);
    else
      r.offK_L1 += std::abs(su[p]);
  }
  r.offK_L1 /= static_cast<double>(h.size());
  r.onK_L1 /= static_cast<double>(h.size());
  return r;
}

namespace detail {

inline void check_penalized_op(const EigenOperator& op, int n) {
  if (op.kind != OperatorKind::hessian_log_sigma_m && op.kind != OperatorKind::monge_ampere &&
      op.kind != OperatorKind::hessian_root_sigma_m)
    throw DomainError("penalization: requires a complex Hessian operator");
  if (op.n != n) throw DomainError("penalization: operator dimension differs from grid");
}

inline void finalize_state(PenalizationState& s, const HermitianFormField& theta, const ScalarField& h, int m,
                           double c_ratio, const SolverConfig& cfg) {
  s.contact_tol = contact_tol(s.eps, c_ratio, cfg);
  s.contact_mask = contact_set(s.u, h, s.eps, c_ratio, cfg);
  const auto r = envelope_residual(s, theta, h, m);
  s.residual_offK = r.offK_L1;
  s.residual_onK = r.onK_L1;
}

}  // namespace detail

/// Penalized equation log sigma_m(theta + i ddbar u) = (u - h)/eps, solved in the
/// equivalent form sigma_m(lambda) - exp((u - h)/eps) = 0. Only sigma_l > 0
/// (l < m) is guarded: the exp form is defined for any sigma_m and forces
/// sigma_m = exp(...) > 0 at the solution. The contact band uses this rung's own
/// overshoot ratio; compute_envelope re-bands all rungs with the schedule maximum.
inline PenalizationState solve_penalized(const EigenOperator& op, const HermitianFormField& theta,
                                         const ScalarField& h, double eps,
                                         const std::optional<ScalarField>& warm = std::nullopt,
                                         const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require_same_grid(theta, h);
  detail::check_penalized_op(op, h.grid.n());
  if (!(eps > 0.0)) throw DomainError("penalization: eps must be positive");
  const int m = op.kind == OperatorKind::monge_ampere ? op.n : op.m;

  ScalarField u = warm ? *warm : ScalarField(h.grid, h.min());
  if (!(u.grid == h.grid)) throw GridMismatch("penalization: warm start grid mismatch");

  auto model_for = [&](double) -> detail::PointModel {
    return [&](std::size_t p, std::span<const double> lambda, double up, bool weights) {
      detail::PointResult r;
      const auto s = sigma_all(lambda, m);
      double margin = std::numeric_limits<double>::infinity();
      for (int l = 1; l < m; ++l) margin = std::min(margin, s[l]);
      r.margin = margin;
      r.admissible = margin > 0.0;
      if (!r.admissible) return r;
      const double E = std::exp((up - h[p]) / eps);
      r.residual = s[m] - E;
      r.zeroth = -E / eps;
      if (weights) {
        r.weights.resize(lambda.size());
        for (std::size_t i = 0; i < lambda.size(); ++i)
          r.weights[i] = sigma_m_partial(lambda, m, i);
      }
      return r;
    };
  };

  double b = 0.0;
  auto report = detail::newton_solve(theta, u, b, model_for, false, cfg);
  PenalizationState st{eps, std::move(u), {}, 0.0, 0.0, 0.0, 0.0, 0.0, std::move(report)};
  double over = 0.0;
  for (std::size_t p = 0; p < h.size(); ++p) over = std::max(over, st.u[p] - h[p]);
  st.sup_overshoot = over;
  st.overshoot_ratio = over / eps;
  detail::finalize_state(st, theta, h, m, st.overshoot_ratio, cfg);
  return st;
}

/// P_{m,theta}(h) as the smallest-eps rung of a warm-started penalization schedule.
inline EnvelopeResult compute_envelope(const HermitianFormField& theta, const ScalarField& h, int m,
                                       const std::vector<double>& schedule, const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require_same_grid(theta, h);
  const int n = h.grid.n();
  if (m < 1 || m > n) throw DomainError("envelope: m must satisfy 1 <= m <= n");
  if (schedule.empty()) throw DomainError("envelope: empty schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0)) throw DomainError("envelope: schedule entries must be positive");
    if (k > 0 && !(schedule[k] < schedule[k - 1])) throw DomainError("envelope: schedule must strictly decrease");
  }
  const auto op = EigenOperator::hessian_log(n, m);
  EnvelopeResult out{ScalarField(h.grid), Mask(h.size(), 0), {}, 0.0, {}, true, std::nullopt};
  std::optional<ScalarField> warm;
  for (double eps : schedule) {
    if (!out.states.empty()) {
      // lower the previous rung by the overshoot it is expected to lose, so the
      // exponential starts O(1) instead of exp(ratio * eps_prev / eps)
      const auto& prev = out.states.back();
      warm = prev.u;
      *warm += -(prev.eps - eps) * prev.overshoot_ratio;
    }
    try {
      out.states.push_back(solve_penalized(op, theta, h, eps, warm, cfg));
    } catch (const Error& e) {
      out.error = "rung eps=" + detail::sci(eps) + ": " + e.what();
      break;
    }
  }
  if (out.states.empty()) return out;

  for (const auto& s : out.states) out.c_ratio = std::max(out.c_ratio, s.overshoot_ratio);
  for (auto& s : out.states) detail::finalize_state(s, theta, h, m, out.c_ratio, cfg);
  for (std::size_t k = 1; k < out.states.size(); ++k) {
    out.rung_distances.push_back((out.states[k].u - out.states[k - 1].u).sup_abs());
    if (k > 1 && !(out.rung_distances[k - 1] < out.rung_distances[k - 2])) out.monotone_trend = false;
  }
  out.P = out.states.back().u;
  out.K = out.states.back().contact_mask;
  return out;
}

}  // namespace cxhess
