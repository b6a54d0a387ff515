#pragma once

// JSON views of solver, envelope and diagnostic results.

#include <cmath>
#include <string>
#include <vector>

#include "cxhess/config.hpp"
#include "cxhess/diagnostics.hpp"
#include "cxhess/envelope.hpp"
#include "cxhess/subsolution.hpp"

namespace cxhess::report {

// JSON has no inf/nan; spell them out so a reader can tell them from missing data.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline json to_json(const SolveReport& r) {
  json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["roundoff_limited"] = r.roundoff_limited;
  j["final_residual"] = num(r.final_residual);
  j["noise_floor"] = num(r.noise_floor);
  j["constant"] = num(r.constant);
  if (r.c) j["c"] = num(*r.c);
  j["residual_history"] = nums(r.residual_history);
  j["merit_history"] = nums(r.merit_history);
  j["cone_margin_history"] = nums(r.cone_margin_history);
  j["krylov_iterations"] = r.krylov_iterations;
  j["step_lengths"] = nums(r.step_lengths);
  if (!r.c_sequence.empty()) j["c_sequence"] = nums(r.c_sequence);
  return j;
}

inline json to_json(const SubsolutionCertificate& c) {
  json j;
  j["accepted"] = c.accepted;
  j["sigma0_unbounded"] = c.sigma0_unbounded;
  j["sigma_0"] = num(c.sigma_0);
  j["worst_point"] = c.worst_point;
  j["worst_margin"] = num(c.worst_margin);
  j["tilde_cone_ok"] = c.tilde_cone_ok;
  return j;
}

inline json to_json(const FieldNorms& n) {
  return {{"sup_u", num(n.sup_u)}, {"sup_grad", num(n.sup_grad)}, {"sup_ddbar", num(n.sup_ddbar)},
          {"sup_hess", num(n.sup_hess)}};
}

inline json to_json(const EstimateReport& e) {
  json j;
  j["norms"] = to_json(e.norms);
  j["lambda1_max"] = num(e.lambda1_max);
  j["L"] = num(e.L);
  j["rho_norm_max"] = num(e.rho_norm_max);
  j["rho_min_eig"] = num(e.rho_min_eig);
  j["A_const"] = num(e.A_const);
  j["Q_max"] = num(e.Q_max);
  j["xi_at_max"] = num(e.xi_at_max);
  j["eta_at_max"] = num(e.eta_at_max);
  j["xi_prime_at_max"] = num(e.xi_prime_at_max);
  j["Q_argmax"] = e.Q_argmax;
  j["Q_max_wide"] = num(e.Q_max_wide);
  j["xi_wide_at_max"] = num(e.xi_wide_at_max);
  j["eta_wide_at_max"] = num(e.eta_wide_at_max);
  j["F_diag_min"] = num(e.F_diag_min);
  j["F_trace_max"] = num(e.F_trace_max);
  j["F_ordering_ok"] = e.F_ordering_ok;
  j["cone_violations"] = e.cone_violations;
  if (e.degenerate) j["degenerate"] = *e.degenerate;
  if (e.partial) j["partial"] = *e.partial;
  return j;
}

inline std::size_t count(const Mask& m) {
  std::size_t c = 0;
  for (char v : m) c += v ? 1 : 0;
  return c;
}

inline json to_json(const PenalizationState& s) {
  json j;
  j["eps"] = num(s.eps);
  j["residual_offK"] = num(s.residual_offK);
  j["residual_onK"] = num(s.residual_onK);
  j["sup_overshoot"] = num(s.sup_overshoot);
  j["overshoot_ratio"] = num(s.overshoot_ratio);
  j["contact_tol"] = num(s.contact_tol);
  j["contact_cells"] = count(s.contact_mask);
  j["solve_report"] = to_json(s.report);
  return j;
}

inline json to_json(const TrendRecord& t) {
  return {{"overshoot_ratio_min", num(t.overshoot_ratio_min)},
          {"overshoot_ratio_max", num(t.overshoot_ratio_max)},
          {"hessian_variation_factor", num(t.hessian_variation_factor)},
          {"sup_hessian", nums(t.sup_hessian)},
          {"slope_overshoot", num(t.slope_overshoot)},
          {"slope_offK", num(t.slope_offK)},
          {"slope_onK", num(t.slope_onK)}};
}

/// `estimates[k]` is the diagnostic for rung k (may be shorter than states).
inline json to_json(const EnvelopeResult& r, const std::vector<EstimateReport>& estimates) {
  json j;
  j["c_ratio"] = num(r.c_ratio);
  j["rung_distances"] = nums(r.rung_distances);
  j["monotone_trend"] = r.monotone_trend;
  j["contact_cells"] = count(r.K);
  json rungs = json::array();
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    auto s = to_json(r.states[k]);
    if (k < estimates.size()) s["estimate"] = to_json(estimates[k]);
    rungs.push_back(std::move(s));
  }
  j["rungs"] = std::move(rungs);
  if (r.error) j["error"] = *r.error;
  return j;
}

}  // namespace cxhess::report
