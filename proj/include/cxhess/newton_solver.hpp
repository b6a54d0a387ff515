#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cxhess/eigen_ops.hpp"
#include "cxhess/errors.hpp"
#include "cxhess/krylov.hpp"
#include "cxhess/parallel.hpp"
#include "cxhess/torus_field.hpp"

namespace cxhess {

struct SolverConfig {
  int max_newton_iters = 50;
  double residual_tol = 1e-10;  // discrete sup-norm
  double cone_margin = 1e-8;
  double damping = 0.5;
  double krylov_tol = 1e-3;  // inner relative tolerance cap; tightened to the outer residual
  int krylov_max_iters = 1000;
  int krylov_restart = 200;
  int max_backtracks = 40;
  std::vector<double> eps_reg_schedule{1e-1, 1e-2, 1e-3, 1e-4};

  void validate() const {
    if (max_newton_iters <= 0 || krylov_max_iters <= 0 || krylov_restart <= 0 || max_backtracks <= 0)
      throw DomainError("solver: iteration limits must be positive");
    if (!(residual_tol > 0.0) || !(cone_margin > 0.0) || !(krylov_tol > 0.0))
      throw DomainError("solver: tolerances must be positive");
    if (!(damping > 0.0 && damping < 1.0)) throw DomainError("solver: damping factor must lie in (0,1)");
    for (double e : eps_reg_schedule)
      if (!(e > 0.0)) throw DomainError("solver: eps_reg schedule entries must be positive");
  }
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  bool roundoff_limited = false;  // stopped at the floating-point floor above residual_tol
  double final_residual = 0.0;  // sup norm
  double noise_floor = 0.0;     // roundoff level of the last residual evaluation
  double constant = 0.0;        // b for the plain equation, log c for the eigenpair
  std::optional<double> c;      // eigenvalue constant (eigenpair runs only)
  std::vector<double> residual_history;  // sup norm, one entry per iterate
  std::vector<double> merit_history;     // rms norm used for step acceptance
  std::vector<double> cone_margin_history;
  std::vector<int> krylov_iterations;
  std::vector<double> step_lengths;
  std::vector<double> c_sequence;  // eigenpair runs: c per regularization rung
  double wall_time_s = 0.0;
};

/// Non-convergence that carries the partial report.
class SolverNonConvergence : public NonConvergence {
 public:
  SolverNonConvergence(const std::string& what, SolveReport report)
      : NonConvergence(what), report_(std::move(report)) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

/// Linearized operator  du -> Re tr(G ddbar du) + c du  with a pointwise
/// Hermitian coefficient G and zeroth-order coefficient c. The preconditioner
/// inverts the constant-coefficient operator built from the grid means of G and c.
class Linearization {
 public:
  Linearization(const PeriodicGrid& g, std::vector<cplx> coeff, std::vector<double> zeroth, bool bordered)
      : grid_(g), coeff_(std::move(coeff)), zeroth_(std::move(zeroth)), bordered_(bordered) {
    const int n = g.n();
    const std::size_t M = g.size();
    Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t p = 0; p < M; ++p)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) mean(j, k) += coeff_[(p * n + k) * n + j];
    mean /= static_cast<double>(M);
    double cbar = 0.0;
    for (double c : zeroth_) cbar += c;
    cbar /= static_cast<double>(M);
    const auto& st = spectral(g);
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        pairs_.emplace_back(j, k);
        std::vector<cplx> sym(M), gq(M);
        for (std::size_t i = 0; i < M; ++i) sym[i] = st.ddbar_symbol(i, k, j);
        for (std::size_t p = 0; p < M; ++p) gq[p] = coeff_[(p * n + k) * n + j];
        symbols_.push_back(std::move(sym));
        pair_coeff_.push_back(std::move(gq));
      }
    inverse_symbol_.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
      cplx sym = cbar;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) sym += mean(j, k) * st.ddbar_symbol(i, k, j);
      if (i == 0) sym = bordered_ ? cplx{-1.0} : (cbar != 0.0 ? cplx{cbar} : cplx{1.0});
      inverse_symbol_[i] = std::abs(sym) > 1e-300 ? 1.0 / sym : cplx{1.0};
    }
  }

  const PeriodicGrid& grid() const { return grid_; }
  bool bordered() const { return bordered_; }
  std::span<const cplx> coefficient(std::size_t p) const {
    const std::size_t nn = static_cast<std::size_t>(grid_.n()) * grid_.n();
    return {coeff_.data() + p * nn, nn};
  }

  /// Re tr(G i ddbar du) + c du at every point.
  void apply_operator(const Vector& du, Vector& out) const {
    const std::size_t M = grid_.size();
    const auto& st = spectral(grid_);
    const auto hat = st.forward(du);
    out.assign(M, 0.0);
    std::vector<cplx> work(M);
    for (std::size_t q = 0; q < pairs_.size(); ++q) {
      const auto& sym = symbols_[q];
      for (std::size_t i = 0; i < M; ++i) work[i] = sym[i] * hat[i];
      st.inverse_inplace(work);
      // chi_{kj}; the (k, j) partner of an off-diagonal pair contributes the conjugate
      const auto& gq = pair_coeff_[q];
      const double mult = pairs_[q].first == pairs_[q].second ? 1.0 : 2.0;
      for (std::size_t p = 0; p < M; ++p) out[p] += mult * (gq[p] * work[p]).real();
    }
    for (std::size_t p = 0; p < M; ++p) out[p] += zeroth_[p] * du[p];
  }

  /// Bordered form: v -> L(v - mean v) - mean v (mean v is the constant update).
  void apply(const Vector& v, Vector& out) const {
    if (!bordered_) {
      apply_operator(v, out);
      return;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    Vector centered(v);
    for (double& x : centered) x -= mean;
    apply_operator(centered, out);
    for (double& x : out) x -= mean;
  }

  void precondition(const Vector& in, Vector& out) const {
    const auto& st = spectral(grid_);
    auto hat = st.forward(in);
    for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= inverse_symbol_[i];
    st.inverse_inplace(hat);
    out.resize(in.size());
    for (std::size_t p = 0; p < in.size(); ++p) out[p] = hat[p].real();
  }

 private:
  PeriodicGrid grid_;
  std::vector<cplx> coeff_;
  std::vector<double> zeroth_;
  bool bordered_;
  std::vector<cplx> inverse_symbol_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::vector<cplx>> symbols_;     // ddbar symbol of chi_{kj} per pair j <= k
  std::vector<std::vector<cplx>> pair_coeff_;  // G_{jk} per pair, contiguous over the grid
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Per-point outcome of a pointwise model F(lambda, u) used by the Newton driver.
struct PointResult {
  double residual = 0.0;
  double zeroth = 0.0;       // d residual / d u
  double margin = 0.0;       // guard value (> 0 required)
  bool admissible = false;
  std::vector<double> weights;  // d residual / d lambda_i
};

struct Evaluation {
  std::vector<double> residual;
  double sup = 0.0;
  double rms = 0.0;
  bool admissible = true;
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t witness = 0;  // point of smallest guard margin
  double noise_floor = 0.0;  // residual level attainable in double precision
  std::optional<Linearization> linearization;
};

using PointModel = std::function<PointResult(std::size_t p, std::span<const double> lambda, double u, bool weights)>;

/// Evaluates the model at chi = theta + i ddbar u. With `linearize`, builds the
/// coefficient G = V diag(weights) V^* per point.
inline Evaluation evaluate_model(const HermitianFormField& theta, const ScalarField& u, const PointModel& model,
                                 bool linearize, bool bordered) {
  const auto& g = u.grid;
  const int n = g.n();
  const std::size_t M = g.size();
  const auto chi = theta + spectral_ddbar(u);
  Evaluation ev;
  ev.residual.resize(M);
  std::vector<double> margin(M, 0.0);
  std::vector<char> ok(M, 0);
  std::vector<double> sensitivity(M, 0.0), scale(M, 0.0);
  std::vector<cplx> coeff;
  std::vector<double> zeroth;
  if (linearize) {
    coeff.assign(M * n * n, cplx{});
    zeroth.assign(M, 0.0);
  }
  parallel_for(M, [&](std::size_t p) {
    std::vector<double> lambda(n);
    Eigen::MatrixXcd vecs;
    if (n == 1) {
      lambda[0] = chi.entry(p, 0, 0).real();
      vecs = Eigen::MatrixXcd::Identity(1, 1);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(chi.at(p),
                                                          linearize ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      for (int i = 0; i < n; ++i) lambda[i] = es.eigenvalues()[n - 1 - i];
      if (linearize) vecs = es.eigenvectors().rowwise().reverse();
    }
    const auto r = model(p, lambda, u[p], linearize);
    ev.residual[p] = r.residual;
    margin[p] = r.margin;
    ok[p] = r.admissible;
    if (linearize) {
      for (double w : r.weights) sensitivity[p] += std::abs(w);
      for (double l : lambda) scale[p] = std::max(scale[p], std::abs(l));
    }
    if (linearize && r.admissible) {
      Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(r.weights.data(), n);
      const Eigen::MatrixXcd G = vecs * w.asDiagonal() * vecs.adjoint();
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) coeff[(p * n + k) * n + j] = G(j, k);
      zeroth[p] = r.zeroth;
    }
  });
  double ss = 0.0;
  for (std::size_t p = 0; p < M; ++p) {
    if (!ok[p]) ev.admissible = false;
    if (margin[p] < ev.min_margin) {
      ev.min_margin = margin[p];
      ev.witness = p;
    }
    if (ok[p]) {
      ev.sup = std::max(ev.sup, std::abs(ev.residual[p]));
      ss += ev.residual[p] * ev.residual[p];
    }
  }
  ev.rms = std::sqrt(ss / static_cast<double>(M));
  if (linearize) {
    // eigenvalues of chi carry FFT roundoff ~ eps log2(M) (|theta| + |ddbar u|);
    // the residual inherits it through the weights
    const double sup_scale = *std::max_element(scale.begin(), scale.end()) + 1.0;
    const double sup_sens = *std::max_element(sensitivity.begin(), sensitivity.end());
    ev.noise_floor = 64.0 * std::numeric_limits<double>::epsilon() * std::log2(static_cast<double>(M) + 1.0) *
                     2.0 * sup_scale * sup_sens;
  }
  if (!ev.admissible) ev.sup = ev.rms = std::numeric_limits<double>::infinity();
  if (linearize && ev.admissible) ev.linearization.emplace(g, std::move(coeff), std::move(zeroth), bordered);
  return ev;
}

/// Damped Newton-Krylov on R(u, b) = 0, where b is an additive unknown constant
/// when `bordered`. Step acceptance: guard holds everywhere and the rms
/// residual decreases; the step is halved (by cfg.damping) otherwise.
inline SolveReport newton_solve(const HermitianFormField& theta, ScalarField& u, double& b,
                                const std::function<PointModel(double b)>& model_for, bool bordered,
                                const SolverConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  auto finish = [&] {
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto ev = evaluate_model(theta, u, model_for(b), true, bordered);
  if (!ev.admissible)
    throw DivergenceError("initial iterate violates the cone guard (margin " + detail::sci(ev.min_margin) + ")",
                          ev.witness);
  const std::size_t M = u.size();
  for (int it = 0;; ++it) {
    rep.residual_history.push_back(ev.sup);
    rep.merit_history.push_back(ev.rms);
    rep.cone_margin_history.push_back(ev.min_margin);
    rep.final_residual = ev.sup;
    rep.noise_floor = ev.noise_floor;
    rep.iterations = it;
    rep.constant = b;
    if (ev.sup <= cfg.residual_tol) {
      rep.converged = true;
      finish();
      return rep;
    }
    if (it >= cfg.max_newton_iters) {
      finish();
      throw SolverNonConvergence("newton: iteration budget exhausted (residual " + detail::sci(ev.sup) + ")",
                                 rep);
    }
    // inexact Newton forcing: tracks the outer residual while convergence is
    // quadratic, (r_k / r_{k-1})^2 once it is only linear (degenerate
    // Jacobians). Keeping it O(r_k) preserves the quadratic tail.
    double forcing = ev.sup;
    if (it > 0) {
      const double ratio = ev.sup / rep.residual_history[it - 1];
      forcing = std::max(forcing, 0.9 * ratio * ratio);
    }
    forcing = std::min(cfg.krylov_tol, forcing);
    forcing = std::max(forcing, 1e-13);
    Vector rhs(M), step(M, 0.0);
    for (std::size_t p = 0; p < M; ++p) rhs[p] = -ev.residual[p];
    const auto& L = *ev.linearization;
    const auto kr = gmres([&](const Vector& x, Vector& y) { L.apply(x, y); },
                          [&](const Vector& x, Vector& y) { L.precondition(x, y); }, rhs, step, forcing,
                          cfg.krylov_max_iters, cfg.krylov_restart);
    rep.krylov_iterations.push_back(kr.iterations);

    double db = 0.0;
    if (bordered) {
      double mean = 0.0;
      for (double x : step) mean += x;
      mean /= static_cast<double>(M);
      for (double& x : step) x -= mean;
      db = mean;
    }

    double s = 1.0;
    bool feasible_seen = false;
    std::size_t witness = ev.witness;
    std::optional<Evaluation> accepted;
    ScalarField trial(u.grid);
    for (int k = 0; k < cfg.max_backtracks; ++k, s *= cfg.damping) {
      for (std::size_t p = 0; p < M; ++p) trial[p] = u[p] + s * step[p];
      auto tev = evaluate_model(theta, trial, model_for(b + s * db), false, bordered);
      if (!tev.admissible) {
        witness = tev.witness;
        continue;
      }
      feasible_seen = true;
      if (tev.rms < ev.rms * (1.0 - 1e-4 * s) || tev.sup <= cfg.residual_tol) {
        accepted = std::move(tev);
        break;
      }
    }
    if (!accepted) {
      finish();
      if (!feasible_seen) throw DivergenceError("newton: damping cannot keep the iterate in the cone", witness);
      if (ev.sup <= ev.noise_floor) {
        rep.converged = true;
        rep.roundoff_limited = true;
        return rep;
      }
      throw SolverNonConvergence("newton: line search stalled at residual " + detail::sci(ev.sup), rep);
    }
    u = trial;
    b += s * db;
    rep.step_lengths.push_back(s);
    ev = evaluate_model(theta, u, model_for(b), true, bordered);
  }
}

inline void require_same_grid(const HermitianFormField& theta, const ScalarField& h) {
  if (!(theta.grid() == h.grid)) throw GridMismatch("theta and h live on different grids");
}

}  // namespace detail

struct SolveResult {
  ScalarField u;
  SolveReport report;
};

/// Builds the linearization of u -> f(lambda(chi + i ddbar u)) at chi and applies it to du.
inline ScalarField linearized_apply(const EigenOperator& op, const HermitianFormField& chi, const ScalarField& du) {
  if (!(chi.grid() == du.grid)) throw GridMismatch("linearized_apply: grid mismatch");
  const auto model = [&](std::size_t, std::span<const double> lambda, double, bool) {
    detail::PointResult r;
    const auto t = in_cone(op.cone(), lambda);
    if (!t.inside) throw ConeViolation(t.inequality, t.margin);
    r.admissible = true;
    r.margin = t.margin;
    r.weights = f_grad(op, lambda);
    return r;
  };
  const auto ev = detail::evaluate_model(chi, ScalarField(du.grid, 0.0), model, true, false);
  Vector out;
  ev.linearization->apply_operator(du.values, out);
  return ScalarField(du.grid, std::move(out));
}

/// Solves f(lambda(theta + i ddbar u)) = h + b for (u, b); u is returned with sup u = -1.
inline SolveResult solve_nondegenerate(const EigenOperator& op, const HermitianFormField& theta, const ScalarField& h,
                                       const SolverConfig& cfg = {},
                                       const std::optional<ScalarField>& initial = std::nullopt) {
  cfg.validate();
  detail::require_same_grid(theta, h);
  if (theta.n() != op.n) throw DomainError("solve: operator dimension differs from grid");
  ScalarField u = initial ? *initial : ScalarField(h.grid, 0.0);
  if (!(u.grid == h.grid)) throw GridMismatch("solve: initial iterate grid mismatch");
  u += -u.mean();

  const auto cone = op.cone();
  auto model_for = [&](double b) -> detail::PointModel {
    return [&, b](std::size_t p, std::span<const double> lambda, double, bool weights) {
      detail::PointResult r;
      const auto t = in_cone(cone, lambda);
      r.margin = t.margin;
      r.admissible = t.margin >= cfg.cone_margin;
      if (!r.admissible) return r;
      r.residual = f_eval(op, lambda) - h[p] - b;
      if (weights) r.weights = f_grad(op, lambda);
      return r;
    };
  };

  // start b at the mean residual of the initial iterate
  double b = 0.0;
  {
    const auto ev = detail::evaluate_model(theta, u, model_for(0.0), false, true);
    if (!ev.admissible)
      throw DivergenceError("solve: initial iterate is outside the cone (margin " + detail::sci(ev.min_margin) +
                                ")",
                            ev.witness);
    for (double r : ev.residual) b += r;
    b /= static_cast<double>(u.size());
  }
  auto report = detail::newton_solve(theta, u, b, model_for, true, cfg);
  // two steps so the maximum lands on -1 without rounding
  u += -u.max();
  u += -1.0;
  report.constant = b;
  return {std::move(u), std::move(report)};
}

struct EigenpairResult {
  ScalarField u;
  double c = 0.0;
  SolveReport report;
};

/// Degenerate eigenpair (theta + i ddbar u)^m wedge omega^{n-m} = c h omega^n with
/// sup u = -1, approximated by the regularizations h + eps_reg along the
/// schedule: log sigma_m(lambda) = log c + log(C(n,m) (h + eps_reg)).
inline EigenpairResult solve_eigenpair(const EigenOperator& op, const HermitianFormField& theta, const ScalarField& h,
                                       const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require_same_grid(theta, h);
  if (op.kind != OperatorKind::hessian_log_sigma_m && op.kind != OperatorKind::hessian_root_sigma_m &&
      op.kind != OperatorKind::monge_ampere)
    throw DomainError("eigenpair: requires a complex Hessian operator");
  if (h.min() < 0.0) throw DomainError("eigenpair: h must be non-negative");
  if (!(h.mean() > 0.0)) throw DomainError("eigenpair: h integrates to zero");
  if (cfg.eps_reg_schedule.empty()) throw DomainError("eigenpair: empty regularization schedule");

  const auto log_op = EigenOperator::hessian_log(op.n, op.m);
  const double binom = binomial(op.n, op.m);
  EigenpairResult out{ScalarField(h.grid, 0.0), 0.0, {}};
  std::optional<ScalarField> warm;
  std::vector<double> cs;
  double wall = 0.0;
  for (double eps : cfg.eps_reg_schedule) {
    ScalarField rhs(h.grid);
    for (std::size_t p = 0; p < h.size(); ++p) rhs[p] = std::log(binom * (h[p] + eps));
    auto res = solve_nondegenerate(log_op, theta, rhs, cfg, warm);
    warm = res.u;
    cs.push_back(std::exp(res.report.constant));
    wall += res.report.wall_time_s;
    out.u = std::move(res.u);
    out.report = std::move(res.report);
  }
  out.c = cs.back();
  out.report.c = out.c;
  out.report.c_sequence = cs;
  out.report.wall_time_s = wall;
  return out;
}

}  // namespace cxhess
