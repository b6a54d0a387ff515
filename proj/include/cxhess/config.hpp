#pragma once

// Run configuration: JSON in, validated domain objects out.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxhess/eigen_ops.hpp"
#include "cxhess/errors.hpp"
#include "cxhess/newton_solver.hpp"
#include "cxhess/torus_field.hpp"
#include "cxhess/trig_poly.hpp"

namespace cxhess {

using json = nlohmann::ordered_json;

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Command { solve, envelope, eigenpair, subcheck, verify };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::solve: return "solve";
    case Command::envelope: return "envelope";
    case Command::eigenpair: return "eigenpair";
    case Command::subcheck: return "subcheck";
    case Command::verify: return "verify";
  }
  return "?";
}

inline Command command_from_string(const std::string& s) {
  for (auto c : {Command::solve, Command::envelope, Command::eigenpair, Command::subcheck, Command::verify})
    if (to_string(c) == s) return c;
  throw ConfigError("unknown command '" + s + "'");
}

/// A real or complex-valued entry perturbation of theta: entry (j, k) gains
/// real(x) + i imag(x); (k, j) receives the conjugate.
struct ThetaPerturbation {
  int j = 0, k = 0;
  TrigPolynomial real;
  std::optional<TrigPolynomial> imag;
};

struct ThetaSpec {
  double identity_times = 1.0;
  std::optional<Eigen::MatrixXcd> matrix;  // replaces identity_times when given
  std::vector<ThetaPerturbation> perturbation;
};

struct RunConfig {
  Command command = Command::solve;
  int n = 1, N = 16;
  EigenOperator op = EigenOperator::monge_ampere(1);
  ThetaSpec theta;
  TrigPolynomial h;
  TrigPolynomial u_sub;  // subcheck only
  std::vector<double> schedule{1e-1, 1e-2, 1e-3};
  SolverConfig solver;
  double A_const = 1.0;
  std::string suite = "eigenops";  // verify only
  unsigned seed = 20240601;        // verify only
  std::string output_dir = "out";
  json echo;  // the parsed input, echoed into the report
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("config: unknown field '" + it.key() + "' in " + where);
}

inline TrigPolynomial parse_trig(const json& j, const std::string& where) {
  TrigPolynomial p;
  if (j.is_number()) {
    p.offset = j.get<double>();
    return p;
  }
  if (j.is_array()) return parse_trig(json{{"terms", j}}, where);
  reject_unknown(j, {"offset", "terms"}, where);
  p.offset = get_or<double>(j, "offset", 0.0);
  if (j.contains("terms")) {
    if (!j["terms"].is_array()) throw ConfigError("config: " + where + ".terms must be an array");
    for (const auto& t : j["terms"]) {
      reject_unknown(t, {"wavevector", "amplitude", "phase"}, where + ".terms[]");
      if (!t.contains("wavevector")) throw ConfigError("config: " + where + " term without wavevector");
      TrigTerm term;
      term.wavevector = get_or<std::vector<int>>(t, "wavevector", {});
      term.amplitude = get_or<double>(t, "amplitude", 0.0);
      term.phase = get_or<double>(t, "phase", 0.0);
      p.terms.push_back(std::move(term));
    }
  }
  return p;
}

inline EigenOperator parse_operator(const json& j, int n) {
  reject_unknown(j, {"name", "m", "ell", "shift"}, "operator");
  if (!j.contains("name")) throw ConfigError("config: operator.name is required");
  OperatorKind kind;
  auto name = j["name"].get<std::string>();
  if (name == "hessian") name = "hessian_log_sigma_m";
  if (name == "ma") name = "monge_ampere";
  try {
    kind = operator_kind_from_string(name);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  EigenOperator op;
  op.kind = kind;
  op.n = n;
  op.m = get_or<int>(j, "m", kind == OperatorKind::monge_ampere || kind == OperatorKind::n_minus_one_ma ? n : 1);
  op.ell = get_or<int>(j, "ell", 0);
  op.shift = get_or<double>(j, "shift", 0.0);
  if (kind == OperatorKind::monge_ampere || kind == OperatorKind::n_minus_one_ma) op.m = n;
  try {
    op.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return op;
}

inline ThetaSpec parse_theta(const json& j, int n) {
  ThetaSpec t;
  reject_unknown(j, {"identity_times", "matrix", "perturbation"}, "theta");
  t.identity_times = get_or<double>(j, "identity_times", 1.0);
  if (j.contains("matrix")) {
    // row-major list of n*n [re, im] pairs
    const auto& m = j["matrix"];
    if (!m.is_array() || m.size() != static_cast<std::size_t>(n * n))
      throw ConfigError("config: theta.matrix needs " + std::to_string(n * n) + " [re, im] pairs");
    Eigen::MatrixXcd A(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const auto& e = m[r * n + c];
        if (!e.is_array() || e.size() != 2) throw ConfigError("config: theta.matrix entries are [re, im] pairs");
        A(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      }
    if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("config: theta.matrix is not Hermitian");
    t.matrix = A;
  }
  if (j.contains("perturbation")) {
    for (const auto& e : j["perturbation"]) {
      reject_unknown(e, {"entry", "real", "imag"}, "theta.perturbation[]");
      const auto idx = get_or<std::vector<int>>(e, "entry", {});
      if (idx.size() != 2 || idx[0] < 0 || idx[1] < 0 || idx[0] >= n || idx[1] >= n)
        throw ConfigError("config: theta.perturbation entry must be [j, k] with 0 <= j, k < n");
      ThetaPerturbation p;
      p.j = idx[0];
      p.k = idx[1];
      if (e.contains("real")) p.real = parse_trig(e["real"], "theta.perturbation.real");
      if (e.contains("imag")) {
        if (p.j == p.k) throw ConfigError("config: diagonal theta perturbations must be real");
        p.imag = parse_trig(e["imag"], "theta.perturbation.imag");
      }
      t.perturbation.push_back(std::move(p));
    }
  }
  return t;
}

inline void parse_solver(const json& j, SolverConfig& s) {
  reject_unknown(j,
                 {"max_newton_iters", "residual_tol", "cone_margin", "damping", "krylov_tol", "krylov_max_iters",
                  "krylov_restart", "max_backtracks", "eps_reg_schedule"},
                 "solver");
  s.max_newton_iters = get_or(j, "max_newton_iters", s.max_newton_iters);
  s.residual_tol = get_or(j, "residual_tol", s.residual_tol);
  s.cone_margin = get_or(j, "cone_margin", s.cone_margin);
  s.damping = get_or(j, "damping", s.damping);
  s.krylov_tol = get_or(j, "krylov_tol", s.krylov_tol);
  s.krylov_max_iters = get_or(j, "krylov_max_iters", s.krylov_max_iters);
  s.krylov_restart = get_or(j, "krylov_restart", s.krylov_restart);
  s.max_backtracks = get_or(j, "max_backtracks", s.max_backtracks);
  s.eps_reg_schedule = get_or(j, "eps_reg_schedule", s.eps_reg_schedule);
}

}  // namespace detail

/// theta as a field on g.
inline HermitianFormField build_theta(const ThetaSpec& t, const PeriodicGrid& g) {
  auto field = t.matrix ? HermitianFormField::constant(g, *t.matrix) : HermitianFormField::identity(g, t.identity_times);
  for (const auto& p : t.perturbation) {
    const auto re = p.real.sample(g);
    const auto im = p.imag ? p.imag->sample(g) : ScalarField(g, 0.0);
    for (std::size_t q = 0; q < g.size(); ++q) {
      const cplx z(re[q], im[q]);
      field.at(q)(p.j, p.k) += z;
      if (p.j != p.k) field.at(q)(p.k, p.j) += std::conj(z);
    }
  }
  return field;
}

/// Checks theta strictly inside the operator cone at every grid point.
inline void require_theta_in_cone(const HermitianFormField& theta, const EigenOperator& op) {
  const auto lam = eigenvalues_chi(theta);
  const auto cone = op.cone();
  for (std::size_t p = 0; p < theta.grid().size(); ++p) {
    const auto t = in_cone(cone, lam.at(p));
    if (!t.inside)
      throw ConfigError("config: theta leaves the operator cone at grid point " + std::to_string(p) + " (" +
                        t.inequality + ", margin " + std::to_string(t.margin) + ")");
  }
}

inline RunConfig parse_config(const json& j, const std::optional<std::string>& command_override = std::nullopt) {
  RunConfig c;
  detail::reject_unknown(j,
                         {"command", "grid", "operator", "theta", "h", "u_sub", "schedule", "solver", "A_const",
                          "suite", "seed", "output_dir"},
                         "config");
  c.echo = j;
  const auto cmd = command_override ? *command_override : detail::get_or<std::string>(j, "command", "");
  if (cmd.empty()) throw ConfigError("config: command is required");
  c.command = command_from_string(cmd);
  c.suite = detail::get_or<std::string>(j, "suite", c.suite);
  c.seed = detail::get_or<unsigned>(j, "seed", c.seed);
  c.output_dir = detail::get_or<std::string>(j, "output_dir", c.output_dir);
  if (j.contains("solver")) detail::parse_solver(j["solver"], c.solver);
  try {
    c.solver.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.command == Command::verify) return c;

  if (!j.contains("grid")) throw ConfigError("config: grid is required");
  detail::reject_unknown(j["grid"], {"n", "N"}, "grid");
  c.n = detail::get_or<int>(j["grid"], "n", 0);
  c.N = detail::get_or<int>(j["grid"], "N", 0);
  PeriodicGrid g(1, 8);
  try {
    g = PeriodicGrid(c.n, c.N);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.contains("operator")) throw ConfigError("config: operator is required");
  c.op = detail::parse_operator(j["operator"], c.n);
  if (j.contains("theta")) c.theta = detail::parse_theta(j["theta"], c.n);
  if (j.contains("h")) c.h = detail::parse_trig(j["h"], "h");
  if (j.contains("u_sub")) c.u_sub = detail::parse_trig(j["u_sub"], "u_sub");
  c.schedule = detail::get_or(j, "schedule", c.schedule);
  c.A_const = detail::get_or(j, "A_const", c.A_const);
  try {
    c.h.validate(g);
    c.u_sub.validate(g);
    for (const auto& p : c.theta.perturbation) {
      p.real.validate(g);
      if (p.imag) p.imag->validate(g);
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.command == Command::envelope || c.command == Command::eigenpair) {
    const bool hessian = c.op.kind == OperatorKind::hessian_log_sigma_m ||
                         c.op.kind == OperatorKind::hessian_root_sigma_m ||
                         c.op.kind == OperatorKind::monge_ampere;
    if (!hessian) throw ConfigError("config: " + to_string(c.command) + " needs a complex Hessian operator");
  }
  if (c.command == Command::envelope) {
    if (c.schedule.empty()) throw ConfigError("config: envelope schedule is empty");
    for (std::size_t k = 0; k < c.schedule.size(); ++k)
      if (!(c.schedule[k] > 0.0) || (k > 0 && !(c.schedule[k] < c.schedule[k - 1])))
        throw ConfigError("config: schedule must be positive and strictly decreasing");
  }
  if (c.command == Command::eigenpair && j.contains("schedule")) c.solver.eps_reg_schedule = c.schedule;
  require_theta_in_cone(build_theta(c.theta, g), c.op);
  return c;
}

inline RunConfig load_config(const std::string& path, const std::optional<std::string>& command = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(j, command);
}

}  // namespace cxhess
