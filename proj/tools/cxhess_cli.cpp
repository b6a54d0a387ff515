// Command-line driver: one JSON config in, report.json plus CSV field dumps out.
//
//   cxhess <solve|envelope|eigenpair|subcheck|verify> --config run.json [--threads k] [--out dir]
//
// Exit status: 0 success, 1 verify found a failing property, 2 invalid
// configuration, 3 the solver did not converge (everything computed so far is
// still written).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cxhess/config.hpp"
#include "cxhess/diagnostics.hpp"
#include "cxhess/envelope.hpp"
#include "cxhess/newton_solver.hpp"
#include "cxhess/oracles.hpp"
#include "cxhess/parallel.hpp"
#include "cxhess/report.hpp"
#include "cxhess/subsolution.hpp"
#include "cxhess/verify.hpp"

namespace fs = std::filesystem;
using namespace cxhess;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kInvalid = 2, kNoConvergence = 3 };

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json error_json(const std::exception& e) {
  json j{{"message", e.what()}};
  if (auto* c = dynamic_cast<const ConeViolation*>(&e)) {
    j["type"] = "cone_violation";
    j["inequality"] = c->inequality();
    j["margin"] = report::num(c->margin());
  } else if (auto* d = dynamic_cast<const DivergenceError*>(&e)) {
    j["type"] = "divergence";
    j["point"] = d->point();
  } else if (dynamic_cast<const NonConvergence*>(&e)) {
    j["type"] = "non_convergence";
  } else if (dynamic_cast<const ConfigError*>(&e)) {
    j["type"] = "config";
  } else {
    j["type"] = "error";
  }
  return j;
}

void write_mask(const std::string& path, const PeriodicGrid& g, const Mask& m) {
  std::vector<double> v(m.begin(), m.end());
  write_csv(path, g, v);
}

void write_history(const std::string& path, const std::vector<std::pair<double, SolveReport>>& runs) {
  std::ofstream out(path);
  out << "eps,iteration,residual,merit,cone_margin\n";
  char buf[160];
  for (const auto& [eps, r] : runs)
    for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
      const double merit = k < r.merit_history.size() ? r.merit_history[k] : std::nan("");
      const double margin = k < r.cone_margin_history.size() ? r.cone_margin_history[k] : std::nan("");
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g\n", eps, k, r.residual_history[k], merit, margin);
      out << buf;
    }
}

std::optional<json> try_estimate(const ScalarField& u, const HermitianFormField& theta, const EigenOperator& op,
                                 double A, const std::optional<ScalarField>& h) {
  try {
    return report::to_json(estimate_monitor(u, theta, op, A, h));
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Contact band on a line through the grid: cells where masks a and b differ,
// and the number of free-boundary points of b.
std::pair<std::size_t, std::size_t> mismatch(const Mask& a, const Mask& b) {
  std::size_t diff = 0, edges = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += a[i] != b[i];
    edges += b[i] != b[(i + 1) % b.size()];
  }
  return {diff, edges};
}

struct Run {
  json report;
  int code = kOk;
};

Run run_solve(const RunConfig& c, const fs::path& out) {
  Run r;
  const PeriodicGrid g(c.n, c.N);
  const auto theta = build_theta(c.theta, g);
  const auto h = c.h.sample(g);
  write_csv((out / "h.csv").string(), h);
  try {
    const auto res = solve_nondegenerate(c.op, theta, h, c.solver);
    r.report["solve_report"] = report::to_json(res.report);
    if (auto e = try_estimate(res.u, theta, c.op, c.A_const, h)) r.report["solve_report"]["estimate"] = *e;
    write_csv((out / "u.csv").string(), res.u);
    write_history((out / "residual_history.csv").string(), {{0.0, res.report}});
  } catch (const SolverNonConvergence& e) {
    r.report["solve_report"] = report::to_json(e.report());
    write_history((out / "residual_history.csv").string(), {{0.0, e.report()}});
    throw;
  }
  return r;
}

Run run_eigenpair(const RunConfig& c, const fs::path& out) {
  Run r;
  const PeriodicGrid g(c.n, c.N);
  const auto theta = build_theta(c.theta, g);
  const auto h = c.h.sample(g);
  write_csv((out / "h.csv").string(), h);
  try {
    const auto res = solve_eigenpair(c.op, theta, h, c.solver);
    r.report["solve_report"] = report::to_json(res.report);
    write_csv((out / "u.csv").string(), res.u);
    write_history((out / "residual_history.csv").string(), {{c.solver.eps_reg_schedule.back(), res.report}});
  } catch (const SolverNonConvergence& e) {
    r.report["solve_report"] = report::to_json(e.report());
    throw;
  }
  return r;
}

Run run_envelope(const RunConfig& c, const fs::path& out) {
  Run r;
  const PeriodicGrid g(c.n, c.N);
  const auto theta = build_theta(c.theta, g);
  const auto h = c.h.sample(g);
  write_csv((out / "h.csv").string(), h);
  const int m = c.op.m;
  const auto res = compute_envelope(theta, h, m, c.schedule, c.solver);
  const auto log_op = EigenOperator::hessian_log(c.n, m);

  std::vector<EstimateReport> estimates;
  std::vector<std::pair<double, SolveReport>> runs;
  for (const auto& s : res.states) {
    try {
      estimates.push_back(estimate_monitor(s.u, theta, log_op, c.A_const, h));
    } catch (const Error&) {
      break;
    }
    runs.emplace_back(s.eps, s.report);
  }
  auto env = report::to_json(res, estimates);
  if (!res.states.empty()) {
    env["sup_P_minus_h"] = report::num((res.P - h).max());
    write_csv((out / "P.csv").string(), res.P);
    write_mask((out / "K.csv").string(), g, res.K);
  }
  write_history((out / "residual_history.csv").string(), runs);

  if (m == 1 && !res.states.empty() && !res.error) {
    // the linear case has an independent reference
    const auto ps = oracles::psor_obstacle(theta, h);
    write_csv((out / "P_psor.csv").string(), ps.u);
    const double eps = res.states.back().eps;
    const auto banded = contact_set(ps.u, h, eps, res.c_ratio, c.solver);
    Mask active(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) active[p] = h[p] - ps.u[p] <= 1e-12;
    const auto [diff, edges] = mismatch(res.K, banded);
    const auto [diff_active, edges_active] = mismatch(res.K, active);
    env["psor_comparison"] = {{"sup_P_minus_psor", report::num((res.P - ps.u).sup_abs())},
                              {"psor_sweeps", ps.sweeps},
                              {"complementarity_residual", report::num(ps.complementarity_residual)},
                              {"mask_mismatch_cells", diff},
                              {"mask_boundaries", edges},
                              {"active_set_mismatch_cells", diff_active},
                              {"active_set_boundaries", edges_active}};
  }
  r.report["envelope_result"] = std::move(env);

  if (res.states.size() >= 3) {
    const auto t = epsilon_trend(res.states);
    r.report["trend"] = report::to_json(t);
    std::ofstream csv(out / "trend.csv");
    csv << "eps,sup_overshoot,overshoot_ratio,residual_offK,residual_onK,sup_hessian,Q_max\n";
    char buf[256];
    for (std::size_t k = 0; k < res.states.size(); ++k) {
      const auto& s = res.states[k];
      const double q = k < estimates.size() ? estimates[k].Q_max : std::nan("");
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.eps, s.sup_overshoot,
                    s.overshoot_ratio, s.residual_offK, s.residual_onK, t.sup_hessian[k], q);
      csv << buf;
    }
  }
  if (res.error) {
    r.report["error"] = {{"type", "non_convergence"}, {"message", *res.error}};
    r.code = kNoConvergence;
  }
  return r;
}

Run run_subcheck(const RunConfig& c, const fs::path& out) {
  Run r;
  const PeriodicGrid g(c.n, c.N);
  const auto theta = build_theta(c.theta, g);
  const auto h = c.h.sample(g);
  const auto u = c.u_sub.sample(g);
  write_csv((out / "h.csv").string(), h);
  write_csv((out / "u_sub.csv").string(), u);
  r.report["certificate"] = report::to_json(subsolution_check(c.op, theta, u, h));
  return r;
}

Run run_verify(const RunConfig& c) {
  Run r;
  const auto s = verify::run_suite(c.suite, c.seed);
  r.report["verify"] = verify::to_json(s);
  if (!s.passed()) r.code = kVerifyFailed;
  return r;
}

void write_report(const fs::path& out, const json& j) {
  std::ofstream f(out / "report.json");
  f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fully nonlinear complex Hessian equations on flat tori"};
  std::string command, config_path, out_dir, suite;
  int threads = 0;
  std::optional<unsigned> seed;
  app.add_option("command", command, "solve | envelope | eigenpair | subcheck | verify")
      ->required()
      ->check(CLI::IsMember({"solve", "envelope", "eigenpair", "subcheck", "verify"}));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--suite", suite, "verify suite (overrides the config)");
  app.add_option("--seed", seed, "verify seed (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }
  if (threads > 0) set_thread_count(threads);

  const auto t0 = Clock::now();
  RunConfig cfg;
  try {
    cfg = load_config(config_path, command);
  } catch (const Error& e) {
    std::cerr << "cxhess: " << e.what() << '\n';
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_report(out_dir, {{"error", error_json(e)}});
    }
    return kInvalid;
  }
  if (!suite.empty()) cfg.suite = suite;
  if (seed) cfg.seed = *seed;
  const fs::path out = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
  fs::create_directories(out);

  json report;
  report["config_echo"] = cfg.echo;
  int code = kOk;
  const auto t1 = Clock::now();
  try {
    Run r;
    switch (cfg.command) {
      case Command::solve: r = run_solve(cfg, out); break;
      case Command::envelope: r = run_envelope(cfg, out); break;
      case Command::eigenpair: r = run_eigenpair(cfg, out); break;
      case Command::subcheck: r = run_subcheck(cfg, out); break;
      case Command::verify: r = run_verify(cfg); break;
    }
    report.update(r.report);
    code = r.code;
  } catch (const SolverNonConvergence& e) {
    report["solve_report"] = report::to_json(e.report());
    report["error"] = error_json(e);
    code = kNoConvergence;
  } catch (const NonConvergence& e) {
    report["error"] = error_json(e);
    code = kNoConvergence;
  } catch (const DivergenceError& e) {
    report["error"] = error_json(e);
    code = kNoConvergence;
  } catch (const ConeViolation& e) {
    report["error"] = error_json(e);
    code = kNoConvergence;
  } catch (const Error& e) {
    report["error"] = error_json(e);
    code = kInvalid;
  }
  report["timings"] = {{"run_s", seconds_since(t1)}, {"total_s", seconds_since(t0)}};
  write_report(out, report);
  if (report.contains("error")) std::cerr << "cxhess: " << report["error"]["message"].get<std::string>() << '\n';
  if (cfg.command == Command::verify) {
    for (const auto& p : report["verify"]["properties"])
      std::cout << (p["passed"].get<bool>() ? "PASS " : "FAIL ") << cfg.suite << '.' << p["name"].get<std::string>()
                << " (" << p["cases"].get<long>() << " cases)\n";
  }
  return code;
}
