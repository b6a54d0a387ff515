#pragma once

// Property suites run from the command line. Every suite is seeded, so a
// failing case can be replayed from the serialized record.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cxhess/config.hpp"
#include "cxhess/diagnostics.hpp"
#include "cxhess/envelope.hpp"
#include "cxhess/oracles.hpp"
#include "cxhess/report.hpp"
#include "cxhess/subsolution.hpp"

namespace cxhess::verify {

struct PropertyResult {
  std::string name;
  long cases = 0;
  bool passed = true;
  std::optional<json> failing_case;  // first failure only
};

struct SuiteResult {
  std::string suite;
  unsigned seed = 0;
  std::vector<PropertyResult> properties;
  bool passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed; });
  }
};

inline json to_json(const SuiteResult& s) {
  json j;
  j["suite"] = s.suite;
  j["seed"] = s.seed;
  j["passed"] = s.passed();
  json props = json::array();
  for (const auto& p : s.properties) {
    json e{{"name", p.name}, {"cases", p.cases}, {"passed", p.passed}};
    if (p.failing_case) e["failing_case"] = *p.failing_case;
    props.push_back(std::move(e));
  }
  j["properties"] = std::move(props);
  return j;
}

namespace detail {

using std::numbers::pi;

// Records case outcomes; keeps the first failing case.
class Recorder {
 public:
  explicit Recorder(std::string name) { r_.name = std::move(name); }
  void check(bool ok, const std::function<json()>& describe) {
    ++r_.cases;
    if (!ok && r_.passed) {
      r_.passed = false;
      r_.failing_case = describe();
    }
  }
  PropertyResult done() { return std::move(r_); }

 private:
  PropertyResult r_;
};

inline std::vector<EigenOperator> catalog() {
  return {EigenOperator::monge_ampere(3),   EigenOperator::hessian_log(3, 2),  EigenOperator::hessian_root(4, 2),
          EigenOperator::quotient(3, 2, 1), EigenOperator::quotient(4, 3, 1), EigenOperator::n_minus_one(3)};
}

inline std::vector<double> interior(const EigenOperator& op, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-2.0, 3.0);
  std::vector<double> l(op.n);
  for (auto& v : l) v = d(rng);
  while (in_cone(op.cone(), l).margin < 0.05)
    for (auto& v : l) v += 0.25;
  return l;
}

inline json vec(std::span<const double> v) { return report::nums({v.begin(), v.end()}); }

inline SuiteResult eigenops(unsigned seed) {
  SuiteResult s{"eigenops", seed, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto ops = catalog();
  constexpr int kPoints = 1000;

  Recorder mono("monotonicity"), conc("concavity"), grad("gradient_consistency"), sym("symmetry"),
      homog("sigma_homogeneity"), growth("growth_along_rays");
  for (const auto& op : ops) {
    for (int t = 0; t < kPoints; ++t) {
      const auto a = interior(op, rng);
      const auto b = interior(op, rng);
      const double fa = f_eval(op, a), fb = f_eval(op, b);

      auto bumped = a;
      const std::size_t i = static_cast<std::size_t>(unit(rng) * op.n) % op.n;
      const double bump = 0.01 + unit(rng);
      bumped[i] += bump;
      const double fbmp = f_eval(op, bumped);
      mono.check(fbmp > fa, [&] { return json{{"operator", op.name()}, {"lambda", vec(a)}, {"i", i}, {"t", bump}}; });

      const double w = unit(rng);
      std::vector<double> mid(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) mid[k] = w * a[k] + (1 - w) * b[k];
      const double fm = f_eval(op, mid);
      conc.check(fm >= w * fa + (1 - w) * fb - 1e-10,
                 [&] { return json{{"operator", op.name()}, {"a", vec(a)}, {"b", vec(b)}, {"s", w}}; });

      const double fd = oracles::fd_check(op, a);
      grad.check(fd <= 1e-6, [&] { return json{{"operator", op.name()}, {"lambda", vec(a)}, {"rel_error", fd}}; });

      auto perm = a;
      std::shuffle(perm.begin(), perm.end(), rng);
      const double fp = f_eval(op, perm);
      sym.check(std::abs(fp - fa) <= 1e-13 * (1 + std::abs(fa)),
                [&] { return json{{"operator", op.name()}, {"lambda", vec(a)}, {"permuted", vec(perm)}}; });

      auto ray = a;
      const double level = fa + 5.0;
      for (auto& v : ray) v *= 1e6;
      growth.check(f_eval(op, ray) > level,
                   [&] { return json{{"operator", op.name()}, {"lambda", vec(a)}, {"level", level}}; });
    }
  }
  std::uniform_real_distribution<double> box(-5.0, 5.0), scale(0.1, 3.0);
  for (int m = 1; m <= 5; ++m)
    for (int t = 0; t < kPoints; ++t) {
      std::vector<double> l(5), tl(5);
      for (auto& v : l) v = box(rng);
      const double tt = scale(rng);
      for (int k = 0; k < 5; ++k) tl[k] = tt * l[k];
      const double lhs = sigma_m(tl, m), rhs = std::pow(tt, m) * sigma_m(l, m);
      // relative to the size of the terms, not of the (possibly cancelled) sum
      double mag = 0.0;
      for (double v : l) mag = std::max(mag, std::abs(v));
      const double ref = std::pow(tt * (1 + mag), m) * binomial(5, m);
      homog.check(std::abs(lhs - rhs) <= 1e-12 * ref,
                  [&] { return json{{"m", m}, {"lambda", vec(l)}, {"t", tt}, {"lhs", lhs}, {"rhs", rhs}}; });
    }
  for (auto* r : {&mono, &conc, &grad, &sym, &homog, &growth}) s.properties.push_back(r->done());
  return s;
}

inline SuiteResult cones(unsigned seed) {
  SuiteResult s{"cones", seed, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-2.0, 4.0), pos(0.001, 5.0);
  Recorder scaling("tilde_cone_is_cone"), inclusion("cone_inside_tilde_cone"), monotone("certificate_monotone_in_h"),
      stable("certificate_perturbation_stable");
  for (const auto& c : {ConeSpec::garding(1, 3), ConeSpec::garding(2, 3), ConeSpec::garding(3, 3),
                        ConeSpec::garding(2, 4), ConeSpec::positive_orthant(4), ConeSpec::n_minus_one_positive(3)}) {
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> a(c.n);
      for (auto& v : a) v = d(rng);
      if (in_tilde_cone(c, a).inside) {
        auto sc = a;
        const double tt = pos(rng);
        for (auto& v : sc) v *= tt;
        scaling.check(in_tilde_cone(c, sc).inside,
                      [&] { return json{{"cone", c.describe()}, {"mu", vec(a)}, {"t", tt}}; });
      }
      if (in_cone(c, a).inside)
        inclusion.check(in_tilde_cone(c, a).inside, [&] { return json{{"cone", c.describe()}, {"lambda", vec(a)}}; });
    }
  }

  const PeriodicGrid g(2, 8);
  const auto theta = HermitianFormField::identity(g);
  std::uniform_real_distribution<double> amp(-0.02, 0.02), lift(0.0, 0.3);
  auto random_trig = [&](double offset) {
    TrigPolynomial p;
    p.offset = offset;
    for (int t = 0; t < 3; ++t) {
      TrigTerm term;
      term.wavevector.assign(g.axes(), 0);
      term.wavevector[static_cast<std::size_t>(t) % g.axes()] = 1 + t % 2;
      term.amplitude = amp(rng);
      term.phase = 2 * pi * lift(rng);
      p.terms.push_back(term);
    }
    return p.sample(g);
  };
  for (const auto& op : {EigenOperator::quotient(2, 2, 1), EigenOperator::hessian_log(2, 1),
                         EigenOperator::monge_ampere(2)}) {
    for (int t = 0; t < 25; ++t) {
      const auto u = random_trig(0.0);
      const auto h = random_trig(-0.5);
      auto h2 = h;
      const double raise = lift(rng);
      h2 += raise;
      const auto c1 = subsolution_check(op, theta, u, h);
      const auto c2 = subsolution_check(op, theta, u, h2);
      monotone.check(c2.worst_margin <= c1.worst_margin,
                     [&] { return json{{"operator", op.name()}, {"trial", t}, {"raise", raise}}; });
      if (c1.accepted) {
        auto hs = h;
        hs += c1.sigma_0;
        const auto c3 = subsolution_check(op, theta, u, hs);
        stable.check(c3.accepted,
                     [&] { return json{{"operator", op.name()}, {"trial", t}, {"sigma_0", report::num(c1.sigma_0)}}; });
      }
    }
  }
  for (auto* r : {&scaling, &inclusion, &monotone, &stable}) s.properties.push_back(r->done());
  return s;
}

inline SuiteResult fields(unsigned seed) {
  SuiteResult s{"fields", seed, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), ph(0.0, 2 * pi);
  std::uniform_int_distribution<int> wave(-2, 2);
  Recorder round("spectral_round_trip"), lin("ddbar_linear"), herm("ddbar_hermitian"), trace("trace_identity");
  for (const auto& g : {PeriodicGrid(1, 16), PeriodicGrid(2, 8), PeriodicGrid(1, 32)}) {
    auto field = [&] {
      TrigPolynomial p;
      p.offset = amp(rng);
      for (int t = 0; t < 4; ++t) {
        TrigTerm term;
        for (int a = 0; a < g.axes(); ++a) term.wavevector.push_back(wave(rng));
        term.amplitude = amp(rng);
        term.phase = ph(rng);
        p.terms.push_back(term);
      }
      return p.sample(g);
    };
    for (int t = 0; t < 20; ++t) {
      const auto u = field(), v = field();
      const auto& st = spectral(g);
      auto back = st.forward(u.values);
      st.inverse_inplace(back);
      double err = 0.0;
      for (std::size_t p = 0; p < g.size(); ++p) err = std::max(err, std::abs(back[p] - u[p]));
      round.check(err <= 1e-12 * (1 + u.sup_abs()), [&] { return json{{"N", g.N()}, {"n", g.n()}, {"error", err}}; });

      const auto a = spectral_ddbar(u + v), b = spectral_ddbar(u) + spectral_ddbar(v);
      double lerr = 0.0;
      for (std::size_t p = 0; p < g.size(); ++p) lerr = std::max(lerr, (a.at(p) - b.at(p)).cwiseAbs().maxCoeff());
      lin.check(lerr <= 1e-11, [&] { return json{{"error", lerr}}; });
      const double defect = a.hermitian_defect();
      herm.check(defect <= 1e-12, [&] { return json{{"defect", defect}}; });

      const auto H = real_hessian(u);
      const auto lap = spectral_laplacian(u);
      double terr = 0.0;
      const int ax = g.axes();
      for (std::size_t p = 0; p < g.size(); ++p) {
        Eigen::Map<const Eigen::MatrixXd> Hp(H.data.data() + p * ax * ax, ax, ax);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hp, Eigen::EigenvaluesOnly);
        terr = std::max(terr, std::abs(es.eigenvalues().sum() - lap[p]));
      }
      trace.check(terr <= 1e-10 * (1 + lap.sup_abs()), [&] { return json{{"error", terr}}; });
    }
  }
  for (auto* r : {&round, &lin, &herm, &trace}) s.properties.push_back(r->done());
  return s;
}

inline SuiteResult solver(unsigned seed) {
  SuiteResult s{"solver", seed, {}};
  std::mt19937_64 rng(seed);
  const SolverConfig cfg;
  Recorder merit("residual_monotone"), cone("cone_invariance"), unique("uniqueness_from_perturbed_starts"),
      quad("quadratic_tail"), shift("translation_covariance");
  const PeriodicGrid g(1, 64);
  const auto theta = HermitianFormField::identity(g);
  const auto op = EigenOperator::monge_ampere(1);
  for (double a : {0.02, 0.05, 0.08}) {
    ScalarField h(g), ustar(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double x = g.position(p, 0);
      ustar[p] = a * std::cos(2 * pi * x);
      h[p] = std::log(1 - a * pi * pi * std::cos(2 * pi * x));
    }
    const auto res = solve_nondegenerate(op, theta, h, cfg);
    const auto& m = res.report.merit_history;
    for (std::size_t k = 1; k < m.size(); ++k)
      merit.check(m[k] < m[k - 1], [&] { return json{{"amplitude", a}, {"step", k}, {"merit", report::nums(m)}}; });
    for (double c : res.report.cone_margin_history)
      cone.check(c >= cfg.cone_margin, [&] { return json{{"amplitude", a}, {"margin", c}}; });
    const auto& r = res.report.residual_history;
    // steps landing under the roundoff floor measure noise, not Newton
    const double floor = std::max(1e-13, res.report.noise_floor);
    for (std::size_t k = 0; k + 1 < r.size(); ++k)
      if (r[k] < 1e-3 && r[k + 1] > floor)
        quad.check(r[k + 1] <= 10.0 * r[k] * r[k],
                   [&] { return json{{"amplitude", a}, {"step", k}, {"residuals", report::nums(r)}}; });

    std::uniform_real_distribution<double> U(-0.01, 0.01);
    std::vector<ScalarField> sols;
    for (int t = 0; t < 2; ++t) {
      const double c1 = U(rng), c2 = U(rng);
      ScalarField u0(g);
      for (std::size_t p = 0; p < g.size(); ++p)
        u0[p] = c1 * std::cos(2 * pi * g.position(p, 0)) + c2 * std::sin(4 * pi * g.position(p, 0));
      sols.push_back(solve_nondegenerate(op, theta, h, cfg, u0).u);
    }
    const double diff = (sols[0] - sols[1]).sup_abs();
    unique.check(diff <= 10 * cfg.residual_tol, [&] { return json{{"amplitude", a}, {"sup_diff", diff}}; });

    const auto shifted = solve_nondegenerate(op, theta, h + 0.7, cfg);
    const double du = (shifted.u - res.u).sup_abs();
    const double db = std::abs(shifted.report.constant - res.report.constant + 0.7);
    shift.check(du <= 10 * cfg.residual_tol && db <= 10 * cfg.residual_tol,
                [&] { return json{{"amplitude", a}, {"u_diff", du}, {"b_diff", db}}; });
  }
  for (auto* r : {&merit, &cone, &unique, &quad, &shift}) s.properties.push_back(r->done());
  return s;
}

inline SuiteResult envelope(unsigned seed) {
  SuiteResult s{"envelope", seed, {}};
  const SolverConfig cfg;
  const double tol = 10 * cfg.residual_tol;
  const std::vector<double> schedule{1e-1, 1e-2, 1e-3};
  const PeriodicGrid g(1, 64);
  const auto theta = HermitianFormField::identity(g);
  ScalarField h(g);
  for (std::size_t p = 0; p < g.size(); ++p) h[p] = 0.3 * std::cos(2 * pi * g.position(p, 0));

  Recorder offset("offset_equivariance"), mono("monotonicity"), sandwich("barrier_sandwich"),
      hess("uniform_hessian_bound"), below("below_obstacle");
  const auto base = compute_envelope(theta, h, 1, schedule, cfg);

  const auto lifted = compute_envelope(theta, h + 0.25, 1, schedule, cfg);
  const double off_err = (lifted.P - base.P - ScalarField(g, 0.25)).sup_abs();
  offset.check(off_err <= tol, [&] { return json{{"offset", 0.25}, {"sup_error", off_err}}; });

  auto h2 = h;
  for (std::size_t p = 0; p < g.size(); ++p) h2[p] += 0.05 * (1 + std::sin(2 * pi * g.position(p, 1)));
  const auto upper = compute_envelope(theta, h2, 1, schedule, cfg);
  const double mono_err = (base.P - upper.P).max();
  mono.check(mono_err <= tol, [&] { return json{{"max_P1_minus_P2", mono_err}}; });

  const double eps = schedule.back(), delta = 0.05;
  const auto ref = oracles::psor_obstacle(theta, h).u;
  auto shrunk = theta;
  shrunk *= 1.0 - delta;
  const auto Pd = compute_envelope(shrunk, h, 1, schedule, cfg).P;
  ScalarField top = base.P, bottom = Pd;
  top += -base.c_ratio * eps;
  bottom += -delta;
  const double s_up = (top - ref).max(), s_lo = (bottom - base.P).max();
  sandwich.check(s_up <= 1e-9 && s_lo <= 0.0,
                 [&] { return json{{"upper_violation", s_up}, {"lower_violation", s_lo}, {"C", base.c_ratio}}; });

  std::vector<double> sup_hess;
  for (const auto& st : base.states) sup_hess.push_back(norms(st.u).sup_hess);
  const auto [lo, hi] = std::minmax_element(sup_hess.begin(), sup_hess.end());
  hess.check(*hi <= 2.0 * *lo, [&] { return json{{"sup_hessian", report::nums(sup_hess)}}; });

  const double over = (base.P - h).max();
  below.check(over <= tol, [&] { return json{{"max_P_minus_h", over}, {"allowed", tol}}; });

  for (auto* r : {&offset, &mono, &sandwich, &hess, &below}) s.properties.push_back(r->done());
  return s;
}

}  // namespace detail

inline SuiteResult run_suite(const std::string& suite, unsigned seed) {
  if (suite == "eigenops") return detail::eigenops(seed);
  if (suite == "cones") return detail::cones(seed);
  if (suite == "fields") return detail::fields(seed);
  if (suite == "solver") return detail::solver(seed);
  if (suite == "envelope") return detail::envelope(seed);
  throw ConfigError("verify: unknown suite '" + suite + "'");
}

}  // namespace cxhess::verify
