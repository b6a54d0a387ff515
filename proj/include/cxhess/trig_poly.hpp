#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cxhess/errors.hpp"
#include "cxhess/torus_field.hpp"

namespace cxhess {

/// One term amplitude * cos(2 pi <k, x> + phase), k indexed by real axis.
struct TrigTerm {
  std::vector<int> wavevector;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// offset + sum of cosine terms; the only way fields enter from configuration.
struct TrigPolynomial {
  double offset = 0.0;
  std::vector<TrigTerm> terms;

  /// Every wavevector component must satisfy |k_a| <= N/4.
  void validate(const PeriodicGrid& g) const {
    for (const auto& t : terms) {
      if (static_cast<int>(t.wavevector.size()) != g.axes())
        throw DomainError("trig term: wavevector needs " + std::to_string(g.axes()) + " components");
      for (int k : t.wavevector)
        if (std::abs(k) > g.N() / 4)
          throw DomainError("trig term: wavenumber " + std::to_string(k) + " exceeds band limit N/4 = " +
                            std::to_string(g.N() / 4));
    }
  }

  ScalarField sample(const PeriodicGrid& g) const {
    validate(g);
    ScalarField f(g, offset);
    for (std::size_t p = 0; p < g.size(); ++p) {
      double s = 0.0;
      for (const auto& t : terms) {
        double arg = t.phase;
        for (int a = 0; a < g.axes(); ++a) arg += 2.0 * std::numbers::pi * t.wavevector[a] * g.position(p, a);
        s += t.amplitude * std::cos(arg);
      }
      f[p] += s;
    }
    return f;
  }
};

}  // namespace cxhess
