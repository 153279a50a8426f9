#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/envelope.hpp"
#include "rbdsdep/expr.hpp"
#include "rbdsdep/generator.hpp"

namespace rbdsdep {

/// Data of one reflected equation: generator, barrier S(t, w), terminal xi(w_T, n_T), grid and
/// driver dimensions.
struct Problem {
  GeneratorSpec generator;
  Expr barrier = Expr::constant(-10.0);
  Expr terminal;
  TimeGrid grid{1.0, 1};
  std::size_t dim = 1;
  MarkSpace marks;

  /// Throws ConfigError on out-of-range variable indices, a barrier reading anything but t and w,
  /// or a terminal reading y, z or u. Returns warnings (discontinuous barrier).
  std::vector<std::string> validate() const;

  double barrier_at(double t, std::span<const double> w) const;
  double terminal_at(std::span<const double> w, std::span<const double> jumps) const;
};

/// Point at which a coefficient is evaluated, plus the (step, path) it belongs to. Coefficients
/// that freeze a previous solution look it up by (step, path).
struct Arguments {
  Bindings at;
  std::size_t step = 0;
  std::size_t path = 0;
};

using CoefficientFn = std::function<double(const Arguments&)>;

/// The drift f and the backward-noise coefficient g actually handed to a solver.
struct Coefficients {
  CoefficientFn f;
  CoefficientFn g;
};

CoefficientFn expression_fn(const Expr& expr);

/// f and g of the problem, evaluated directly.
Coefficients expression_coefficients(const Problem& problem);

/// Lipschitz envelopes of `f`. Both throw BoxTooSmall when the optimiser hits the search box.
CoefficientFn inf_envelope_fn(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params);
CoefficientFn sup_envelope_fn(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params);

}  // namespace rbdsdep
