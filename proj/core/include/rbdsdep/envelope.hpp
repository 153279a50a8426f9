#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/expr.hpp"
#include "rbdsdep/generator.hpp"

namespace rbdsdep {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// Penalty slope n and the gridded search box for (y', z', u'). The z and u intervals apply to
/// every component.
struct EnvelopeParams {
  double n = 1.0;
  Interval y{-10.0, 10.0};
  Interval z{-10.0, 10.0};
  Interval u{-10.0, 10.0};
  std::size_t grid_points = 201;

  /// Throws ConfigError unless every interval has positive width, grid_points >= 2 and
  /// n >= growth_c.
  void validate(double growth_c) const;
};

/// Regular grid of `points` values covering [lo, hi] with both endpoints included.
std::vector<double> interval_grid(const Interval& interval, std::size_t points);

struct EnvelopeValue {
  double value = 0.0;
  SamplePoint argument;      // the minimiser (inf) or maximiser (sup)
  bool on_boundary = false;  // the optimiser touches the box while the query does not
};

/// min over the box of f(t, y', z', u') + n (|y - y'| + |z - z'| + |u - u'|_lambda).
///
/// Only the axes f reads are searched; each searched axis takes the grid values plus the query
/// coordinate. Throws DomainError when the query lies outside the box on a searched axis.
EnvelopeValue inf_convolution(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params,
                              const SamplePoint& point);

/// max over the box of f(t, y', z', u') - n (|y - y'| + |z - z'| + |u - u'|_lambda).
EnvelopeValue sup_convolution(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params,
                              const SamplePoint& point);

/// Tabulates f and both envelopes at the given points. Columns: t, y, z*, u*, f, inf, sup.
void write_envelope_csv(std::ostream& out, const Expr& f, const MarkSpace& marks,
                        const EnvelopeParams& params, std::span<const SamplePoint> points);

}  // namespace rbdsdep
