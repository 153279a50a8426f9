#include "rbdsdep/problem.hpp"

#include <algorithm>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"

namespace rbdsdep {
namespace {

void check_indices(const Expr& expr, const char* name, std::size_t dim, std::size_t marks) {
  const VariableUse use = expr.uses();
  auto highest = [](const std::vector<bool>& used) { return used.size(); };
  if (highest(use.z) > dim || highest(use.w) > dim) {
    throw ConfigError(std::string(name) + " reads a z or w component beyond dimension d=" + std::to_string(dim));
  }
  if (highest(use.u) > marks || highest(use.jumps) > marks) {
    throw ConfigError(std::string(name) + " reads a u or n component beyond mark count m=" + std::to_string(marks));
  }
}

SamplePoint to_point(const Bindings& b) {
  SamplePoint p;
  p.t = b.t;
  p.y = b.y;
  p.z.assign(b.z.begin(), b.z.end());
  p.u.assign(b.u.begin(), b.u.end());
  p.w.assign(b.w.begin(), b.w.end());
  p.jumps.assign(b.jumps.begin(), b.jumps.end());
  return p;
}

CoefficientFn envelope_fn(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params, bool lower) {
  return [f, marks, params, lower](const Arguments& args) {
    const SamplePoint point = to_point(args.at);
    const EnvelopeValue v =
        lower ? inf_convolution(f, marks, params, point) : sup_convolution(f, marks, params, point);
    if (v.on_boundary) {
      throw BoxTooSmall("envelope optimiser at step " + std::to_string(args.step) + " touches the search box (n=" +
                        io::format_double(params.n) + ", y=" + io::format_double(point.y) +
                        "); rerun with a larger box");
    }
    return v.value;
  };
}

}  // namespace

std::vector<std::string> Problem::validate() const {
  generator.validate();
  if (dim == 0) throw ConfigError("dimension d must be >= 1");
  const std::size_t m = marks.size();
  check_indices(generator.f, "f", dim, m);
  check_indices(generator.g, "g", dim, m);
  if (generator.pi) check_indices(*generator.pi, "pi", dim, m);
  if (generator.ft) {
    const VariableUse use = generator.ft->uses();
    if (use.y || use.reads_any_z() || use.reads_any_u() || use.reads_any_w() || use.reads_any_jumps()) {
      throw ConfigError("f_t must be a deterministic function of t");
    }
  }
  check_indices(barrier, "barrier", dim, m);
  check_indices(terminal, "terminal", dim, m);
  const VariableUse s = barrier.uses();
  if (s.y || s.reads_any_z() || s.reads_any_u() || s.reads_any_jumps()) {
    throw ConfigError("barrier may only read t and w");
  }
  const VariableUse xi = terminal.uses();
  if (xi.y || xi.reads_any_z() || xi.reads_any_u()) throw ConfigError("terminal may only read t, w and n");

  std::vector<std::string> warnings;
  if (barrier.contains(Expr::Op::indicator_pos) || barrier.contains(Expr::Op::sign)) {
    warnings.emplace_back("barrier uses a discontinuous function; continuity of S is assumed by the theory");
  }
  return warnings;
}

double Problem::barrier_at(double t, std::span<const double> w) const {
  Bindings b;
  b.t = t;
  b.w = w;
  return barrier.evaluate(b);
}

double Problem::terminal_at(std::span<const double> w, std::span<const double> jumps) const {
  Bindings b;
  b.t = grid.horizon();
  b.w = w;
  b.jumps = jumps;
  b.lambda = marks.intensities();
  return terminal.evaluate(b);
}

CoefficientFn expression_fn(const Expr& expr) {
  return [expr](const Arguments& args) { return expr.evaluate(args.at); };
}

Coefficients expression_coefficients(const Problem& problem) {
  return {expression_fn(problem.generator.f), expression_fn(problem.generator.g)};
}

CoefficientFn inf_envelope_fn(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params) {
  return envelope_fn(f, marks, params, true);
}

CoefficientFn sup_envelope_fn(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params) {
  return envelope_fn(f, marks, params, false);
}

}  // namespace rbdsdep
