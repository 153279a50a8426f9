#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rbdsdep/drivers.hpp"

namespace rbdsdep {

/// Discrete solution quadruple on a grid of N + 1 times for P paths.
///
/// Arrays are time-major: entry (i, p) lives at i * P + p (times d for the W integrand, times m
/// for the jump integrand). `reflection` is the cumulative increasing process with value 0 at i = 0.
/// `drift_argument` is the y-argument the generator saw at (i, p), E_i[Y_{i+1}]; at i = N it equals
/// the terminal value.
struct SolutionGrid {
  std::size_t steps = 0;
  std::size_t paths = 0;
  std::size_t dim = 0;
  std::size_t marks = 0;

  std::vector<double> value;
  std::vector<double> drift_argument;
  std::vector<double> w_integrand;
  std::vector<double> jump_integrand;
  std::vector<double> reflection;
  std::vector<double> barrier;
  std::vector<double> weights;  // per path, sums to 1

  // Monte Carlo diagnostics (empty for the tree solver).
  std::vector<double> regression_residual;       // per step, weighted RMS residual of the value regression
  std::vector<double> w_integrand_error;         // per step x d, standard error of the mean W integrand
  double root_standard_error = 0.0;

  SolutionGrid() = default;
  SolutionGrid(std::size_t steps, std::size_t paths, std::size_t dim, std::size_t marks);

  std::size_t at(std::size_t step, std::size_t path) const noexcept { return step * paths + path; }

  double y(std::size_t step, std::size_t path) const { return value[at(step, path)]; }
  double k(std::size_t step, std::size_t path) const { return reflection[at(step, path)]; }
  double s(std::size_t step, std::size_t path) const { return barrier[at(step, path)]; }
  std::span<const double> z(std::size_t step, std::size_t path) const {
    return std::span<const double>(w_integrand).subspan(at(step, path) * dim, dim);
  }
  std::span<const double> u(std::size_t step, std::size_t path) const {
    return std::span<const double>(jump_integrand).subspan(at(step, path) * marks, marks);
  }

  /// Weighted mean of Y at t_0.
  double root() const;
  /// Weighted mean of a per-(step, path) array at one step.
  double mean_at(std::span<const double> field, std::size_t step) const;
};

struct ReflectedValue {
  double value;
  double push;
};

/// value = max(candidate, barrier), push = value - candidate. push * (value - barrier) == 0 exactly.
/// Throws EvalError on a non-finite candidate.
ReflectedValue reflect_step(double candidate, double barrier);

/// One CSV row per (path, step): path, step, t, Y, Z1..Zd, U1..Um, K, S.
void write_solution_csv(std::ostream& out, const SolutionGrid& solution, const TimeGrid& grid);

}  // namespace rbdsdep
