#include "rbdsdep/solution.hpp"

#include <cmath>
#include <ostream>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"

namespace rbdsdep {

SolutionGrid::SolutionGrid(std::size_t steps_, std::size_t paths_, std::size_t dim_, std::size_t marks_)
    : steps(steps_), paths(paths_), dim(dim_), marks(marks_) {
  const std::size_t cells = (steps + 1) * paths;
  value.assign(cells, 0.0);
  drift_argument.assign(cells, 0.0);
  w_integrand.assign(cells * dim, 0.0);
  jump_integrand.assign(cells * marks, 0.0);
  reflection.assign(cells, 0.0);
  barrier.assign(cells, 0.0);
  weights.assign(paths, paths == 0 ? 0.0 : 1.0 / static_cast<double>(paths));
}

double SolutionGrid::mean_at(std::span<const double> field, std::size_t step) const {
  double total = 0.0;
  for (std::size_t p = 0; p < paths; ++p) total += weights[p] * field[at(step, p)];
  return total;
}

double SolutionGrid::root() const { return mean_at(value, 0); }

ReflectedValue reflect_step(double candidate, double barrier) {
  if (!std::isfinite(candidate) || !std::isfinite(barrier)) {
    throw EvalError("reflection: non-finite value " + io::format_double(candidate) + " or barrier " +
                    io::format_double(barrier));
  }
  if (candidate >= barrier) return {candidate, 0.0};
  return {barrier, barrier - candidate};
}

void write_solution_csv(std::ostream& out, const SolutionGrid& solution, const TimeGrid& grid) {
  out << "# schema=" << io::kSolutionSchema << '\n';
  out << "path,step,t,Y";
  for (std::size_t k = 0; k < solution.dim; ++k) out << ",Z" << k + 1;
  for (std::size_t k = 0; k < solution.marks; ++k) out << ",U" << k + 1;
  out << ",K,S\n";
  for (std::size_t p = 0; p < solution.paths; ++p) {
    for (std::size_t i = 0; i <= solution.steps; ++i) {
      out << p << ',' << i << ',' << io::format_double(grid.time(i)) << ',' << io::format_double(solution.y(i, p));
      for (double v : solution.z(i, p)) out << ',' << io::format_double(v);
      for (double v : solution.u(i, p)) out << ',' << io::format_double(v);
      out << ',' << io::format_double(solution.k(i, p)) << ',' << io::format_double(solution.s(i, p)) << '\n';
    }
  }
}

}  // namespace rbdsdep
