#include "rbdsdep/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"
#include "rbdsdep/parallel.hpp"

namespace rbdsdep {
namespace {

void require_finite(std::span<const double> field, std::size_t width, const SolutionGrid& s, const char* name) {
  for (std::size_t j = 0; j < field.size(); ++j) {
    if (!std::isfinite(field[j])) {
      const std::size_t cell = j / std::max<std::size_t>(width, 1);
      throw EvalError(std::string("non-finite ") + name + " at step " + std::to_string(cell / s.paths) + ", path " +
                      std::to_string(cell % s.paths));
    }
  }
}

struct MeanAndError {
  double mean = 0.0;
  double standard_error = 0.0;
};

MeanAndError sample_statistics(std::span<const double> values) {
  MeanAndError out;
  if (values.empty()) return out;
  const auto n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  double squares = 0.0;
  for (double v : values) squares += (v - out.mean) * (v - out.mean);
  out.standard_error = values.size() > 1 ? std::sqrt(squares / (n - 1.0) / n) : 0.0;
  return out;
}

SamplePoint argument_point(const SolutionGrid& s, const PathStates& states, const TimeGrid& grid, std::size_t step,
                           std::size_t path) {
  SamplePoint p;
  p.t = grid.time(step);
  p.y = s.drift_argument[s.at(step, path)];
  const auto z = s.z(step, path);
  const auto u = s.u(step, path);
  p.z.assign(z.begin(), z.end());
  p.u.assign(u.begin(), u.end());
  const auto w = states.w(step, path);
  const auto n = states.jumps(step, path);
  p.w.assign(w.begin(), w.end());
  p.jumps.assign(n.begin(), n.end());
  return p;
}

}  // namespace

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::premises_not_met: return "premises-not-met";
  }
  return "fail";
}

NormReport norm_report(const SolutionGrid& solution, const TimeGrid& grid, const MarkSpace& marks) {
  require_finite(solution.value, 1, solution, "Y");
  require_finite(solution.w_integrand, solution.dim, solution, "Z");
  require_finite(solution.jump_integrand, solution.marks, solution, "U");
  require_finite(solution.reflection, 1, solution, "K");
  NormReport report;
  const double dt = grid.dt();
  for (std::size_t p = 0; p < solution.paths; ++p) {
    const double w = solution.weights[p];
    double sup = 0.0, z2 = 0.0, u2 = 0.0;
    for (std::size_t i = 0; i <= solution.steps; ++i) {
      sup = std::max(sup, solution.y(i, p) * solution.y(i, p));
      if (i == solution.steps) continue;
      for (double z : solution.z(i, p)) z2 += z * z * dt;
      const double un = marks.norm(solution.u(i, p));
      u2 += un * un * dt;
    }
    const double kt = solution.k(solution.steps, p);
    report.sup_value_sq += w * sup;
    report.w_integrand_sq += w * z2;
    report.jump_integrand_sq += w * u2;
    report.terminal_reflection_sq += w * kt * kt;
  }
  return report;
}

SkorokhodReport skorokhod_check(const SolutionGrid& solution) {
  SkorokhodReport report;
  report.per_path.assign(solution.paths, 0.0);
  for (std::size_t p = 0; p < solution.paths; ++p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < solution.steps; ++i) {
      sum += (solution.y(i, p) - solution.s(i, p)) * (solution.k(i + 1, p) - solution.k(i, p));
    }
    report.per_path[p] = std::fabs(sum);
    report.worst = std::max(report.worst, report.per_path[p]);
  }
  return report;
}

InvariantReport check_invariants(const SolutionGrid& solution) {
  InvariantReport report;
  report.skorokhod = skorokhod_check(solution).worst;
  report.smallest_push = std::numeric_limits<double>::infinity();
  report.smallest_barrier_gap = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < solution.paths; ++p) {
    report.initial_reflection = std::max(report.initial_reflection, std::fabs(solution.k(0, p)));
    for (std::size_t i = 0; i <= solution.steps; ++i) {
      report.smallest_barrier_gap = std::min(report.smallest_barrier_gap, solution.y(i, p) - solution.s(i, p));
      if (i < solution.steps) {
        report.smallest_push = std::min(report.smallest_push, solution.k(i + 1, p) - solution.k(i, p));
      }
    }
  }
  return report;
}

ComparisonReport compare_solutions(const Problem& first, const Problem& second, const Solver& solver, double tolerance,
                                   std::size_t cloud_size, std::uint64_t cloud_seed) {
  if (!(first.grid == second.grid) || first.dim != second.dim || !(first.marks == second.marks)) {
    throw InvalidArgument("comparison: problems must share grid, dimension and marks");
  }
  ComparisonReport report;
  report.tolerance = tolerance;
  report.same_g = first.generator.g == second.generator.g;
  report.first = solver.solve(first);
  report.second = solver.solve(second);

  const ScenarioSet& scenarios = solver.scenarios();
  const PathStates& states = solver.states();
  const TimeGrid& grid = first.grid;
  const std::size_t steps = grid.steps();
  const std::size_t paths = scenarios.paths();

  report.terminal_ordered = true;
  report.barrier_ordered = true;
  for (std::size_t p = 0; p < paths; ++p) {
    const auto w = states.w(steps, p);
    const auto n = states.jumps(steps, p);
    if (first.terminal_at(w, n) > second.terminal_at(w, n)) report.terminal_ordered = false;
    for (std::size_t i = 0; i <= steps; ++i) {
      if (first.barrier_at(grid.time(i), states.w(i, p)) > second.barrier_at(grid.time(i), states.w(i, p))) {
        report.barrier_ordered = false;
      }
    }
  }

  SampleBox box;
  box.t_hi = grid.horizon();
  std::vector<SamplePoint> cloud = sample_cloud(box, first.dim, first.marks.size(), cloud_size, cloud_seed);
  for (const SolutionGrid* s : {&report.first, &report.second}) {
    for (std::size_t i = 0; i < steps; ++i) {
      for (std::size_t p = 0; p < paths; ++p) cloud.push_back(argument_point(*s, states, grid, i, p));
    }
  }
  report.drift_samples = cloud.size();
  report.drift_ordered = true;
  const auto lambda = first.marks.intensities();
  for (const SamplePoint& point : cloud) {
    const Bindings b = point.bind(lambda);
    if (first.generator.f.evaluate(b) > second.generator.f.evaluate(b) + tolerance) {
      report.drift_ordered = false;
      break;
    }
  }

  report.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= steps; ++i) {
    for (std::size_t p = 0; p < paths; ++p) {
      const double gap = report.second.y(i, p) - report.first.y(i, p);
      if (gap < report.margin) {
        report.margin = gap;
        report.worst_step = i;
        report.worst_path = p;
      }
    }
  }
  report.root_gap = report.second.root() - report.first.root();
  if (!report.premises_met()) {
    report.verdict = Verdict::premises_not_met;
  } else {
    report.verdict = report.margin >= -tolerance ? Verdict::pass : Verdict::fail;
  }
  return report;
}

PositivityPremises certify_positivity(const Problem& problem, const Expr& source, const Expr& minorant,
                                      const ScenarioSet& scenarios, std::size_t cloud_size, std::uint64_t cloud_seed) {
  PositivityPremises premises;
  const PathStates states(scenarios);
  const std::size_t steps = problem.grid.steps();
  premises.terminal_nonnegative = true;
  for (std::size_t p = 0; p < scenarios.paths(); ++p) {
    if (problem.terminal_at(states.w(steps, p), states.jumps(steps, p)) < 0.0) {
      premises.terminal_nonnegative = false;
      break;
    }
  }
  SampleBox box;
  box.t_hi = problem.grid.horizon();
  const auto lambda = problem.marks.intensities();
  const std::vector<SamplePoint> cloud =
      sample_cloud(box, problem.dim, problem.marks.size(), cloud_size, cloud_seed);
  premises.source_nonnegative = std::all_of(cloud.begin(), cloud.end(), [&](const SamplePoint& p) {
    return source.evaluate(p.bind(lambda)) >= 0.0;
  });
  premises.minorant_vanishes = std::all_of(cloud.begin(), cloud.end(), [&](const SamplePoint& p) {
    SamplePoint origin = p;
    origin.y = 0.0;
    std::fill(origin.z.begin(), origin.z.end(), 0.0);
    std::fill(origin.u.begin(), origin.u.end(), 0.0);
    return std::fabs(minorant.evaluate(origin.bind(lambda))) <= 1e-12;
  });
  return premises;
}

PositivityReport positivity_check(const SolutionGrid& solution, const PositivityPremises& premises, double tolerance) {
  PositivityReport report;
  report.premises = premises;
  report.tolerance = tolerance;
  report.min_value = solution.value.empty() ? 0.0 : *std::min_element(solution.value.begin(), solution.value.end());
  if (!premises.met()) {
    report.verdict = Verdict::premises_not_met;
  } else {
    report.verdict = report.min_value >= -tolerance ? Verdict::pass : Verdict::fail;
  }
  return report;
}

ItoReport ito_residual_check(const ScenarioSet& scenarios, const ItoArrays& c) {
  const std::size_t paths = scenarios.paths();
  const std::size_t steps = scenarios.grid().steps();
  const std::size_t d = scenarios.dim();
  const std::size_t m = scenarios.marks().size();
  const std::size_t cells = paths * steps;
  if (c.initial.size() != paths || c.drift.size() != cells || c.backward.size() != cells ||
      c.forward.size() != cells * d || c.reflection.size() != cells || c.jump.size() != cells * m) {
    throw InvalidArgument("ito check: component arrays do not match P=" + std::to_string(paths) +
                          ", N=" + std::to_string(steps) + ", d=" + std::to_string(d) + ", m=" + std::to_string(m));
  }
  for (std::size_t j = 0; j < cells; ++j) {
    if (c.reflection[j] < 0.0) throw InvalidArgument("ito check: reflection rate must be >= 0");
  }
  const double dt = scenarios.grid().dt();
  const std::vector<double> rates = compensator_increments(scenarios.marks(), dt);

  std::vector<double> residual(paths), martingale(paths), terminal_sq(paths);
  parallel_for(paths, [&](std::size_t p) {
    double alpha = c.initial[p];
    double rhs = alpha * alpha;
    double noise = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      const std::size_t cell = p * steps + i;
      const auto dw = scenarios.dw(p, i);
      const auto fired = scenarios.jumps(p, i);
      double brownian = 0.0;
      for (std::size_t k = 0; k < d; ++k) brownian += c.forward[cell * d + k] * dw[k];
      double compensated = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        compensated += c.jump[cell * m + k] * (static_cast<double>(fired[k]) - rates[k]);
      }
      const double drift = c.drift[cell] * dt;
      const double pushed = c.reflection[cell] * dt;
      const double backward = c.backward[cell] * scenarios.db(p, i);
      const double forward_part = drift + brownian + pushed + compensated;
      const double next = alpha + forward_part + backward;
      rhs += 2.0 * alpha * drift + 2.0 * next * backward + 2.0 * alpha * brownian + 2.0 * alpha * pushed +
             2.0 * alpha * compensated + forward_part * forward_part - backward * backward;
      noise += 2.0 * alpha * (brownian + compensated);
      alpha = next;
    }
    terminal_sq[p] = alpha * alpha;
    residual[p] = std::fabs(terminal_sq[p] - rhs);
    martingale[p] = noise;
  });

  ItoReport report;
  report.paths = paths;
  report.max_residual = *std::max_element(residual.begin(), residual.end());
  const MeanAndError noise = sample_statistics(martingale);
  report.martingale_mean = noise.mean;
  report.martingale_standard_error = noise.standard_error;
  const MeanAndError moment = sample_statistics(terminal_sq);
  report.second_moment = moment.mean;
  report.second_moment_standard_error = moment.standard_error;
  return report;
}

ItoReport ito_residual_check(const ScenarioSet& scenarios, const ItoComponents& components) {
  const std::size_t paths = scenarios.paths();
  const std::size_t steps = scenarios.grid().steps();
  const std::size_t d = scenarios.dim();
  const std::size_t m = scenarios.marks().size();
  if (components.forward.size() != d || components.jump.size() != m) {
    throw InvalidArgument("ito check: expected " + std::to_string(d) + " forward and " + std::to_string(m) +
                          " jump components");
  }
  const TimeGrid& grid = scenarios.grid();
  const double dt = grid.dt();
  const auto lambda = scenarios.marks().intensities();
  const std::vector<double> rates = compensator_increments(scenarios.marks(), dt);
  const PathStates states(scenarios);

  ItoArrays arrays;
  arrays.initial.assign(paths, 0.0);
  arrays.drift.assign(paths * steps, 0.0);
  arrays.backward.assign(paths * steps, 0.0);
  arrays.forward.assign(paths * steps * d, 0.0);
  arrays.reflection.assign(paths * steps, 0.0);
  arrays.jump.assign(paths * steps * m, 0.0);
  parallel_for(paths, [&](std::size_t p) {
    Bindings b;
    b.lambda = lambda;
    b.w = states.w(0, p);
    b.jumps = states.jumps(0, p);
    double alpha = components.initial.evaluate(b);
    arrays.initial[p] = alpha;
    for (std::size_t i = 0; i < steps; ++i) {
      const std::size_t cell = p * steps + i;
      b.t = grid.time(i);
      b.y = alpha;
      b.w = states.w(i, p);
      b.jumps = states.jumps(i, p);
      arrays.drift[cell] = components.drift.evaluate(b);
      arrays.backward[cell] = components.backward.evaluate(b);
      arrays.reflection[cell] = components.reflection.evaluate(b);
      double increment = (arrays.drift[cell] + arrays.reflection[cell]) * dt + arrays.backward[cell] * scenarios.db(p, i);
      const auto dw = scenarios.dw(p, i);
      for (std::size_t k = 0; k < d; ++k) {
        arrays.forward[cell * d + k] = components.forward[k].evaluate(b);
        increment += arrays.forward[cell * d + k] * dw[k];
      }
      const auto fired = scenarios.jumps(p, i);
      for (std::size_t k = 0; k < m; ++k) {
        arrays.jump[cell * m + k] = components.jump[k].evaluate(b);
        increment += arrays.jump[cell * m + k] * (static_cast<double>(fired[k]) - rates[k]);
      }
      alpha += increment;
    }
  });
  return ito_residual_check(scenarios, arrays);
}

}  // namespace rbdsdep
