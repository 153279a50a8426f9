#include "rbdsdep/tree.hpp"

#include <cmath>
#include <string>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"
#include "rbdsdep/parallel.hpp"

namespace rbdsdep {
namespace {

std::size_t power(std::size_t base, std::size_t exponent) {
  std::size_t result = 1;
  for (std::size_t e = 0; e < exponent; ++e) result *= base;
  return result;
}

ScenarioSet checked_enumeration(const TimeGrid& grid, std::size_t dim, const MarkSpace& marks, TreeLimits limits) {
  if (grid.steps() > limits.max_steps) {
    throw BudgetError("tree: N=" + std::to_string(grid.steps()) + " exceeds the step limit " +
                      std::to_string(limits.max_steps));
  }
  const std::size_t bits = (dim + marks.size() + 1) * grid.steps();
  if (bits >= 63 || (std::size_t{1} << bits) > limits.node_budget) {
    throw BudgetError("tree: 2^" + std::to_string(bits) + " leaves exceed the node budget " +
                      std::to_string(limits.node_budget));
  }
  return enumerate_two_point(grid, dim, marks);
}

// Per-step W/jump outcomes shared by every node.
struct Outcome {
  std::vector<double> dw;
  std::vector<std::uint32_t> jumps;
  double probability = 1.0;
};

std::vector<Outcome> step_outcomes(std::size_t dim, std::span<const double> jump_probabilities, double dt) {
  const std::size_t m = jump_probabilities.size();
  const std::size_t count = std::size_t{1} << (dim + m);
  const double root_dt = std::sqrt(dt);
  std::vector<Outcome> outcomes(count);
  for (std::size_t g = 0; g < count; ++g) {
    Outcome& o = outcomes[g];
    o.probability = std::ldexp(1.0, -static_cast<int>(dim));
    for (std::size_t k = 0; k < dim; ++k) o.dw.push_back(((g >> k) & 1U) ? root_dt : -root_dt);
    for (std::size_t k = 0; k < m; ++k) {
      const bool fired = (g >> (dim + k)) & 1U;
      o.jumps.push_back(fired ? 1U : 0U);
      o.probability *= fired ? jump_probabilities[k] : 1.0 - jump_probabilities[k];
    }
  }
  return outcomes;
}

// Node-level solution arrays for one step.
struct Layer {
  std::vector<double> value, drift_argument, z, u, push, barrier, g;

  Layer(std::size_t nodes, std::size_t dim, std::size_t marks)
      : value(nodes), drift_argument(nodes), z(nodes * dim), u(nodes * marks), push(nodes), barrier(nodes), g(nodes) {}
};

}  // namespace

TreeModel::TreeModel(const TimeGrid& grid, std::size_t dim, const MarkSpace& marks, TreeLimits limits)
    : scenarios_(checked_enumeration(grid, dim, marks, limits)),
      states_(scenarios_),
      branching_(std::size_t{1} << (dim + marks.size())) {}

std::size_t TreeModel::nodes_at(std::size_t step) const {
  return power(branching_, step) * power(2, steps() - step);
}

std::size_t TreeModel::node_of(std::size_t step, std::size_t path) const {
  const std::size_t base = 2 * branching_;
  std::size_t history = 0;
  std::size_t future = 0;
  std::size_t code = path;
  std::size_t scale = 1;
  for (std::size_t s = 0; s < steps(); ++s) {
    const std::size_t digit = code % base;
    code /= base;
    if (s < step) {
      history += (digit % branching_) * scale;
      scale *= branching_;
    } else {
      future |= (digit / branching_) << (s - step);
    }
  }
  return history + power(branching_, step) * future;
}

std::size_t TreeModel::representative(std::size_t step, std::size_t node) const {
  const std::size_t base = 2 * branching_;
  const std::size_t history_count = power(branching_, step);
  std::size_t history = node % history_count;
  const std::size_t future = node / history_count;
  std::size_t path = 0;
  std::size_t scale = 1;
  for (std::size_t s = 0; s < steps(); ++s) {
    const std::size_t digit =
        s < step ? history % branching_ : branching_ * ((future >> (s - step)) & 1U);
    if (s < step) history /= branching_;
    path += digit * scale;
    scale *= base;
  }
  return path;
}

Projection extract_zu(std::span<const Branch> branches, double dt, std::span<const double> jump_probabilities) {
  if (!(dt > 0.0)) throw InvalidArgument("extract_zu: dt must be > 0");
  const std::size_t d = branches.empty() ? 0 : branches.front().dw.size();
  const std::size_t m = jump_probabilities.size();
  Projection out;
  out.z.assign(d, 0.0);
  out.u.assign(m, 0.0);
  double total = 0.0;
  for (const Branch& b : branches) {
    total += b.probability;
    out.mean += b.probability * b.value;
    for (std::size_t k = 0; k < d; ++k) out.z[k] += b.probability * b.value * b.dw[k];
    for (std::size_t k = 0; k < m; ++k) {
      out.u[k] += b.probability * b.value * (static_cast<double>(b.jumps[k]) - jump_probabilities[k]);
    }
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw InvalidArgument("extract_zu: branch probabilities sum to " + io::format_double(total));
  }
  for (double& z : out.z) z /= dt;
  for (std::size_t k = 0; k < m; ++k) {
    const double p = jump_probabilities[k];
    const double variance = p * (1.0 - p);
    out.u[k] = variance > 0.0 ? out.u[k] / variance : 0.0;
  }
  return out;
}

SolutionGrid solve_tree_exact(const Problem& problem, const Coefficients& coefficients, const TreeModel& tree) {
  const ScenarioSet& scenarios = tree.scenarios();
  if (!(scenarios.grid() == problem.grid) || scenarios.dim() != problem.dim || !(scenarios.marks() == problem.marks)) {
    throw InvalidArgument("tree and problem disagree on grid, dimension or marks");
  }
  const TimeGrid& grid = problem.grid;
  const std::size_t n_steps = grid.steps();
  const std::size_t d = problem.dim;
  const std::size_t m = problem.marks.size();
  const double dt = grid.dt();
  const double root_dt = std::sqrt(dt);
  const std::vector<double> jump_probabilities = compensator_increments(problem.marks, dt);
  const std::vector<Outcome> outcomes = step_outcomes(d, jump_probabilities, dt);
  const std::size_t b = tree.branching();
  const PathStates& states = tree.states();
  const std::span<const double> lambda = problem.marks.intensities();

  std::vector<Layer> layers;
  layers.reserve(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) layers.emplace_back(tree.nodes_at(i), d, m);

  auto node_arguments = [&](std::size_t step, std::size_t node, double y, std::span<const double> z,
                            std::span<const double> u) {
    const std::size_t path = tree.representative(step, node);
    Arguments args;
    args.at.t = grid.time(step);
    args.at.y = y;
    args.at.z = z;
    args.at.u = u;
    args.at.w = states.w(step, path);
    args.at.jumps = states.jumps(step, path);
    args.at.lambda = lambda;
    args.step = step;
    args.path = path;
    return args;
  };

  // Terminal layer.
  {
    Layer& last = layers[n_steps];
    parallel_for(tree.nodes_at(n_steps), [&](std::size_t node) {
      const std::size_t path = tree.representative(n_steps, node);
      const double xi = problem.terminal_at(states.w(n_steps, path), states.jumps(n_steps, path));
      const double s = problem.barrier_at(grid.horizon(), states.w(n_steps, path));
      if (s > xi) {
        throw ConfigError("barrier exceeds terminal value at T (S_T=" + io::format_double(s) +
                          " > xi=" + io::format_double(xi) + " on leaf " + std::to_string(path) + ")");
      }
      last.value[node] = xi;
      last.drift_argument[node] = xi;
      last.barrier[node] = s;
      last.g[node] = coefficients.g(node_arguments(n_steps, node, xi, std::span<const double>(last.z).subspan(node * d, d),
                                                   std::span<const double>(last.u).subspan(node * m, m)));
    });
  }

  for (std::size_t step = n_steps; step-- > 0;) {
    const Layer& next = layers[step + 1];
    Layer& here = layers[step];
    const std::size_t history_count = power(b, step);
    parallel_for(tree.nodes_at(step), [&](std::size_t node) {
      const std::size_t history = node % history_count;
      const std::size_t future = node / history_count;
      const double db = (future & 1U) ? root_dt : -root_dt;

      std::vector<Branch> branches(b);
      double expected_g = 0.0;
      for (std::size_t g = 0; g < b; ++g) {
        const std::size_t child = history + g * history_count + history_count * b * (future >> 1);
        branches[g] = Branch{next.value[child], outcomes[g].dw, outcomes[g].jumps, outcomes[g].probability};
        expected_g += outcomes[g].probability * next.g[child];
      }
      const Projection proj = extract_zu(branches, dt, jump_probabilities);
      std::copy(proj.z.begin(), proj.z.end(), here.z.begin() + static_cast<std::ptrdiff_t>(node * d));
      std::copy(proj.u.begin(), proj.u.end(), here.u.begin() + static_cast<std::ptrdiff_t>(node * m));

      const Arguments args = node_arguments(step, node, proj.mean, proj.z, proj.u);
      const double drift = coefficients.f(args);
      const double candidate = proj.mean + dt * drift + db * expected_g;
      const double s = problem.barrier_at(grid.time(step), args.at.w);
      const ReflectedValue r = reflect_step(candidate, s);
      here.value[node] = r.value;
      here.drift_argument[node] = proj.mean;
      here.push[node] = r.push;
      here.barrier[node] = s;
      if (step > 0) {
        here.g[node] = coefficients.g(node_arguments(step, node, r.value, proj.z, proj.u));
      }
    });
  }

  SolutionGrid out(n_steps, tree.leaves(), d, m);
  out.weights.assign(scenarios.weights().begin(), scenarios.weights().end());
  parallel_for(tree.leaves(), [&](std::size_t path) {
    double pushed = 0.0;
    for (std::size_t step = 0; step <= n_steps; ++step) {
      const Layer& layer = layers[step];
      const std::size_t node = tree.node_of(step, path);
      const std::size_t cell = out.at(step, path);
      out.value[cell] = layer.value[node];
      out.drift_argument[cell] = layer.drift_argument[node];
      out.barrier[cell] = layer.barrier[node];
      out.reflection[cell] = pushed;
      for (std::size_t k = 0; k < d; ++k) out.w_integrand[cell * d + k] = layer.z[node * d + k];
      for (std::size_t k = 0; k < m; ++k) out.jump_integrand[cell * m + k] = layer.u[node * m + k];
      pushed += layer.push[node];
    }
  });
  return out;
}

}  // namespace rbdsdep
