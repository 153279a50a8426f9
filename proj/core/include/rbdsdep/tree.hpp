#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/problem.hpp"
#include "rbdsdep/solution.hpp"

namespace rbdsdep {

struct TreeLimits {
  std::size_t max_steps = 6;
  std::size_t node_budget = std::size_t{1} << 18;  // leaves (complete paths)
};

/// Exhaustive two-point probability tree: every W component and B move +-sqrt(dt), mark k fires
/// with probability lambda_k dt, all independent. Leaves are the paths of `enumerate_two_point`.
class TreeModel {
 public:
  /// Throws BudgetError when N exceeds limits.max_steps or the leaf count exceeds the budget,
  /// ConfigError when total_intensity * dt >= 1.
  TreeModel(const TimeGrid& grid, std::size_t dim, const MarkSpace& marks, TreeLimits limits = {});

  const ScenarioSet& scenarios() const noexcept { return scenarios_; }
  const PathStates& states() const noexcept { return states_; }
  std::size_t steps() const noexcept { return scenarios_.grid().steps(); }
  std::size_t leaves() const noexcept { return scenarios_.paths(); }
  /// Number of (W, jump) outcomes per step, 2^(d+m).
  std::size_t branching() const noexcept { return branching_; }

  /// Nodes at step i are the classes of paths sharing the W/jump history before t_i and the B
  /// increments from t_i on. There are branching^i * 2^(N-i) of them.
  std::size_t nodes_at(std::size_t step) const;
  std::size_t node_of(std::size_t step, std::size_t path) const;
  /// A path through the node: later W/jump outcomes and earlier B increments set to digit 0.
  std::size_t representative(std::size_t step, std::size_t node) const;

 private:
  ScenarioSet scenarios_;
  PathStates states_;
  std::size_t branching_;
};

/// Backward dynamic programming on the tree. Coefficients see Arguments with path set to the
/// node's representative path. The returned grid is expanded to every leaf path with exact weights.
/// Throws ConfigError when the barrier exceeds the terminal value at some leaf.
SolutionGrid solve_tree_exact(const Problem& problem, const Coefficients& coefficients, const TreeModel& tree);

/// One child of a node in a conditional projection.
struct Branch {
  double value = 0.0;
  std::span<const double> dw;
  std::span<const std::uint32_t> jumps;
  double probability = 0.0;
};

struct Projection {
  double mean = 0.0;
  std::vector<double> z;
  std::vector<double> u;
};

/// mean = E[v], z_k = E[v dW_k] / dt, u_k = E[v (J_k - p_k)] / (p_k (1 - p_k)) with p_k the firing
/// probability of mark k. Marks with p_k = 0 get u_k = 0. Throws InvalidArgument unless the
/// probabilities sum to 1 within 1e-12.
Projection extract_zu(std::span<const Branch> branches, double dt, std::span<const double> jump_probabilities);

}  // namespace rbdsdep
