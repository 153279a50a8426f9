#pragma once

#include <memory>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/lsmc.hpp"
#include "rbdsdep/problem.hpp"
#include "rbdsdep/solution.hpp"
#include "rbdsdep/tree.hpp"

namespace rbdsdep {

/// A fixed set of drivers plus the method used to solve on them. Pipelines that solve several
/// problems (sequences, comparisons) share one Solver so every solve sees common noise.
class Solver {
 public:
  static Solver tree(std::shared_ptr<const TreeModel> model);
  static Solver lsmc(std::shared_ptr<const ScenarioSet> scenarios, SchemeParams params = {});

  SolutionGrid solve(const Problem& problem, const Coefficients& coefficients) const;
  SolutionGrid solve(const Problem& problem) const { return solve(problem, expression_coefficients(problem)); }

  bool is_tree() const noexcept { return tree_ != nullptr; }
  const ScenarioSet& scenarios() const noexcept { return *scenarios_; }
  const PathStates& states() const noexcept { return *states_; }

 private:
  std::shared_ptr<const TreeModel> tree_;
  std::shared_ptr<const ScenarioSet> scenarios_;
  std::shared_ptr<const PathStates> states_;
  SchemeParams params_;
};

}  // namespace rbdsdep
