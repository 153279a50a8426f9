#include "rbdsdep/solver.hpp"

#include "rbdsdep/error.hpp"

namespace rbdsdep {

Solver Solver::tree(std::shared_ptr<const TreeModel> model) {
  if (!model) throw InvalidArgument("solver: null tree");
  Solver s;
  s.tree_ = model;
  // Aliasing constructors: the scenario set and states live inside the tree.
  s.scenarios_ = std::shared_ptr<const ScenarioSet>(model, &model->scenarios());
  s.states_ = std::shared_ptr<const PathStates>(model, &model->states());
  return s;
}

Solver Solver::lsmc(std::shared_ptr<const ScenarioSet> scenarios, SchemeParams params) {
  if (!scenarios) throw InvalidArgument("solver: null scenario set");
  params.validate();
  Solver s;
  s.scenarios_ = scenarios;
  s.states_ = std::make_shared<const PathStates>(*scenarios);
  s.params_ = params;
  return s;
}

SolutionGrid Solver::solve(const Problem& problem, const Coefficients& coefficients) const {
  if (tree_) return solve_tree_exact(problem, coefficients, *tree_);
  return solve_lsmc(problem, coefficients, *scenarios_, params_);
}

}  // namespace rbdsdep
