#pragma once

#include <cstddef>
#include <string>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/problem.hpp"
#include "rbdsdep/solution.hpp"

namespace rbdsdep {

enum class BasisKind {
  /// 1, W_i, N_i, B_T - B_{t_i}, dB_i (and their squares at degree 2), plus the barrier S_i.
  polynomial,
  /// One indicator per observed (W/jump history before t_i, B increments from t_i on). Requires
  /// two-point scenarios; the regression is then an exact weighted group mean.
  indicator,
};

const char* to_string(BasisKind basis);

struct SchemeParams {
  BasisKind basis = BasisKind::polynomial;
  unsigned degree = 2;             // 1 or 2, polynomial basis only
  double ridge = 1e-8;             // added to the diagonal of the weight-normalised Gram matrix
  double condition_limit = 1e12;   // largest accepted eigenvalue ratio of the ridged Gram matrix

  void validate() const;
};

/// Regression Monte Carlo version of the tree recursion: every conditional expectation is
/// replaced by a weighted least-squares projection on the chosen basis at each step.
/// Throws RegressionError naming the step and basis when a design is too badly conditioned,
/// InvalidArgument when P < 10 x basis size (waived for exhaustive enumerations), ConfigError when
/// the barrier exceeds the terminal value on some path.
SolutionGrid solve_lsmc(const Problem& problem, const Coefficients& coefficients, const ScenarioSet& scenarios,
                        const SchemeParams& params = {});

}  // namespace rbdsdep
