#include <gtest/gtest.h>

#include <cmath>

#include "rbdsdep/error.hpp"
#include "rbdsdep/lsmc.hpp"
#include "rbdsdep/parallel.hpp"
#include "rbdsdep/schemes.hpp"
#include "test_support.hpp"

namespace rbdsdep {
namespace {

using testing::make_problem;
using testing::ProblemText;

SolutionGrid lsmc(const Problem& p, const ScenarioSet& s, SchemeParams params = {}) {
  return solve_lsmc(p, expression_coefficients(p), s, params);
}

SchemeParams indicator() {
  SchemeParams params;
  params.basis = BasisKind::indicator;
  return params;
}

TEST(SchemeParams, Validation) {
  SchemeParams p;
  p.degree = 3;
  EXPECT_THROW(p.validate(), ConfigError);
  p.degree = 1;
  p.ridge = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.ridge = 0.0;
  EXPECT_NO_THROW(p.validate());
  EXPECT_STREQ(to_string(BasisKind::indicator), "indicator");
}

TEST(Lsmc, SaturatedBasisReproducesTree) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Problem p = make_problem(testing::random_lipschitz_instance(seed));
    const TreeModel tree(p.grid, p.dim, p.marks);
    const SolutionGrid exact = solve_tree_exact(p, expression_coefficients(p), tree);
    const ScenarioSet enumeration = enumerate_two_point(p.grid, p.dim, p.marks);
    const SolutionGrid regressed = lsmc(p, enumeration, indicator());
    EXPECT_NEAR(regressed.root(), exact.root(), 1e-10) << "seed " << seed;
    for (std::size_t j = 0; j < exact.value.size(); ++j) ASSERT_NEAR(regressed.value[j], exact.value[j], 1e-10);
  }
}

TEST(Lsmc, UpperBoundMatchesTreeWithSaturatedBasis) {
  ProblemText t;
  const Problem p = make_problem(t);
  const SolutionGrid tree_v = solve_upper_bound(p, testing::tree_solver(p));
  const auto enumeration = std::make_shared<const ScenarioSet>(enumerate_two_point(p.grid, p.dim, p.marks));
  const SolutionGrid lsmc_v = solve_upper_bound(p, Solver::lsmc(enumeration, indicator()));
  EXPECT_GT(tree_v.root(), 0.0);
  EXPECT_NEAR(lsmc_v.root(), tree_v.root(), 1e-10);
}

TEST(Lsmc, MartingaleRepresentationOfW) {
  ProblemText t;
  t.terminal = "w1";
  t.steps = 5;
  const Problem p = make_problem(t);
  const ScenarioSet s = simulate_scenarios(p.grid, 1, p.marks, 20000, 2024, DriverMode::gaussian);
  const SolutionGrid sol = lsmc(p, s);
  ASSERT_GT(sol.root_standard_error, 0.0);
  EXPECT_LE(std::fabs(sol.root()), 3.0 * sol.root_standard_error);
  for (std::size_t i = 0; i < 5; ++i) {
    const double z = sol.mean_at(sol.w_integrand, i);
    EXPECT_LE(std::fabs(z - 1.0), 3.0 * sol.w_integrand_error[i] + 1e-12) << "step " << i;
  }
}

TEST(Lsmc, UnitDriftAddsHorizon) {
  ProblemText t;
  t.terminal = "w1";
  t.f = "1";
  t.horizon = 2.0;
  const Problem p = make_problem(t);
  const ScenarioSet s = simulate_scenarios(p.grid, 1, p.marks, 20000, 99, DriverMode::gaussian);
  const SolutionGrid sol = lsmc(p, s);
  EXPECT_LE(std::fabs(sol.root() - 2.0), 3.0 * sol.root_standard_error);
}

TEST(Lsmc, StandardErrorShrinksLikeInverseSquareRoot) {
  ProblemText t;
  t.terminal = "max(w1, 0)";
  t.f = "-0.5 * y";
  t.marks = {1.0};
  t.intensities = {1.0};
  const Problem p = make_problem(t);
  double previous = 0.0;
  for (std::size_t paths : {1000, 4000, 16000}) {
    const SolutionGrid sol = lsmc(p, simulate_scenarios(p.grid, 1, p.marks, paths, 7, DriverMode::gaussian));
    if (previous > 0.0) {
      const double ratio = sol.root_standard_error / previous;
      EXPECT_GT(ratio, 0.35);
      EXPECT_LT(ratio, 0.7);
    }
    previous = sol.root_standard_error;
  }
}

TEST(Lsmc, TooFewPathsIsRejected) {
  ProblemText t;
  const Problem p = make_problem(t);
  EXPECT_THROW(lsmc(p, simulate_scenarios(p.grid, 1, p.marks, 20, 1, DriverMode::gaussian)), InvalidArgument);
}

TEST(Lsmc, IllConditionedDesignNamesStepAndBasis) {
  ProblemText t;
  t.terminal = "w1";
  const Problem p = make_problem(t);
  SchemeParams params;
  params.condition_limit = 1.5;
  try {
    lsmc(p, simulate_scenarios(p.grid, 1, p.marks, 2000, 1, DriverMode::gaussian), params);
    FAIL();
  } catch (const RegressionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("step"), std::string::npos) << what;
    EXPECT_NE(what.find("polynomial"), std::string::npos) << what;
  }
}

TEST(Lsmc, IndicatorBasisNeedsTwoPointDrivers) {
  ProblemText t;
  const Problem p = make_problem(t);
  EXPECT_THROW(lsmc(p, simulate_scenarios(p.grid, 1, p.marks, 2000, 1, DriverMode::gaussian), indicator()),
               ConfigError);
}

TEST(Lsmc, SampledTwoPointIndicatorAgreesWithTreeAsPathsGrow) {
  ProblemText t = testing::random_lipschitz_instance(3);
  t.steps = 2;
  const Problem p = make_problem(t);
  const double exact = testing::tree_solver(p).solve(p).root();
  const SolutionGrid sol = lsmc(p, simulate_scenarios(p.grid, 1, p.marks, 50000, 5, DriverMode::two_point), indicator());
  EXPECT_LE(std::fabs(sol.root() - exact), 4.0 * sol.root_standard_error + 1e-3);
}

TEST(Lsmc, InvariantsAndThreadDeterminism) {
  ProblemText t;
  t.terminal = "max(w1, 0.2)";
  t.barrier = "0.2 + 0.3 * t";
  t.f = "0.5 * z1 - 0.2 * y";
  t.g = "0.1 * y";
  t.marks = {1.0};
  t.intensities = {1.0};
  t.terminal = "max(w1, 0.5) + 0.1 * n1";
  const Problem p = make_problem(t);
  const ScenarioSet s = simulate_scenarios(p.grid, 1, p.marks, 4000, 31, DriverMode::gaussian);
  set_thread_count(1);
  const SolutionGrid a = lsmc(p, s);
  set_thread_count(8);
  const SolutionGrid b = lsmc(p, s);
  set_thread_count(1);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.root_standard_error, b.root_standard_error);
  const InvariantReport r = check_invariants(a);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.skorokhod, 0.0);
  EXPECT_EQ(a.regression_residual.size(), 4U);
}

}  // namespace
}  // namespace rbdsdep
