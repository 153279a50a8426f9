#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "rbdsdep/analysis.hpp"
#include "rbdsdep/error.hpp"
#include "rbdsdep/schemes.hpp"
#include "test_support.hpp"

namespace rbdsdep {
namespace {

using testing::make_problem;
using testing::ProblemText;

TEST(Skorokhod, ZeroOnSolverOutputAndSnellContact) {
  ProblemText t;
  t.barrier = "1 - t";
  const Problem p = make_problem(t);
  const SolutionGrid s = testing::tree_solver(p).solve(p);
  EXPECT_EQ(skorokhod_check(s).worst, 0.0);
  EXPECT_NEAR(s.mean_at(s.reflection, s.steps), 1.0, 1e-12);
}

TEST(Skorokhod, InjectedViolationIsFlagged) {
  const Problem p = make_problem(ProblemText{});
  SolutionGrid s = testing::tree_solver(p).solve(p);
  // Y - S = 10 everywhere; a push there breaks complementarity.
  for (std::size_t i = 1; i <= s.steps; ++i) s.reflection[s.at(i, 3)] = 0.5;
  const SkorokhodReport r = skorokhod_check(s);
  EXPECT_GT(r.worst, 0.0);
  EXPECT_GT(r.per_path[3], 0.0);
  EXPECT_EQ(r.per_path[0], 0.0);
  EXPECT_FALSE(check_invariants(s).pass());
}

TEST(Invariants, DetectNonzeroInitialReflectionAndDecreasingK) {
  const Problem p = make_problem(ProblemText{});
  SolutionGrid s = testing::tree_solver(p).solve(p);
  s.reflection[s.at(0, 0)] = 0.1;
  EXPECT_FALSE(check_invariants(s).pass());
  s.reflection[s.at(0, 0)] = 0.0;
  s.reflection[s.at(2, 0)] = -0.1;
  EXPECT_LT(check_invariants(s).smallest_push, 0.0);
}

TEST(Norms, ZeroSolution) {
  const Problem p = make_problem(ProblemText{});
  const NormReport n = norm_report(testing::tree_solver(p).solve(p), p.grid, p.marks);
  EXPECT_EQ(n.sup_value_sq, 0.0);
  EXPECT_EQ(n.w_integrand_sq, 0.0);
  EXPECT_EQ(n.jump_integrand_sq, 0.0);
  EXPECT_EQ(n.terminal_reflection_sq, 0.0);
}

TEST(Norms, MartingaleIntegrandNormIsHorizon) {
  ProblemText t;
  t.terminal = "w1";
  t.horizon = 2.0;
  const Problem p = make_problem(t);
  EXPECT_NEAR(norm_report(testing::tree_solver(p).solve(p), p.grid, p.marks).w_integrand_sq, 2.0, 1e-12);
  const ScenarioSet s = simulate_scenarios(p.grid, 1, p.marks, 20000, 3, DriverMode::gaussian);
  const SolutionGrid mc = solve_lsmc(p, expression_coefficients(p), s);
  EXPECT_NEAR(norm_report(mc, p.grid, p.marks).w_integrand_sq, 2.0, 0.1);
}

TEST(Norms, NonFiniteValueIsNamed) {
  const Problem p = make_problem(ProblemText{});
  SolutionGrid s = testing::tree_solver(p).solve(p);
  s.value[s.at(2, 5)] = std::numeric_limits<double>::quiet_NaN();
  try {
    norm_report(s, p.grid, p.marks);
    FAIL();
  } catch (const EvalError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("step 2"), std::string::npos) << what;
    EXPECT_NE(what.find("path 5"), std::string::npos) << what;
  }
}

TEST(Comparison, ConstantDriftGapIsHorizon) {
  ProblemText t;
  t.terminal = "w1";
  const Problem first = make_problem(t);
  t.f = "1";
  const Problem second = make_problem(t);
  const ComparisonReport r = compare_solutions(first, second, testing::tree_solver(first));
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_GE(r.margin, 0.0);
  EXPECT_NEAR(r.root_gap, 1.0, 1e-12);
}

TEST(Comparison, TerminalShiftPropagates) {
  ProblemText t;
  t.terminal = "w1";
  const Problem first = make_problem(t);
  t.terminal = "w1 + 1";
  const Problem second = make_problem(t);
  const ComparisonReport r = compare_solutions(first, second, testing::tree_solver(first));
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_NEAR(r.root_gap, 1.0, 1e-12);
  EXPECT_NEAR(r.margin, 1.0, 1e-12);
}

TEST(Comparison, PremisesNotMetIsNeverPass) {
  ProblemText t;
  t.terminal = "w1";
  const Problem first = make_problem(t);
  const Solver solver = testing::tree_solver(first);
  ProblemText lower = t;
  lower.terminal = "w1 - 1";
  ComparisonReport r = compare_solutions(first, make_problem(lower), solver);
  EXPECT_EQ(r.verdict, Verdict::premises_not_met);
  EXPECT_FALSE(r.terminal_ordered);
  EXPECT_STREQ(to_string(r.verdict), "premises-not-met");

  ProblemText other_g = t;
  other_g.g = "0.1 * y";
  r = compare_solutions(first, make_problem(other_g), solver);
  EXPECT_EQ(r.verdict, Verdict::premises_not_met);
  EXPECT_FALSE(r.same_g);

  ProblemText crossing = t;
  crossing.f = "y";  // f1 = 0 <= y fails for negative y
  r = compare_solutions(first, make_problem(crossing), solver);
  EXPECT_EQ(r.verdict, Verdict::premises_not_met);
  EXPECT_FALSE(r.drift_ordered);

  ProblemText barrier = t;
  barrier.barrier = "-20";
  r = compare_solutions(first, make_problem(barrier), solver);
  EXPECT_FALSE(r.barrier_ordered);
  EXPECT_EQ(r.verdict, Verdict::premises_not_met);
}

TEST(Comparison, RandomOrderedPairsOnSharedTree) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> c(-0.3, 0.3);
  for (int k = 0; k < 8; ++k) {
    ProblemText t;
    t.steps = 3;
    t.marks = {1.0};
    t.intensities = {0.5};
    t.terminal = testing::fmt(c(rng)) + " * w1 + " + testing::fmt(c(rng)) + " * n1";
    t.f = testing::fmt(c(rng)) + " * y + " + testing::fmt(c(rng)) + " * y * y / (1 + y * y) + " + testing::fmt(c(rng)) +
          " * z1 + " + testing::fmt(0.2 * c(rng)) + " * u1 + " + testing::fmt(c(rng)) + " * w1";
    t.g = testing::fmt(0.5 * c(rng)) + " * y";
    const Problem second = make_problem(t);
    t.f = "(" + t.f + ") - abs(" + testing::fmt(c(rng)) + " + " + testing::fmt(c(rng)) + " * y)";
    const Problem first = make_problem(t);
    const ComparisonReport r = compare_solutions(first, second, testing::tree_solver(first));
    EXPECT_TRUE(r.premises_met()) << k;
    EXPECT_GE(r.margin, -1e-12) << k;
    EXPECT_EQ(r.verdict, Verdict::pass) << k;
  }
}

TEST(Positivity, ZeroData) {
  ProblemText t;
  t.f = "0";
  const Problem p = make_problem(t);
  const Solver solver = testing::tree_solver(p);
  const SolutionGrid s = solver.solve(p);
  const PositivityPremises premises = certify_positivity(p, parse_expr("0"), parse_expr("0"), solver.scenarios());
  EXPECT_TRUE(premises.met());
  const PositivityReport r = positivity_check(s, premises);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_EQ(r.min_value, 0.0);
}

TEST(Positivity, SourceWithAbsoluteMinorant) {
  ProblemText t;
  t.terminal = "1";
  t.f = "1 - abs(z1)";
  const Problem p = make_problem(t);
  const Solver solver = testing::tree_solver(p);
  const PositivityPremises premises = certify_positivity(p, parse_expr("1"), parse_expr("-abs(z1)"), solver.scenarios());
  const PositivityReport r = positivity_check(solver.solve(p), premises);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_GE(r.min_value, -1e-10);
}

TEST(Positivity, NegativeTerminalIsGuarded) {
  ProblemText t;
  t.terminal = "-1";
  const Problem p = make_problem(t);
  const Solver solver = testing::tree_solver(p);
  const PositivityPremises premises = certify_positivity(p, parse_expr("0"), parse_expr("0"), solver.scenarios());
  EXPECT_FALSE(premises.terminal_nonnegative);
  EXPECT_EQ(positivity_check(solver.solve(p), premises).verdict, Verdict::premises_not_met);
  EXPECT_FALSE(certify_positivity(p, parse_expr("y"), parse_expr("0"), solver.scenarios()).source_nonnegative);
  EXPECT_FALSE(certify_positivity(p, parse_expr("0"), parse_expr("1 + y"), solver.scenarios()).minorant_vanishes);
}

ItoComponents components(std::size_t d, std::size_t m) {
  ItoComponents c;
  c.forward.assign(d, Expr());
  c.jump.assign(m, Expr());
  return c;
}

TEST(Ito, BrownianQuadraticVariation) {
  const ScenarioSet s = simulate_scenarios(TimeGrid(1.0, 20), 1, MarkSpace(), 10000, 4, DriverMode::gaussian);
  ItoComponents c = components(1, 0);
  c.forward[0] = parse_expr("1");
  const ItoReport r = ito_residual_check(s, c);
  EXPECT_LE(r.max_residual, 1e-10);
  EXPECT_LE(std::fabs(r.second_moment - 1.0), 5.0 * r.second_moment_standard_error);
  EXPECT_LE(std::fabs(r.martingale_mean), 5.0 * r.martingale_standard_error);
}

TEST(Ito, CompensatedPoissonVariance) {
  const ScenarioSet s = simulate_scenarios(TimeGrid(2.0, 20), 1, MarkSpace({1.0}, {1.5}), 10000, 5, DriverMode::gaussian);
  ItoComponents c = components(1, 1);
  c.jump[0] = parse_expr("1");
  const ItoReport r = ito_residual_check(s, c);
  EXPECT_LE(r.max_residual, 1e-10);
  EXPECT_LE(std::fabs(r.second_moment - 3.0), 5.0 * r.second_moment_standard_error);
}

TEST(Ito, ConstantHasZeroResidual) {
  const ScenarioSet s = simulate_scenarios(TimeGrid(1.0, 5), 1, MarkSpace(), 100, 5, DriverMode::gaussian);
  ItoComponents c = components(1, 0);
  c.initial = parse_expr("2.5");
  const ItoReport r = ito_residual_check(s, c);
  EXPECT_EQ(r.max_residual, 0.0);
  EXPECT_DOUBLE_EQ(r.second_moment, 6.25);
}

TEST(Ito, MixedSemimartingaleWithAllComponents) {
  const ScenarioSet s =
      simulate_scenarios(TimeGrid(1.0, 50), 2, MarkSpace({1.0, -1.0}, {1.0, 2.0}), 2000, 6, DriverMode::gaussian);
  ItoComponents c = components(2, 2);
  c.initial = parse_expr("0.5");
  c.drift = parse_expr("sin(y) - t");
  c.backward = parse_expr("0.3 * cos(y)");
  c.forward[0] = parse_expr("1 + 0.1 * y");
  c.forward[1] = parse_expr("w1");
  c.reflection = parse_expr("pos(-y)");
  c.jump[0] = parse_expr("0.5 * y");
  c.jump[1] = parse_expr("-1 + n1");
  const ItoReport r = ito_residual_check(s, c);
  EXPECT_EQ(r.paths, 2000U);
  EXPECT_LE(r.max_residual, 1e-10);
}

TEST(Ito, ShapeAndSignErrors) {
  const ScenarioSet s = simulate_scenarios(TimeGrid(1.0, 2), 1, MarkSpace(), 3, 5, DriverMode::gaussian);
  ItoArrays bad;
  EXPECT_THROW(ito_residual_check(s, bad), InvalidArgument);
  ItoArrays negative{std::vector<double>(3, 0.0), std::vector<double>(6, 0.0), std::vector<double>(6, 0.0),
                     std::vector<double>(6, 0.0), std::vector<double>(6, -1.0), {}};
  EXPECT_THROW(ito_residual_check(s, negative), InvalidArgument);
  ItoComponents c = components(1, 0);
  c.reflection = parse_expr("-1");
  EXPECT_THROW(ito_residual_check(s, c), InvalidArgument);
}

}  // namespace
}  // namespace rbdsdep
