// Throughput of the tree solver, the regression solver and the envelope search.

#include <benchmark/benchmark.h>

#include <memory>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/envelope.hpp"
#include "rbdsdep/expr.hpp"
#include "rbdsdep/lsmc.hpp"
#include "rbdsdep/parallel.hpp"
#include "rbdsdep/problem.hpp"
#include "rbdsdep/solver.hpp"
#include "rbdsdep/tree.hpp"

namespace {

using namespace rbdsdep;

Problem lipschitz_problem(std::size_t steps, std::size_t dim, bool jumps) {
  Problem p;
  p.generator.f = parse_expr(jumps ? "0.3 * z1 - 0.2 * y + 0.1 * u1" : "0.3 * z1 - 0.2 * y");
  p.generator.g = parse_expr("0.1 * y");
  p.barrier = parse_expr("min(w1, 0) - 0.2 * (1 - t)");
  p.terminal = parse_expr("max(w1, 0)");
  p.grid = TimeGrid(1.0, steps);
  p.dim = dim;
  p.marks = jumps ? MarkSpace({1.0}, {0.5}) : MarkSpace();
  return p;
}

void TreeSolve(benchmark::State& state) {
  const Problem p = lipschitz_problem(static_cast<std::size_t>(state.range(0)), 1, true);
  const Solver solver = Solver::tree(std::make_shared<const TreeModel>(p.grid, p.dim, p.marks));
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(p).root());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(solver.scenarios().paths()));
}
BENCHMARK(TreeSolve)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

void LsmcSolve(benchmark::State& state) {
  const Problem p = lipschitz_problem(8, 2, true);
  const auto paths = static_cast<std::size_t>(state.range(0));
  const auto scenarios =
      std::make_shared<const ScenarioSet>(simulate_scenarios(p.grid, p.dim, p.marks, paths, 1, DriverMode::gaussian));
  const Solver solver = Solver::lsmc(scenarios);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(p).root());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(paths));
}
BENCHMARK(LsmcSolve)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void EnvelopeSearch(benchmark::State& state) {
  const Expr f = parse_expr("sign(y) * sqrt(abs(y)) + 0.5 * z1");
  EnvelopeParams params;
  params.n = 4.0;
  params.grid_points = static_cast<std::size_t>(state.range(0));
  SamplePoint point;
  point.y = 0.3;
  point.z = {0.1};
  for (auto _ : state) benchmark::DoNotOptimize(inf_convolution(f, MarkSpace(), params, point).value);
}
BENCHMARK(EnvelopeSearch)->Arg(51)->Arg(201);

}  // namespace

BENCHMARK_MAIN();
