// Acceptance harness: one PASS/FAIL line per criterion with pinned tolerances and runtime limits.
// Exit status is 0 iff every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rbdsdep/analysis.hpp"
#include "rbdsdep/envelope.hpp"
#include "rbdsdep/experiment.hpp"
#include "rbdsdep/lsmc.hpp"
#include "rbdsdep/parallel.hpp"
#include "rbdsdep/schemes.hpp"
#include "test_support.hpp"

namespace rbdsdep {
namespace {

using testing::fmt;
using testing::make_problem;
using testing::ProblemText;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3g", v);
  return buffer;
}

// ---------------------------------------------------------------------------------------------
// Every solution produced by criteria 1-7 is recorded here for the Skorokhod criterion.

struct SkorokhodLedger {
  std::size_t solutions = 0;
  std::size_t nonzero_products = 0;
  std::size_t nonzero_sums = 0;
  std::size_t nonzero_initial = 0;
  std::size_t decreasing = 0;

  void record(const SolutionGrid& s) {
    ++solutions;
    for (std::size_t p = 0; p < s.paths; ++p) {
      double sum = 0.0;
      if (s.k(0, p) != 0.0) ++nonzero_initial;
      for (std::size_t i = 0; i < s.steps; ++i) {
        const double dk = s.k(i + 1, p) - s.k(i, p);
        const double product = (s.y(i, p) - s.s(i, p)) * dk;
        if (product != 0.0) ++nonzero_products;
        if (dk < 0.0) ++decreasing;
        sum += product;
      }
      if (sum != 0.0) ++nonzero_sums;
    }
  }
  void record(const SequenceRun& run) {
    for (const SolutionGrid& s : run.solutions) record(s);
    if (run.lower_anchor) record(*run.lower_anchor);
    if (run.upper_anchor) record(*run.upper_anchor);
  }
};

SkorokhodLedger ledger;

// ---------------------------------------------------------------------------------------------
// Shared instances

// m = 0, dt = 0.25, C = 1.
ProblemText heaviside_instance() {
  ProblemText t;
  t.f = "indicator_pos(y)";
  t.terminal = "w1";
  t.barrier = "-10";
  return t;
}

Problem with_bracketing_data(const ProblemText& t) {
  Problem p = make_problem(t);
  p.generator.pi = parse_expr("0");
  p.generator.ft = parse_expr("1");
  return p;
}

EnvelopeParams wide_envelope() {
  EnvelopeParams e;
  e.grid_points = 201;
  return e;
}

const std::vector<double> kIndices{1, 2, 4, 8, 16};

// ---------------------------------------------------------------------------------------------
// 1. Oracle equivalence

Outcome oracle_equivalence() {
  Outcome out;
  double worst = 0.0, slowest = 0.0;
  SchemeParams params;
  params.basis = BasisKind::indicator;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto start = std::chrono::steady_clock::now();
    const Problem p = make_problem(testing::random_lipschitz_instance(seed));
    const SolutionGrid exact = testing::tree_solver(p).solve(p);
    const SolutionGrid regressed =
        solve_lsmc(p, expression_coefficients(p), enumerate_two_point(p.grid, p.dim, p.marks), params);
    ledger.record(exact);
    ledger.record(regressed);
    worst = std::max(worst, std::fabs(exact.root() - regressed.root()));
    slowest = std::max(slowest, seconds_since(start));
  }
  out.pass = worst <= 1e-10 && slowest < 10.0;
  out.detail = "6 instances, max |dY0| = " + num(worst) + " (tol 1e-10), slowest " + num(slowest) + " s (limit 10 s)";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 2. Closed forms

Outcome closed_forms() {
  Outcome out;
  double err_a = 0.0, err_b = 0.0, err_c = 0.0;
  {
    ProblemText t;
    t.terminal = "2.5";
    t.marks = {1.0};
    t.intensities = {1.0};
    const Problem p = make_problem(t);
    const SolutionGrid s = testing::tree_solver(p).solve(p);
    ledger.record(s);
    for (double y : s.value) err_a = std::max(err_a, std::fabs(y - 2.5));
    for (double z : s.w_integrand) err_a = std::max(err_a, std::fabs(z));
    for (double u : s.jump_integrand) err_a = std::max(err_a, std::fabs(u));
    for (double k : s.reflection) err_a = std::max(err_a, std::fabs(k));
  }
  {
    ProblemText t;
    t.f = "1";
    t.horizon = 1.5;
    const Problem p = make_problem(t);
    const SolutionGrid s = testing::tree_solver(p).solve(p);
    ledger.record(s);
    err_b = std::fabs(s.root() - 1.5);
  }
  {
    ProblemText t;
    t.horizon = 2.0;
    t.barrier = "1 - t / 2";
    const Problem p = make_problem(t);
    const SolutionGrid s = testing::tree_solver(p).solve(p);
    ledger.record(s);
    err_c = std::max(std::fabs(s.root() - 1.0), std::fabs(s.mean_at(s.reflection, s.steps) - 1.0));
  }
  out.pass = err_a <= 1e-12 && err_b <= 1e-12 && err_c <= 1e-10;
  out.detail = "(a) " + num(err_a) + " (tol 1e-12), (b) " + num(err_b) + " (tol 1e-12), (c) " + num(err_c) +
               " (tol 1e-10)";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 3. Comparison suite

Outcome comparison_suite() {
  Outcome out;
  std::mt19937_64 rng(20240917);
  std::uniform_real_distribution<double> c(-0.3, 0.3);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t certified = 0;
  for (int k = 0; k < 20; ++k) {
    ProblemText t;
    t.steps = 3;
    t.marks = {1.0};
    t.intensities = {0.5};
    t.terminal = fmt(c(rng)) + " * w1 + " + fmt(c(rng)) + " * n1 + " + fmt(c(rng)) + " * w1 * w1";
    t.barrier = "-10";
    t.f = fmt(c(rng)) + " * y + " + fmt(c(rng)) + " * y * y / (1 + y * y) + " + fmt(c(rng)) + " * z1 + " +
          fmt(0.2 * c(rng)) + " * u1 + " + fmt(c(rng)) + " * w1 * t + " + fmt(c(rng));
    t.g = fmt(0.5 * c(rng)) + " * y + " + fmt(0.3 * c(rng)) + " * z1";
    const Problem second = make_problem(t);
    t.f = "(" + t.f + ") - abs(" + fmt(c(rng)) + " + " + fmt(c(rng)) + " * y + " + fmt(c(rng)) + " * z1)";
    t.barrier = "-10 - " + fmt(std::fabs(c(rng)));
    const Problem first = make_problem(t);
    const ComparisonReport r = compare_solutions(first, second, testing::tree_solver(first));
    ledger.record(r.first);
    ledger.record(r.second);
    if (r.premises_met()) ++certified;
    worst = std::min(worst, r.margin);
  }
  out.pass = certified == 20 && worst >= -1e-12;
  out.detail = std::to_string(certified) + "/20 pairs premise-certified, min margin " + num(worst) + " (tol -1e-12)";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 4. Envelope suite

struct CatalogEntry {
  const char* name;
  const char* f;
  bool continuous;
};

Outcome envelope_suite() {
  Outcome out;
  const CatalogEntry catalog[] = {{"clipped |y|", "min(abs(y), 2)", true},
                                  {"y^2", "y * y", true},
                                  {"Heaviside", "indicator_pos(y)", false}};
  const std::vector<double> ns{1, 2, 4, 8, 16, 32};
  EnvelopeParams params = wide_envelope();
  const std::vector<double> grid = interval_grid(params.y, params.grid_points);
  const double slack = 2.0 * params.y.width() / static_cast<double>(params.grid_points);
  std::size_t order_violations = 0, lipschitz_violations = 0;
  double closed_form_error = 0.0;
  std::ostringstream gaps;
  bool gaps_ok = true;

  for (const CatalogEntry& entry : catalog) {
    const Expr f = parse_expr(entry.f);
    std::vector<double> previous(grid.size(), -std::numeric_limits<double>::infinity());
    double gap4 = 0.0, gap32 = 0.0;
    for (double n : ns) {
      params.n = n;
      std::vector<double> values(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j) {
        SamplePoint p;
        p.y = grid[j];
        p.z = {0.0};
        values[j] = inf_convolution(f, MarkSpace(), params, p).value;
        const double fv = f.evaluate(p.bind({}));
        if (values[j] < previous[j] - 1e-12 || values[j] > fv + 1e-12) ++order_violations;
        if (n == 4) gap4 = std::max(gap4, fv - values[j]);
        if (n == 32) gap32 = std::max(gap32, fv - values[j]);
        // Closed forms cross-checked against the brute-force grid values.
        const double y = grid[j];
        if (std::string(entry.f) == "y * y" && n == 4) {
          const double closed = std::fabs(y) <= 2.0 ? y * y : 4.0 * std::fabs(y) - 4.0;
          closed_form_error = std::max(closed_form_error, std::fabs(closed - values[j]));
        }
        if (std::string(entry.f) == "indicator_pos(y)") {
          closed_form_error = std::max(closed_form_error, std::fabs(std::min(1.0, n * std::max(y, 0.0)) - values[j]));
        }
      }
      for (std::size_t a = 0; a < grid.size(); ++a) {
        for (std::size_t b = a + 1; b < grid.size(); ++b) {
          if (std::fabs(values[a] - values[b]) > n * std::fabs(grid[a] - grid[b]) + slack) ++lipschitz_violations;
        }
      }
      previous = values;
    }
    if (entry.continuous) {
      const bool ok = gap4 > 0.0 ? gap32 < gap4 : gap32 <= gap4;
      gaps_ok = gaps_ok && ok;
      gaps << ' ' << entry.name << " gap4=" << num(gap4) << " gap32=" << num(gap32) << ';';
    }
  }
  out.pass = order_violations == 0 && lipschitz_violations == 0 && gaps_ok && closed_form_error <= 1e-9;
  out.detail = "order violations " + std::to_string(order_violations) + ", Lipschitz violations " +
               std::to_string(lipschitz_violations) + " (slack " + num(slack) + "), closed-form error " +
               num(closed_form_error) + " (tol 1e-9);" + gaps.str();
  return out;
}

// ---------------------------------------------------------------------------------------------
// 5. Monotone inf-envelope suite

Outcome monotone_suite() {
  Outcome out;
  ProblemText t;
  t.f = "sign(y) * sqrt(abs(y))";
  t.terminal = "w1";
  t.barrier = "min(w1, 0) - 0.5 * (1 - t)";
  const Problem p = make_problem(t);
  const Solver solver = testing::tree_solver(p);
  const SequenceRun run = run_inf_envelope_sequence(p, solver, wide_envelope(), kIndices);
  const SolutionGrid v = solve_upper_bound(p, solver);
  ledger.record(run);
  ledger.record(v);

  double worst_step = 0.0;
  for (std::size_t j = 1; j < run.root_series.size(); ++j) {
    worst_step = std::max(worst_step, run.root_series[j - 1] - run.root_series[j]);
  }
  double above_v = -std::numeric_limits<double>::infinity();
  for (const SolutionGrid& s : run.solutions) {
    for (std::size_t j = 0; j < s.value.size(); ++j) above_v = std::max(above_v, s.value[j] - v.value[j]);
  }
  auto bounded = [](std::vector<double> series) {
    const double last = series.back();
    std::sort(series.begin(), series.end());
    return std::isfinite(last) && last <= 2.0 * series[series.size() / 2];
  };
  std::vector<double> z_norms, u_norms;
  for (const NormReport& n : run.norms) {
    z_norms.push_back(n.w_integrand_sq);
    u_norms.push_back(n.jump_integrand_sq);
  }
  const bool norms_ok = bounded(z_norms) && bounded(u_norms);
  out.pass = run.ordering_holds() && worst_step <= 1e-10 && above_v <= 1e-10 && norms_ok;
  out.detail = "Y0 series";
  for (double y : run.root_series) out.detail += " " + num(y);
  out.detail += ", V0 " + num(v.root()) + ", max(Y-V) " + num(above_v) + ", node order " +
                (run.ordering_holds() ? "ok" : run.violation) + ", norms bounded " + (norms_ok ? "yes" : "no");
  return out;
}

// ---------------------------------------------------------------------------------------------
// 6. Bracketing suite, 7. maximal above minimal

double bracketing_limit = 0.0;
double inf_limit = 0.0;

Outcome bracketing_suite() {
  Outcome out;
  const Problem p = with_bracketing_data(heaviside_instance());
  const SequenceRun run = run_bracketing_sequence(p, testing::tree_solver(p), 5);
  ledger.record(run);
  bracketing_limit = run.limit_root();
  const auto& y = run.root_series;
  const double d12 = std::fabs(y[1] - y[0]);
  const double d45 = std::fabs(y[4] - y[3]);
  const bool converging = d45 < d12 || (d45 == 0.0 && d12 == 0.0);
  double min_margin = std::numeric_limits<double>::infinity();
  for (double m : run.ordering_margin) min_margin = std::min(min_margin, m);
  out.pass = run.ordering_holds() && min_margin >= -1e-10 && converging;
  out.detail = "lower anchor " + num(run.lower_anchor->root()) + ", iterates";
  for (double v : y) out.detail += " " + num(v);
  out.detail += ", upper anchor " + num(run.upper_anchor->root()) + "; min sandwich margin " + num(min_margin) +
                " (tol -1e-10); |d12| " + num(d12) + " |d45| " + num(d45);
  return out;
}

Outcome maximal_above_minimal() {
  Outcome out;
  const Problem p = with_bracketing_data(heaviside_instance());
  const Solver solver = testing::tree_solver(p);
  const SequenceRun sup = run_sup_envelope_sequence(p, solver, wide_envelope(), kIndices);
  const SequenceRun inf = run_inf_envelope_sequence(p, solver, wide_envelope(), kIndices);
  ledger.record(sup);
  ledger.record(inf);
  inf_limit = inf.limit_root();
  const double lowest = std::max(inf_limit, bracketing_limit);
  out.pass = sup.limit_root() >= lowest - 1e-8 && sup.ordering_holds() && inf.ordering_holds();
  out.detail = "maximal " + num(sup.limit_root()) + " >= minimal (inf-envelope " + num(inf_limit) + ", bracketing " +
               num(bracketing_limit) + ") - 1e-8";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 8. Skorokhod exactness over everything recorded so far

Outcome skorokhod_exactness() {
  Outcome out;
  out.pass = ledger.solutions > 0 && ledger.nonzero_products == 0 && ledger.nonzero_sums == 0 &&
             ledger.nonzero_initial == 0 && ledger.decreasing == 0;
  out.detail = std::to_string(ledger.solutions) + " solutions: nonzero products " +
               std::to_string(ledger.nonzero_products) + ", nonzero path sums " + std::to_string(ledger.nonzero_sums) +
               ", K0 != 0 " + std::to_string(ledger.nonzero_initial) + ", decreasing K " +
               std::to_string(ledger.decreasing);
  return out;
}

// ---------------------------------------------------------------------------------------------
// 9. Discrete Ito identity

Outcome ito_suite() {
  Outcome out;
  const TimeGrid grid(1.0, 20);
  const double lambda = 2.0;
  const MarkSpace marks({1.0}, {lambda});
  const ScenarioSet s = simulate_scenarios(grid, 1, marks, 10000, 515, DriverMode::gaussian);

  ItoComponents brownian;
  brownian.forward = {parse_expr("1")};
  brownian.jump = {Expr()};
  const ItoReport w = ito_residual_check(s, brownian);

  ItoComponents poisson;
  poisson.forward = {Expr()};
  poisson.jump = {parse_expr("1")};
  const ItoReport n = ito_residual_check(s, poisson);

  ItoComponents mixed;
  mixed.initial = parse_expr("0.5");
  mixed.drift = parse_expr("sin(y) - t");
  mixed.backward = parse_expr("0.3 * cos(y)");
  mixed.forward = {parse_expr("1 + 0.1 * y")};
  mixed.reflection = parse_expr("pos(-y)");
  mixed.jump = {parse_expr("0.5 * y - 1")};
  const ItoReport x = ito_residual_check(s, mixed);

  const double residual = std::max({w.max_residual, n.max_residual, x.max_residual});
  const bool w_moment = std::fabs(w.second_moment - 1.0) <= 5.0 * w.second_moment_standard_error;
  const bool n_moment = std::fabs(n.second_moment - lambda) <= 5.0 * n.second_moment_standard_error;
  out.pass = residual <= 1e-10 && w_moment && n_moment;
  out.detail = "max residual " + num(residual) + " (tol 1e-10); E|W_T|^2 " + num(w.second_moment) + " vs 1 (SE " +
               num(w.second_moment_standard_error) + "); E|M_T|^2 " + num(n.second_moment) + " vs 2 (SE " +
               num(n.second_moment_standard_error) + ")";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 10. Positivity

Outcome positivity_suite() {
  Outcome out;
  struct Instance {
    const char* terminal;
    const char* source;
    const char* minorant;
  };
  const Instance instances[] = {{"1", "1", "-abs(z1)"},
                                {"abs(w1)", "pos(sin(t + w1))", "-0.5 * abs(y) - 0.4 * abs(z1)"}};
  double lowest = std::numeric_limits<double>::infinity();
  std::size_t certified = 0;
  for (const Instance& in : instances) {
    ProblemText t;
    t.terminal = in.terminal;
    t.f = std::string("(") + in.source + ") + (" + in.minorant + ")";
    const Problem p = make_problem(t);
    const Solver solver = testing::tree_solver(p);
    const PositivityPremises premises =
        certify_positivity(p, parse_expr(in.source), parse_expr(in.minorant), solver.scenarios());
    const SolutionGrid s = solver.solve(p);
    ledger.record(s);
    const PositivityReport r = positivity_check(s, premises);
    if (premises.met()) ++certified;
    lowest = std::min(lowest, r.min_value);
    out.pass = out.pass && r.verdict == Verdict::pass;
  }
  out.pass = out.pass && certified == 2;
  out.detail = std::to_string(certified) + "/2 premise-certified, min node Y " + num(lowest) + " (tol -1e-10)";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 11. Reproducibility across thread counts

std::string csv_outputs(const std::filesystem::path& dir, std::size_t& count) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  count = files.size();
  std::string all;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    all += f.filename().string() + "\n" + s.str();
  }
  return all;
}

Outcome reproducibility() {
  Outcome out;
  const char* configs[] = {
      "[grid]\nsteps = 5\n[dims]\nd = 2\nmarks = 1\nintensities = 1.5\n[drivers]\npaths = 4000\nseed = 9\n"
      "[problem]\nf = 0.5 * z1 - 0.2 * y + 0.1 * u1\ng = 0.1 * y\nterminal = max(w1 + w2, 0) + 0.1 * n1\n"
      "barrier = 0.1 * t - 0.1 - abs(w2)\n[scheme]\nsolver = lsmc\n",
      "[problem]\nf = sign(y) * sqrt(abs(y))\nterminal = w1\nbarrier = min(w1, 0) - 0.5 * (1 - t)\n"
      "[pipeline]\nrun = inf_sequence\n",
      "[problem]\nf = indicator_pos(y)\npi = 0\nft = 1\nterminal = w1\n[pipeline]\nrun = bracketing\n",
      "[grid]\nsteps = 3\n[dims]\nmarks = 1\nintensities = 0.5\n[problem]\nf = 0.3 * u1 - 0.2 * z1\n"
      "terminal = w1 + n1\nbarrier = min(w1, 0) - 0.2 * (1 - t)\n[pipeline]\nrun = solve\n",
  };
  const auto root = std::filesystem::temp_directory_path() / "rbdsdep_acceptance_repro";
  std::size_t mismatches = 0, files = 0;
  for (std::size_t c = 0; c < std::size(configs); ++c) {
    const ExperimentConfig config = parse_config(configs[c]);
    std::string reference;
    for (std::size_t threads : {1, 2, 8}) {
      set_thread_count(threads);
      const auto dir = root / (std::to_string(c) + "_" + std::to_string(threads));
      std::filesystem::remove_all(dir);
      run_experiment(config, dir);
      std::size_t count = 0;
      const std::string text = csv_outputs(dir, count);
      if (threads == 1) {
        reference = text;
        files += count;
      } else if (text != reference || text.empty()) {
        ++mismatches;
      }
    }
  }
  set_thread_count(1);
  out.pass = mismatches == 0 && files >= std::size(configs);
  out.detail = std::to_string(std::size(configs)) + " configs x threads {1, 2, 8}, " + std::to_string(files) +
               " CSV files, mismatches " + std::to_string(mismatches);
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0: no runtime limit
  Outcome (*run)();
};

}  // namespace
}  // namespace rbdsdep

int main() {
  using namespace rbdsdep;
  const Criterion criteria[] = {
      {1, "oracle equivalence", 60.0, oracle_equivalence},
      {2, "closed forms", 5.0, closed_forms},
      {3, "comparison suite", 60.0, comparison_suite},
      {4, "envelope suite", 30.0, envelope_suite},
      {5, "monotone inf-envelope suite", 60.0, monotone_suite},
      {6, "bracketing suite", 60.0, bracketing_suite},
      {7, "maximal >= minimal", 0.0, maximal_above_minimal},
      {8, "Skorokhod exactness", 0.0, skorokhod_exactness},
      {9, "discrete Ito identity", 30.0, ito_suite},
      {10, "positivity", 0.0, positivity_suite},
      {11, "reproducibility", 0.0, reproducibility},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    const bool in_time = c.limit_seconds == 0.0 || elapsed < c.limit_seconds;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %-28s %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, outcome.detail.c_str(), elapsed,
                c.limit_seconds > 0.0 ? (", limit " + num(c.limit_seconds) + " s").c_str() : "");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
