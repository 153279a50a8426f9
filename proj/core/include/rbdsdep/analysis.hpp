#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/expr.hpp"
#include "rbdsdep/generator.hpp"
#include "rbdsdep/problem.hpp"
#include "rbdsdep/solution.hpp"
#include "rbdsdep/solver.hpp"

namespace rbdsdep {

// ---------------------------------------------------------------------------------------------
// Norms and structural invariants

struct NormReport {
  double sup_value_sq = 0.0;           // mean over paths of max_i |Y_i|^2
  double w_integrand_sq = 0.0;         // mean of sum_i |Z_i|^2 dt
  double jump_integrand_sq = 0.0;      // mean of sum_i |U_i|_lambda^2 dt
  double terminal_reflection_sq = 0.0; // mean of K_N^2
};

/// Throws EvalError naming the first (field, step, path) holding NaN or infinity.
NormReport norm_report(const SolutionGrid& solution, const TimeGrid& grid, const MarkSpace& marks);

struct SkorokhodReport {
  std::vector<double> per_path;  // |sum_i (Y_i - S_i)(K_{i+1} - K_i)|
  double worst = 0.0;
};

SkorokhodReport skorokhod_check(const SolutionGrid& solution);

/// Structural checks every produced solution must pass.
struct InvariantReport {
  double skorokhod = 0.0;               // worst per-path complementarity sum (must be exactly 0)
  double initial_reflection = 0.0;      // max |K_0|
  double smallest_push = 0.0;           // min K_{i+1} - K_i
  double smallest_barrier_gap = 0.0;    // min Y_i - S_i

  bool pass() const noexcept {
    return skorokhod == 0.0 && initial_reflection == 0.0 && smallest_push >= 0.0 && smallest_barrier_gap >= -1e-12;
  }
};

InvariantReport check_invariants(const SolutionGrid& solution);

// ---------------------------------------------------------------------------------------------
// Comparison

enum class Verdict { pass, fail, premises_not_met };
const char* to_string(Verdict verdict);

struct ComparisonReport {
  bool terminal_ordered = false;
  bool drift_ordered = false;
  bool barrier_ordered = false;
  bool same_g = false;
  std::size_t drift_samples = 0;
  double margin = 0.0;          // min over (step, path) of Y2 - Y1
  std::size_t worst_step = 0;
  std::size_t worst_path = 0;
  double root_gap = 0.0;        // root(Y2) - root(Y1)
  double tolerance = 1e-12;
  Verdict verdict = Verdict::premises_not_met;
  SolutionGrid first;
  SolutionGrid second;

  bool premises_met() const noexcept { return terminal_ordered && drift_ordered && barrier_ordered && same_g; }
};

/// Solves both problems on the solver's drivers and certifies xi1 <= xi2 on every path,
/// S1 <= S2 at every (t_i, W_{t_i}), g1 == g2, and f1 <= f2 on a box cloud plus every argument
/// either solution handed to f. The conclusion is only asserted when all premises hold.
ComparisonReport compare_solutions(const Problem& first, const Problem& second, const Solver& solver,
                                   double tolerance = 1e-12, std::size_t cloud_size = 2000,
                                   std::uint64_t cloud_seed = 7);

// ---------------------------------------------------------------------------------------------
// Positivity of pi-driven equations with a nonnegative source

struct PositivityPremises {
  bool terminal_nonnegative = false;
  bool source_nonnegative = false;
  bool minorant_vanishes = false;  // pi(t, 0, 0, 0) = 0

  bool met() const noexcept { return terminal_nonnegative && source_nonnegative && minorant_vanishes; }
};

/// Certifies xi >= 0 on every path of `scenarios`, h >= 0 and pi(t, 0, 0, 0) = 0 on a cloud.
PositivityPremises certify_positivity(const Problem& problem, const Expr& source, const Expr& minorant,
                                      const ScenarioSet& scenarios, std::size_t cloud_size = 2000,
                                      std::uint64_t cloud_seed = 11);

struct PositivityReport {
  PositivityPremises premises;
  double min_value = 0.0;
  double tolerance = 1e-10;
  Verdict verdict = Verdict::premises_not_met;
};

PositivityReport positivity_check(const SolutionGrid& solution, const PositivityPremises& premises,
                                  double tolerance = 1e-10);

// ---------------------------------------------------------------------------------------------
// Discrete Ito identity

/// Components of alpha_{i+1} = alpha_i + beta dt + gamma dB + eta . dW + k dt + sum_k sigma_k (J_k - lambda_k dt),
/// each evaluated at (t_i, y = alpha_i, w = W_{t_i}, n = N_{t_i}). `initial` is evaluated at t = 0.
struct ItoComponents {
  Expr initial;
  Expr drift;
  Expr backward;
  std::vector<Expr> forward;  // d entries
  Expr reflection;            // rate of the increasing part, must be >= 0
  std::vector<Expr> jump;     // m entries
};

/// The same components as precomputed arrays. Per-step arrays are path-major (p * N + i),
/// forward and jump additionally times d and m.
struct ItoArrays {
  std::vector<double> initial;
  std::vector<double> drift;
  std::vector<double> backward;
  std::vector<double> forward;
  std::vector<double> reflection;
  std::vector<double> jump;
};

struct ItoReport {
  std::size_t paths = 0;
  double max_residual = 0.0;             // |alpha_N^2 - right-hand side of the discrete identity|
  double martingale_mean = 0.0;          // mean of sum_i 2 alpha_i (eta . dW + sigma . dM)
  double martingale_standard_error = 0.0;
  double second_moment = 0.0;            // mean of alpha_N^2
  double second_moment_standard_error = 0.0;
};

/// Throws InvalidArgument on a shape mismatch or a negative reflection increment.
ItoReport ito_residual_check(const ScenarioSet& scenarios, const ItoArrays& components);
ItoReport ito_residual_check(const ScenarioSet& scenarios, const ItoComponents& components);

}  // namespace rbdsdep
