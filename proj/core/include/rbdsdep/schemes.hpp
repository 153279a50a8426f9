#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbdsdep/analysis.hpp"
#include "rbdsdep/envelope.hpp"
#include "rbdsdep/problem.hpp"
#include "rbdsdep/solution.hpp"
#include "rbdsdep/solver.hpp"

namespace rbdsdep {

enum class SequenceMode { inf_envelope, bracketing, sup_envelope };
const char* to_string(SequenceMode mode);

inline constexpr double kOrderingTolerance = 1e-10;
inline constexpr double kEarlyStopTolerance = 1e-9;

/// One approximation sequence and its node-wise ordering diagnostics.
struct SequenceRun {
  SequenceMode mode = SequenceMode::inf_envelope;
  std::vector<double> indices;            // n values; bracketing uses 1, 2, ...
  std::vector<SolutionGrid> solutions;
  std::vector<double> root_series;
  /// Per index: the smallest node-wise step in the expected direction. For envelopes it compares
  /// with the previous member (+inf for the first); for bracketing it is the smallest of
  /// (Y^n - lower anchor, Y^n - Y^(n-1), upper anchor - Y^n).
  std::vector<double> ordering_margin;
  std::vector<NormReport> norms;
  std::optional<SolutionGrid> lower_anchor;
  std::optional<SolutionGrid> upper_anchor;
  bool early_stopped = false;
  std::string violation;  // first ordering violation beyond kOrderingTolerance, empty if none

  bool ordering_holds() const noexcept { return violation.empty(); }
  double limit_root() const { return root_series.back(); }
};

/// [1, 2, 4, 8, 16] with every entry raised to at least `growth_c`, duplicates removed.
std::vector<double> default_indices(double growth_c);

/// Solves with the inf-convolution approximant f_n for each n (ascending, each n >= C). Stops early
/// once successive roots differ by less than 1e-9. Throws ConfigError when f fails the linear growth
/// check on a cloud over the envelope box, BoxTooSmall when an optimiser hits the box.
SequenceRun run_inf_envelope_sequence(const Problem& problem, const Solver& solver, const EnvelopeParams& envelope,
                                      std::vector<double> indices);

/// Mirror image with sup-convolutions; the root series is nonincreasing.
SequenceRun run_sup_envelope_sequence(const Problem& problem, const Solver& solver, const EnvelopeParams& envelope,
                                      std::vector<double> indices);

/// Same data with generator C (1 + |y| + |z| + |u|_lambda).
SolutionGrid solve_upper_bound(const Problem& problem, const Solver& solver);

/// Anchors with generators -C(|y|+|z|+|u|) - f_t and +C(|y|+|z|+|u|) + f_t, then `iterations` solves with
/// generator f(t, prev) + pi(t, y - prev_y, z - prev_z, u - prev_u), prev being the previous iterate's
/// (E_i[Y_{i+1}], Z_i, U_i) frozen per (step, path); the first prev is the lower anchor.
/// Throws ConfigError when pi or f_t is missing or a hypothesis check fails on its cloud.
SequenceRun run_bracketing_sequence(const Problem& problem, const Solver& solver, std::size_t iterations);

/// sum_i mean |A_i - B_i|^2 dt over i < N, with the lambda-weighted norm for jump integrands.
double w_integrand_distance(const SolutionGrid& a, const SolutionGrid& b, const TimeGrid& grid);
double jump_integrand_distance(const SolutionGrid& a, const SolutionGrid& b, const TimeGrid& grid,
                               const MarkSpace& marks);

/// Columns: n, Y0, K_T, Z_norm, U_norm, ordering_margin.
void write_sequence_csv(std::ostream& out, const SequenceRun& run);

}  // namespace rbdsdep
