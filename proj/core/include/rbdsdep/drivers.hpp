#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace rbdsdep {

/// Uniform partition 0 = t_0 < ... < t_N = T.
class TimeGrid {
 public:
  /// Throws InvalidArgument unless horizon > 0 and steps >= 1.
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }
  double time(std::size_t i) const { return times_.at(i); }
  std::span<const double> times() const noexcept { return times_; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
  }

 private:
  double horizon_;
  std::size_t steps_;
  double dt_;
  std::vector<double> times_;
};

TimeGrid build_time_grid(double horizon, std::size_t steps);

/// Finite atomic jump measure: mark e_k fires with intensity lambda_k per unit time.
class MarkSpace {
 public:
  MarkSpace() = default;
  /// Throws InvalidArgument on a zero mark, a non-positive intensity or a size mismatch.
  MarkSpace(std::vector<double> marks, std::vector<double> intensities);

  std::size_t size() const noexcept { return marks_.size(); }
  bool empty() const noexcept { return marks_.empty(); }
  std::span<const double> marks() const noexcept { return marks_; }
  std::span<const double> intensities() const noexcept { return intensities_; }
  double total_intensity() const noexcept;

  /// sqrt(sum_k lambda_k u_k^2), the L2(lambda) norm of a mark function.
  double norm(std::span<const double> u) const;

  friend bool operator==(const MarkSpace&, const MarkSpace&) = default;

 private:
  std::vector<double> marks_;
  std::vector<double> intensities_;
};

/// lambda_k * dt for every mark.
std::vector<double> compensator_increments(const MarkSpace& marks, double dt);

enum class DriverMode { gaussian, two_point };

const char* to_string(DriverMode mode);

/// Sampled increments of W (R^d), the backward Brownian motion B and the jump counts.
///
/// Storage is path-major: increment k of W on step i of path p lives at
/// dw[(p * N + i) * d + k]; jump counts likewise with m marks.
/// Exhaustive enumerations carry per-path probabilities in `weights`; sampled sets have
/// equal weights 1/P.
class ScenarioSet {
 public:
  ScenarioSet(TimeGrid grid, std::size_t dim, MarkSpace marks, std::size_t paths, std::uint64_t seed,
              DriverMode mode);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  const MarkSpace& marks() const noexcept { return marks_; }
  std::size_t paths() const noexcept { return paths_; }
  std::uint64_t seed() const noexcept { return seed_; }
  DriverMode mode() const noexcept { return mode_; }
  bool exhaustive() const noexcept { return exhaustive_; }

  std::span<const double> dw(std::size_t path, std::size_t step) const;
  double db(std::size_t path, std::size_t step) const { return db_[path * grid_.steps() + step]; }
  std::span<const std::uint32_t> jumps(std::size_t path, std::size_t step) const;
  double weight(std::size_t path) const { return weights_[path]; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Variance of the compensated jump increment (count - lambda dt) of mark k on one step.
  double jump_variance(std::size_t mark) const;

  friend bool operator==(const ScenarioSet&, const ScenarioSet&) = default;

 private:
  friend ScenarioSet simulate_scenarios(const TimeGrid&, std::size_t, const MarkSpace&, std::size_t,
                                        std::uint64_t, DriverMode);
  friend ScenarioSet enumerate_two_point(const TimeGrid&, std::size_t, const MarkSpace&);

  TimeGrid grid_;
  std::size_t dim_;
  MarkSpace marks_;
  std::size_t paths_;
  std::uint64_t seed_;
  DriverMode mode_;
  bool exhaustive_ = false;
  std::vector<double> dw_;
  std::vector<double> db_;
  std::vector<std::uint32_t> jumps_;
  std::vector<double> weights_;
};

/// Samples P independent paths. Each path draws from its own generator seeded by (seed, path),
/// so the output is identical for any thread count.
///
/// two_point: every W component and B take +-sqrt(dt) with probability 1/2 and mark k fires at most
/// once per step with probability lambda_k dt (requires total_intensity * dt < 1).
/// gaussian: N(0, dt) increments and Poisson(lambda_k dt) counts.
ScenarioSet simulate_scenarios(const TimeGrid& grid, std::size_t dim, const MarkSpace& marks,
                               std::size_t paths, std::uint64_t seed, DriverMode mode);

/// Every two-point path with its exact probability, in the canonical order used by the tree
/// solver: path index = sum_i digit_i * (2b)^i with b = 2^(d+m) and
/// digit_i = (W bits | jump bits << d) + b * (B bit).
ScenarioSet enumerate_two_point(const TimeGrid& grid, std::size_t dim, const MarkSpace& marks);

/// Running values W_{t_i} and jump totals N_{t_i} for every (step, path), step = 0..N.
/// Storage is time-major: entry (i, p) lives at (i * P + p) * width.
class PathStates {
 public:
  explicit PathStates(const ScenarioSet& scenarios);

  std::span<const double> w(std::size_t step, std::size_t path) const {
    return std::span<const double>(w_).subspan((step * paths_ + path) * dim_, dim_);
  }
  std::span<const double> jumps(std::size_t step, std::size_t path) const {
    return std::span<const double>(jumps_).subspan((step * paths_ + path) * marks_, marks_);
  }

 private:
  std::size_t paths_;
  std::size_t dim_;
  std::size_t marks_;
  std::vector<double> w_;
  std::vector<double> jumps_;
};

/// Column-ordered audit layout: one row per (path, step) with dW_1..dW_d, dB, J_1..J_m.
void write_scenarios_csv(std::ostream& out, const ScenarioSet& scenarios);

}  // namespace rbdsdep
