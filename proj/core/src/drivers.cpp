#include "rbdsdep/drivers.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"
#include "rbdsdep/parallel.hpp"

namespace rbdsdep {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t seed, std::size_t path) {
  return splitmix64(splitmix64(seed) ^ splitmix64(0xa0761d6478bd642fULL + path));
}

void require_bernoulli(const MarkSpace& marks, double dt) {
  if (marks.total_intensity() * dt >= 1.0) {
    throw ConfigError("two-point drivers need total_intensity * dt < 1, got " +
                      io::format_double(marks.total_intensity() * dt));
  }
}

}  // namespace

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("time grid: horizon must be > 0");
  if (steps == 0) throw InvalidArgument("time grid: step count must be >= 1");
  dt_ = horizon / static_cast<double>(steps);
  times_.resize(steps + 1);
  for (std::size_t i = 0; i < steps; ++i) {
    times_[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
  }
  times_[steps] = horizon;
}

TimeGrid build_time_grid(double horizon, std::size_t steps) { return TimeGrid(horizon, steps); }

MarkSpace::MarkSpace(std::vector<double> marks, std::vector<double> intensities)
    : marks_(std::move(marks)), intensities_(std::move(intensities)) {
  if (marks_.size() != intensities_.size()) {
    throw InvalidArgument("mark space: marks and intensities differ in length");
  }
  for (std::size_t k = 0; k < marks_.size(); ++k) {
    if (marks_[k] == 0.0 || !std::isfinite(marks_[k])) {
      throw InvalidArgument("mark space: mark " + std::to_string(k + 1) + " must be finite and nonzero");
    }
    if (!(intensities_[k] > 0.0) || !std::isfinite(intensities_[k])) {
      throw InvalidArgument("mark space: intensity " + std::to_string(k + 1) + " must be > 0");
    }
  }
}

double MarkSpace::total_intensity() const noexcept {
  double total = 0.0;
  for (double lambda : intensities_) total += lambda;
  return total;
}

double MarkSpace::norm(std::span<const double> u) const {
  if (u.size() != intensities_.size()) throw InvalidArgument("mark norm: size mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) sum += intensities_[k] * u[k] * u[k];
  return std::sqrt(sum);
}

std::vector<double> compensator_increments(const MarkSpace& marks, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("compensator increments: dt must be > 0");
  std::vector<double> out;
  out.reserve(marks.size());
  for (double lambda : marks.intensities()) out.push_back(lambda * dt);
  return out;
}

const char* to_string(DriverMode mode) { return mode == DriverMode::gaussian ? "gaussian" : "two-point"; }

ScenarioSet::ScenarioSet(TimeGrid grid, std::size_t dim, MarkSpace marks, std::size_t paths,
                         std::uint64_t seed, DriverMode mode)
    : grid_(std::move(grid)),
      dim_(dim),
      marks_(std::move(marks)),
      paths_(paths),
      seed_(seed),
      mode_(mode) {
  if (paths == 0) throw InvalidArgument("scenario set: path count must be >= 1");
  if (dim == 0) throw InvalidArgument("scenario set: W dimension must be >= 1");
  const std::size_t cells = paths * grid_.steps();
  dw_.assign(cells * dim, 0.0);
  db_.assign(cells, 0.0);
  jumps_.assign(cells * marks_.size(), 0);
  weights_.assign(paths, 1.0 / static_cast<double>(paths));
}

std::span<const double> ScenarioSet::dw(std::size_t path, std::size_t step) const {
  return std::span<const double>(dw_).subspan((path * grid_.steps() + step) * dim_, dim_);
}

std::span<const std::uint32_t> ScenarioSet::jumps(std::size_t path, std::size_t step) const {
  const std::size_t m = marks_.size();
  return std::span<const std::uint32_t>(jumps_).subspan((path * grid_.steps() + step) * m, m);
}

double ScenarioSet::jump_variance(std::size_t mark) const {
  const double p = marks_.intensities()[mark] * grid_.dt();
  return mode_ == DriverMode::two_point ? p * (1.0 - p) : p;
}

ScenarioSet simulate_scenarios(const TimeGrid& grid, std::size_t dim, const MarkSpace& marks,
                               std::size_t paths, std::uint64_t seed, DriverMode mode) {
  if (mode == DriverMode::two_point) require_bernoulli(marks, grid.dt());
  ScenarioSet set(grid, dim, marks, paths, seed, mode);

  const std::size_t steps = grid.steps();
  const std::size_t m = marks.size();
  const double sqrt_dt = std::sqrt(grid.dt());
  const std::vector<double> rates = compensator_increments(marks, grid.dt());

  parallel_for(paths, [&](std::size_t p) {
    std::mt19937_64 engine(path_seed(seed, p));
    std::normal_distribution<double> normal(0.0, sqrt_dt);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<std::poisson_distribution<std::uint32_t>> poisson;
    for (double rate : rates) poisson.emplace_back(rate);

    for (std::size_t i = 0; i < steps; ++i) {
      const std::size_t cell = p * steps + i;
      for (std::size_t k = 0; k < dim; ++k) {
        set.dw_[cell * dim + k] =
            mode == DriverMode::gaussian ? normal(engine) : (uniform(engine) < 0.5 ? -sqrt_dt : sqrt_dt);
      }
      set.db_[cell] = mode == DriverMode::gaussian ? normal(engine) : (uniform(engine) < 0.5 ? -sqrt_dt : sqrt_dt);
      for (std::size_t k = 0; k < m; ++k) {
        set.jumps_[cell * m + k] =
            mode == DriverMode::gaussian ? poisson[k](engine) : (uniform(engine) < rates[k] ? 1U : 0U);
      }
    }
  });
  return set;
}

ScenarioSet enumerate_two_point(const TimeGrid& grid, std::size_t dim, const MarkSpace& marks) {
  require_bernoulli(marks, grid.dt());
  const std::size_t m = marks.size();
  const std::size_t steps = grid.steps();
  const std::size_t bits = dim + m + 1;
  if (bits * steps >= 40) throw BudgetError("two-point enumeration is too large to index");
  const std::size_t base = std::size_t{1} << bits;  // 2b branches per step
  std::size_t paths = 1;
  for (std::size_t i = 0; i < steps; ++i) paths *= base;

  ScenarioSet set(grid, dim, marks, paths, 0, DriverMode::two_point);
  set.exhaustive_ = true;
  const double sqrt_dt = std::sqrt(grid.dt());
  const std::vector<double> rates = compensator_increments(marks, grid.dt());
  const double wb_probability = std::ldexp(1.0, -static_cast<int>(dim + 1));

  parallel_for(paths, [&](std::size_t p) {
    double weight = 1.0;
    std::size_t code = p;
    for (std::size_t i = 0; i < steps; ++i) {
      const std::size_t digit = code % base;
      code /= base;
      const std::size_t cell = p * steps + i;
      for (std::size_t k = 0; k < dim; ++k) {
        set.dw_[cell * dim + k] = ((digit >> k) & 1U) ? sqrt_dt : -sqrt_dt;
      }
      double step_weight = wb_probability;
      for (std::size_t k = 0; k < m; ++k) {
        const bool fired = (digit >> (dim + k)) & 1U;
        set.jumps_[cell * m + k] = fired ? 1U : 0U;
        step_weight *= fired ? rates[k] : 1.0 - rates[k];
      }
      set.db_[cell] = ((digit >> (dim + m)) & 1U) ? sqrt_dt : -sqrt_dt;
      weight *= step_weight;
    }
    set.weights_[p] = weight;
  });
  return set;
}

PathStates::PathStates(const ScenarioSet& scenarios)
    : paths_(scenarios.paths()), dim_(scenarios.dim()), marks_(scenarios.marks().size()) {
  const std::size_t steps = scenarios.grid().steps();
  w_.assign((steps + 1) * paths_ * dim_, 0.0);
  jumps_.assign((steps + 1) * paths_ * marks_, 0.0);
  parallel_for(paths_, [&](std::size_t p) {
    for (std::size_t i = 0; i < steps; ++i) {
      const std::size_t from = i * paths_ + p;
      const std::size_t to = from + paths_;
      const auto dw = scenarios.dw(p, i);
      for (std::size_t k = 0; k < dim_; ++k) w_[to * dim_ + k] = w_[from * dim_ + k] + dw[k];
      const auto fired = scenarios.jumps(p, i);
      for (std::size_t k = 0; k < marks_; ++k) jumps_[to * marks_ + k] = jumps_[from * marks_ + k] + fired[k];
    }
  });
}

void write_scenarios_csv(std::ostream& out, const ScenarioSet& scenarios) {
  const std::size_t d = scenarios.dim();
  const std::size_t m = scenarios.marks().size();
  out << "# schema=" << io::kScenarioSchema << " mode=" << to_string(scenarios.mode())
      << " seed=" << scenarios.seed() << '\n';
  out << "path,step";
  for (std::size_t k = 0; k < d; ++k) out << ",dW" << k + 1;
  out << ",dB";
  for (std::size_t k = 0; k < m; ++k) out << ",J" << k + 1;
  out << '\n';
  for (std::size_t p = 0; p < scenarios.paths(); ++p) {
    for (std::size_t i = 0; i < scenarios.grid().steps(); ++i) {
      out << p << ',' << i;
      for (double v : scenarios.dw(p, i)) out << ',' << io::format_double(v);
      out << ',' << io::format_double(scenarios.db(p, i));
      for (auto j : scenarios.jumps(p, i)) out << ',' << j;
      out << '\n';
    }
  }
}

}  // namespace rbdsdep
