#include "rbdsdep/lsmc.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <unordered_map>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"
#include "rbdsdep/parallel.hpp"

namespace rbdsdep {
namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

std::string basis_label(const SchemeParams& params, std::size_t columns) {
  std::string label = to_string(params.basis);
  if (params.basis == BasisKind::polynomial) label += " degree " + std::to_string(params.degree);
  return label + " with " + std::to_string(columns) + " columns";
}

// Drops columns that are constant (other than the leading intercept) or repeat an earlier column.
Matrix prune_columns(const Matrix& raw) {
  std::vector<Eigen::Index> keep{0};
  for (Eigen::Index c = 1; c < raw.cols(); ++c) {
    const auto column = raw.col(c);
    const double spread = column.maxCoeff() - column.minCoeff();
    if (!(spread > 1e-14 * std::max(1.0, column.cwiseAbs().maxCoeff()))) continue;
    bool repeated = false;
    for (Eigen::Index kept : keep) {
      if (kept != 0 && raw.col(kept) == column) {
        repeated = true;
        break;
      }
    }
    if (!repeated) keep.push_back(c);
  }
  Matrix out(raw.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = raw.col(keep[j]);
  return out;
}

// Weighted least squares of every target column on the design; returns fitted values.
Matrix fit_polynomial(const Matrix& design, const Vector& weights, const Matrix& targets, const SchemeParams& params,
                      std::size_t step, bool exhaustive) {
  const auto rows = static_cast<std::size_t>(design.rows());
  const auto columns = static_cast<std::size_t>(design.cols());
  if (!exhaustive && rows < 10 * columns) {
    throw InvalidArgument("regression at step " + std::to_string(step) + ": " + std::to_string(rows) +
                          " paths is below 10 x basis size (" + basis_label(params, columns) + ")");
  }
  const Matrix weighted = design.array().colwise() * weights.array();
  Matrix gram = design.transpose() * weighted;
  gram.diagonal().array() += params.ridge;
  const Eigen::SelfAdjointEigenSolver<Matrix> spectrum(gram, Eigen::EigenvaluesOnly);
  const double smallest = spectrum.eigenvalues().minCoeff();
  const double largest = spectrum.eigenvalues().maxCoeff();
  if (!(smallest > 0.0) || largest / smallest > params.condition_limit) {
    throw RegressionError("regression at step " + std::to_string(step) + " is ill-conditioned (condition number " +
                          io::format_double(smallest > 0.0 ? largest / smallest : INFINITY) + ", basis " +
                          basis_label(params, columns) + ")");
  }
  const Matrix coefficients = gram.ldlt().solve(weighted.transpose() * targets);
  return design * coefficients;
}

// Exact weighted group means of every target column; groups are keyed by the conditioning digits.
Matrix fit_indicator(const std::vector<std::uint64_t>& keys, const Vector& weights, const Matrix& targets,
                     const SchemeParams& params, std::size_t step, bool exhaustive) {
  std::unordered_map<std::uint64_t, Eigen::Index> group_of;
  std::vector<Eigen::Index> group(keys.size());
  for (std::size_t p = 0; p < keys.size(); ++p) {
    const auto [it, inserted] = group_of.try_emplace(keys[p], static_cast<Eigen::Index>(group_of.size()));
    group[p] = it->second;
  }
  const auto groups = static_cast<Eigen::Index>(group_of.size());
  if (!exhaustive && keys.size() < 10 * static_cast<std::size_t>(groups)) {
    throw InvalidArgument("regression at step " + std::to_string(step) + ": " + std::to_string(keys.size()) +
                          " paths is below 10 x basis size (" + basis_label(params, group_of.size()) + ")");
  }
  Matrix sums = Matrix::Zero(groups, targets.cols());
  Vector mass = Vector::Zero(groups);
  for (std::size_t p = 0; p < keys.size(); ++p) {
    const auto row = static_cast<Eigen::Index>(p);
    sums.row(group[p]) += weights(row) * targets.row(row);
    mass(group[p]) += weights(row);
  }
  for (Eigen::Index g = 0; g < groups; ++g) {
    if (!(mass(g) > 0.0)) {
      throw RegressionError("regression at step " + std::to_string(step) + ": empty group in basis " +
                            basis_label(params, group_of.size()));
    }
  }
  Matrix fitted(targets.rows(), targets.cols());
  for (std::size_t p = 0; p < keys.size(); ++p) {
    fitted.row(static_cast<Eigen::Index>(p)) = sums.row(group[p]) / mass(group[p]);
  }
  return fitted;
}

double weighted_variance(const Vector& values, const Vector& weights) {
  const double mean = weights.dot(values);
  return weights.dot((values.array() - mean).square().matrix());
}

}  // namespace

const char* to_string(BasisKind basis) { return basis == BasisKind::polynomial ? "polynomial" : "indicator"; }

void SchemeParams::validate() const {
  if (basis == BasisKind::polynomial && degree != 1 && degree != 2) {
    throw ConfigError("polynomial basis degree must be 1 or 2");
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ConfigError("ridge weight must be finite and >= 0");
  if (!(condition_limit > 1.0)) throw ConfigError("condition limit must be > 1");
}

SolutionGrid solve_lsmc(const Problem& problem, const Coefficients& coefficients, const ScenarioSet& scenarios,
                        const SchemeParams& params) {
  params.validate();
  if (!(scenarios.grid() == problem.grid) || scenarios.dim() != problem.dim || !(scenarios.marks() == problem.marks)) {
    throw InvalidArgument("scenarios and problem disagree on grid, dimension or marks");
  }
  if (params.basis == BasisKind::indicator && scenarios.mode() != DriverMode::two_point) {
    throw ConfigError("indicator basis requires two-point scenarios");
  }
  const TimeGrid& grid = problem.grid;
  const std::size_t n_steps = grid.steps();
  const std::size_t paths = scenarios.paths();
  const std::size_t d = problem.dim;
  const std::size_t m = problem.marks.size();
  const double dt = grid.dt();
  const std::vector<double> rates = compensator_increments(problem.marks, dt);
  const std::span<const double> lambda = problem.marks.intensities();
  const PathStates states(scenarios);
  const auto rows = static_cast<Eigen::Index>(paths);
  if (params.basis == BasisKind::indicator && (d + m) * n_steps + n_steps >= 64) {
    throw ConfigError("indicator basis: conditioning history does not fit a 64-bit key");
  }

  Vector weights(rows);
  for (std::size_t p = 0; p < paths; ++p) weights(static_cast<Eigen::Index>(p)) = scenarios.weight(p);

  // Future B sums: remaining[i * P + p] = B_T - B_{t_i}.
  std::vector<double> remaining((n_steps + 1) * paths, 0.0);
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t i = n_steps; i-- > 0;) {
      remaining[i * paths + p] = remaining[(i + 1) * paths + p] + scenarios.db(p, i);
    }
  }

  SolutionGrid out(n_steps, paths, d, m);
  out.weights.assign(scenarios.weights().begin(), scenarios.weights().end());
  out.regression_residual.assign(n_steps, 0.0);
  out.w_integrand_error.assign(n_steps * d, 0.0);

  auto arguments = [&](std::size_t step, std::size_t p, double y, std::span<const double> z,
                       std::span<const double> u) {
    Arguments args;
    args.at.t = grid.time(step);
    args.at.y = y;
    args.at.z = z;
    args.at.u = u;
    args.at.w = states.w(step, p);
    args.at.jumps = states.jumps(step, p);
    args.at.lambda = lambda;
    args.step = step;
    args.path = p;
    return args;
  };

  std::vector<double> child_g(paths, 0.0);
  std::vector<double> pathwise(paths, 0.0);
  parallel_for(paths, [&](std::size_t p) {
    const std::size_t cell = out.at(n_steps, p);
    const double xi = problem.terminal_at(states.w(n_steps, p), states.jumps(n_steps, p));
    const double s = problem.barrier_at(grid.horizon(), states.w(n_steps, p));
    if (s > xi) {
      throw ConfigError("barrier exceeds terminal value at T (S_T=" + io::format_double(s) + " > xi=" +
                        io::format_double(xi) + " on path " + std::to_string(p) + ")");
    }
    out.value[cell] = xi;
    out.drift_argument[cell] = xi;
    out.barrier[cell] = s;
    child_g[p] = coefficients.g(arguments(n_steps, p, xi, out.z(n_steps, p), out.u(n_steps, p)));
    pathwise[p] = xi;
  });

  const auto target_count = static_cast<Eigen::Index>(2 + d + m);
  std::vector<double> push(n_steps * paths, 0.0);
  for (std::size_t step = n_steps; step-- > 0;) {
    // Targets: Y_{i+1}, Y_{i+1} dW / dt, Y_{i+1} (J - p) / Var, g at the child.
    Matrix targets(rows, target_count);
    for (std::size_t p = 0; p < paths; ++p) {
      const auto r = static_cast<Eigen::Index>(p);
      const double next = out.y(step + 1, p);
      targets(r, 0) = next;
      const auto dw = scenarios.dw(p, step);
      for (std::size_t k = 0; k < d; ++k) targets(r, static_cast<Eigen::Index>(1 + k)) = next * dw[k] / dt;
      const auto fired = scenarios.jumps(p, step);
      for (std::size_t k = 0; k < m; ++k) {
        targets(r, static_cast<Eigen::Index>(1 + d + k)) =
            next * (static_cast<double>(fired[k]) - rates[k]) / scenarios.jump_variance(k);
      }
      targets(r, target_count - 1) = child_g[p];
    }

    Matrix fitted;
    if (params.basis == BasisKind::polynomial) {
      std::vector<std::vector<double>> columns;
      columns.emplace_back(paths, 1.0);
      auto add_feature = [&](auto&& feature) {
        std::vector<double> column(paths);
        for (std::size_t p = 0; p < paths; ++p) column[p] = feature(p);
        if (params.degree == 2) {
          std::vector<double> squared(paths);
          for (std::size_t p = 0; p < paths; ++p) squared[p] = column[p] * column[p];
          columns.push_back(std::move(column));
          columns.push_back(std::move(squared));
        } else {
          columns.push_back(std::move(column));
        }
      };
      for (std::size_t k = 0; k < d; ++k) add_feature([&](std::size_t p) { return states.w(step, p)[k]; });
      for (std::size_t k = 0; k < m; ++k) add_feature([&](std::size_t p) { return states.jumps(step, p)[k]; });
      add_feature([&](std::size_t p) { return remaining[step * paths + p]; });
      add_feature([&](std::size_t p) { return scenarios.db(p, step); });
      std::vector<double> barrier_column(paths);
      for (std::size_t p = 0; p < paths; ++p) barrier_column[p] = problem.barrier_at(grid.time(step), states.w(step, p));
      columns.push_back(std::move(barrier_column));

      Matrix raw(rows, static_cast<Eigen::Index>(columns.size()));
      for (std::size_t c = 0; c < columns.size(); ++c) {
        raw.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Vector>(columns[c].data(), rows);
      }
      fitted = fit_polynomial(prune_columns(raw), weights, targets, params, step, scenarios.exhaustive());
    } else {
      std::vector<std::uint64_t> keys(paths);
      for (std::size_t p = 0; p < paths; ++p) {
        std::uint64_t key = 0;
        for (std::size_t s = 0; s < n_steps; ++s) {
          if (s < step) {
            for (double v : scenarios.dw(p, s)) key = (key << 1) | (v > 0.0 ? 1U : 0U);
            for (auto j : scenarios.jumps(p, s)) key = (key << 1) | (j > 0 ? 1U : 0U);
          } else {
            key = (key << 1) | (scenarios.db(p, s) > 0.0 ? 1U : 0U);
          }
        }
        keys[p] = key;
      }
      fitted = fit_indicator(keys, weights, targets, params, step, scenarios.exhaustive());
    }

    const Vector residual = targets.col(0) - fitted.col(0);
    out.regression_residual[step] = std::sqrt(weights.dot(residual.cwiseAbs2()));
    for (std::size_t k = 0; k < d; ++k) {
      const Vector column = targets.col(static_cast<Eigen::Index>(1 + k));
      out.w_integrand_error[step * d + k] =
          std::sqrt(weighted_variance(column, weights) / static_cast<double>(paths));
    }

    parallel_for(paths, [&](std::size_t p) {
      const auto r = static_cast<Eigen::Index>(p);
      const std::size_t cell = out.at(step, p);
      const double mean = fitted(r, 0);
      for (std::size_t k = 0; k < d; ++k) out.w_integrand[cell * d + k] = fitted(r, static_cast<Eigen::Index>(1 + k));
      for (std::size_t k = 0; k < m; ++k) {
        out.jump_integrand[cell * m + k] = fitted(r, static_cast<Eigen::Index>(1 + d + k));
      }
      const Arguments args = arguments(step, p, mean, out.z(step, p), out.u(step, p));
      const double drift = coefficients.f(args);
      const double noise = scenarios.db(p, step) * fitted(r, target_count - 1);
      const double s = problem.barrier_at(grid.time(step), args.at.w);
      const ReflectedValue reflected = reflect_step(mean + dt * drift + noise, s);
      out.value[cell] = reflected.value;
      out.drift_argument[cell] = mean;
      out.barrier[cell] = s;
      push[step * paths + p] = reflected.push;
      pathwise[p] += dt * drift + noise + reflected.push;
      if (step > 0) child_g[p] = coefficients.g(arguments(step, p, reflected.value, out.z(step, p), out.u(step, p)));
    });
  }

  parallel_for(paths, [&](std::size_t p) {
    double total = 0.0;
    for (std::size_t step = 0; step <= n_steps; ++step) {
      out.reflection[out.at(step, p)] = total;
      if (step < n_steps) total += push[step * paths + p];
    }
  });
  const Vector pathwise_values = Eigen::Map<const Vector>(pathwise.data(), rows);
  out.root_standard_error = std::sqrt(weighted_variance(pathwise_values, weights) / static_cast<double>(paths));
  return out;
}

}  // namespace rbdsdep
