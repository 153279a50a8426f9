#include "rbdsdep/envelope.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"

namespace rbdsdep {
namespace {

constexpr std::size_t kMaxCandidates = 50'000'000;

enum class AxisKind { y, z, u };

struct Axis {
  AxisKind kind;
  std::size_t component;
  Interval box;
  std::vector<double> candidates;  // query coordinate first, then the grid
};

double& coordinate(SamplePoint& p, const Axis& axis) {
  switch (axis.kind) {
    case AxisKind::y: return p.y;
    case AxisKind::z: return p.z[axis.component];
    case AxisKind::u: return p.u[axis.component];
  }
  return p.y;
}

std::string axis_name(const Axis& axis) {
  switch (axis.kind) {
    case AxisKind::y: return "y";
    case AxisKind::z: return "z" + std::to_string(axis.component + 1);
    case AxisKind::u: return "u" + std::to_string(axis.component + 1);
  }
  return "y";
}

std::vector<Axis> searched_axes(const Expr& f, const EnvelopeParams& params, const SamplePoint& point) {
  const VariableUse use = f.uses();
  std::vector<Axis> axes;
  if (use.y) axes.push_back({AxisKind::y, 0, params.y, {}});
  for (std::size_t k = 0; k < point.z.size(); ++k) {
    if (use.reads_z(k)) axes.push_back({AxisKind::z, k, params.z, {}});
  }
  for (std::size_t k = 0; k < point.u.size(); ++k) {
    if (use.reads_u(k)) axes.push_back({AxisKind::u, k, params.u, {}});
  }
  SamplePoint query = point;
  std::size_t total = 1;
  for (Axis& axis : axes) {
    const double q = coordinate(query, axis);
    if (!axis.box.contains(q)) {
      throw DomainError("envelope query " + axis_name(axis) + "=" + io::format_double(q) + " lies outside [" +
                        io::format_double(axis.box.lo) + ", " + io::format_double(axis.box.hi) + "]");
    }
    axis.candidates.push_back(q);
    for (double g : interval_grid(axis.box, params.grid_points)) axis.candidates.push_back(g);
    total *= axis.candidates.size();
    if (total > kMaxCandidates) throw BudgetError("envelope search grid exceeds 5e7 candidates");
  }
  return axes;
}

double penalty_distance(const SamplePoint& a, const SamplePoint& b, const MarkSpace& marks) {
  double z2 = 0.0;
  for (std::size_t k = 0; k < a.z.size(); ++k) z2 += (a.z[k] - b.z[k]) * (a.z[k] - b.z[k]);
  double u2 = 0.0;
  for (std::size_t k = 0; k < a.u.size(); ++k) u2 += marks.intensities()[k] * (a.u[k] - b.u[k]) * (a.u[k] - b.u[k]);
  return std::fabs(a.y - b.y) + std::sqrt(z2) + std::sqrt(u2);
}

// sign = +1 for the infimum, -1 for the supremum (maximise f - n d  <=>  minimise -f + n d).
EnvelopeValue convolve(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params,
                       const SamplePoint& point, double sign) {
  if (point.u.size() != marks.size()) throw InvalidArgument("envelope: u has the wrong number of marks");
  std::vector<Axis> axes = searched_axes(f, params, point);
  SamplePoint trial = point;
  std::vector<std::size_t> counter(axes.size(), 0);

  EnvelopeValue best;
  double best_objective = 0.0;
  bool first = true;
  while (true) {
    for (std::size_t a = 0; a < axes.size(); ++a) coordinate(trial, axes[a]) = axes[a].candidates[counter[a]];
    double value = 0.0;
    try {
      value = f.evaluate(trial.bind(marks.intensities()));
    } catch (const EvalError& e) {
      throw EvalError(std::string("envelope search: ") + e.what());
    }
    const double objective = sign * value + params.n * penalty_distance(point, trial, marks);
    if (first || objective < best_objective) {
      best_objective = objective;
      best.argument = trial;
      first = false;
    }
    std::size_t a = 0;
    while (a < axes.size() && ++counter[a] == axes[a].candidates.size()) counter[a++] = 0;
    if (a == axes.size()) break;
  }
  best.value = sign * best_objective;
  for (const Axis& axis : axes) {
    const double chosen = coordinate(best.argument, axis);
    const double query = axis.candidates.front();
    if ((chosen == axis.box.lo || chosen == axis.box.hi) && chosen != query) best.on_boundary = true;
  }
  return best;
}

}  // namespace

void EnvelopeParams::validate(double growth_c) const {
  for (const Interval* box : {&y, &z, &u}) {
    if (!(box->width() > 0.0) || !std::isfinite(box->lo) || !std::isfinite(box->hi)) {
      throw ConfigError("envelope box intervals must be finite with positive width");
    }
  }
  if (grid_points < 2) throw ConfigError("envelope grid_points must be >= 2");
  if (!(n >= growth_c)) {
    throw ConfigError("envelope index n=" + io::format_double(n) + " must be >= growth constant C=" +
                      io::format_double(growth_c));
  }
}

std::vector<double> interval_grid(const Interval& interval, std::size_t points) {
  if (points < 2) throw InvalidArgument("interval grid needs at least 2 points");
  std::vector<double> grid(points);
  const double span = interval.width();
  const double last = static_cast<double>(points - 1);
  for (std::size_t j = 0; j < points; ++j) {
    // Symmetric formula keeps the midpoint exact for odd counts on symmetric boxes.
    const double s = static_cast<double>(j);
    grid[j] = 2 * j < points - 1 ? interval.lo + span * (s / last) : interval.hi - span * ((last - s) / last);
  }
  grid.front() = interval.lo;
  grid.back() = interval.hi;
  return grid;
}

EnvelopeValue inf_convolution(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params,
                              const SamplePoint& point) {
  return convolve(f, marks, params, point, 1.0);
}

EnvelopeValue sup_convolution(const Expr& f, const MarkSpace& marks, const EnvelopeParams& params,
                              const SamplePoint& point) {
  return convolve(f, marks, params, point, -1.0);
}

void write_envelope_csv(std::ostream& out, const Expr& f, const MarkSpace& marks, const EnvelopeParams& params,
                        std::span<const SamplePoint> points) {
  out << "# schema=" << io::kEnvelopeSchema << " n=" << io::format_double(params.n) << '\n';
  const std::size_t d = points.empty() ? 0 : points.front().z.size();
  out << "t,y";
  for (std::size_t k = 0; k < d; ++k) out << ",z" << k + 1;
  for (std::size_t k = 0; k < marks.size(); ++k) out << ",u" << k + 1;
  out << ",f,inf,sup\n";
  for (const SamplePoint& p : points) {
    out << io::format_double(p.t) << ',' << io::format_double(p.y);
    for (double v : p.z) out << ',' << io::format_double(v);
    for (double v : p.u) out << ',' << io::format_double(v);
    out << ',' << io::format_double(f.evaluate(p.bind(marks.intensities()))) << ','
        << io::format_double(inf_convolution(f, marks, params, p).value) << ','
        << io::format_double(sup_convolution(f, marks, params, p).value) << '\n';
  }
}

}  // namespace rbdsdep
