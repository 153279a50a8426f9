#include "rbdsdep/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"

namespace rbdsdep {
namespace {

constexpr std::size_t kCloudSize = 2000;
constexpr std::uint64_t kCloudSeed = 20240601;

std::string growth_text(double c) {
  return "(" + io::format_double(c) + ") * (abs(y) + znorm + unorm)";
}

SampleBox cloud_box(const Problem& problem) {
  SampleBox box;
  box.t_hi = problem.grid.horizon();
  return box;
}

void require_pass(const HypothesisReport& report, const std::string& what) {
  if (!report.pass()) {
    const HypothesisViolation& v = report.violations.front();
    throw ConfigError(what + " fails on sample " + std::to_string(v.index) + " (" + io::format_double(v.lhs) +
                      " vs " + io::format_double(v.rhs) + ")");
  }
}

// Smallest node-wise (upper - lower) with its location; records the first violation.
double node_margin(const SolutionGrid& lower, const SolutionGrid& upper, const std::string& label,
                   std::string& violation) {
  double margin = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t j = 0; j < lower.value.size(); ++j) {
    const double gap = upper.value[j] - lower.value[j];
    if (gap < margin) {
      margin = gap;
      worst = j;
    }
  }
  if (margin < -kOrderingTolerance && violation.empty()) {
    violation = label + " violated by " + io::format_double(-margin) + " at step " +
                std::to_string(worst / lower.paths) + ", path " + std::to_string(worst % lower.paths);
  }
  return margin;
}

SequenceRun run_envelope_sequence(const Problem& problem, const Solver& solver, const EnvelopeParams& envelope,
                                  std::vector<double> indices, bool lower) {
  problem.validate();
  if (indices.empty()) throw InvalidArgument("envelope sequence: empty index list");
  std::sort(indices.begin(), indices.end());
  for (double n : indices) {
    EnvelopeParams params = envelope;
    params.n = n;
    params.validate(problem.generator.growth_c);
  }
  SampleBox box = cloud_box(problem);
  box.y_lo = envelope.y.lo, box.y_hi = envelope.y.hi;
  box.z_lo = envelope.z.lo, box.z_hi = envelope.z.hi;
  box.u_lo = envelope.u.lo, box.u_hi = envelope.u.hi;
  require_pass(check_linear_growth(problem.generator, problem.marks,
                                   sample_cloud(box, problem.dim, problem.marks.size(), kCloudSize, kCloudSeed)),
               "linear growth of f");

  SequenceRun run;
  run.mode = lower ? SequenceMode::inf_envelope : SequenceMode::sup_envelope;
  for (double n : indices) {
    EnvelopeParams params = envelope;
    params.n = n;
    Coefficients coefficients{
        lower ? inf_envelope_fn(problem.generator.f, problem.marks, params)
              : sup_envelope_fn(problem.generator.f, problem.marks, params),
        expression_fn(problem.generator.g)};
    SolutionGrid solution = solver.solve(problem, coefficients);
    double margin = std::numeric_limits<double>::infinity();
    if (!run.solutions.empty()) {
      const SolutionGrid& previous = run.solutions.back();
      const std::string label = std::string(lower ? "nondecreasing" : "nonincreasing") + " order between n=" +
                                io::format_double(run.indices.back()) + " and n=" + io::format_double(n);
      margin = lower ? node_margin(previous, solution, label, run.violation)
                     : node_margin(solution, previous, label, run.violation);
    }
    run.indices.push_back(n);
    run.root_series.push_back(solution.root());
    run.ordering_margin.push_back(margin);
    run.norms.push_back(norm_report(solution, problem.grid, problem.marks));
    run.solutions.push_back(std::move(solution));
    const std::size_t count = run.root_series.size();
    if (count >= 2 && std::fabs(run.root_series[count - 1] - run.root_series[count - 2]) < kEarlyStopTolerance &&
        count < indices.size()) {
      run.early_stopped = true;
      break;
    }
  }
  return run;
}

Problem with_generator(const Problem& problem, const std::string& f_text) {
  Problem out = problem;
  out.generator.f = parse_expr(f_text);
  return out;
}

}  // namespace

const char* to_string(SequenceMode mode) {
  switch (mode) {
    case SequenceMode::inf_envelope: return "inf_envelope";
    case SequenceMode::bracketing: return "bracketing";
    case SequenceMode::sup_envelope: return "sup_envelope";
  }
  return "inf_envelope";
}

std::vector<double> default_indices(double growth_c) {
  std::vector<double> out;
  for (double n : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double clipped = std::max(n, growth_c);
    if (out.empty() || out.back() != clipped) out.push_back(clipped);
  }
  return out;
}

SequenceRun run_inf_envelope_sequence(const Problem& problem, const Solver& solver, const EnvelopeParams& envelope,
                                      std::vector<double> indices) {
  return run_envelope_sequence(problem, solver, envelope, std::move(indices), true);
}

SequenceRun run_sup_envelope_sequence(const Problem& problem, const Solver& solver, const EnvelopeParams& envelope,
                                      std::vector<double> indices) {
  return run_envelope_sequence(problem, solver, envelope, std::move(indices), false);
}

SolutionGrid solve_upper_bound(const Problem& problem, const Solver& solver) {
  const double c = problem.generator.growth_c;
  const Problem bound = with_generator(problem, io::format_double(c) + " + " + growth_text(c));
  return solver.solve(bound);
}

SequenceRun run_bracketing_sequence(const Problem& problem, const Solver& solver, std::size_t iterations) {
  problem.validate();
  const GeneratorSpec& spec = problem.generator;
  if (!spec.pi) throw ConfigError("bracketing needs the minorant pi");
  if (!spec.ft) throw ConfigError("bracketing needs the dominating rate f_t");
  if (iterations == 0) throw InvalidArgument("bracketing needs at least one iteration");

  const SampleBox box = cloud_box(problem);
  const std::size_t d = problem.dim;
  const std::size_t m = problem.marks.size();
  require_pass(check_dominated_growth(spec, problem.marks, sample_cloud(box, d, m, kCloudSize, kCloudSeed)),
               "dominated growth of f");
  require_pass(check_pi_minorant(spec, problem.marks, sample_pairs(box, d, m, kCloudSize, kCloudSeed + 1, true)),
               "minorant pi");
  require_pass(check_g_contraction(spec, problem.marks, sample_pairs(box, d, m, kCloudSize, kCloudSeed + 2, false)),
               "contraction of g");

  const std::string rate = "(" + spec.ft->to_string() + ")";
  const double c = spec.growth_c;
  SequenceRun run;
  run.mode = SequenceMode::bracketing;
  run.lower_anchor = solver.solve(with_generator(problem, "-" + growth_text(c) + " - " + rate));
  run.upper_anchor = solver.solve(with_generator(problem, growth_text(c) + " + " + rate));
  const std::span<const double> lambda = problem.marks.intensities();

  auto previous = std::make_shared<const SolutionGrid>(*run.lower_anchor);
  for (std::size_t n = 1; n <= iterations; ++n) {
    CoefficientFn frozen = [previous, f = spec.f, pi = *spec.pi, lambda](const Arguments& args) {
      const SolutionGrid& prev = *previous;
      const std::size_t cell = prev.at(args.step, args.path);
      const auto prev_z = prev.z(args.step, args.path);
      const auto prev_u = prev.u(args.step, args.path);
      Bindings at = args.at;
      at.lambda = lambda;
      at.y = prev.drift_argument[cell];
      at.z = prev_z;
      at.u = prev_u;
      const double base = f.evaluate(at);
      std::vector<double> dz(prev_z.size()), du(prev_u.size());
      for (std::size_t k = 0; k < dz.size(); ++k) dz[k] = args.at.z[k] - prev_z[k];
      for (std::size_t k = 0; k < du.size(); ++k) du[k] = args.at.u[k] - prev_u[k];
      Bindings increment = args.at;
      increment.lambda = lambda;
      increment.y = args.at.y - prev.drift_argument[cell];
      increment.z = dz;
      increment.u = du;
      return base + pi.evaluate(increment);
    };
    SolutionGrid solution = solver.solve(problem, Coefficients{frozen, expression_fn(spec.g)});

    const std::string at = "iterate " + std::to_string(n);
    double margin = node_margin(*run.lower_anchor, solution, "lower anchor <= " + at, run.violation);
    margin = std::min(margin, node_margin(*previous, solution, "iterate " + std::to_string(n - 1) + " <= " + at,
                                          run.violation));
    margin = std::min(margin, node_margin(solution, *run.upper_anchor, at + " <= upper anchor", run.violation));

    run.indices.push_back(static_cast<double>(n));
    run.root_series.push_back(solution.root());
    run.ordering_margin.push_back(margin);
    run.norms.push_back(norm_report(solution, problem.grid, problem.marks));
    run.solutions.push_back(std::move(solution));
    previous = std::make_shared<const SolutionGrid>(run.solutions.back());
  }
  return run;
}

double w_integrand_distance(const SolutionGrid& a, const SolutionGrid& b, const TimeGrid& grid) {
  double total = 0.0;
  for (std::size_t p = 0; p < a.paths; ++p) {
    for (std::size_t i = 0; i < a.steps; ++i) {
      const auto za = a.z(i, p);
      const auto zb = b.z(i, p);
      for (std::size_t k = 0; k < za.size(); ++k) total += a.weights[p] * (za[k] - zb[k]) * (za[k] - zb[k]) * grid.dt();
    }
  }
  return total;
}

double jump_integrand_distance(const SolutionGrid& a, const SolutionGrid& b, const TimeGrid& grid,
                               const MarkSpace& marks) {
  double total = 0.0;
  for (std::size_t p = 0; p < a.paths; ++p) {
    for (std::size_t i = 0; i < a.steps; ++i) {
      const auto ua = a.u(i, p);
      const auto ub = b.u(i, p);
      for (std::size_t k = 0; k < ua.size(); ++k) {
        total += a.weights[p] * marks.intensities()[k] * (ua[k] - ub[k]) * (ua[k] - ub[k]) * grid.dt();
      }
    }
  }
  return total;
}

void write_sequence_csv(std::ostream& out, const SequenceRun& run) {
  out << "# schema=" << io::kSequenceSchema << " mode=" << to_string(run.mode) << '\n';
  out << "n,Y0,K_T,Z_norm,U_norm,ordering_margin\n";
  for (std::size_t j = 0; j < run.solutions.size(); ++j) {
    const SolutionGrid& s = run.solutions[j];
    out << io::format_double(run.indices[j]) << ',' << io::format_double(run.root_series[j]) << ','
        << io::format_double(s.mean_at(s.reflection, s.steps)) << ',' << io::format_double(run.norms[j].w_integrand_sq)
        << ',' << io::format_double(run.norms[j].jump_integrand_sq) << ','
        << io::format_double(run.ordering_margin[j]) << '\n';
  }
}

}  // namespace rbdsdep
