#include "rbdsdep/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"

namespace rbdsdep {
namespace {

constexpr double kRelativeSlack = 1e-12;
constexpr double kPairSlack = 1e-9;

std::string describe(const SamplePoint& p) {
  std::ostringstream out;
  out << "(t=" << io::format_double(p.t) << ", y=" << io::format_double(p.y);
  for (std::size_t k = 0; k < p.z.size(); ++k) out << ", z" << k + 1 << '=' << io::format_double(p.z[k]);
  for (std::size_t k = 0; k < p.u.size(); ++k) out << ", u" << k + 1 << '=' << io::format_double(p.u[k]);
  for (std::size_t k = 0; k < p.w.size(); ++k) out << ", w" << k + 1 << '=' << io::format_double(p.w[k]);
  out << ')';
  return out.str();
}

double evaluate_at(const Expr& expr, const Bindings& b, const SamplePoint& point, const char* what) {
  try {
    return expr.evaluate(b);
  } catch (const EvalError& e) {
    throw EvalError(std::string(what) + " at " + describe(point) + ": " + e.what());
  }
}

double euclidean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

void record(HypothesisReport& report, std::size_t index, double lhs, double rhs, bool violated) {
  ++report.checked;
  const double ratio = rhs > 0.0 ? lhs / rhs : lhs - rhs;
  report.worst_ratio = report.checked == 1 ? ratio : std::max(report.worst_ratio, ratio);
  if (violated) report.violations.push_back({index, lhs, rhs});
}

SamplePoint draw(std::mt19937_64& engine, const SampleBox& box, std::size_t dim, std::size_t marks) {
  auto uniform = [&engine](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); };
  SamplePoint p;
  p.t = uniform(box.t_lo, box.t_hi);
  p.y = uniform(box.y_lo, box.y_hi);
  for (std::size_t k = 0; k < dim; ++k) p.z.push_back(uniform(box.z_lo, box.z_hi));
  for (std::size_t k = 0; k < marks; ++k) p.u.push_back(uniform(box.u_lo, box.u_hi));
  for (std::size_t k = 0; k < dim; ++k) p.w.push_back(uniform(box.w_lo, box.w_hi));
  p.jumps.assign(marks, 0.0);
  return p;
}

}  // namespace

void GeneratorSpec::validate() const {
  if (!(growth_c > 0.0) || !std::isfinite(growth_c)) throw ConfigError("growth constant C must be > 0");
  if (!(contraction_alpha > 0.0 && contraction_alpha < 1.0)) {
    throw ConfigError("contraction constant alpha must satisfy 0 < alpha < 1, got " +
                      io::format_double(contraction_alpha));
  }
}

Bindings SamplePoint::bind(std::span<const double> lambda) const {
  Bindings b;
  b.t = t;
  b.y = y;
  b.z = z;
  b.u = u;
  b.w = w;
  b.jumps = jumps;
  b.lambda = lambda;
  return b;
}

std::vector<SamplePoint> sample_cloud(const SampleBox& box, std::size_t dim, std::size_t marks,
                                      std::size_t count, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<SamplePoint> cloud;
  cloud.reserve(count);
  for (std::size_t i = 0; i < count; ++i) cloud.push_back(draw(engine, box, dim, marks));
  return cloud;
}

std::vector<std::pair<SamplePoint, SamplePoint>> sample_pairs(const SampleBox& box, std::size_t dim,
                                                              std::size_t marks, std::size_t count,
                                                              std::uint64_t seed, bool ordered) {
  std::mt19937_64 engine(seed);
  std::vector<std::pair<SamplePoint, SamplePoint>> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SamplePoint a = draw(engine, box, dim, marks);
    SamplePoint b = draw(engine, box, dim, marks);
    b.t = a.t;
    b.w = a.w;
    if (ordered && a.y < b.y) std::swap(a.y, b.y);
    pairs.emplace_back(std::move(a), std::move(b));
  }
  return pairs;
}

HypothesisReport check_linear_growth(const GeneratorSpec& spec, const MarkSpace& marks,
                                     std::span<const SamplePoint> cloud) {
  HypothesisReport report;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const SamplePoint& p = cloud[i];
    const double value = std::fabs(evaluate_at(spec.f, p.bind(marks.intensities()), p, "f"));
    const double bound = spec.growth_c * (1.0 + std::fabs(p.y) + euclidean(p.z) + marks.norm(p.u));
    record(report, i, value, bound, value > bound * (1.0 + kRelativeSlack) + kRelativeSlack);
  }
  return report;
}

HypothesisReport check_dominated_growth(const GeneratorSpec& spec, const MarkSpace& marks,
                                        std::span<const SamplePoint> cloud) {
  if (!spec.ft) throw ConfigError("dominated growth check needs the dominating rate f_t");
  HypothesisReport report;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const SamplePoint& p = cloud[i];
    const Bindings b = p.bind(marks.intensities());
    const double rate = evaluate_at(*spec.ft, b, p, "f_t");
    const double value = std::fabs(evaluate_at(spec.f, b, p, "f"));
    const double bound = rate + spec.growth_c * (std::fabs(p.y) + euclidean(p.z) + marks.norm(p.u));
    const bool violated = rate < 0.0 || value > bound * (1.0 + kRelativeSlack) + kRelativeSlack;
    record(report, i, value, bound, violated);
  }
  return report;
}

HypothesisReport check_g_contraction(const GeneratorSpec& spec, const MarkSpace& marks,
                                     std::span<const std::pair<SamplePoint, SamplePoint>> pairs) {
  HypothesisReport report;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    if (a.t != b.t) throw InvalidArgument("g contraction check: pair " + std::to_string(i) + " has different t");
    const double ga = evaluate_at(spec.g, a.bind(marks.intensities()), a, "g");
    const double gb = evaluate_at(spec.g, b.bind(marks.intensities()), b, "g");
    const double lhs = (ga - gb) * (ga - gb);
    const double dz = euclidean(difference(a.z, b.z));
    const double du = marks.norm(difference(a.u, b.u));
    const double rhs = spec.growth_c * (a.y - b.y) * (a.y - b.y) + spec.contraction_alpha * (dz * dz + du * du);
    record(report, i, lhs, rhs, lhs > rhs + kPairSlack);
  }
  return report;
}

HypothesisReport check_pi_minorant(const GeneratorSpec& spec, const MarkSpace& marks,
                                   std::span<const std::pair<SamplePoint, SamplePoint>> ordered_pairs) {
  if (!spec.pi) throw ConfigError("minorant check needs pi");
  HypothesisReport report;
  for (std::size_t i = 0; i < ordered_pairs.size(); ++i) {
    const auto& [a, b] = ordered_pairs[i];
    if (a.y < b.y) throw InvalidArgument("minorant check: pair " + std::to_string(i) + " is not ordered (y < y')");
    SamplePoint delta;
    delta.t = a.t;
    delta.y = a.y - b.y;
    delta.z = difference(a.z, b.z);
    delta.u = difference(a.u, b.u);
    delta.w = a.w;
    delta.jumps = a.jumps;
    const double fa = evaluate_at(spec.f, a.bind(marks.intensities()), a, "f");
    const double fb = evaluate_at(spec.f, b.bind(marks.intensities()), b, "f");
    const double minorant = evaluate_at(*spec.pi, delta.bind(marks.intensities()), delta, "pi");
    const double growth = spec.growth_c * (delta.y + euclidean(delta.z) + marks.norm(delta.u));
    const bool violated = fa - fb < minorant - kPairSlack || std::fabs(minorant) > growth + kPairSlack;
    record(report, i, minorant, fa - fb, violated);
  }
  return report;
}

}  // namespace rbdsdep
