#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/expr.hpp"

namespace rbdsdep {

/// Coefficient data of the equation: drift f, backward-noise coefficient g, the optional
/// minorant pi used by the bracketing iteration, and the deterministic dominating rate f_t.
struct GeneratorSpec {
  Expr f;
  Expr g;
  std::optional<Expr> pi;
  std::optional<Expr> ft;
  double growth_c = 1.0;
  double contraction_alpha = 0.5;

  /// Throws ConfigError unless growth_c > 0 and 0 < contraction_alpha < 1.
  void validate() const;
};

/// One point of a hypothesis-check cloud.
struct SamplePoint {
  double t = 0.0;
  double y = 0.0;
  std::vector<double> z;
  std::vector<double> u;
  std::vector<double> w;
  std::vector<double> jumps;

  Bindings bind(std::span<const double> lambda) const;
};

/// Axis-aligned box the clouds are drawn from. Every z, u and w component uses the same interval.
struct SampleBox {
  double t_lo = 0.0, t_hi = 1.0;
  double y_lo = -3.0, y_hi = 3.0;
  double z_lo = -3.0, z_hi = 3.0;
  double u_lo = -3.0, u_hi = 3.0;
  double w_lo = -3.0, w_hi = 3.0;
};

/// Uniform draws from the box. Deterministic in `seed`.
std::vector<SamplePoint> sample_cloud(const SampleBox& box, std::size_t dim, std::size_t marks,
                                      std::size_t count, std::uint64_t seed);

/// Pairs sharing the same t and w. With `ordered` the first member has the larger y.
std::vector<std::pair<SamplePoint, SamplePoint>> sample_pairs(const SampleBox& box, std::size_t dim,
                                                              std::size_t marks, std::size_t count,
                                                              std::uint64_t seed, bool ordered);

struct HypothesisViolation {
  std::size_t index = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Sampling certificate: a violation is a definite failure, an empty list is evidence on the cloud.
struct HypothesisReport {
  std::vector<HypothesisViolation> violations;
  double worst_ratio = 0.0;  // max lhs / rhs over the cloud (lhs - rhs when rhs == 0)
  std::size_t checked = 0;

  bool pass() const noexcept { return violations.empty(); }
};

/// |f| <= C (1 + |y| + |z| + |u|_lambda).
HypothesisReport check_linear_growth(const GeneratorSpec& spec, const MarkSpace& marks,
                                     std::span<const SamplePoint> cloud);

/// |f| <= f_t(t) + C (|y| + |z| + |u|_lambda), with f_t >= 0. Requires spec.ft.
HypothesisReport check_dominated_growth(const GeneratorSpec& spec, const MarkSpace& marks,
                                        std::span<const SamplePoint> cloud);

/// |g - g'|^2 <= C |y - y'|^2 + alpha (|z - z'|^2 + |u - u'|_lambda^2), with 1e-9 slack.
HypothesisReport check_g_contraction(const GeneratorSpec& spec, const MarkSpace& marks,
                                     std::span<const std::pair<SamplePoint, SamplePoint>> pairs);

/// For y >= y': f(y, z, u) - f(y', z', u') >= pi(t, y - y', z - z', u - u') - 1e-9, and
/// |pi(t, dy, dz, du)| <= C (|dy| + |dz| + |du|_lambda). Requires spec.pi.
HypothesisReport check_pi_minorant(const GeneratorSpec& spec, const MarkSpace& marks,
                                   std::span<const std::pair<SamplePoint, SamplePoint>> ordered_pairs);

}  // namespace rbdsdep
