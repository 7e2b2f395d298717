#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "hke/scale_function.hpp"

namespace hke {

struct Integrability {
  bool near_zero_finite = false;
  bool global_finite = false;
  std::optional<double> near_zero;  // int_0^1 s/psi(s) ds
  std::optional<double> at_infty;   // int_1^inf s/psi(s) ds
  std::optional<double> total;
};

Integrability check_integrability(const ScaleFunction& f);

enum class ScalingMode { NearZero, NearInfty, Global };

std::string to_string(ScalingMode mode);

/// Weak scaling on [r_lo, r_hi]: for r <= R in range
///   c_lower (R/r)^beta_lower <= f(R)/f(r) <= c_upper (R/r)^beta_upper.
struct ScalingCertificate {
  ScalingMode mode = ScalingMode::Global;
  double a = 1.0;  // threshold for the near-zero / near-infinity modes
  double beta_lower = 0.0;
  double beta_upper = 0.0;
  double c_lower = 1.0;
  double c_upper = 1.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double residual = 0.0;

  bool covers(double r) const { return r >= r_lo && r <= r_hi; }
};

void to_json(nlohmann::json& j, const ScalingCertificate& c);

/// u -> log f(e^u).
using LogFunction = std::function<double(double)>;

/// Indices are the extreme log-log slopes over grid pairs with R/r >= 2;
/// constants are then the smallest that make the inequalities hold on the
/// nodes and midpoints. The residual is the largest relative violation seen
/// on a separate, offset grid. Modes other than Global clip the range at `a`
/// and need at least two decades left.
ScalingCertificate estimate_scaling(const LogFunction& log_f, double r_lo, double r_hi,
                                    ScalingMode mode, double a = 1.0, int per_decade = 64);

ScalingCertificate estimate_scaling(const ScaleFunction& f, double r_lo, double r_hi,
                                    ScalingMode mode, double a = 1.0, int per_decade = 64);

/// Largest relative violation of the certificate's two inequalities over all
/// ordered pairs of the given abscissae (log r) that fall inside its range.
double certificate_violation(const ScalingCertificate& cert, const LogFunction& log_f,
                             std::span<const double> log_r);

}  // namespace hke
