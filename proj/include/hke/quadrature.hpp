#pragma once

#include <functional>
#include <optional>
#include <span>

namespace hke::quad {

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod on a finite interval. Throws
/// QuadratureFailure when the error estimate stays above `fail_tol` relative.
Estimate integrate(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-13, double fail_tol = 1e-7);

/// Same, with the interval split at every point of `breaks` lying inside it.
Estimate integrate_split(const std::function<double(double)>& f, double a, double b,
                         std::span<const double> breaks, double rel_tol = 1e-13);

enum class Side { Left, Right };

struct HalfLine {
  std::optional<double> value;  // empty when the integral diverges
  int blocks = 0;
  double tail = 0.0;            // extrapolated contribution past the last block
};

/// Integral of exp(log_integrand(u)) over (-inf, u0] (Side::Left) or
/// [u0, inf) (Side::Right).
///
/// The half line is cut into blocks whose width doubles; block sums that
/// decay geometrically are closed with the geometric tail, block sums that
/// stop decreasing are reported as divergence. The integrand is taken in log
/// form so that far-out blocks never under- or overflow. Throws
/// QuadratureFailure if neither outcome is reached within the block budget.
HalfLine integrate_half_line(const std::function<double(double)>& log_integrand, double u0,
                             Side side, std::span<const double> breaks = {},
                             double rel_tol = 1e-12);

}  // namespace hke::quad
