#pragma once

// Independent reference values for the tests. Nothing here calls into the
// library's numerics; everything is a closed form or a brute-force scan.

#include <functional>
#include <vector>

namespace oracle {

// Phi for psi = r^alpha, 0 < alpha < 2.
double power_phi(double alpha, double r);

// Phi for psi = r^a1 (r <= b), continued continuously as c r^a2 above b.
double piecewise_phi(double a1, double a2, double b, double r);

// Phi for psi = s^2 (log 1/s)^alpha on the pure-log region s <= min(1/2, e^{-alpha/2}).
double logzero_phi(double alpha, double r);

// sup over grid b <= s of f(b)/b, by direct scan of `n` log-spaced points.
double brute_sup_over_b(const std::function<double(double)>& f, double lo, double s, int n);

// Extreme log-log slopes of f over all pairs of a log grid with R/r >= 2.
struct Slopes {
  double lo;
  double hi;
};
Slopes brute_slopes(const std::function<double(double)>& f, double lo, double hi, int per_decade);

// d = 1, psi = r: Cauchy law with scale pi t.
double cauchy_tail(double t, double r);     // P(|X_t| > r)
double cauchy_density(double t, double x);  // p(t, 0, x)

// Surface area of the unit sphere in R^d.
double sphere_area(int d);

// Symmetric alpha-stable density in d = 1 with characteristic exponent
// c |xi|^alpha, by Fourier quadrature.
double stable_density_1d(double alpha, double c, double t, double x);

// Exponent constant for psi = r^alpha in d = 1: int (1 - cos(x)) |x|^{-1-alpha} dx.
double stable_exponent_constant_1d(double alpha);

// int over |y| > r in R^d of |y|^{-d} / psi(|y|) dy by nested Cartesian
// quadrature (no radial reduction).
double exterior_integral_cartesian(const std::function<double(double)>& psi, int d, double r,
                                   double rel_tol = 1e-7);

}  // namespace oracle
