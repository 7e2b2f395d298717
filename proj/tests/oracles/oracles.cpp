#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

using std::numbers::pi;

double power_phi(double alpha, double r) { return (2.0 - alpha) / 2.0 * std::pow(r, alpha); }

double piecewise_phi(double a1, double a2, double b, double r) {
  // int_0^r s^{1-a1} ds below b; above b psi = b^{a1-a2} s^{a2}.
  const double head = std::pow(std::min(r, b), 2.0 - a1) / (2.0 - a1);
  double area = head;
  if (r > b) {
    const double c = std::pow(b, a1 - a2);
    if (a2 == 2.0) {
      area += std::log(r / b) / c;
    } else {
      area += (std::pow(r, 2.0 - a2) - std::pow(b, 2.0 - a2)) / ((2.0 - a2) * c);
    }
  }
  return r * r / (2.0 * area);
}

double logzero_phi(double alpha, double r) {
  const double L = std::log(1.0 / r);
  return r * r * (alpha - 1.0) * std::pow(L, alpha - 1.0) / 2.0;
}

double brute_sup_over_b(const std::function<double(double)>& f, double lo, double s, int n) {
  double best = 0.0;
  const double a = std::log(lo);
  const double b = std::log(s);
  for (int i = 0; i <= n; ++i) {
    const double x = std::exp(a + (b - a) * i / n);
    best = std::max(best, f(x) / x);
  }
  return best;
}

Slopes brute_slopes(const std::function<double(double)>& f, double lo, double hi, int per_decade) {
  const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
  std::vector<double> x(n + 1), y(n + 1);
  for (int i = 0; i <= n; ++i) {
    x[i] = std::log(lo) + (std::log(hi) - std::log(lo)) * i / n;
    y[i] = std::log(f(std::exp(x[i])));
  }
  Slopes s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int i = 0; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (x[j] - x[i] < std::log(2.0)) continue;
      const double k = (y[j] - y[i]) / (x[j] - x[i]);
      s.lo = std::min(s.lo, k);
      s.hi = std::max(s.hi, k);
    }
  }
  return s;
}

double cauchy_tail(double t, double r) { return 1.0 - 2.0 / pi * std::atan(r / (pi * t)); }

double cauchy_density(double t, double x) {
  const double s = pi * t;
  return s / (pi * (s * s + x * x));
}

double sphere_area(int d) { return 2.0 * std::pow(pi, d / 2.0) / std::tgamma(d / 2.0); }

double stable_exponent_constant_1d(double alpha) {
  if (alpha == 1.0) return pi;
  return 2.0 * std::tgamma(1.0 - alpha) * std::cos(pi * alpha / 2.0) / alpha;
}

double stable_density_1d(double alpha, double c, double t, double x) {
  // (1/pi) int_0^inf cos(xi x) exp(-t c xi^alpha) d xi, cut where the
  // envelope is below e^-45 and split into pieces shorter than a period.
  const double top = std::pow(45.0 / (t * c), 1.0 / alpha);
  const double piece = std::min(top, pi / (std::abs(x) + 1e-300));
  const int n = static_cast<int>(std::ceil(top / piece));
  const auto f = [&](double xi) { return std::cos(xi * x) * std::exp(-t * c * std::pow(xi, alpha)); };
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = top * i / n;
    const double b = top * (i + 1) / n;
    sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
  }
  return sum / pi;
}

namespace {

// One integrator per nesting level: they grow their abscissa tables lazily
// and are far too costly to rebuild for every inner integral.
double half_line(const std::function<double(double)>& f, double a, double tol, int level) {
  static thread_local boost::math::quadrature::exp_sinh<double> q[4];
  return q[level].integrate(f, a, std::numeric_limits<double>::infinity(), tol);
}

double finite(const std::function<double(double)>& f, double a, double b, double tol, int level) {
  if (!(b > a)) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> q[4];
  return q[level].integrate(f, a, b, tol);
}

// Integral over the part of the positive orthant of R^k lying outside the
// sphere of radius rho, of g(sqrt(extra + |y|^2)).
double orthant(const std::function<double(double)>& g, int k, double rho, double extra,
               double tol) {
  // Half-lines run in units of the distance already covered, so the
  // integrand keeps an O(1) width however far out the outer point lies.
  if (!std::isfinite(extra)) return 0.0;
  const double start = std::max(rho, 0.0);
  double w = std::max(std::sqrt(extra), start);
  if (!(w > 0.0)) w = 1.0;
  if (k == 1) {
    const auto f = [&](double u) {
      const double y = start + w * u;
      const double v = g(std::sqrt(extra + y * y));
      return v > 0.0 ? w * v : 0.0;
    };
    return half_line(f, 0.0, tol, 0);
  }
  const double inner_tol = tol;
  // First coordinate x = rho sin(th): below rho the rest must leave the sphere
  // of radius rho cos(th). The angle removes the square-root edge at x = rho.
  const auto inner_below = [&](double th) {
    const double x = rho * std::sin(th);
    return rho * std::cos(th) * orthant(g, k - 1, rho * std::cos(th), extra + x * x, inner_tol);
  };
  const auto inner_above = [&](double u) {
    const double x = start + w * u;
    return w * orthant(g, k - 1, 0.0, extra + x * x, inner_tol);
  };
  const double below = rho > 0.0 ? finite(inner_below, 0.0, pi / 2.0, tol, k - 1) : 0.0;
  return below + half_line(inner_above, 0.0, tol, k - 1);
}

}  // namespace

double exterior_integral_cartesian(const std::function<double(double)>& psi, int d, double r,
                                   double rel_tol) {
  const auto g = [&](double s) { return std::pow(s, -d) / psi(s); };
  return std::pow(2.0, d) * orthant(g, d, r, 0.0, rel_tol);
}

}  // namespace oracle
