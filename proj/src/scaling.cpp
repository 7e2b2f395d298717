#include "hke/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hke/error.hpp"
#include "hke/quadrature.hpp"

namespace hke {

namespace {

constexpr double kLn10 = 2.302585092994045684;

struct Extremes {
  double drawdown;  // min over i <= j of z_j - z_i
  double rise;      // max over i <= j of w_j - w_i
};

// z = y - b_lo x and w = y - b_hi x along sorted x.
Extremes scan(std::span<const double> x, std::span<const double> y, double b_lo, double b_hi) {
  double run_max = -std::numeric_limits<double>::infinity();
  double run_min = std::numeric_limits<double>::infinity();
  Extremes e{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = y[i] - b_lo * x[i];
    const double w = y[i] - b_hi * x[i];
    run_max = std::max(run_max, z);
    run_min = std::min(run_min, w);
    e.drawdown = std::min(e.drawdown, z - run_max);
    e.rise = std::max(e.rise, w - run_min);
  }
  return e;
}

std::vector<double> log_grid(double lo, double hi, int per_decade, double offset = 0.0) {
  const double step = kLn10 / per_decade;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9));
  std::vector<double> x;
  x.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double v = lo + (static_cast<double>(i) + offset) * (hi - lo) / static_cast<double>(n);
    if (v <= hi) x.push_back(v);
  }
  return x;
}

}  // namespace

Integrability check_integrability(const ScaleFunction& f) {
  const auto log_integrand = [&f](double u) { return 2.0 * u - f.log_value(u); };
  const auto left = quad::integrate_half_line(log_integrand, 0.0, quad::Side::Left, f.log_breaks());
  const auto right =
      quad::integrate_half_line(log_integrand, 0.0, quad::Side::Right, f.log_breaks());
  Integrability out;
  out.near_zero = left.value;
  out.at_infty = right.value;
  out.near_zero_finite = left.value.has_value();
  out.global_finite = left.value.has_value() && right.value.has_value();
  if (out.global_finite) out.total = *left.value + *right.value;
  return out;
}

std::string to_string(ScalingMode mode) {
  switch (mode) {
    case ScalingMode::NearZero: return "near_zero";
    case ScalingMode::NearInfty: return "near_infty";
    case ScalingMode::Global: return "global";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const ScalingCertificate& c) {
  j = {{"mode", to_string(c.mode)},   {"a", c.a},
       {"beta_lower", c.beta_lower},  {"beta_upper", c.beta_upper},
       {"c_lower", c.c_lower},        {"c_upper", c.c_upper},
       {"range", {c.r_lo, c.r_hi}},   {"residual", c.residual}};
}

ScalingCertificate estimate_scaling(const LogFunction& log_f, double r_lo, double r_hi,
                                    ScalingMode mode, double a, int per_decade) {
  if (per_decade < 16) {
    throw Error(ErrorKind::ConfigInvalid, "scaling estimation needs >= 16 points per decade");
  }
  if (!(r_lo > 0.0) || !(r_hi > r_lo)) {
    throw Error(ErrorKind::ConfigInvalid, "scaling range must satisfy 0 < r_lo < r_hi");
  }
  double lo = r_lo;
  double hi = r_hi;
  if (mode == ScalingMode::NearZero) hi = std::min(hi, a);
  if (mode == ScalingMode::NearInfty) lo = std::max(lo, a);
  if (mode != ScalingMode::Global && !(hi >= 100.0 * lo * (1.0 - 1e-12))) {
    throw Error(ErrorKind::RangeTooNarrow,
                "scaling range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    "] spans fewer than two decades");
  }

  const double xlo = std::log(lo);
  const double xhi = std::log(hi);
  const auto x = log_grid(xlo, xhi, per_decade);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = log_f(x[i]);

  const double min_gap = std::min(std::log(2.0), 0.999 * (xhi - xlo));
  double b_lo = std::numeric_limits<double>::infinity();
  double b_hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double gap = x[j] - x[i];
      if (gap < min_gap) continue;
      const double slope = (y[j] - y[i]) / gap;
      b_lo = std::min(b_lo, slope);
      b_hi = std::max(b_hi, slope);
    }
  }

  const auto fine = log_grid(xlo, xhi, 2 * per_decade);
  std::vector<double> fy(fine.size());
  for (std::size_t i = 0; i < fine.size(); ++i) fy[i] = log_f(fine[i]);
  const auto ext = scan(fine, fy, b_lo, b_hi);

  ScalingCertificate cert;
  cert.mode = mode;
  cert.a = a;
  cert.beta_lower = b_lo;
  cert.beta_upper = b_hi;
  cert.c_lower = std::exp(std::min(0.0, ext.drawdown));
  cert.c_upper = std::exp(std::max(0.0, ext.rise));
  cert.r_lo = lo;
  cert.r_hi = hi;

  const auto check = log_grid(xlo, xhi, 2 * per_decade, 0.37);
  cert.residual = certificate_violation(cert, log_f, check);
  return cert;
}

ScalingCertificate estimate_scaling(const ScaleFunction& f, double r_lo, double r_hi,
                                    ScalingMode mode, double a, int per_decade) {
  return estimate_scaling([&f](double u) { return f.log_value(u); }, r_lo, r_hi, mode, a,
                          per_decade);
}

double certificate_violation(const ScalingCertificate& cert, const LogFunction& log_f,
                             std::span<const double> log_r) {
  std::vector<double> x;
  const double xlo = std::log(cert.r_lo);
  const double xhi = std::log(cert.r_hi);
  for (double u : log_r) {
    if (u >= xlo - 1e-12 && u <= xhi + 1e-12) x.push_back(u);
  }
  std::sort(x.begin(), x.end());
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = log_f(x[i]);
  const auto ext = scan(x, y, cert.beta_lower, cert.beta_upper);
  const double low = std::log(cert.c_lower) - ext.drawdown;
  const double up = ext.rise - std::log(cert.c_upper);
  return std::max(0.0, std::expm1(std::max(low, up)));
}

}  // namespace hke
