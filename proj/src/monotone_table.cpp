#include "hke/monotone_table.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "hke/error.hpp"

namespace hke {

namespace {

constexpr double kLn10 = 2.302585092994045684;

double end_slope(double h0, double h1, double d0, double d1) {
  double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (std::signbit(m) != std::signbit(d0) || d0 == 0.0) {
    m = 0.0;
  } else if (std::signbit(d0) != std::signbit(d1) && std::abs(m) > 3.0 * std::abs(d0)) {
    m = 3.0 * d0;
  }
  return m;
}

double clamp_exponent(double p, ExponentClamp c) { return std::clamp(p, c.lo, c.hi); }

}  // namespace

MonotoneTable::MonotoneTable(std::vector<double> log_r, std::vector<double> log_f, Monotone dir,
                             ExponentClamp left_clamp, ExponentClamp right_clamp,
                             double trust_decades)
    : x_(std::move(log_r)), y_(std::move(log_f)), dir_(dir), trust_(trust_decades), trust_left_(trust_decades) {
  validate();
  const std::size_t n = x_.size();
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    d[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  m_.assign(n, 0.0);
  if (n == 2) {
    m_[0] = m_[1] = d[0];
  } else {
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (d[k - 1] * d[k] <= 0.0) {
        m_[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        m_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
      }
    }
    m_[0] = end_slope(h[0], h[1], d[0], d[1]);
    m_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  }

  const std::size_t span = std::min<std::size_t>(8, n - 1);
  left_exp_ = clamp_exponent((y_[span] - y_[0]) / (x_[span] - x_[0]), left_clamp);
  right_exp_ =
      clamp_exponent((y_[n - 1] - y_[n - 1 - span]) / (x_[n - 1] - x_[n - 1 - span]), right_clamp);
  set_uniform_step();
}

MonotoneTable::MonotoneTable(std::vector<double> log_r, std::vector<double> log_f,
                             std::vector<double> log_slopes, Monotone dir,
                             ExponentClamp left_clamp, ExponentClamp right_clamp,
                             double trust_decades)
    : x_(std::move(log_r)), y_(std::move(log_f)), m_(std::move(log_slopes)), dir_(dir),
      trust_(trust_decades), trust_left_(trust_decades) {
  validate();
  const std::size_t n = x_.size();
  if (m_.size() != n) {
    throw Error(ErrorKind::SpecInvalid, "one slope per monotone table node expected");
  }
  left_exp_ = clamp_exponent(m_.front(), left_clamp);
  right_exp_ = clamp_exponent(m_.back(), right_clamp);
  const double s = dir_ == Monotone::NonDecreasing ? 1.0 : -1.0;
  for (auto& m : m_) {
    if (!std::isfinite(m) || s * m < 0.0) m = 0.0;
  }
  std::vector<double> d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) d[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);
  limit_slopes(d);
  set_uniform_step();
}

void MonotoneTable::validate() {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) {
    throw Error(ErrorKind::SpecInvalid, "monotone table needs at least two matching nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x_[i]) || !std::isfinite(y_[i])) {
      throw Error(ErrorKind::SpecInvalid, "monotone table node " + std::to_string(i) +
                                              " is not finite (value must be positive)");
    }
    if (i > 0 && !(x_[i] > x_[i - 1])) {
      throw Error(ErrorKind::SpecInvalid, "monotone table abscissae must strictly increase");
    }
  }
  const double s = dir_ == Monotone::NonDecreasing ? 1.0 : -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double step = s * (y_[i] - y_[i - 1]);
    if (step < 0.0) {
      if (step < -1e-10 * std::max(1.0, std::abs(y_[i]))) {
        throw Error(ErrorKind::SpecInvalid,
                    "monotone table values violate monotonicity at node " + std::to_string(i));
      }
      y_[i] = y_[i - 1];
    }
  }
}

void MonotoneTable::limit_slopes(std::span<const double> d) {
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] == 0.0) {
      m_[k] = m_[k + 1] = 0.0;
      continue;
    }
    const double a = m_[k] / d[k];
    const double b = m_[k + 1] / d[k];
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m_[k] = tau * a * d[k];
      m_[k + 1] = tau * b * d[k];
    }
  }
}

void MonotoneTable::set_uniform_step() {
  const double step = x_[1] - x_[0];
  bool uniform = true;
  for (std::size_t k = 1; k + 1 < x_.size(); ++k) {
    if (std::abs((x_[k + 1] - x_[k]) - step) > 1e-9 * step) {
      uniform = false;
      break;
    }
  }
  uniform_step_ = uniform ? step : 0.0;
}

double MonotoneTable::r_front() const { return std::exp(x_.front()); }
double MonotoneTable::r_back() const { return std::exp(x_.back()); }

std::size_t MonotoneTable::locate(double x) const {
  const std::size_t last = x_.size() - 2;
  if (uniform_step_ > 0.0) {
    auto k = static_cast<std::size_t>(std::max(0.0, (x - x_.front()) / uniform_step_));
    k = std::min(k, last);
    // Rounding in the division can land one cell off.
    if (k > 0 && x < x_[k]) --k;
    if (k < last && x >= x_[k + 1]) ++k;
    return k;
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - x_.begin() - 1));
  return std::min(k, last);
}

double MonotoneTable::hermite(std::size_t k, double x) const {
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  const double v = h00 * y_[k] + h10 * h * m_[k] + h01 * y_[k + 1] + h11 * h * m_[k + 1];
  // A monotone cubic stays between its end values; this only removes rounding.
  return std::clamp(v, std::min(y_[k], y_[k + 1]), std::max(y_[k], y_[k + 1]));
}

double MonotoneTable::hermite_slope(std::size_t k, double x) const {
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  const double d00 = 6.0 * t2 - 6.0 * t;
  const double d10 = 3.0 * t2 - 4.0 * t + 1.0;
  const double d01 = -6.0 * t2 + 6.0 * t;
  const double d11 = 3.0 * t2 - 2.0 * t;
  return (d00 * y_[k] + d01 * y_[k + 1]) / h + d10 * m_[k] + d11 * m_[k + 1];
}

void MonotoneTable::check_trust(double x) const {
  if (x < x_.front() - trust_left_ * kLn10 || x > x_.back() + trust_ * kLn10) {
    throw Error(ErrorKind::OutOfRange,
                "evaluation at r=" + std::to_string(std::exp(x)) +
                    " is beyond the trusted extrapolation range of the table");
  }
}

double MonotoneTable::log_eval(double x) const {
  if (x < x_.front()) {
    check_trust(x);
    return y_.front() + left_exp_ * (x - x_.front());
  }
  if (x > x_.back()) {
    check_trust(x);
    return y_.back() + right_exp_ * (x - x_.back());
  }
  return hermite(locate(x), x);
}

double MonotoneTable::log_slope(double x) const {
  if (x < x_.front()) return left_exp_;
  if (x > x_.back()) return right_exp_;
  return hermite_slope(locate(x), x);
}

double MonotoneTable::operator()(double r) const {
  if (r <= 0.0) {
    if (dir_ == Monotone::NonDecreasing && left_exp_ > 0.0) return 0.0;
    throw Error(ErrorKind::OutOfRange, "table evaluated at non-positive r");
  }
  return std::exp(log_eval(std::log(r)));
}

// Left edge of { g > 0 } inside segment k, where g = sign * (log f - target)
// is non-decreasing. Safeguarded Newton; plain bisection where f is flat.
double MonotoneTable::solve_in_segment(std::size_t k, double target, double sign) const {
  double lo = x_[k];
  double hi = x_[k + 1];
  const double y0 = sign * (y_[k] - target);
  const double y1 = sign * (y_[k + 1] - target);
  double x = y1 > y0 ? lo - y0 * (hi - lo) / (y1 - y0) : 0.5 * (lo + hi);
  x = std::clamp(x, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double g = sign * (hermite(k, x) - target);
    if (std::abs(g) <= 2.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(target))) {
      return x;
    }
    if (g > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double dg = sign * hermite_slope(k, x);
    double next = 0.5 * (lo + hi);
    if (g != 0.0 && dg > 0.0) {
      const double newton = x - g / dg;
      if (newton > lo && newton < hi) next = newton;
    }
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x));
    if (hi - lo < tol) return hi;
    if (std::abs(next - x) < tol) return next;
    x = next;
  }
  return 0.5 * (lo + hi);
}

double MonotoneTable::inverse(double t) const {
  if (dir_ != Monotone::NonDecreasing) {
    throw Error(ErrorKind::SpecInvalid, "generalized inverse needs a non-decreasing table");
  }
  if (!(t > 0.0)) return 0.0;
  const double lt = std::log(t);
  if (lt < y_.front()) {
    if (left_exp_ <= 0.0) return 0.0;
    const double x = x_.front() + (lt - y_.front()) / left_exp_;
    check_trust(x);
    return std::exp(x);
  }
  if (lt >= y_.back()) {
    if (right_exp_ <= 0.0) {
      throw Error(ErrorKind::OutOfRange, "level " + std::to_string(t) + " is never exceeded");
    }
    const double x = x_.back() + (lt - y_.back()) / right_exp_;
    check_trust(x);
    return std::exp(x);
  }
  const auto it = std::upper_bound(y_.begin(), y_.end(), lt);
  const auto k = static_cast<std::size_t>(it - y_.begin()) - 1;
  // A node at exactly the level ends a plateau; near it the cubic is flat to
  // rounding and the solve would drift right.
  if (y_[k] == lt) return std::exp(x_[k]);
  return std::exp(solve_in_segment(k, lt, 1.0));
}

double MonotoneTable::log_solve_decreasing(double lv) const {
  if (dir_ != Monotone::NonIncreasing) {
    throw Error(ErrorKind::SpecInvalid, "decreasing solve needs a non-increasing table");
  }
  if (lv > y_.front()) {
    if (left_exp_ >= 0.0) {
      throw Error(ErrorKind::OutOfRange, "level above the table is never reached");
    }
    const double x = x_.front() + (lv - y_.front()) / left_exp_;
    check_trust(x);
    return x;
  }
  if (lv < y_.back()) {
    if (right_exp_ >= 0.0) {
      throw Error(ErrorKind::OutOfRange, "level below the table is never reached");
    }
    const double x = x_.back() + (lv - y_.back()) / right_exp_;
    check_trust(x);
    return x;
  }
  // First node strictly below lv; the crossing lies in the segment before it.
  const auto it = std::upper_bound(y_.begin(), y_.end(), lv, std::greater<>());
  if (it == y_.end()) return x_.back();
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - y_.begin())) - 1;
  return solve_in_segment(k, lv, -1.0);
}

double gen_inverse(const MonotoneTable& table, double t) { return table.inverse(t); }

}  // namespace hke
