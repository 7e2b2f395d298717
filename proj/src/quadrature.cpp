#include "hke/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hke/error.hpp"

namespace hke::quad {

namespace {

struct Panel {
  double a, b, value, error, l1;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel panel(const std::function<double(double)>& f, double a, double b) {
  // One 15-point Kronrod panel. Boost 1.74 reports its error on the reference
  // interval [-1, 1], so it is rescaled by the half-width here.
  Panel p{a, b, 0.0, 0.0, 0.0};
  p.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &p.error,
                                                                          &p.l1);
  p.error *= 0.5 * (b - a);
  return p;
}

}  // namespace

Estimate integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                   double fail_tol) {
  constexpr int kMaxPanels = 2000;
  if (a == b) return {};
  if (b < a) {
    auto e = integrate(f, b, a, rel_tol, fail_tol);
    e.value = -e.value;
    return e;
  }
  std::priority_queue<Panel> panels;
  panels.push(panel(f, a, b));
  double value = panels.top().value;
  double err = panels.top().error;
  double l1 = panels.top().l1;
  while (std::isfinite(value) && err > rel_tol * std::abs(value) &&
         static_cast<int>(panels.size()) < kMaxPanels) {
    const Panel worst = panels.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    panels.pop();
    const Panel left = panel(f, worst.a, mid);
    const Panel right = panel(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    panels.push(left);
    panels.push(right);
  }
  // Final sums straight from the panels, not the running updates.
  value = err = l1 = 0.0;
  for (; !panels.empty(); panels.pop()) {
    value += panels.top().value;
    err += panels.top().error;
    l1 += panels.top().l1;
  }
  if (!std::isfinite(value) || err > fail_tol * l1 + std::numeric_limits<double>::min()) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "Gauss-Kronrod did not converge on [" << a << ", " << b
        << "] (error " << err << ", L1 " << l1 << ")";
    throw Error(ErrorKind::QuadratureFailure, msg.str());
  }
  return {value, err};
}

Estimate integrate_split(const std::function<double(double)>& f, double a, double b,
                         std::span<const double> breaks, double rel_tol) {
  std::vector<double> cuts{a};
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  for (double x : breaks) {
    if (x > lo && x < hi) cuts.push_back(x);
  }
  cuts.push_back(b);
  if (a < b) {
    std::sort(cuts.begin(), cuts.end());
  } else {
    std::sort(cuts.begin(), cuts.end(), std::greater<>());
  }
  Estimate total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto piece = integrate(f, cuts[i], cuts[i + 1], rel_tol);
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

HalfLine integrate_half_line(const std::function<double(double)>& log_integrand, double u0,
                             Side side, std::span<const double> breaks, double rel_tol) {
  constexpr int kMaxBlocks = 90;
  constexpr int kDivergenceRun = 6;
  constexpr double kUnitRatio = 1.0 - 1e-4;

  const double sign = side == Side::Right ? 1.0 : -1.0;
  const auto g = [&](double u) { return std::exp(log_integrand(u)); };

  HalfLine out;
  double sum = 0.0;
  double prev_block = std::numeric_limits<double>::quiet_NaN();
  double prev_ratio = std::numeric_limits<double>::quiet_NaN();
  int non_decreasing = 0;
  double inner = 0.0;
  double width = 1.0;

  for (int k = 0; k < kMaxBlocks; ++k) {
    const double outer = inner + width;
    const double a = u0 + sign * inner;
    const double b = u0 + sign * outer;
    // An integrand beyond e^600 on the block means divergence for any purpose
    // here, and integrating it would overflow.
    if (log_integrand(b) > 600.0) return out;
    // Integrate in increasing u so the sign of the block is always positive.
    const double block =
        integrate_split(g, std::min(a, b), std::max(a, b), breaks, rel_tol).value;
    sum += block;
    out.blocks = k + 1;

    const double ratio = (k > 0 && prev_block > 0.0) ? block / prev_block
                                                      : std::numeric_limits<double>::quiet_NaN();
    if (block == 0.0 && k > 0) {
      out.value = sum;
      return out;
    }
    if (k >= 4 && std::isfinite(ratio) && ratio < 0.9 && block <= 1e-2 * rel_tol * sum) {
      out.tail = block * ratio / (1.0 - ratio);
      out.value = sum + out.tail;
      return out;
    }
    if (std::isfinite(ratio) && ratio >= kUnitRatio) {
      if (++non_decreasing >= kDivergenceRun && k >= 10) {
        return out;
      }
    } else {
      non_decreasing = 0;
    }
    // Slow but steady geometric decay (slowly varying integrands): close with
    // the geometric tail once the block ratio has settled.
    if (k >= 24 && std::isfinite(ratio) && std::isfinite(prev_ratio) && ratio < kUnitRatio &&
        std::abs(ratio - prev_ratio) < 1e-4) {
      out.tail = block * ratio / (1.0 - ratio);
      out.value = sum + out.tail;
      return out;
    }
    prev_ratio = ratio;
    prev_block = block;
    inner = outer;
    width *= 2.0;
  }
  throw Error(ErrorKind::QuadratureFailure,
              "half-line integral could not be classified within the block budget");
}

}  // namespace hke::quad
