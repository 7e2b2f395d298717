#include "hke/derived_scales.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>

#include "hke/error.hpp"
#include "hke/quadrature.hpp"

namespace hke {

namespace {

constexpr double kLn10 = 2.302585092994045684;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> grid_nodes(const GridOptions& g) {
  if (!(g.r_lo > 0.0) || !(g.r_hi > g.r_lo) || g.per_decade < 16) {
    throw Error(ErrorKind::ConfigInvalid, "grid needs 0 < r_lo < r_hi and >= 16 nodes/decade");
  }
  const double xlo = std::log(g.r_lo);
  const double xhi = std::log(g.r_hi);
  const auto n = static_cast<std::size_t>(
      std::max(1.0, std::round((xhi - xlo) / kLn10 * g.per_decade)));
  std::vector<double> x(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    x[i] = xlo + (xhi - xlo) * static_cast<double>(i) / static_cast<double>(n);
  }
  x.back() = xhi;
  return x;
}

std::vector<double> running_sup_over_b(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.size());
  double best = -kInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    best = std::max(best, y[i] - x[i]);
    out[i] = best;
  }
  return out;
}

LogFunction log_of(const MonotoneTable& t) {
  return [&t](double u) { return t.log_eval(u); };
}

}  // namespace

MonotoneTable build_phi(const ScaleFunction& psi, const GridOptions& grid) {
  const auto x = grid_nodes(grid);
  const auto& breaks = psi.log_breaks();
  const auto log_g = [&psi](double u) { return 2.0 * u - psi.log_value(u); };
  const auto g = [&](double u) { return std::exp(log_g(u)); };

  const auto head = quad::integrate_half_line(log_g, x.front(), quad::Side::Left, breaks);
  if (!head.value) {
    throw Error(ErrorKind::IntegrabilityViolation,
                "int_0^1 s/psi(s) ds diverges for " + psi.describe());
  }
  std::vector<double> y(x.size());
  std::vector<double> m(x.size());
  double area = *head.value;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) area += quad::integrate_split(g, x[i - 1], x[i], breaks, 1e-12).value;
    y[i] = 2.0 * x[i] - std::log(2.0) - std::log(area);
    // d log Phi / d log r = 2 - 2 Phi / psi
    m[i] = 2.0 - 2.0 * std::exp(y[i] - psi.log_value(x[i]));
  }

  const auto cert = estimate_scaling(psi, grid.r_lo, grid.r_hi, ScalingMode::Global, 1.0,
                                     std::min(grid.per_decade, 32));
  const ExponentClamp clamp{std::min(cert.beta_lower, 2.0), 2.0};
  return MonotoneTable(x, std::move(y), std::move(m), Monotone::NonDecreasing, clamp, clamp,
                       grid.trust_decades);
}

namespace {

// Slopes of the running sup of f(b)/b: where the sup is attained at the node
// it moves with f(t)/t, elsewhere it is flat.
std::vector<double> running_sup_slopes(const MonotoneTable& f, std::span<const double> x,
                                       std::span<const double> k) {
  std::vector<double> m(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (f.log_eval(x[i]) - x[i] >= k[i] - 1e-14) m[i] = std::max(0.0, f.log_slope(x[i]) - 1.0);
  }
  return m;
}

}  // namespace

MonotoneTable build_K(const MonotoneTable& phi, const ScalingCertificate& cert) {
  if (!(phi.left_exponent() > 1.0)) {
    throw Error(ErrorKind::LowerIndexTooSmall,
                "Phi(b)/b does not vanish as b -> 0 (local index " +
                    std::to_string(phi.left_exponent()) + " <= 1)");
  }
  if (!(cert.beta_lower > 1.0)) {
    throw Error(ErrorKind::LowerIndexTooSmall,
                "lower index of Phi is " + std::to_string(cert.beta_lower) + " <= 1");
  }
  if (cert.r_lo > phi.r_front() * (1.0 + 1e-9)) {
    throw Error(ErrorKind::LowerIndexTooSmall,
                "the lower scaling certificate does not reach the left end of the table");
  }
  const auto x = phi.log_nodes();
  auto k = running_sup_over_b(x, phi.log_values());
  auto m = running_sup_slopes(phi, x, k);
  const double left = phi.left_exponent() - 1.0;
  return MonotoneTable({x.begin(), x.end()}, std::move(k), std::move(m), Monotone::NonDecreasing,
                       ExponentClamp{left, left}, ExponentClamp{0.0, 1.0}, phi.trust_decades());
}

TildePair build_K_inf(const MonotoneTable& phi, double a, const ScalingCertificate& cert) {
  const double la = std::log(a);
  if (!(a > 0.0) || !(la > phi.log_r_front()) || !(la < phi.log_r_back())) {
    throw Error(ErrorKind::ConfigInvalid, "threshold a must lie inside the table range");
  }
  if (!(cert.beta_lower > 1.0)) {
    throw Error(ErrorKind::LowerIndexTooSmall,
                "lower index of Phi above a is " + std::to_string(cert.beta_lower) + " <= 1");
  }
  // Tables start at a; below a both are exact power laws (s^2 and s), which the
  // left extrapolation reproduces at any distance.
  const auto nodes = phi.log_nodes();
  std::vector<double> x{la};
  for (double u : nodes) {
    if (u > la + 1e-12) x.push_back(u);
  }
  std::vector<double> yt(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) yt[i] = phi.log_eval(x[i]);
  std::vector<double> mt(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mt[i] = phi.log_slope(x[i]);
  auto k = running_sup_over_b(x, yt);
  auto mk = running_sup_slopes(phi, x, k);

  TildePair out;
  const ExponentClamp right{std::min(cert.beta_lower, 2.0), 2.0};
  out.phi_tilde = MonotoneTable(x, std::move(yt), std::move(mt), Monotone::NonDecreasing,
                                ExponentClamp{2.0, 2.0}, right, phi.trust_decades());
  out.K_inf = MonotoneTable(std::move(x), std::move(k), std::move(mk), Monotone::NonDecreasing,
                            ExponentClamp{1.0, 1.0}, ExponentClamp{0.0, 1.0},
                            phi.trust_decades());
  out.phi_tilde.set_left_trust(kInf);
  out.K_inf.set_left_trust(kInf);
  return out;
}

double DerivedScales::K_at(double s) const {
  if (!K) throw Error(ErrorKind::MissingTable, "K table absent: " + K_missing_reason);
  return (*K)(s);
}

double DerivedScales::K_inv(double t) const {
  if (!K) throw Error(ErrorKind::MissingTable, "K table absent: " + K_missing_reason);
  return K->inverse(t);
}

double DerivedScales::K_inf_at(double s) const {
  if (!K_inf) throw Error(ErrorKind::MissingTable, "K_inf table absent: " + K_inf_missing_reason);
  return (*K_inf)(s);
}

double DerivedScales::K_inf_inv(double t) const {
  if (!K_inf) throw Error(ErrorKind::MissingTable, "K_inf table absent: " + K_inf_missing_reason);
  return K_inf->inverse(t);
}

DerivedScales build_derived(const ScaleFunction& psi, int d, double a, const GridOptions& grid) {
  if (d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  DerivedScales ds(psi, d, a, grid);

  ds.psi_cert = estimate_scaling(psi, grid.r_lo, grid.r_hi, ScalingMode::Global, a);

  ds.phi = build_phi(psi, grid);
  const auto log_phi = log_of(ds.phi);
  ds.phi_cert = estimate_scaling(log_phi, grid.r_lo, grid.r_hi, ScalingMode::Global, a);
  try {
    ds.phi_cert_zero = estimate_scaling(log_phi, grid.r_lo, grid.r_hi, ScalingMode::NearZero, a);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RangeTooNarrow) throw;
  }
  try {
    ds.phi_cert_infty =
        estimate_scaling(log_phi, grid.r_lo, grid.r_hi, ScalingMode::NearInfty, a);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RangeTooNarrow) throw;
  }

  // K: global certificate if it has index > 1, else the near-zero one (then K
  // is only certified below a).
  std::optional<ScalingCertificate> k_cert;
  if (ds.phi_cert.beta_lower > 1.0) {
    k_cert = ds.phi_cert;
    ds.K_valid_below = kInf;
  } else if (ds.phi_cert_zero && ds.phi_cert_zero->beta_lower > 1.0) {
    k_cert = ds.phi_cert_zero;
    ds.K_valid_below = a;
  }
  try {
    ds.K = build_K(ds.phi, k_cert ? *k_cert : ds.phi_cert);
    ds.K_cert = k_cert;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::LowerIndexTooSmall) throw;
    ds.K_missing_reason = e.what();
    ds.K_valid_below = 0.0;
  }

  std::optional<ScalingCertificate> kinf_cert;
  if (ds.phi_cert_infty && ds.phi_cert_infty->beta_lower > 1.0) {
    kinf_cert = ds.phi_cert_infty;
  } else if (ds.phi_cert.beta_lower > 1.0) {
    kinf_cert = ds.phi_cert;
  }
  try {
    auto pair = build_K_inf(ds.phi, a, kinf_cert ? *kinf_cert
                                                 : (ds.phi_cert_infty ? *ds.phi_cert_infty
                                                                      : ds.phi_cert));
    ds.phi_tilde = std::move(pair.phi_tilde);
    ds.K_inf = std::move(pair.K_inf);
    ds.K_inf_cert = kinf_cert;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::LowerIndexTooSmall) throw;
    ds.K_inf_missing_reason = e.what();
    // Phi_a itself needs no index condition; build it with a permissive certificate.
    ScalingCertificate any = ds.phi_cert;
    any.beta_lower = 1.5;
    ds.phi_tilde = build_K_inf(ds.phi, a, any).phi_tilde;
  }
  return ds;
}

void write_tables_csv(const DerivedScales& ds, std::ostream& os) {
  const auto old_precision = os.precision();
  os << std::setprecision(17);
  os << "r,psi,phi,phi_inv_at_phi,K,K_inf\n";
  for (double u : ds.phi.log_nodes()) {
    const double r = std::exp(u);
    const double phi = ds.phi(r);
    os << r << ',' << ds.psi(r) << ',' << phi << ',' << ds.phi_inv(phi) << ',';
    if (ds.K) {
      os << (*ds.K)(r);
    } else {
      os << "nan";
    }
    os << ',';
    if (ds.K_inf) {
      os << (*ds.K_inf)(r);
    } else {
      os << "nan";
    }
    os << '\n';
  }
  os.precision(old_precision);
}

void to_json(nlohmann::json& j, const ComparabilityReport& c) {
  j = {{"range", {c.r_lo, c.r_hi}},
       {"sup_ratio", c.sup_ratio},
       {"inf_ratio", c.inf_ratio},
       {"upper_index", c.upper_index},
       {"comparable", c.comparable},
       {"agrees_with_index", c.agrees_with_index},
       {"phi_slope", c.phi_slope},
       {"phi_slope_at", c.slope_at}};
}

ComparabilityReport comparability_report(const DerivedScales& ds, double r_lo, double r_hi) {
  ComparabilityReport rep;
  rep.r_lo = r_lo;
  rep.r_hi = r_hi;
  const double xlo = std::log(r_lo);
  const double xhi = std::log(r_hi);
  const auto n = static_cast<std::size_t>(
      std::max(2.0, std::ceil((xhi - xlo) / kLn10 * ds.grid.per_decade)));
  rep.sup_ratio = 0.0;
  rep.inf_ratio = kInf;
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = xlo + (xhi - xlo) * static_cast<double>(i) / static_cast<double>(n);
    const double ratio = std::exp(ds.phi.log_eval(u) - ds.psi.log_value(u));
    rep.sup_ratio = std::max(rep.sup_ratio, ratio);
    rep.inf_ratio = std::min(rep.inf_ratio, ratio);
  }
  rep.upper_index =
      estimate_scaling(ds.psi, r_lo, r_hi, ScalingMode::Global, ds.a, ds.grid.per_decade)
          .beta_upper;
  rep.comparable = rep.inf_ratio >= 0.5 * rep.sup_ratio;
  rep.agrees_with_index =
      (rep.comparable && rep.upper_index < 2.0) || (!rep.comparable && rep.upper_index > 1.85);
  const double lo_ratio = std::exp(ds.phi.log_eval(xlo) - ds.psi.log_value(xlo));
  const double hi_ratio = std::exp(ds.phi.log_eval(xhi) - ds.psi.log_value(xhi));
  rep.slope_at = lo_ratio <= hi_ratio ? r_lo : r_hi;
  rep.phi_slope = ds.phi.log_slope(std::log(rep.slope_at));
  return rep;
}

std::size_t CalculusReport::total_violations() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += c.violations;
  return n;
}

void to_json(nlohmann::json& j, const InequalityCheck& c) {
  j = {{"name", c.name},          {"samples", c.samples},   {"violations", c.violations},
       {"worst_slack", c.worst_slack}, {"tolerance", c.tolerance}, {"skipped", c.skipped}};
  if (!c.note.empty()) j["note"] = c.note;
}

void to_json(nlohmann::json& j, const CalculusReport& r) {
  j = {{"checks", r.checks}, {"total_violations", r.total_violations()}};
  if (r.fitted_C3) j["fitted_C3"] = *r.fitted_C3;
  if (r.theory_C3) j["theory_C3"] = *r.theory_C3;
  if (r.fitted_C4) j["fitted_C4"] = *r.fitted_C4;
}

namespace {

// Accumulates lhs <= rhs samples in log form.
class Tally {
 public:
  Tally(std::string name, double tol) { c_.name = std::move(name); c_.tolerance = tol; }

  void add(double log_lhs, double log_rhs) {
    ++c_.samples;
    const double excess = log_lhs - log_rhs;
    worst_ = std::max(worst_, excess);
    if (excess > std::log1p(c_.tolerance)) ++c_.violations;
  }

  InequalityCheck done() {
    c_.worst_slack = c_.samples ? std::exp(worst_) : 0.0;
    return c_;
  }

  static InequalityCheck skipped(std::string name, std::string why) {
    InequalityCheck c;
    c.name = std::move(name);
    c.skipped = true;
    c.note = std::move(why);
    return c;
  }

 private:
  InequalityCheck c_;
  double worst_ = -kInf;
};

}  // namespace

CalculusReport check_scale_calculus(const DerivedScales& ds, std::size_t n, std::uint64_t seed,
                                    double tol) {
  CalculusReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double xlo = std::log(ds.grid.r_lo);
  const double xhi = std::log(ds.grid.r_hi);
  const auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };
  const auto phi = [&](double u) { return ds.phi.log_eval(u); };

  {
    Tally t("comp1: Phi <= psi", tol);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = draw(xlo, xhi);
      t.add(phi(u), ds.psi.log_value(u));
    }
    rep.checks.push_back(t.done());
  }
  {
    Tally mono("Phi non-decreasing", tol);
    Tally quad("Phi(R)/Phi(r) <= (R/r)^2", tol);
    for (std::size_t i = 0; i < n; ++i) {
      double u = draw(xlo, xhi);
      double v = draw(xlo, xhi);
      if (u > v) std::swap(u, v);
      mono.add(phi(u), phi(v));
      quad.add(phi(v) - phi(u), 2.0 * (v - u));
    }
    rep.checks.push_back(mono.done());
    rep.checks.push_back(quad.done());
  }
  {
    const auto tilde = [&](double u) { return ds.phi_tilde.log_eval(u); };
    Tally below("Phi_a <= Phi", tol);
    Tally quad("Phi_a(t)/Phi_a(s) <= (t/s)^2", tol);
    for (std::size_t i = 0; i < n; ++i) {
      double u = draw(xlo, xhi);
      double v = draw(xlo, xhi);
      below.add(tilde(u), phi(u));
      if (u > v) std::swap(u, v);
      quad.add(tilde(v) - tilde(u), 2.0 * (v - u));
    }
    rep.checks.push_back(below.done());
    rep.checks.push_back(quad.done());
  }

  // Phi^{-1} transfers the global scaling of Phi with reciprocal indices.
  {
    const auto& c = ds.phi_cert;
    const double e = tol + 2.0 * c.residual;
    Tally up("Phi^-1 upper scaling", e);
    Tally low("Phi^-1 lower scaling", e);
    const double tlo = phi(std::log(c.r_lo));
    const double thi = phi(std::log(c.r_hi));
    for (std::size_t i = 0; i < n; ++i) {
      double s = draw(tlo, thi);
      double t = draw(tlo, thi);
      if (s > t) std::swap(s, t);
      const double ratio = std::log(ds.phi_inv(std::exp(t))) - std::log(ds.phi_inv(std::exp(s)));
      up.add(ratio, -std::log(c.c_lower) / c.beta_lower + (t - s) / c.beta_lower);
      low.add(-std::log(c.c_upper) / c.beta_upper + (t - s) / c.beta_upper, ratio);
    }
    rep.checks.push_back(up.done());
    rep.checks.push_back(low.done());
  }

  // Sandwich and ratio bounds for a running-sup table built from `base`
  // (log f) with certificate `cert`, on log-abscissae [lo, hi].
  const auto sup_checks = [&](const std::string& tag, const MonotoneTable& table,
                              const LogFunction& base, const ScalingCertificate& cert, double lo,
                              double hi) {
    const double e = tol + 2.0 * cert.residual;
    const double lcl = std::log(cert.c_lower);
    Tally lower(tag + " >= f(t)/t", e);
    Tally upper(tag + " <= C^-1 f(t)/t", e);
    Tally rlow(tag + " ratio lower", e);
    Tally rup(tag + " ratio upper", e);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = draw(lo, hi);
      const double k = table.log_eval(u);
      lower.add(base(u) - u, k);
      upper.add(k, -lcl + base(u) - u);
      double s = draw(lo, hi);
      double t = draw(lo, hi);
      if (s > t) std::swap(s, t);
      const double ratio = table.log_eval(t) - table.log_eval(s);
      rlow.add(2.0 * lcl + (cert.beta_lower - 1.0) * (t - s), ratio);
      rup.add(ratio, -lcl + (t - s));
    }
    rep.checks.push_back(lower.done());
    rep.checks.push_back(upper.done());
    rep.checks.push_back(rlow.done());
    rep.checks.push_back(rup.done());
  };

  // Exponent comparison: for t < f(r),
  //   (r/f^-1(t))^2 <= r/Kinv(t/r) <= C3 (r/f^-1(t))^{delta/(delta-1)}.
  // Returns the smallest C3 that works on the samples.
  struct Exponent {
    double fitted_upper;
    double worst_lower;
  };
  const auto exponent_samples = [&](const std::string& tag, const MonotoneTable& f,
                                    const MonotoneTable& k, double delta, double c3, double r_top,
                                    double t_min) -> Exponent {
    const double e = tol;
    Tally lower(tag + " lower", e);
    Tally upper(tag + " upper (certificate C3)", e);
    const double q = delta / (delta - 1.0);
    const double reach = f.trust_decades() * kLn10 * 0.9;
    const double rtop = std::min(std::log(r_top), xhi);
    double fitted = 0.0;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ur = draw(xlo + 0.1 * (rtop - xlo), rtop);
      // Keep Kinv(t/r) inside the trusted table range: its lower estimate is
      // p q - ur/(delta-1) in log form.
      double pmin = std::max(xlo, ((delta - 1.0) * (xlo - reach) + ur) / delta);
      if (t_min > 0.0) pmin = std::max(pmin, std::log(f.inverse(t_min)));
      if (pmin >= ur) {
        ++skipped;
        continue;
      }
      const double p = draw(pmin, ur);
      const double t = std::exp(f.log_eval(p));
      if (!(t < std::exp(f.log_eval(ur)))) {
        ++skipped;
        continue;
      }
      const double lr = std::log(f.inverse(t));
      const double x = ur - lr;  // log(r / f^-1(t))
      const double y = ur - std::log(k.inverse(t / std::exp(ur)));
      lower.add(2.0 * x, y);
      upper.add(y, std::log(c3) + q * x);
      fitted = std::max(fitted, std::exp(y - q * x));
    }
    auto lo = lower.done();
    auto up = upper.done();
    if (skipped) up.note = std::to_string(skipped) + " draws outside the admissible set";
    rep.checks.push_back(lo);
    rep.checks.push_back(up);
    return {fitted, lo.worst_slack};
  };

  if (ds.K && ds.K_cert) {
    const auto& c = *ds.K_cert;
    const double top = std::min(xhi, std::log(ds.K_valid_below) - 1e-12);
    sup_checks("K", *ds.K, phi, c, xlo, top);
    const double c3 = std::pow(c.c_lower, -2.0 / (c.beta_lower - 1.0));
    rep.theory_C3 = c3;
    rep.fitted_C3 =
        exponent_samples("exponent comparison (K)", ds.phi, *ds.K, c.beta_lower, c3,
                         std::min(ds.K_valid_below, ds.grid.r_hi), 0.0)
            .fitted_upper;
  } else {
    const std::string why = ds.K_missing_reason.empty() ? "no certificate" : ds.K_missing_reason;
    rep.checks.push_back(Tally::skipped("K sandwich", why));
    rep.checks.push_back(Tally::skipped("exponent comparison (K)", why));
  }

  if (ds.K_inf && ds.K_inf_cert) {
    const auto& c = *ds.K_inf_cert;
    const auto tilde = [&](double u) { return ds.phi_tilde.log_eval(u); };
    sup_checks("K_inf", *ds.K_inf, tilde, c, xlo, xhi);
    const double c3 = std::pow(c.c_lower, -2.0 / (c.beta_lower - 1.0));
    exponent_samples("exponent comparison (K_inf, Phi_a form)", ds.phi_tilde, *ds.K_inf,
                     c.beta_lower, c3, ds.grid.r_hi, 0.0);

    // C4 with Phi itself, for Phi(a) <= t <= Phi(r).
    const double q = c.beta_lower / (c.beta_lower - 1.0);
    double c4 = 1.0;
    const double t_min = ds.phi(ds.a);
    for (std::size_t i = 0; i < n; ++i) {
      const double ur = draw(std::log(ds.a), xhi);
      const double pmin = std::log(ds.phi_inv(t_min));
      if (pmin >= ur) continue;
      const double p = draw(pmin, ur);
      const double t = ds.phi(std::exp(p));
      const double x = ur - std::log(ds.phi_inv(t));
      const double y = ur - std::log(ds.K_inf_inv(t / std::exp(ur)));
      c4 = std::max({c4, std::exp(2.0 * x - y), std::exp(y - q * x)});
    }
    rep.fitted_C4 = c4;
  } else {
    const std::string why =
        ds.K_inf_missing_reason.empty() ? "no certificate" : ds.K_inf_missing_reason;
    rep.checks.push_back(Tally::skipped("K_inf sandwich", why));
  }
  return rep;
}

}  // namespace hke
