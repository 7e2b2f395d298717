#include "hke/envelopes.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "hke/error.hpp"

namespace hke {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double phi_inv_pow(const DerivedScales& ds, int d, double t) {
  return std::pow(ds.phi_inv(t), -static_cast<double>(d));
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::K: return "K";
    case Variant::K_inf: return "K_inf";
    case Variant::Auto: return "auto";
  }
  return "auto";
}

Variant variant_from_string(const std::string& s) {
  if (s == "K") return Variant::K;
  if (s == "K_inf") return Variant::K_inf;
  if (s == "auto") return Variant::Auto;
  throw Error(ErrorKind::ConfigInvalid, "unknown variant '" + s + "' (K, K_inf, auto)");
}

void EnvelopeParams::validate() const {
  if (d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  if (!(c_up > 0.0) || !(c_low > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "envelope constants must be > 0");
  }
  if (!(a_U > 0.0) || !(a_U <= a_L)) throw Error(ErrorKind::ConfigInvalid, "need 0 < a_U <= a_L");
  if (!(delta1 > 0.0 && delta1 < 0.5)) {
    throw Error(ErrorKind::ConfigInvalid, "delta1 must lie in (0, 1/2)");
  }
}

void to_json(nlohmann::json& j, const EnvelopeParams& p) {
  j = {{"d", p.d},       {"c_up", p.c_up},     {"c_low", p.c_low},   {"a_U", p.a_U},
       {"a_L", p.a_L},   {"delta1", p.delta1}, {"t_split", p.t_split}};
}

void from_json(const nlohmann::json& j, EnvelopeParams& p) {
  try {
    p.d = j.value("d", p.d);
    p.c_up = j.value("c_up", p.c_up);
    p.c_low = j.value("c_low", p.c_low);
    p.a_U = j.value("a_U", p.a_U);
    p.a_L = j.value("a_L", p.a_L);
    p.delta1 = j.value("delta1", p.delta1);
    p.t_split = j.value("t_split", p.t_split);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("bad envelope_params: ") + e.what());
  }
}

double near_diagonal(const DerivedScales& ds, int d, double t) { return phi_inv_pow(ds, d, t); }

double jump_term(const DerivedScales& ds, int d, double t, double r) {
  if (!(r > 0.0)) return kInf;
  return t / (std::pow(r, d) * ds.psi(r));
}

Variant resolve_variant(const DerivedScales& ds, Variant v, double t, double t_split) {
  if (v == Variant::Auto) {
    const double split = t_split > 0.0 ? t_split : ds.phi(1.0);
    v = t <= split ? Variant::K : Variant::K_inf;
  }
  if (v == Variant::K && !ds.K && ds.K_inf) return Variant::K_inf;
  if (v == Variant::K_inf && !ds.K_inf && ds.K) return Variant::K;
  return v;
}

double k_inverse(const DerivedScales& ds, double x, Variant v) {
  if (v == Variant::Auto) throw Error(ErrorKind::ConfigInvalid, "k_inverse needs K or K_inf");
  const bool use_k = v == Variant::K;
  const auto& table = use_k ? ds.K : ds.K_inf;
  if (!table) {
    throw Error(ErrorKind::MissingTable,
                (use_k ? "K table absent: " + ds.K_missing_reason
                       : "K_inf table absent: " + ds.K_inf_missing_reason));
  }
  if (!(x > 0.0)) return 0.0;
  try {
    return table->inverse(x);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::OutOfRange) throw;
    return std::log(x) < table->log_values().front() ? 0.0 : kInf;
  }
}

double envelope_G(const DerivedScales& ds, int d, double c, double t, double r, Variant v,
                  double t_split) {
  if (!(r > 0.0)) return kInf;
  const double kinv = k_inverse(ds, t / r, resolve_variant(ds, v, t, t_split));
  const double rate = kinv > 0.0 ? c * r / kinv : kInf;
  return jump_term(ds, d, t, r) + phi_inv_pow(ds, d, t) * std::exp(-rate);
}

double upper_exp(const DerivedScales& ds, const EnvelopeParams& p, double t, double r) {
  const double phinv = ds.phi_inv(t);
  const double near = std::pow(phinv, -p.d);
  const double off = jump_term(ds, p.d, t, r) + near * std::exp(-p.a_U * r * r / (phinv * phinv));
  return p.c_up * std::min(near, off);
}

double lower_basic(const DerivedScales& ds, const EnvelopeParams& p, double t, double r) {
  const double phinv = ds.phi_inv(t);
  if (r <= p.delta1 * phinv) return p.c_low * std::pow(phinv, -p.d);
  return p.c_low * jump_term(ds, p.d, t, r);
}

double upper_K(const DerivedScales& ds, const EnvelopeParams& p, double t, double r, Variant v) {
  return p.c_up *
         std::min(near_diagonal(ds, p.d, t), envelope_G(ds, p.d, p.a_U, t, r, v, p.t_split));
}

double lower_K(const DerivedScales& ds, const EnvelopeParams& p, double t, double r, Variant v) {
  return p.c_low *
         std::min(near_diagonal(ds, p.d, t), envelope_G(ds, p.d, p.a_L, t, r, v, p.t_split));
}

Band gaussian_form(const DerivedScales& ds, const EnvelopeParams& p, double t, double r) {
  const double phinv = ds.phi_inv(t);
  const double near = std::pow(phinv, -p.d);
  const double jump = jump_term(ds, p.d, t, r);
  const double q = r * r / (phinv * phinv);
  return {p.c_low * std::min(near, jump + near * std::exp(-p.a_L * q)),
          p.c_up * std::min(near, jump + near * std::exp(-p.a_U * q))};
}

double green_envelope(const DerivedScales& ds, const EnvelopeParams& p, double r) {
  const double bound = std::min(ds.psi_cert.beta_upper, 2.0);
  if (!(p.d > bound)) {
    throw Error(ErrorKind::DimensionTooSmall, "Green estimate needs d > beta_2 ^ 2 = " +
                                                  std::to_string(bound) + ", got d = " +
                                                  std::to_string(p.d));
  }
  return ds.phi(r) * std::pow(r, -p.d);
}

double tail_upper(const DerivedScales& ds, const EnvelopeParams& p, double t, double r, Variant v) {
  if (!(r > 0.0)) return 1.0;
  const double beta1 = ds.psi_cert.beta_lower;
  const double poly = std::pow(ds.psi_inv(t) / r, beta1 / 2.0);
  const double kinv = k_inverse(ds, t / r, resolve_variant(ds, v, t, p.t_split));
  const double rate = kinv > 0.0 ? p.a_U * r / kinv : kInf;
  return std::min(1.0, p.c_up * (poly + std::exp(-rate)));
}

double tail_lower(const DerivedScales& ds, const EnvelopeParams& p, double t, double r) {
  if (r < p.delta1 * ds.phi_inv(t)) return 0.0;
  return p.c_low * t / ds.psi(r);
}

HKEnvelope evaluate(const DerivedScales& ds, const EnvelopeParams& p, double t, double r,
                    Variant v) {
  HKEnvelope e;
  e.t = t;
  e.r = r;
  e.upper_exp = upper_exp(ds, p, t, r);
  e.lower_basic = lower_basic(ds, p, t, r);
  e.upper_K = upper_K(ds, p, t, r, v);
  e.lower_K = lower_K(ds, p, t, r, v);
  const auto g = gaussian_form(ds, p, t, r);
  e.gaussian_lower = g.lower;
  e.gaussian_upper = g.upper;
  e.tail_upper = tail_upper(ds, p, t, r, v);
  e.tail_lower = tail_lower(ds, p, t, r);
  if (r > 0.0) {
    const double phinv = ds.phi_inv(t);
    const double kinv = k_inverse(ds, t / r, resolve_variant(ds, v, t, p.t_split));
    e.exp_ratio_F4 = (r / kinv) / ((r / phinv) * (r / phinv));
  } else {
    e.exp_ratio_F4 = std::numeric_limits<double>::quiet_NaN();
  }
  return e;
}

OracleForm closed_form_oracle(const ScaleSpec& example, int d, double t, double r) {
  if (d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  const double hd = d / 2.0;
  OracleForm o;
  if (example.kind == ScaleKind::LogCorrectedZero) {
    const double alpha = example.log_power;
    if (!(alpha > 1.0)) {
      throw Error(ErrorKind::RegimeViolation, "log_corrected_zero oracle needs alpha > 1");
    }
    if (!(t > 0.0 && t < 0.5)) throw Error(ErrorKind::RegimeViolation, "oracle needs t < 1/2");
    const double l = std::log(1.0 / t);
    o.near_diagonal = std::pow(t, -hd) * std::pow(l, hd * (alpha - 1.0));
    o.exponent = r * r * std::pow(l, alpha - 1.0) / t;
    o.jump = r > 0.0 ? t / (std::pow(r, d) * make_scale(example)(r)) : kInf;
  } else if (example.kind == ScaleKind::LogCorrectedInfty) {
    const double beta = example.log_power;
    if (!(t >= 16.0)) throw Error(ErrorKind::RegimeViolation, "oracle needs t >= 16");
    const double lt = std::log(t);
    // The slowly varying factor f(t) with Phi^{-1}(t)^2 ~ t f(t).
    double f = 1.0;
    if (std::abs(beta - 1.0) < 1e-12) {
      f = std::log(lt);
    } else if (beta < 1.0) {
      f = std::pow(lt, 1.0 - beta);
    }
    o.near_diagonal = std::pow(t * f, -hd);
    o.exponent = r * r / (t * f);
    o.jump = r > 0.0 ? t / (std::pow(r, d + 2) * std::pow(std::log1p(r), beta)) : kInf;
  } else {
    throw Error(ErrorKind::RegimeViolation,
                "closed-form oracle exists only for the log-corrected kernels");
  }
  o.value = std::min(o.near_diagonal, o.jump + o.near_diagonal * std::exp(-o.exponent));
  return o;
}

void write_envelope_csv(const DerivedScales& ds, const EnvelopeParams& p,
                        std::span<const double> ts, std::span<const double> rs, Variant v,
                        std::ostream& os) {
  const auto old_precision = os.precision();
  os << std::setprecision(12);
  os << "t,r,upper_exp,lower_basic,upper_K,lower_K,gaussian_lower,gaussian_upper,tail_upper,"
        "tail_lower,exp_ratio_F4\n";
  for (double t : ts) {
    for (double r : rs) {
      const auto e = evaluate(ds, p, t, r, v);
      os << e.t << ',' << e.r << ',' << e.upper_exp << ',' << e.lower_basic << ',' << e.upper_K
         << ',' << e.lower_K << ',' << e.gaussian_lower << ',' << e.gaussian_upper << ','
         << e.tail_upper << ',' << e.tail_lower << ',';
      if (std::isnan(e.exp_ratio_F4)) {
        os << "nan";
      } else {
        os << e.exp_ratio_F4;
      }
      os << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace hke
