#pragma once

#include <ostream>
#include <span>

#include <json.hpp>

#include "hke/derived_scales.hpp"

namespace hke {

/// Which sup-table supplies the exponential rate r / K^{-1}(t/r). Auto uses K
/// up to t_split and K_inf beyond (falling back to whichever exists).
enum class Variant { K, K_inf, Auto };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct EnvelopeParams {
  int d = 1;
  double c_up = 1.0;
  double c_low = 1.0;
  double a_U = 1.0;
  double a_L = 1.0;
  double delta1 = 0.45;
  double t_split = 0.0;  // <= 0: Phi(1)

  void validate() const;
};

void to_json(nlohmann::json& j, const EnvelopeParams& p);
void from_json(const nlohmann::json& j, EnvelopeParams& p);

struct HKEnvelope {
  double t = 0.0;
  double r = 0.0;
  double upper_exp = 0.0;
  double lower_basic = 0.0;
  double upper_K = 0.0;
  double lower_K = 0.0;
  double gaussian_lower = 0.0;
  double gaussian_upper = 0.0;
  double tail_upper = 0.0;
  double tail_lower = 0.0;
  // (r / K^{-1}(t/r)) / (r / Phi^{-1}(t))^2; NaN at r = 0.
  double exp_ratio_F4 = 0.0;
};

/// Phi^{-1}(t)^{-d}.
double near_diagonal(const DerivedScales& ds, int d, double t);
/// t / (r^d psi(r)); +inf at r = 0.
double jump_term(const DerivedScales& ds, int d, double t, double r);
/// Auto becomes K for t <= t_split (Phi(1) when t_split <= 0) and K_inf
/// beyond; a variant whose table is absent falls back to the other one.
Variant resolve_variant(const DerivedScales& ds, Variant v, double t, double t_split = 0.0);
/// K^{-1}(x) or K_inf^{-1}(x) for a resolved variant. Arguments beyond the
/// trusted table range resolve to the limits 0 and +inf.
double k_inverse(const DerivedScales& ds, double x, Variant v);

/// G(c, t, r) = t/(r^d psi(r)) + Phi^{-1}(t)^{-d} exp(-c r / K^{-1}(t/r)).
double envelope_G(const DerivedScales& ds, int d, double c, double t, double r, Variant v,
                  double t_split = 0.0);

double upper_exp(const DerivedScales& ds, const EnvelopeParams& p, double t, double r);
double lower_basic(const DerivedScales& ds, const EnvelopeParams& p, double t, double r);
double upper_K(const DerivedScales& ds, const EnvelopeParams& p, double t, double r,
               Variant v = Variant::Auto);
double lower_K(const DerivedScales& ds, const EnvelopeParams& p, double t, double r,
               Variant v = Variant::Auto);

struct Band {
  double lower = 0.0;
  double upper = 0.0;
};

/// Gaussian-exponent form; the Bernstein hypothesis on r -> 1/Phi(r^{-1/2}) is
/// the caller's responsibility.
Band gaussian_form(const DerivedScales& ds, const EnvelopeParams& p, double t, double r);

/// Phi(r) r^{-d}; requires d > beta_2 ^ 2.
double green_envelope(const DerivedScales& ds, const EnvelopeParams& p, double r);

/// min(1, c_up ((psi^{-1}(t)/r)^{beta_1/2} + exp(-a_U r / K^{-1}(t/r)))).
double tail_upper(const DerivedScales& ds, const EnvelopeParams& p, double t, double r,
                  Variant v = Variant::Auto);
/// c_low t / psi(r) off the near-diagonal region, 0 inside it.
double tail_lower(const DerivedScales& ds, const EnvelopeParams& p, double t, double r);

HKEnvelope evaluate(const DerivedScales& ds, const EnvelopeParams& p, double t, double r,
                    Variant v = Variant::Auto);

/// Displayed comparability forms of the log-corrected examples, with every
/// constant set to 1: value = near ^ (jump + near exp(-exponent)).
struct OracleForm {
  double near_diagonal = 0.0;
  double jump = 0.0;
  double exponent = 0.0;
  double value = 0.0;
};

/// log_corrected_zero(alpha > 1) for t < 1/2, log_corrected_infty(beta) for
/// t >= 16. Other kernels or times throw RegimeViolation.
OracleForm closed_form_oracle(const ScaleSpec& example, int d, double t, double r);

/// Header t,r,upper_exp,...,exp_ratio_F4; one row per (t, r) with t outer.
void write_envelope_csv(const DerivedScales& ds, const EnvelopeParams& p,
                        std::span<const double> ts, std::span<const double> rs, Variant v,
                        std::ostream& os);

}  // namespace hke
