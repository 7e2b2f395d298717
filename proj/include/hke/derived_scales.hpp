#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hke/monotone_table.hpp"
#include "hke/scale_function.hpp"
#include "hke/scaling.hpp"

namespace hke {

struct GridOptions {
  double r_lo = 1e-8;
  double r_hi = 1e8;
  int per_decade = 64;
  double trust_decades = 3.0;
};

/// Phi(r) = r^2 / (2 A(r)), A(r) = int_0^r s/psi(s) ds, tabulated on a log grid.
/// A is accumulated interval by interval after one half-line integral for the
/// head below the grid. The end exponents are clamped to [beta_1, 2] of psi.
MonotoneTable build_phi(const ScaleFunction& psi, const GridOptions& grid = {});

/// Running supremum of Phi(b)/b. Throws LowerIndexTooSmall when Phi(b)/b does
/// not vanish at 0 (sup attained at the left edge) or the certificate has
/// lower index <= 1 or does not reach the left end of the table.
MonotoneTable build_K(const MonotoneTable& phi, const ScalingCertificate& delta_cert);

struct TildePair {
  MonotoneTable phi_tilde;
  MonotoneTable K_inf;
};

/// Phi_a(s) = Phi(a) s^2 / a^2 below a and Phi(s) above, plus the running sup
/// of Phi_a(b)/b. Both tables start at a and are exact power laws below it. The certificate must give lower index > 1 above a.
TildePair build_K_inf(const MonotoneTable& phi, double a, const ScalingCertificate& delta_cert);

struct DerivedScales {
  DerivedScales(ScaleFunction psi_, int d_, double a_, GridOptions grid_)
      : psi(std::move(psi_)), d(d_), a(a_), grid(grid_) {}

  ScaleFunction psi;
  int d = 1;
  double a = 1.0;
  GridOptions grid;

  MonotoneTable phi;
  std::optional<MonotoneTable> K;
  MonotoneTable phi_tilde;
  std::optional<MonotoneTable> K_inf;

  ScalingCertificate psi_cert;
  ScalingCertificate phi_cert;  // global on the grid
  std::optional<ScalingCertificate> phi_cert_zero;
  std::optional<ScalingCertificate> phi_cert_infty;
  // Certificates the two sup-tables were built from, and where K is certified.
  std::optional<ScalingCertificate> K_cert;
  std::optional<ScalingCertificate> K_inf_cert;
  double K_valid_below = 0.0;
  std::string K_missing_reason;
  std::string K_inf_missing_reason;

  double psi_at(double r) const { return psi(r); }
  double psi_inv(double t) const { return psi.inverse(t); }
  double phi_at(double r) const { return phi(r); }
  double phi_inv(double t) const { return phi.inverse(t); }
  double phi_tilde_at(double r) const { return phi_tilde(r); }
  double K_at(double s) const;
  double K_inv(double t) const;
  double K_inf_at(double s) const;
  double K_inf_inv(double t) const;
};

DerivedScales build_derived(const ScaleFunction& psi, int d, double a = 1.0,
                            const GridOptions& grid = {});

/// r, psi, phi, phi_inv_at_phi(r), K, K_inf at every grid node.
void write_tables_csv(const DerivedScales& ds, std::ostream& os);

struct ComparabilityReport {
  double r_lo = 0.0;
  double r_hi = 0.0;
  double sup_ratio = 0.0;  // sup Phi/psi
  double inf_ratio = 0.0;
  double upper_index = 0.0;
  bool comparable = false;
  bool agrees_with_index = false;
  double phi_slope = 0.0;  // local log-log slope of Phi at the end where Phi/psi is smaller
  double slope_at = 0.0;
};

void to_json(nlohmann::json& j, const ComparabilityReport& c);

/// Phi and psi count as comparable on the range when inf(Phi/psi) is at least
/// half of sup(Phi/psi). Agreement with the index: comparable with upper index
/// below 2, or not comparable with upper index above 1.85.
ComparabilityReport comparability_report(const DerivedScales& ds, double r_lo, double r_hi);

struct InequalityCheck {
  std::string name;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0;  // max lhs/rhs over the samples; <= 1 means it holds
  double tolerance = 0.0;
  bool skipped = false;
  std::string note;
};

struct CalculusReport {
  std::vector<InequalityCheck> checks;
  std::optional<double> fitted_C3;  // smallest C3 making the upper comparison hold
  std::optional<double> theory_C3;  // C_L^{-2/(delta-1)} from the certificate
  std::optional<double> fitted_C4;
  std::size_t total_violations() const;
};

void to_json(nlohmann::json& j, const InequalityCheck& c);
void to_json(nlohmann::json& j, const CalculusReport& r);

CalculusReport check_scale_calculus(const DerivedScales& ds, std::size_t n_samples = 10000,
                                    std::uint64_t seed = 1, double tol = 1e-6);

}  // namespace hke
