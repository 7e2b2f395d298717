#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hke/monotone_table.hpp"

namespace hke {

enum class ScaleKind { Power, PiecewisePower, LogCorrectedZero, LogCorrectedInfty, Table };

std::string to_string(ScaleKind kind);
ScaleKind scale_kind_from_string(const std::string& s);

/// Parameters of a scale function psi. Which fields matter depends on `kind`:
///   Power              exponents = {alpha}
///   PiecewisePower     exponents (one per piece), breaks (increasing), optional
///                      coefficients; without coefficients the first piece is
///                      r^alpha_0 and later pieces are scaled to be continuous
///   LogCorrectedZero   log_power = alpha: s^2 (log 1/s)^alpha near 0
///   LogCorrectedInfty  log_power = beta:  s^2 (log s)^beta for s >= 16
///   Table              table_r / table_psi, interpolated in log-log
struct ScaleSpec {
  ScaleKind kind = ScaleKind::Power;
  std::vector<double> exponents;
  std::vector<double> breaks;
  std::vector<double> coefficients;
  double log_power = 0.0;
  std::vector<double> table_r;
  std::vector<double> table_psi;
  double r_min = 1e-8;
  double r_max = 1e8;

  static ScaleSpec power(double alpha);
  static ScaleSpec piecewise(std::vector<double> exponents, std::vector<double> breaks);
  static ScaleSpec log_zero(double alpha);
  static ScaleSpec log_infty(double beta);
  static ScaleSpec table(std::vector<double> r, std::vector<double> psi);
};

void to_json(nlohmann::json& j, const ScaleSpec& spec);
void from_json(const nlohmann::json& j, ScaleSpec& spec);

/// Catalog names: "stable:1.5" (alias "power:1.5"), "logzero:2", "loginf:0.5",
/// "piecewise:1.5,2.5@1" (exponents, then breakpoints after '@').
ScaleSpec parse_catalog(const std::string& name);

/// Evaluable non-decreasing psi on (0, inf). Outside [r_min, r_max] the
/// declared extension of the kernel is used; nothing is clipped.
class ScaleFunction {
 public:
  explicit ScaleFunction(ScaleSpec spec, std::optional<int> dim_hint = std::nullopt);

  double operator()(double r) const;
  /// log psi(e^u). All numerics downstream run on this form.
  double log_value(double u) const;
  /// Generalized inverse inf{ s > 0 : psi(s) > t }, by bisection in log r.
  double inverse(double t) const;

  const ScaleSpec& spec() const noexcept { return spec_; }
  std::optional<int> dim_hint() const noexcept { return dim_hint_; }
  /// Points (in log r) where psi is not smooth; quadrature splits there.
  const std::vector<double>& log_breaks() const noexcept { return log_breaks_; }
  std::string describe() const;

 private:
  ScaleSpec spec_;
  std::optional<int> dim_hint_;
  std::vector<double> log_breaks_;
  std::vector<double> log_coef_;  // piecewise: log of the coefficient per piece
  double log_anchor_ = 0.0;       // log-corrected: log r of the junction
  double log_psi_anchor_ = 0.0;   // log psi at the junction
  MonotoneTable table_;
};

ScaleFunction make_scale(const ScaleSpec& spec);

/// j(r) = 1 / (r^d psi(r)).
double jump_density(const ScaleFunction& f, int d, double r);

}  // namespace hke
