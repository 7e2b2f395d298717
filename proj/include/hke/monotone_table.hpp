#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace hke {

enum class Monotone { NonDecreasing, NonIncreasing };

/// Bounds applied to the end-fitted power-law exponents.
struct ExponentClamp {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// A positive monotone function sampled on strictly increasing abscissae and
/// interpolated by a shape-preserving cubic in log-log coordinates (Fritsch-
/// Butland slopes, or given slopes filtered by Fritsch-Carlson). Outside the
/// nodes it continues as the power law fitted at each end, trusted for
/// `trust_decades` decades.
class MonotoneTable {
 public:
  MonotoneTable() = default;

  /// Nodes are given as log r and log f. Violations of `dir` larger than a
  /// rounding-level tolerance are rejected; smaller ones are clamped away.
  MonotoneTable(std::vector<double> log_r, std::vector<double> log_f, Monotone dir,
                ExponentClamp left_clamp = {}, ExponentClamp right_clamp = {},
                double trust_decades = 3.0);

  /// Same, with known d log f / d log r at the nodes. The slopes are kept
  /// (Hermite interpolation is then fourth-order accurate) except where the
  /// Fritsch-Carlson condition forces them down to preserve monotonicity, and
  /// the end slopes become the extrapolation exponents.
  MonotoneTable(std::vector<double> log_r, std::vector<double> log_f,
                std::vector<double> log_slopes, Monotone dir, ExponentClamp left_clamp = {},
                ExponentClamp right_clamp = {}, double trust_decades = 3.0);

  double operator()(double r) const;
  double log_eval(double log_r) const;
  /// d log f / d log r.
  double log_slope(double log_r) const;

  Monotone direction() const noexcept { return dir_; }
  std::size_t size() const noexcept { return x_.size(); }
  bool empty() const noexcept { return x_.empty(); }
  std::span<const double> log_nodes() const noexcept { return x_; }
  std::span<const double> log_values() const noexcept { return y_; }
  double r_front() const;
  double r_back() const;
  double log_r_front() const { return x_.front(); }
  double log_r_back() const { return x_.back(); }
  double left_exponent() const noexcept { return left_exp_; }
  double right_exponent() const noexcept { return right_exp_; }
  double trust_decades() const noexcept { return trust_; }
  /// Extends (or narrows) the trusted extrapolation on the left end only, for
  /// tables whose left continuation is exact by construction.
  void set_left_trust(double decades) { trust_left_ = decades; }

  /// Generalized inverse inf{ s >= 0 : f(s) > t } of a non-decreasing table.
  double inverse(double t) const;
  /// Log-space solve of f(r) = v for a strictly non-increasing table.
  double log_solve_decreasing(double log_v) const;

 private:
  void validate();
  void limit_slopes(std::span<const double> secants);
  void set_uniform_step();
  std::size_t locate(double x) const;
  double hermite(std::size_t k, double x) const;
  double hermite_slope(std::size_t k, double x) const;
  double solve_in_segment(std::size_t k, double target, double sign) const;
  void check_trust(double x) const;

  std::vector<double> x_, y_, m_;
  Monotone dir_ = Monotone::NonDecreasing;
  double left_exp_ = 0.0;
  double right_exp_ = 0.0;
  double trust_ = 3.0;
  double trust_left_ = 3.0;
  double uniform_step_ = 0.0;
};

/// inf{ s >= 0 : f(s) > t } with f given by the table.
double gen_inverse(const MonotoneTable& table, double t);

}  // namespace hke
