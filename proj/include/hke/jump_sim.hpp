#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hke/derived_scales.hpp"
#include "hke/monotone_table.hpp"
#include "hke/scale_function.hpp"

namespace hke {

/// Surface area of the unit sphere in R^d.
double sphere_area(int d);

/// Jumps of size >= eps form a compound Poisson process with rate
/// lambda_eps = c0(d) T(eps), T(r) = int_r^inf ds / (s psi(s)); smaller jumps
/// are replaced by Brownian motion with variance rate sigma2_eps per
/// coordinate, (c0(d)/d) int_0^eps s/psi(s) ds.
struct JumpSampler {
  int d = 1;
  double eps = 0.0;
  bool compensate_small = true;
  double lambda_eps = 0.0;
  double sigma2_eps = 0.0;
  double log_tail_eps = 0.0;  // log T(eps)
  MonotoneTable log_tail;     // log T, non-increasing, from eps until T has dropped by e^-40

  /// R with T(R) = u T(eps).
  double radius(double u) const;
};

JumpSampler build_sampler(const ScaleFunction& psi, int d, double eps, bool compensate_small = true);
/// No jumps and no diffusion: the process stays at the origin.
JumpSampler degenerate_sampler(int d);
double sample_jump_radius(const JumpSampler& s, double u);

/// Largest eps <= 1/2 (on a 1/8-decade ladder) whose expected number of
/// jumps over `horizon` is at most `max_jumps`.
double choose_eps(const ScaleFunction& psi, int d, double horizon, double max_jumps = 1e6);

struct SimConfig {
  ScaleSpec kernel = ScaleSpec::power(1.5);
  bool no_jumps = false;  // degenerate process, ignores `kernel`
  int d = 1;
  double eps = 0.0;  // <= 0: choose_eps
  double horizon = 1.0;
  std::size_t n_paths = 1000;
  std::uint64_t base_seed = 1;
  double dt_bridge = 0.01;
  bool compensate_small = true;
  std::vector<double> checkpoints;
  std::vector<double> exit_radii;
  std::vector<double> occupation_radii;
  bool lil = false;  // running max of |X_s| / sqrt(s log log s) over s >= 8
  unsigned threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

struct PathResult {
  std::vector<double> positions;   // checkpoint-major, d coordinates each
  std::vector<double> first_exit;  // per exit radius; +inf if not exited by the horizon
  std::vector<char> exit_on_lattice;
  std::vector<double> occupation;  // per occupation radius, time in the open ball
  std::vector<double> lil;         // per checkpoint, running max statistic
  std::uint64_t jumps = 0;
};

PathResult simulate_path(const JumpSampler& s, const SimConfig& c, std::uint64_t path_id);

struct SimRun {
  SimConfig config;
  JumpSampler sampler;
  std::vector<PathResult> paths;
  double end_time = 0.0;
};

/// Builds the sampler and runs every path; the result does not depend on the
/// number of threads.
SimRun run_simulation(const SimConfig& config);

enum class EstimateMethod { HitFraction, TimeAverage, HistogramCell };

std::string to_string(EstimateMethod m);

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  EstimateMethod method = EstimateMethod::HitFraction;
};

void to_json(nlohmann::json& j, const MCEstimate& e);

/// Pairwise (cascade) summation; fixed association for a given length.
double pairwise_sum(const double* x, std::size_t n);

/// Hit fractions P(|X_t| > r) with the Wilson-interval standard error.
std::vector<MCEstimate> estimate_tail(const SimRun& run, double t, const std::vector<double>& radii);

struct ExitEstimate {
  double radius = 0.0;
  MCEstimate mean;
  double censored_fraction = 0.0;
};

/// Mean first exit time from B(0, r). Exits seen on the bridge lattice are
/// moved back by dt_bridge / 2; censored paths enter at the horizon.
/// HorizonTooShort when 5% or more are censored.
std::vector<ExitEstimate> estimate_exit_time(const SimRun& run);

struct RadialHistogram {
  double t = 0.0;
  std::vector<double> edges;
  std::vector<MCEstimate> density;  // per unit volume of the shell
  std::vector<std::size_t> counts;
  double mass_below = 0.0;  // fraction with |X_t| < edges.front()
  double mass_above = 0.0;  // fraction with |X_t| >= edges.back()
};

double shell_volume(int d, double r1, double r2);

RadialHistogram estimate_density_radial(const SimRun& run, double t,
                                        const std::vector<double>& edges);

/// Log-spaced edges.
std::vector<double> log_edges(double r_lo, double r_hi, std::size_t bins);

struct OccupationEstimate {
  double radius = 0.0;
  MCEstimate simulated;       // time in B(0, r) up to the horizon
  double tail_correction = 0.0;  // estimated time spent there after the horizon
  MCEstimate total;
};

/// Occupation of B(0, r). The post-horizon part is P(|X_H| < r), read off the
/// ball of radius max(r, Phi^{-1}(H)/4) and scaled by volume, times
/// int_H^inf (Phi^{-1}(H)/Phi^{-1}(s))^d ds, the near-diagonal decay of the
/// heat kernel. NotTransient unless d > beta_2 ^ 2 and that integral converges.
std::vector<OccupationEstimate> occupation_time(const SimRun& run, const DerivedScales& ds);

struct LilRow {
  int k = 0;
  double t = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

/// Dyadic checkpoints 2^k, k = 3..k_max.
std::vector<double> dyadic_checkpoints(int k_max);
/// Quantiles over paths of the running statistic at each dyadic checkpoint.
std::vector<LilRow> lil_summary(const SimRun& run);

}  // namespace hke
