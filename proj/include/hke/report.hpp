#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hke/derived_scales.hpp"
#include "hke/envelopes.hpp"
#include "hke/jump_sim.hpp"

namespace hke {

inline constexpr const char* kSchema = "hke-lab/1";

/// Kernels every catalog-wide check runs over.
const std::vector<std::string>& catalog_kernels();

struct SandwichSample {
  double t = 0.0;
  double r = 0.0;
  MCEstimate empirical;
};

struct SandwichResult {
  double fitted_c_low = 1.0;
  double fitted_c_up = 1.0;
  std::size_t n_points = 0;
  double worst_t = 0.0;
  double worst_r = 0.0;
  double threshold = 10.0;
  bool pass = false;
};

void to_json(nlohmann::json& j, const SandwichResult& s);

using EnvelopeFn = std::function<double(double t, double r)>;

/// fitted_c_up = max (empirical - slack) / upper, fitted_c_low = max lower /
/// (empirical + slack), both clipped below at 1; slack = slack_sigma * stderr.
SandwichResult sandwich_check(const std::vector<SandwichSample>& samples, const EnvelopeFn& lower,
                              const EnvelopeFn& upper, double slack_sigma = 2.0,
                              double threshold = 10.0);

/// Mean of f over the shell r1 <= |x| < r2 in R^d.
double shell_average(const std::function<double(double)>& f, int d, double r1, double r2);

struct VerifyConfig {
  std::string preset = "all";
  double density_threshold = 10.0;
  double exit_threshold = 4.0;
  double path_scale = 1.0;  // multiplies every path count of the presets
};

struct LabConfig {
  std::string kernel = "stable:1.5";
  int d = 1;
  EnvelopeParams envelope;
  SimConfig sim;
  VerifyConfig verify;
};

/// Every field is optional. A string kernel is a catalog name ("zero" is the
/// degenerate process); an object kernel is a full ScaleSpec.
LabConfig parse_config(const nlohmann::json& j);
LabConfig load_config(const std::string& path);
nlohmann::json to_json(const LabConfig& c);

/// Applies the kernel and dimension of the config to its envelope and
/// simulation parts.
void sync_config(LabConfig& c);

ScaleSpec kernel_spec(const LabConfig& c);

/// Integrability, certificates, comparability near 0 and near infinity,
/// availability of the K tables and the scale-calculus checks.
nlohmann::json analyze(const ScaleSpec& kernel, int d, double r_lo = 1e-8, double r_hi = 1e8,
                       std::size_t calculus_samples = 10000);

void write_checkpoints_csv(const SimRun& run, std::ostream& os);
/// P(|X_t| > r) for every checkpoint and radius.
void write_tails_csv(const SimRun& run, const std::vector<double>& radii, std::ostream& os);
void write_exits_csv(const std::vector<ExitEstimate>& exits, std::ostream& os);
void write_lil_csv(const std::vector<LilRow>& rows, std::ostream& os);

}  // namespace hke
