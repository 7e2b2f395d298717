#include "hke/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "hke/error.hpp"
#include "hke/scaling.hpp"

namespace hke {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

const std::vector<std::string>& catalog_kernels() {
  static const std::vector<std::string> names{
      "stable:0.5",  "stable:1",   "stable:1.2",          "stable:1.5",
      "stable:1.9",  "logzero:2",  "logzero:1.5",         "loginf:0.5",
      "loginf:1",    "loginf:2",   "piecewise:1.5,2.5@1", "piecewise:1.2,1.8@1"};
  return names;
}

void to_json(nlohmann::json& j, const SandwichResult& s) {
  j = {{"fitted_c_low", s.fitted_c_low}, {"fitted_c_up", s.fitted_c_up},
       {"n_points", s.n_points},         {"worst_point", {s.worst_t, s.worst_r}},
       {"threshold", s.threshold},       {"pass", s.pass}};
}

SandwichResult sandwich_check(const std::vector<SandwichSample>& samples, const EnvelopeFn& lower,
                              const EnvelopeFn& upper, double slack_sigma, double threshold) {
  SandwichResult out;
  out.threshold = threshold;
  out.n_points = samples.size();
  double worst = 1.0;
  for (const auto& s : samples) {
    const double slack = slack_sigma * s.empirical.std_error;
    const double up = upper(s.t, s.r);
    const double lo = lower(s.t, s.r);
    const double c_up = up > 0.0 ? (s.empirical.value - slack) / up : kInf;
    const double below = s.empirical.value + slack;
    const double c_low = lo <= 0.0 ? 1.0 : (below > 0.0 ? lo / below : kInf);
    out.fitted_c_up = std::max(out.fitted_c_up, c_up);
    out.fitted_c_low = std::max(out.fitted_c_low, c_low);
    if (std::max(c_up, c_low) > worst) {
      worst = std::max(c_up, c_low);
      out.worst_t = s.t;
      out.worst_r = s.r;
    }
  }
  out.pass = out.fitted_c_low <= threshold && out.fitted_c_up <= threshold;
  return out;
}

double shell_average(const std::function<double(double)>& f, int d, double r1, double r2) {
  constexpr int kNodes = 32;
  if (!(r2 > r1) || r1 < 0.0) throw Error(ErrorKind::ConfigInvalid, "shell needs 0 <= r1 < r2");
  // Midpoint rule in r^d, where the shell measure is uniform.
  const double v1 = std::pow(r1, d);
  const double v2 = std::pow(r2, d);
  double sum = 0.0;
  for (int i = 0; i < kNodes; ++i) {
    const double v = v1 + (v2 - v1) * (i + 0.5) / kNodes;
    sum += f(std::pow(v, 1.0 / d));
  }
  return sum / kNodes;
}

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

LabConfig parse_config(const nlohmann::json& j) {
  LabConfig c;
  if (!j.is_object()) throw Error(ErrorKind::ConfigInvalid, "config must be a JSON object");
  try {
    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      c.kernel = k.is_string() ? k.get<std::string>() : k.dump();
    }
    read_opt(j, "d", c.d);
    if (j.contains("envelope_params")) c.envelope = j.at("envelope_params").get<EnvelopeParams>();
    if (j.contains("sim")) c.sim = j.at("sim").get<SimConfig>();
    if (j.contains("verify")) {
      const auto& v = j.at("verify");
      read_opt(v, "preset", c.verify.preset);
      read_opt(v, "density_threshold", c.verify.density_threshold);
      read_opt(v, "exit_threshold", c.verify.exit_threshold);
      read_opt(v, "path_scale", c.verify.path_scale);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("bad config: ") + e.what());
  }
  return c;
}

LabConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot open config " + path);
  try {
    return parse_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("config is not JSON: ") + e.what());
  }
}

nlohmann::json to_json(const LabConfig& c) {
  nlohmann::json kernel = c.kernel;
  if (!c.kernel.empty() && c.kernel.front() == '{') kernel = nlohmann::json::parse(c.kernel);
  return {{"kernel", kernel},
          {"d", c.d},
          {"envelope_params", c.envelope},
          {"sim", c.sim},
          {"verify",
           {{"preset", c.verify.preset},
            {"density_threshold", c.verify.density_threshold},
            {"exit_threshold", c.verify.exit_threshold},
            {"path_scale", c.verify.path_scale}}}};
}

ScaleSpec kernel_spec(const LabConfig& c) {
  if (!c.kernel.empty() && c.kernel.front() == '{') {
    try {
      return nlohmann::json::parse(c.kernel).get<ScaleSpec>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::SpecInvalid, std::string("bad kernel object: ") + e.what());
    }
  }
  if (c.kernel == "zero") throw Error(ErrorKind::SpecInvalid, "the zero kernel has no scale function");
  return parse_catalog(c.kernel);
}

void sync_config(LabConfig& c) {
  if (c.d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  c.envelope.d = c.d;
  c.sim.d = c.d;
  c.sim.no_jumps = c.kernel == "zero";
  if (!c.sim.no_jumps) c.sim.kernel = kernel_spec(c);
}

nlohmann::json analyze(const ScaleSpec& kernel, int d, double r_lo, double r_hi,
                       std::size_t calculus_samples) {
  const auto psi = make_scale(kernel);
  nlohmann::json out;
  out["schema"] = kSchema;
  out["kernel"] = psi.describe();
  out["d"] = d;

  const auto integ = check_integrability(psi);
  nlohmann::json ij = {{"near_zero_finite", integ.near_zero_finite},
                       {"global_finite", integ.global_finite}};
  if (integ.near_zero) ij["int_0_1"] = *integ.near_zero;
  if (integ.at_infty) ij["int_1_inf"] = *integ.at_infty;
  out["integrability"] = ij;

  GridOptions grid;
  grid.r_lo = r_lo;
  grid.r_hi = r_hi;
  const auto ds = build_derived(psi, d, 1.0, grid);
  out["certificates"] = {{"psi", ds.psi_cert}, {"phi", ds.phi_cert}};
  if (ds.phi_cert_zero) out["certificates"]["phi_near_zero"] = *ds.phi_cert_zero;
  if (ds.phi_cert_infty) out["certificates"]["phi_near_infinity"] = *ds.phi_cert_infty;

  nlohmann::json comp;
  if (r_lo < ds.a) comp["near_zero"] = comparability_report(ds, r_lo, ds.a);
  if (r_hi > ds.a) comp["near_infinity"] = comparability_report(ds, ds.a, r_hi);
  out["comparability"] = comp;

  nlohmann::json k = {{"K_available", ds.K.has_value()}, {"K_inf_available", ds.K_inf.has_value()}};
  if (ds.K_cert) k["delta_K"] = *ds.K_cert;
  if (ds.K_inf_cert) k["delta_K_inf"] = *ds.K_inf_cert;
  if (!ds.K) k["K_missing"] = ds.K_missing_reason;
  if (!ds.K_inf) k["K_inf_missing"] = ds.K_inf_missing_reason;
  if (ds.K) k["K_valid_below"] = ds.K_valid_below;
  out["delta_certificate"] = k;

  const auto calc = check_scale_calculus(ds, calculus_samples);
  out["calculus"] = calc;
  out["calculus_pass"] = calc.total_violations() == 0;
  return out;
}

void write_checkpoints_csv(const SimRun& run, std::ostream& os) {
  const auto d = static_cast<std::size_t>(run.config.d);
  os << "path,t";
  for (std::size_t k = 0; k < d; ++k) os << ",x" << k;
  os << '\n' << std::setprecision(17);
  const auto& cps = run.config.checkpoints;
  for (std::size_t p = 0; p < run.paths.size(); ++p) {
    for (std::size_t i = 0; i < cps.size(); ++i) {
      os << p << ',' << cps[i];
      for (std::size_t k = 0; k < d; ++k) os << ',' << run.paths[p].positions[i * d + k];
      os << '\n';
    }
  }
}

void write_tails_csv(const SimRun& run, const std::vector<double>& radii, std::ostream& os) {
  os << "t,r,tail,std_error,n\n" << std::setprecision(12);
  for (double t : run.config.checkpoints) {
    const auto est = estimate_tail(run, t, radii);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      os << t << ',' << radii[i] << ',' << est[i].value << ',' << est[i].std_error << ','
         << est[i].n << '\n';
    }
  }
}

void write_exits_csv(const std::vector<ExitEstimate>& exits, std::ostream& os) {
  os << "r,mean_exit_time,std_error,n,censored_fraction\n" << std::setprecision(12);
  for (const auto& e : exits) {
    os << e.radius << ',' << e.mean.value << ',' << e.mean.std_error << ',' << e.mean.n << ','
       << e.censored_fraction << '\n';
  }
}

void write_lil_csv(const std::vector<LilRow>& rows, std::ostream& os) {
  os << "k,t,median_stat,q25,q75\n" << std::setprecision(12);
  for (const auto& r : rows) {
    os << r.k << ',' << r.t << ',' << r.median << ',' << r.q25 << ',' << r.q75 << '\n';
  }
}

}  // namespace hke
