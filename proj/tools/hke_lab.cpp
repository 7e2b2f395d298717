#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "acceptance.hpp"
#include "hke/error.hpp"
#include "hke/report.hpp"

namespace fs = std::filesystem;
using namespace hke;

namespace {

struct Common {
  std::string kernel;
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<unsigned> threads;
  std::optional<int> d;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--kernel", c.kernel, "catalog kernel, e.g. stable:1.5, loginf:2, zero");
  app->add_option("--config", c.config, "JSON config {kernel, d, envelope_params, sim, verify}");
  app->add_option("--out-dir", c.out_dir, "directory for CSV and report.json (stdout if unset)");
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--paths", c.paths, "number of simulated paths");
  app->add_option("--threads", c.threads, "worker threads");
  app->add_option("-d,--dim", c.d, "dimension");
}

LabConfig resolve(const Common& c) {
  LabConfig cfg = c.config.empty() ? LabConfig{} : load_config(c.config);
  if (!c.kernel.empty()) cfg.kernel = c.kernel;
  if (c.d) cfg.d = *c.d;
  if (c.seed) cfg.sim.base_seed = *c.seed;
  if (c.paths) cfg.sim.n_paths = *c.paths;
  if (c.threads) cfg.sim.threads = *c.threads;
  sync_config(cfg);
  return cfg;
}

// Writes `name` under the output directory, or to stdout without one.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out_dir.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(c.out_dir);
  std::ofstream out(fs::path(c.out_dir) / name, std::ios::binary);
  if (!out) throw Error(ErrorKind::ConfigInvalid, "cannot write " + name + " in " + c.out_dir);
  out << text;
}

void emit_report(const Common& c, nlohmann::json report) {
  report["schema"] = kSchema;
  const std::string text = report.dump(2) + "\n";
  if (c.out_dir.empty()) {
    std::cout << text;
  } else {
    emit(c, "report.json", text);
  }
}

std::vector<double> default_ts(const SimConfig& sim) {
  return sim.checkpoints.empty() ? std::vector<double>{0.5, 1.0, 2.0} : sim.checkpoints;
}

int cmd_analyze(const Common& c, double r_lo, double r_hi) {
  const auto cfg = resolve(c);
  emit_report(c, analyze(kernel_spec(cfg), cfg.d, r_lo, r_hi));
  return 0;
}

int cmd_envelope(const Common& c, std::vector<double> ts, const std::vector<double>& rs,
                 const std::string& variant) {
  const auto cfg = resolve(c);
  const auto ds = build_derived(make_scale(kernel_spec(cfg)), cfg.d);
  if (ts.empty()) ts = default_ts(cfg.sim);
  std::ostringstream os;
  write_envelope_csv(ds, cfg.envelope, ts, rs, variant_from_string(variant), os);
  emit(c, "envelope.csv", os.str());
  if (!c.out_dir.empty()) emit_report(c, {{"command", "envelope"}, {"config", to_json(cfg)}});
  return 0;
}

int cmd_simulate(const Common& c, const std::vector<double>& radii) {
  auto cfg = resolve(c);
  if (cfg.sim.checkpoints.empty()) cfg.sim.checkpoints = {std::min(1.0, cfg.sim.horizon)};
  cfg.sim.horizon = std::max(cfg.sim.horizon, cfg.sim.checkpoints.back());
  const auto run = run_simulation(cfg.sim);

  std::ostringstream cps;
  write_checkpoints_csv(run, cps);
  std::ostringstream tails;
  write_tails_csv(run, radii, tails);
  nlohmann::json report = {{"command", "simulate"},
                           {"config", to_json(cfg)},
                           {"eps", run.sampler.eps},
                           {"lambda_eps", run.sampler.lambda_eps},
                           {"sigma2_eps", run.sampler.sigma2_eps},
                           {"expected_jumps_per_path", run.sampler.lambda_eps * run.end_time}};
  if (c.out_dir.empty()) {
    std::cout << tails.str();
    return 0;
  }
  emit(c, "checkpoints.csv", cps.str());
  emit(c, "tails.csv", tails.str());
  if (!cfg.sim.exit_radii.empty()) {
    std::ostringstream exits;
    write_exits_csv(estimate_exit_time(run), exits);
    emit(c, "exits.csv", exits.str());
  }
  if (!cfg.sim.occupation_radii.empty()) {
    const auto ds = build_derived(make_scale(cfg.sim.kernel), cfg.d);
    nlohmann::json occ = nlohmann::json::array();
    for (const auto& o : occupation_time(run, ds)) {
      occ.push_back({{"radius", o.radius},
                     {"simulated", o.simulated},
                     {"tail_correction", o.tail_correction},
                     {"total", o.total}});
    }
    report["occupation"] = occ;
  }
  emit_report(c, report);
  return 0;
}

int cmd_lil(const Common& c, int k_max) {
  auto cfg = resolve(c);
  cfg.sim.lil = true;
  cfg.sim.checkpoints = dyadic_checkpoints(k_max);
  cfg.sim.horizon = cfg.sim.checkpoints.back();
  if (!(cfg.sim.eps > 0.0) && !cfg.sim.no_jumps) cfg.sim.eps = 0.9;
  cfg.sim.dt_bridge = std::max(cfg.sim.dt_bridge, 1.0);
  std::ostringstream os;
  write_lil_csv(lil_summary(run_simulation(cfg.sim)), os);
  emit(c, "lil.csv", os.str());
  return 0;
}

int cmd_verify(const Common& c, const std::string& preset_flag, double path_scale) {
  LabConfig cfg = c.config.empty() ? LabConfig{} : load_config(c.config);
  acceptance::Options opt;
  opt.seed = c.seed.value_or(cfg.sim.base_seed);
  opt.threads = c.threads.value_or(cfg.sim.threads);
  opt.path_scale = path_scale > 0.0 ? path_scale : cfg.verify.path_scale;
  opt.density_threshold = cfg.verify.density_threshold;
  opt.exit_threshold = cfg.verify.exit_threshold;
  const std::string preset = preset_flag.empty() ? cfg.verify.preset : preset_flag;
  const auto ids = acceptance::preset_criteria(preset);

  nlohmann::json results = nlohmann::json::array();
  bool all = true;
  for (int id : ids) {
    const auto r = acceptance::run_criterion(id, opt);
    std::printf("%s\n", acceptance::format_line(r).c_str());
    std::fflush(stdout);
    results.push_back(r);
    all = all && r.pass;
  }
  if (!c.out_dir.empty()) {
    emit_report(c, {{"command", "verify"}, {"preset", preset}, {"all_pass", all},
                     {"criteria", results}});
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heat-kernel envelope lab for symmetric jump processes"};
  app.require_subcommand(1);

  Common analyze_c, envelope_c, simulate_c, verify_c, lil_c;

  auto* analyze_cmd = app.add_subcommand("analyze", "certificates, comparability and calculus checks");
  add_common(analyze_cmd, analyze_c);
  double r_lo = 1e-8;
  double r_hi = 1e8;
  analyze_cmd->add_option("--r-lo", r_lo, "lower end of the analysis range");
  analyze_cmd->add_option("--r-hi", r_hi, "upper end of the analysis range");

  auto* envelope_cmd = app.add_subcommand("envelope", "envelope CSV over a (t, r) grid");
  add_common(envelope_cmd, envelope_c);
  std::vector<double> ts;
  std::vector<double> rs{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::string variant = "auto";
  envelope_cmd->add_option("--t", ts, "times")->delimiter(',');
  envelope_cmd->add_option("--r", rs, "radii")->delimiter(',');
  envelope_cmd->add_option("--variant", variant, "K, K_inf or auto");

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo paths, tails and exit times");
  add_common(simulate_cmd, simulate_c);
  std::vector<double> radii{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  simulate_cmd->add_option("--radii", radii, "tail radii")->delimiter(',');

  auto* verify_cmd = app.add_subcommand("verify", "acceptance criteria");
  add_common(verify_cmd, verify_c);
  std::string preset;
  double path_scale = 0.0;
  verify_cmd->add_option("--preset", preset,
                         "all, quick, calculus, oracles, cauchy-oracle, sandwich, exits, green, "
                         "lil, bands or acN");
  verify_cmd->add_option("--path-scale", path_scale, "multiplies every preset path count");

  auto* lil_cmd = app.add_subcommand("lil", "median trace of the iterated-logarithm statistic");
  add_common(lil_cmd, lil_c);
  int k_max = 20;
  lil_cmd->add_option("--k-max", k_max, "last dyadic checkpoint 2^k")->check(CLI::Range(3, 40));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(analyze_c, r_lo, r_hi);
    if (*envelope_cmd) return cmd_envelope(envelope_c, ts, rs, variant);
    if (*simulate_cmd) return cmd_simulate(simulate_c, radii);
    if (*verify_cmd) return cmd_verify(verify_c, preset, path_scale);
    if (*lil_cmd) return cmd_lil(lil_c, k_max);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
