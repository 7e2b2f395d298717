#include "hke/jump_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "hke/error.hpp"
#include "hke/philox.hpp"
#include "hke/quadrature.hpp"

namespace hke {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn10 = 2.302585092994045684;
// Uniforms are >= 2^-54, so T never has to drop further than e^-38.
constexpr double kTailDepth = 40.0;
constexpr int kTailPerDecade = 32;
constexpr double kLilStart = 8.0;

double log_tail_at(const ScaleFunction& psi, double u) {
  const auto h = quad::integrate_half_line([&psi](double v) { return -psi.log_value(v); }, u,
                                           quad::Side::Right, psi.log_breaks());
  if (!h.value) {
    throw Error(ErrorKind::IntegrabilityViolation,
                "int_r^inf ds/(s psi(s)) diverges for " + psi.describe());
  }
  return std::log(*h.value);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::size_t checkpoint_index(const SimRun& run, double t) {
  const auto& cps = run.config.checkpoints;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (std::abs(cps[i] - t) <= 1e-12 * std::max(1.0, t)) return i;
  }
  throw Error(ErrorKind::CheckpointMissing, "t = " + std::to_string(t) + " is not a checkpoint");
}

double norm_at(const SimRun& run, const PathResult& p, std::size_t cp) {
  const int d = run.config.d;
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double v = p.positions[cp * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
    s += v * v;
  }
  return std::sqrt(s);
}

MCEstimate mean_estimate(const std::vector<double>& v, EstimateMethod method) {
  MCEstimate e;
  e.n = v.size();
  e.method = method;
  if (v.empty()) return e;
  const double n = static_cast<double>(v.size());
  e.value = pairwise_sum(v.data(), v.size()) / n;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - e.value) * (v[i] - e.value);
  const double var = v.size() > 1 ? pairwise_sum(dev.data(), dev.size()) / (n - 1.0) : 0.0;
  e.std_error = std::sqrt(var / n);
  return e;
}

}  // namespace

double sphere_area(int d) {
  return 2.0 * std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0);
}

double JumpSampler::radius(double u) const {
  if (u >= 1.0) return eps;
  const double x = log_tail.log_solve_decreasing(std::log(u) + log_tail_eps);
  return std::max(eps, std::exp(x));
}

double sample_jump_radius(const JumpSampler& s, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw Error(ErrorKind::OutOfRange, "u must lie in (0, 1]");
  if (!(s.lambda_eps > 0.0)) throw Error(ErrorKind::OutOfRange, "sampler has no jumps");
  return s.radius(u);
}

JumpSampler build_sampler(const ScaleFunction& psi, int d, double eps, bool compensate_small) {
  if (d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::ConfigInvalid, "eps must be > 0");
  JumpSampler s;
  s.d = d;
  s.eps = eps;
  s.compensate_small = compensate_small;
  const double c0 = sphere_area(d);
  const double ue = std::log(eps);
  const auto& breaks = psi.log_breaks();

  const auto head = quad::integrate_half_line(
      [&psi](double u) { return 2.0 * u - psi.log_value(u); }, ue, quad::Side::Left, breaks);
  if (!head.value) {
    throw Error(ErrorKind::IntegrabilityViolation,
                "int_0^eps s/psi(s) ds diverges for " + psi.describe());
  }
  s.sigma2_eps = c0 / d * *head.value;

  // Find how far T has to be tabulated, then accumulate it from the top down
  // so that every node value is a sum of positive pieces.
  s.log_tail_eps = log_tail_at(psi, ue);
  double top = ue;
  do {
    top += kLn10;
    if (top - ue > 200.0 * kLn10) {
      throw Error(ErrorKind::QuadratureFailure, "tail of the Levy measure decays too slowly");
    }
  } while (log_tail_at(psi, top) > s.log_tail_eps - kTailDepth);
  const auto n = static_cast<std::size_t>(std::round((top - ue) / kLn10 * kTailPerDecade));
  std::vector<double> x(n + 1), y(n + 1), m(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    x[i] = ue + (top - ue) * static_cast<double>(i) / static_cast<double>(n);
  }
  const auto inv_psi = [&psi](double u) { return std::exp(-psi.log_value(u)); };
  double tail = std::exp(log_tail_at(psi, top));
  y[n] = std::log(tail);
  for (std::size_t i = n; i-- > 0;) {
    tail += quad::integrate_split(inv_psi, x[i], x[i + 1], breaks, 1e-12).value;
    y[i] = std::log(tail);
  }
  s.log_tail_eps = y[0];
  for (std::size_t i = 0; i <= n; ++i) m[i] = -std::exp(-psi.log_value(x[i]) - y[i]);
  s.log_tail = MonotoneTable(std::move(x), std::move(y), std::move(m), Monotone::NonIncreasing,
                             ExponentClamp{-kInf, 0.0}, ExponentClamp{-kInf, 0.0});
  s.lambda_eps = c0 * std::exp(s.log_tail_eps);
  return s;
}

JumpSampler degenerate_sampler(int d) {
  JumpSampler s;
  s.d = d;
  s.compensate_small = false;
  return s;
}

double choose_eps(const ScaleFunction& psi, int d, double horizon, double max_jumps) {
  const double c0 = sphere_area(d);
  double chosen = 0.5;
  for (int k = 0; k <= 64; ++k) {
    const double eps = 0.5 * std::pow(10.0, -k / 8.0);
    if (c0 * std::exp(log_tail_at(psi, std::log(eps))) * horizon > max_jumps) break;
    chosen = eps;
  }
  return chosen;
}

void SimConfig::validate() const {
  if (d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  if (n_paths < 1) throw Error(ErrorKind::ConfigInvalid, "n_paths must be >= 1");
  if (!(horizon > 0.0)) throw Error(ErrorKind::ConfigInvalid, "horizon must be > 0");
  if (eps >= 1.0) throw Error(ErrorKind::ConfigInvalid, "eps must be < 1");
  if (!(dt_bridge > 0.0)) throw Error(ErrorKind::ConfigInvalid, "dt_bridge must be > 0");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end()) {
    throw Error(ErrorKind::ConfigInvalid, "checkpoints must be strictly increasing");
  }
  if (!checkpoints.empty() && (checkpoints.front() <= 0.0 || checkpoints.back() > horizon)) {
    throw Error(ErrorKind::ConfigInvalid, "checkpoints must lie in (0, horizon]");
  }
  for (double r : exit_radii) {
    if (!(r > 0.0)) throw Error(ErrorKind::ConfigInvalid, "exit radii must be > 0");
  }
  for (double r : occupation_radii) {
    if (!(r >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "occupation radii must be >= 0");
  }
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"kernel", c.kernel},
       {"no_jumps", c.no_jumps},
       {"d", c.d},
       {"eps", c.eps},
       {"horizon", c.horizon},
       {"n_paths", c.n_paths},
       {"base_seed", c.base_seed},
       {"dt_bridge", c.dt_bridge},
       {"compensate_small", c.compensate_small},
       {"checkpoints", c.checkpoints},
       {"exit_radii", c.exit_radii},
       {"occupation_radii", c.occupation_radii},
       {"lil", c.lil},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  try {
    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      if (k.is_string()) {
        const auto name = k.get<std::string>();
        if (name == "zero") {
          c.no_jumps = true;
        } else {
          c.kernel = parse_catalog(name);
        }
      } else {
        c.kernel = k.get<ScaleSpec>();
      }
    }
    c.no_jumps = j.value("no_jumps", c.no_jumps);
    c.d = j.value("d", c.d);
    c.eps = j.value("eps", c.eps);
    c.horizon = j.value("horizon", c.horizon);
    c.n_paths = j.value("n_paths", c.n_paths);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.dt_bridge = j.value("dt_bridge", c.dt_bridge);
    c.compensate_small = j.value("compensate_small", c.compensate_small);
    c.checkpoints = j.value("checkpoints", c.checkpoints);
    c.exit_radii = j.value("exit_radii", c.exit_radii);
    c.occupation_radii = j.value("occupation_radii", c.occupation_radii);
    c.lil = j.value("lil", c.lil);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("bad sim config: ") + e.what());
  }
}

PathResult simulate_path(const JumpSampler& s, const SimConfig& c, std::uint64_t path_id) {
  const int d = c.d;
  const auto ud = static_cast<std::size_t>(d);
  PathRng rng(c.base_seed, path_id);
  PathResult out;
  const auto& cps = c.checkpoints;
  out.positions.assign(cps.size() * ud, 0.0);
  out.lil.assign(cps.size(), 0.0);
  out.first_exit.assign(c.exit_radii.size(), kInf);
  out.exit_on_lattice.assign(c.exit_radii.size(), 0);
  out.occupation.assign(c.occupation_radii.size(), 0.0);

  const bool diffuse = s.compensate_small && s.sigma2_eps > 0.0;
  const bool need_lattice =
      diffuse && (!c.exit_radii.empty() || !c.occupation_radii.empty() || c.lil);
  const double end = c.horizon;

  std::vector<double> x(ud, 0.0);
  std::vector<double> dir(ud, 0.0);
  double t = 0.0;
  double next_jump = s.lambda_eps > 0.0 ? rng.exponential(s.lambda_eps) : kInf;
  std::uint64_t lattice_k = 1;
  double next_lat = need_lattice ? c.dt_bridge : kInf;
  std::size_t ci = 0;
  std::size_t exits_left = c.exit_radii.size();
  double lil_max = 0.0;

  const auto norm2 = [&] {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return r2;
  };
  const auto update_lil = [&] {
    if (c.lil && t >= kLilStart) {
      lil_max = std::max(lil_max, std::sqrt(norm2() / (t * std::log(std::log(t)))));
    }
  };

  while (true) {
    const double t_cp = ci < cps.size() ? cps[ci] : kInf;
    const double te = std::min({next_jump, next_lat, t_cp, end});

    if (!c.occupation_radii.empty()) {
      const double r2 = norm2();
      for (std::size_t k = 0; k < c.occupation_radii.size(); ++k) {
        const double rad = c.occupation_radii[k];
        if (r2 < rad * rad) out.occupation[k] += te - t;
      }
    }
    if (diffuse) {
      const double sd = std::sqrt(s.sigma2_eps * (te - t));
      for (auto& v : x) v += sd * rng.normal();
    }
    t = te;
    update_lil();

    if (te == t_cp) {
      std::copy(x.begin(), x.end(), out.positions.begin() + static_cast<std::ptrdiff_t>(ci * ud));
      out.lil[ci] = lil_max;
      ++ci;
    }
    bool jumped = false;
    if (te == next_jump) {
      const double radius = s.radius(rng.uniform());
      if (d == 1) {
        dir[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      } else if (d == 2) {
        const double a = 2.0 * M_PI * rng.uniform();
        dir[0] = std::cos(a);
        dir[1] = std::sin(a);
      } else {
        double n2 = 0.0;
        for (auto& v : dir) {
          v = rng.normal();
          n2 += v * v;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& v : dir) v *= inv;
      }
      for (std::size_t i = 0; i < ud; ++i) x[i] += radius * dir[i];
      ++out.jumps;
      jumped = true;
      next_jump = te + rng.exponential(s.lambda_eps);
      update_lil();
    }
    if (te == next_lat) {
      ++lattice_k;
      next_lat = static_cast<double>(lattice_k) * c.dt_bridge;
    }
    if (exits_left > 0) {
      const double r2 = norm2();
      for (std::size_t k = 0; k < c.exit_radii.size(); ++k) {
        const double rad = c.exit_radii[k];
        if (out.first_exit[k] == kInf && r2 > rad * rad) {
          out.first_exit[k] = t;
          out.exit_on_lattice[k] = jumped ? 0 : 1;
          --exits_left;
        }
      }
    }
    if (te >= end) break;
    if (ci == cps.size() && exits_left == 0 && c.occupation_radii.empty() && !c.lil) break;
  }
  return out;
}

SimRun run_simulation(const SimConfig& config) {
  SimRun run;
  run.config = config;
  auto& c = run.config;
  if (!c.checkpoints.empty() && c.checkpoints.back() > c.horizon) c.horizon = c.checkpoints.back();
  if (!c.occupation_radii.empty() &&
      (c.checkpoints.empty() || c.checkpoints.back() < c.horizon)) {
    c.checkpoints.push_back(c.horizon);
  }
  c.validate();
  if (c.no_jumps) {
    run.sampler = degenerate_sampler(c.d);
  } else {
    const auto psi = make_scale(c.kernel);
    if (!(c.eps > 0.0)) c.eps = choose_eps(psi, c.d, c.horizon);
    run.sampler = build_sampler(psi, c.d, c.eps, c.compensate_small);
  }
  run.end_time = c.horizon;
  run.paths.resize(c.n_paths);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(c.threads, static_cast<unsigned>(c.n_paths)));
  const auto work = [&](unsigned w) {
    for (std::size_t i = w; i < c.n_paths; i += workers) {
      run.paths[i] = simulate_path(run.sampler, c, i);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  return run;
}

std::string to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::HitFraction: return "hit_fraction";
    case EstimateMethod::TimeAverage: return "time_average";
    case EstimateMethod::HistogramCell: return "histogram_cell";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const MCEstimate& e) {
  j = {{"value", e.value}, {"stderr", e.std_error}, {"n", e.n}, {"method", to_string(e.method)}};
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

std::vector<MCEstimate> estimate_tail(const SimRun& run, double t,
                                      const std::vector<double>& radii) {
  const auto cp = checkpoint_index(run, t);
  const double n = static_cast<double>(run.paths.size());
  std::vector<double> norms;
  norms.reserve(run.paths.size());
  for (const auto& p : run.paths) norms.push_back(norm_at(run, p, cp));
  std::vector<MCEstimate> out;
  for (double r : radii) {
    std::size_t hits = 0;
    for (double v : norms) hits += v > r ? 1 : 0;
    MCEstimate e;
    e.n = run.paths.size();
    e.method = EstimateMethod::HitFraction;
    e.value = static_cast<double>(hits) / n;
    // Half-width of the one-sigma Wilson interval.
    e.std_error = std::sqrt(e.value * (1.0 - e.value) / n + 1.0 / (4.0 * n * n)) / (1.0 + 1.0 / n);
    out.push_back(e);
  }
  return out;
}

std::vector<ExitEstimate> estimate_exit_time(const SimRun& run) {
  const auto& c = run.config;
  std::vector<ExitEstimate> out;
  for (std::size_t k = 0; k < c.exit_radii.size(); ++k) {
    std::vector<double> tau;
    tau.reserve(run.paths.size());
    std::size_t censored = 0;
    for (const auto& p : run.paths) {
      double v = p.first_exit[k];
      if (v == kInf) {
        ++censored;
        v = run.end_time;
      } else if (p.exit_on_lattice[k]) {
        v = std::max(0.0, v - 0.5 * c.dt_bridge);
      }
      tau.push_back(v);
    }
    ExitEstimate e;
    e.radius = c.exit_radii[k];
    e.mean = mean_estimate(tau, EstimateMethod::TimeAverage);
    e.censored_fraction = static_cast<double>(censored) / static_cast<double>(run.paths.size());
    if (e.censored_fraction >= 0.05) {
      throw Error(ErrorKind::HorizonTooShort,
                  std::to_string(100.0 * e.censored_fraction) + "% of paths never leave B(0, " +
                      std::to_string(e.radius) + ") before the horizon");
    }
    out.push_back(e);
  }
  return out;
}

double shell_volume(int d, double r1, double r2) {
  return sphere_area(d) / d * (std::pow(r2, d) - std::pow(r1, d));
}

std::vector<double> log_edges(double r_lo, double r_hi, std::size_t bins) {
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    e[i] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / static_cast<double>(bins));
  }
  e.back() = r_hi;
  return e;
}

RadialHistogram estimate_density_radial(const SimRun& run, double t,
                                        const std::vector<double>& edges) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) || !(edges.front() >= 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "histogram edges must be increasing and >= 0");
  }
  const auto cp = checkpoint_index(run, t);
  RadialHistogram h;
  h.t = t;
  h.edges = edges;
  h.counts.assign(edges.size() - 1, 0);
  std::size_t below = 0;
  std::size_t above = 0;
  for (const auto& p : run.paths) {
    const double v = norm_at(run, p, cp);
    if (v < edges.front()) {
      ++below;
    } else if (v >= edges.back()) {
      ++above;
    } else {
      const auto it = std::upper_bound(edges.begin(), edges.end(), v);
      ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }
  const double n = static_cast<double>(run.paths.size());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double vol = shell_volume(run.config.d, edges[i], edges[i + 1]);
    const double p = static_cast<double>(h.counts[i]) / n;
    MCEstimate e;
    e.n = run.paths.size();
    e.method = EstimateMethod::HistogramCell;
    e.value = p / vol;
    e.std_error = std::sqrt(p * (1.0 - p) / n) / vol;
    h.density.push_back(e);
  }
  h.mass_below = static_cast<double>(below) / n;
  h.mass_above = static_cast<double>(above) / n;
  return h;
}

std::vector<OccupationEstimate> occupation_time(const SimRun& run, const DerivedScales& ds) {
  const auto& c = run.config;
  const double bound = std::min(ds.psi_cert.beta_upper, 2.0);
  if (!(c.d > bound)) {
    throw Error(ErrorKind::NotTransient, "occupation needs d > beta_2 ^ 2 = " +
                                             std::to_string(bound));
  }
  // int_H^inf (Phi^{-1}(H)/Phi^{-1}(s))^d ds: numerically over the Phi table,
  // then the power-law continuation past it in closed form.
  const double H = run.end_time;
  const double e = ds.phi.right_exponent();
  const double q = c.d / e;
  if (!(q > 1.0)) {
    throw Error(ErrorKind::NotTransient, "Phi^{-1}(s)^{-d} is not integrable at infinity");
  }
  const double t_top = std::exp(ds.phi.log_values().back());
  const double log_pinv_h = std::log(ds.phi_inv(H));
  double tail_integral = 0.0;
  if (H < t_top) {
    const auto f = [&](double v) {
      return std::exp(v + c.d * (log_pinv_h - std::log(ds.phi_inv(std::exp(v)))));
    };
    tail_integral += quad::integrate(f, std::log(H), std::log(t_top), 1e-10).value;
    tail_integral += std::exp(c.d * (log_pinv_h - ds.phi.log_r_back())) * t_top / (q - 1.0);
  } else {
    tail_integral = H / (q - 1.0);
  }

  const std::size_t cp = checkpoint_index(run, H);
  std::vector<OccupationEstimate> out;
  for (std::size_t k = 0; k < c.occupation_radii.size(); ++k) {
    const double rad = c.occupation_radii[k];
    // P(|X_H| < r) from the wider ball of radius Phi^{-1}(H)/4, where the
    // density is close to flat, scaled back by volume.
    const double wide = std::max(rad, 0.25 * ds.phi_inv(H));
    std::vector<double> occ;
    std::size_t inside = 0;
    for (const auto& p : run.paths) {
      occ.push_back(p.occupation[k]);
      inside += norm_at(run, p, cp) < wide ? 1 : 0;
    }
    const double p_inside = static_cast<double>(inside) / static_cast<double>(run.paths.size()) *
                            std::pow(rad / wide, c.d);
    OccupationEstimate o;
    o.radius = rad;
    o.simulated = mean_estimate(occ, EstimateMethod::TimeAverage);
    o.tail_correction = p_inside * tail_integral;
    o.total = o.simulated;
    o.total.value += o.tail_correction;
    out.push_back(o);
  }
  return out;
}

std::vector<double> dyadic_checkpoints(int k_max) {
  std::vector<double> t;
  for (int k = 3; k <= k_max; ++k) t.push_back(std::ldexp(1.0, k));
  return t;
}

std::vector<LilRow> lil_summary(const SimRun& run) {
  std::vector<LilRow> rows;
  const auto& cps = run.config.checkpoints;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const double lk = std::log2(cps[i]);
    if (cps[i] < kLilStart || std::abs(lk - std::round(lk)) > 1e-12) continue;
    std::vector<double> v;
    v.reserve(run.paths.size());
    for (const auto& p : run.paths) v.push_back(p.lil[i]);
    LilRow r;
    r.k = static_cast<int>(std::round(lk));
    r.t = cps[i];
    r.median = quantile(v, 0.5);
    r.q25 = quantile(v, 0.25);
    r.q75 = quantile(v, 0.75);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hke
