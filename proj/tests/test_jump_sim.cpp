#include <doctest.h>

#include <cmath>

#include "hke/error.hpp"
#include "hke/jump_sim.hpp"
#include "hke/philox.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hke;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("path streams are reproducible and distinct") {
  PathRng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    differs |= u != c.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(differs);
  CHECK(sum / 10000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("sampler intensities") {
  const auto cauchy = build_sampler(make_scale(ScaleSpec::power(1.0)), 1, 0.01);
  CHECK(cauchy.lambda_eps == doctest::Approx(200.0).epsilon(1e-8));
  CHECK(cauchy.sigma2_eps == doctest::Approx(0.02).epsilon(1e-8));
  const auto s2 = build_sampler(make_scale(ScaleSpec::power(1.5)), 2, 0.1);
  CHECK(s2.lambda_eps == doctest::Approx(2.0 * M_PI * 2.0 / 3.0 * std::pow(10.0, 1.5)).epsilon(1e-8));
  CHECK(s2.lambda_eps == doctest::Approx(132.4).epsilon(1e-3));
  CHECK_THROWS_AS(build_sampler(make_scale(ScaleSpec::power(2.0)), 1, 0.1), Error);
}

TEST_CASE("jump radii invert the tail of the Levy measure") {
  const auto cauchy = build_sampler(make_scale(ScaleSpec::power(1.0)), 1, 0.01);
  CHECK(sample_jump_radius(cauchy, 0.5) == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(sample_jump_radius(cauchy, 1.0 - 1e-15) == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(sample_jump_radius(cauchy, 1.0) == 0.01);
  const auto s = build_sampler(make_scale(ScaleSpec::power(1.5)), 1, 0.1);
  CHECK(sample_jump_radius(s, 0.25) == doctest::Approx(0.1 * std::pow(0.25, -2.0 / 3.0)).epsilon(1e-9));
  CHECK(sample_jump_radius(s, 0.25) == doctest::Approx(0.2520).epsilon(1e-3));
  PathRng rng(3, 0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    const double r = sample_jump_radius(s, u);
    worst = std::max(worst, std::abs(std::pow(r / 0.1, -1.5) / u - 1.0));
  }
  CHECK(worst < 1e-8);
  // The smallest uniform a path stream can return stays inside the table.
  CHECK(std::isfinite(sample_jump_radius(s, 0x1.0p-54)));
}

TEST_CASE("tail intensity tracks 1/psi across cutoffs") {
  for (const char* name : {"stable:0.5", "stable:1", "stable:1.5", "piecewise:1.5,1.9@1",
                           "logzero:2", "loginf:-1"}) {
    const auto psi = make_scale(parse_catalog(name));
    for (int d : {1, 2, 3}) {
      double lo = INFINITY;
      double hi = 0.0;
      for (int k = 0; k <= 16; ++k) {
        const double eps = std::pow(10.0, -4.0 + k / 4.0);
        const double v = build_sampler(psi, d, eps).lambda_eps * psi(eps);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK_MESSAGE(hi / lo < 10.0, name << " d=" << d << " band " << lo << ".." << hi);
    }
  }
}

TEST_CASE("degenerate process stays at the origin") {
  SimConfig c;
  c.no_jumps = true;
  c.n_paths = 10;
  c.lil = true;
  c.horizon = 64.0;
  c.checkpoints = dyadic_checkpoints(6);
  const auto run = run_simulation(c);
  for (const auto& p : run.paths) {
    for (double v : p.positions) CHECK(v == 0.0);
    for (double v : p.lil) CHECK(v == 0.0);
  }
  for (const auto& row : lil_summary(run)) CHECK(row.median == 0.0);
}

TEST_CASE("runs are bit-identical across repeats and thread counts") {
  SimConfig c;
  c.kernel = ScaleSpec::power(1.5);
  c.eps = 0.05;
  c.n_paths = 64;
  c.checkpoints = {0.5, 1.0};
  c.exit_radii = {0.5, 1.0};
  c.horizon = 4.0;
  const auto a = run_simulation(c);
  c.threads = 3;
  const auto b = run_simulation(c);
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    CHECK(a.paths[i].positions == b.paths[i].positions);
    CHECK(a.paths[i].first_exit == b.paths[i].first_exit);
  }
}

TEST_CASE("Cauchy tail, symmetry and histogram mass") {
  SimConfig c;
  c.kernel = ScaleSpec::power(1.0);
  c.eps = 0.01;
  c.n_paths = 20000;
  c.checkpoints = {1.0};
  const auto run = run_simulation(c);
  const auto tail = estimate_tail(run, 1.0, {0.0, M_PI, 10.0});
  CHECK(tail[0].value == 1.0);
  CHECK(std::abs(tail[1].value - 0.5) <= 3.0 * tail[1].std_error);
  CHECK(std::abs(tail[2].value - oracle::cauchy_tail(1.0, 10.0)) <= 3.0 * tail[2].std_error);
  CHECK_THROWS_AS(estimate_tail(run, 0.7, {1.0}), Error);

  // Infinite mean: check the sign balance instead.
  std::size_t positive = 0;
  for (const auto& p : run.paths) positive += p.positions[0] > 0.0 ? 1 : 0;
  CHECK(std::abs(static_cast<double>(positive) / 20000.0 - 0.5) <= 3.0 * 0.5 / std::sqrt(20000.0));

  const auto h = estimate_density_radial(run, 1.0, log_edges(0.1, 100.0, 12));
  double mass = h.mass_below + h.mass_above;
  for (std::size_t i = 0; i < h.density.size(); ++i) {
    mass += h.density[i].value * shell_volume(1, h.edges[i], h.edges[i + 1]);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mean position vanishes for a finite-variance kernel") {
  SimConfig c;
  c.kernel = parse_catalog("loginf:2");
  c.d = 2;
  c.eps = 0.05;
  c.n_paths = 4000;
  c.checkpoints = {1.0};
  const auto run = run_simulation(c);
  for (int k = 0; k < 2; ++k) {
    std::vector<double> v;
    for (const auto& p : run.paths) v.push_back(p.positions[static_cast<std::size_t>(k)]);
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var /= static_cast<double>(v.size() - 1);
    CHECK(std::abs(m) <= 3.0 * std::sqrt(var / static_cast<double>(v.size())));
  }
}

TEST_CASE("halving the cutoff does not move the tail") {
  const auto& ds = derived("stable:1.5");
  SimConfig c;
  c.kernel = ScaleSpec::power(1.5);
  c.n_paths = 20000;
  c.checkpoints = {1.0};
  const std::vector<double> radii{ds.phi_inv(1.0), 2.0 * ds.phi_inv(1.0), 8.0};
  c.eps = 0.04;
  const auto a = estimate_tail(run_simulation(c), 1.0, radii);
  c.eps = 0.02;
  c.base_seed = 2;
  const auto b = estimate_tail(run_simulation(c), 1.0, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double se = std::hypot(a[i].std_error, b[i].std_error);
    CHECK_MESSAGE(std::abs(a[i].value - b[i].value) < 3.0 * se, "r=" << radii[i]);
  }
}

TEST_CASE("exit times and occupation errors") {
  SimConfig c;
  c.kernel = ScaleSpec::power(1.5);
  c.eps = 0.05;
  c.n_paths = 200;
  c.horizon = 1.0;
  c.exit_radii = {1e6};
  const auto run = run_simulation(c);
  CHECK_THROWS_AS(estimate_exit_time(run), Error);

  c.exit_radii = {0.5};
  c.horizon = 50.0;
  const auto ok = estimate_exit_time(run_simulation(c));
  CHECK(ok[0].censored_fraction < 0.01);
  CHECK(ok[0].mean.value > 0.0);

  c.exit_radii.clear();
  c.occupation_radii = {0.0, 1.0};
  c.horizon = 5.0;
  const auto occ_run = run_simulation(c);
  CHECK_THROWS_AS(occupation_time(occ_run, derived("stable:1.5")), Error);

  c.d = 2;
  const auto occ2 = occupation_time(run_simulation(c), derived("stable:1.5", 2));
  CHECK(occ2[0].total.value == 0.0);
  CHECK(occ2[1].total.value > 0.0);
}
