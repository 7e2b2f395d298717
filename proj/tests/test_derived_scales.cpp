#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "hke/derived_scales.hpp"
#include "hke/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hke;


TEST_CASE("Phi of power kernels matches the closed form over twelve decades") {
  for (double alpha : {0.5, 1.0, 1.5, 1.9}) {
    const auto phi = build_phi(make_scale(ScaleSpec::power(alpha)));
    double worst = 0.0;
    for (int i = 0; i <= 1200; ++i) {
      const double r = std::pow(10.0, -6.0 + 12.0 * i / 1200.0 + 0.0013);
      worst = std::max(worst, std::abs(phi(r) / oracle::power_phi(alpha, r) - 1.0));
    }
    CHECK_MESSAGE(worst <= 1e-6, "alpha=" << alpha << " worst=" << worst);
  }
  CHECK(build_phi(make_scale(ScaleSpec::power(1.0)))(2.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Phi of the piecewise and log kernels") {
  const auto& pw = derived("piecewise:1.5,2.5@1");
  CHECK(pw.phi(4.0) == doctest::Approx(8.0 / 3.0).epsilon(1e-9));
  for (double r : {1e-5, 0.3, 1.0, 7.0, 1e5}) {
    CHECK(pw.phi(r) == doctest::Approx(oracle::piecewise_phi(1.5, 2.5, 1.0, r)).epsilon(1e-8));
  }
  const auto& lz = derived("logzero:2");
  CHECK(lz.phi(std::exp(-2.0)) == doctest::Approx(std::exp(-4.0)).epsilon(1e-8));
  for (double r : {1e-8, 1e-5, 1e-2, 0.2}) {
    CHECK(lz.phi(r) == doctest::Approx(oracle::logzero_phi(2.0, r)).epsilon(1e-8));
  }
}

TEST_CASE("non-integrable kernels are refused") {
  CHECK_THROWS_AS(build_phi(make_scale(ScaleSpec::power(2.0))), Error);
  try {
    build_phi(make_scale(ScaleSpec::log_zero(1.0)));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IntegrabilityViolation);
  }
}

TEST_CASE("generalized inverse of Phi") {
  const auto& ds = derived("stable:1.5");
  CHECK(ds.phi_inv(2.0) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(ds.phi_inv(0.0) == 0.0);
  CHECK(ds.phi_inv(1.0) == doctest::Approx(std::pow(4.0, 2.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("K for power and piecewise kernels") {
  const auto& st = derived("stable:1.5");
  REQUIRE(st.K);
  CHECK(st.K_at(2.0) == doctest::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-9));
  CHECK(st.K_inv(0.1) == doctest::Approx(0.16).epsilon(1e-9));

  const auto& pw = derived("piecewise:1.5,2.5@1");
  REQUIRE(pw.K);
  const double brute = oracle::brute_sup_over_b(
      [](double b) { return oracle::piecewise_phi(1.5, 2.5, 1.0, b); }, 1e-8, 4.0, 10000);
  CHECK(pw.K_at(4.0) == doctest::Approx(brute).epsilon(1e-7));
  CHECK(pw.K_at(4.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("K is refused when Phi(b)/b does not vanish at 0") {
  const auto phi = build_phi(make_scale(ScaleSpec::power(0.5)));
  const auto cert = estimate_scaling([&](double u) { return phi.log_eval(u); }, 1e-8, 1e8,
                                     ScalingMode::Global);
  try {
    build_K(phi, cert);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LowerIndexTooSmall);
  }
  const auto& ds = derived("stable:0.5");
  CHECK_FALSE(ds.K.has_value());
  CHECK_THROWS_AS(ds.K_inv(1.0), Error);
}

TEST_CASE("Phi_a and K_inf") {
  const auto& st = derived("stable:1.5");
  CHECK(st.phi_tilde_at(0.5) == doctest::Approx(0.0625).epsilon(1e-9));
  REQUIRE(st.K_inf);
  CHECK(st.K_inf_at(0.5) == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(st.K_inf_at(1e-6) == doctest::Approx(0.25e-6).epsilon(1e-9));

  const auto& pw = derived("piecewise:1.5,2.5@1");
  REQUIRE(pw.K_inf);
  const auto tilde = [](double b) {
    return b < 1.0 ? oracle::piecewise_phi(1.5, 2.5, 1.0, 1.0) * b * b
                   : oracle::piecewise_phi(1.5, 2.5, 1.0, b);
  };
  CHECK(pw.K_inf_at(4.0) == doctest::Approx(oracle::brute_sup_over_b(tilde, 1e-8, 4.0, 10000))
                                .epsilon(1e-7));
  CHECK(pw.K_inf_at(4.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("Phi_a satisfies the global lower scaling of Phi above a") {
  for (const char* name : {"stable:1.5", "piecewise:1.5,2.5@1", "loginf:0.5", "loginf:2"}) {
    const auto& ds = derived(name);
    REQUIRE(ds.phi_cert_infty);
    const auto c = estimate_scaling([&](double u) { return ds.phi_tilde.log_eval(u); }, 1e-8, 1e8,
                                    ScalingMode::Global);
    CHECK_MESSAGE(c.beta_lower >= ds.phi_cert_infty->beta_lower - 1e-6, name);
    CHECK_MESSAGE(c.c_lower >= ds.phi_cert_infty->c_lower * (1.0 - 1e-6), name);
  }
}

TEST_CASE("K_inf built with a = 1 and a = 2 have comparable inverses") {
  const auto psi = make_scale(parse_catalog("loginf:0.5"));
  const auto one = build_derived(psi, 1, 1.0);
  const auto two = build_derived(psi, 1, 2.0);
  double worst = 1.0;
  for (double t : {1.0, 10.0, 100.0, 1e3, 1e4}) {
    for (double m : {1.0, 3.0, 10.0, 100.0}) {
      const double r = m * one.phi_inv(t);
      const double q = one.K_inf_inv(t / r) / two.K_inf_inv(t / r);
      worst = std::max({worst, q, 1.0 / q});
    }
  }
  CHECK(worst <= 10.0);
}

TEST_CASE("comparability") {
  const auto& st = derived("stable:1.5");
  const auto c1 = comparability_report(st, 1e-6, 1e6);
  CHECK(c1.comparable);
  CHECK(c1.agrees_with_index);
  CHECK(c1.inf_ratio == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(c1.sup_ratio == doctest::Approx(0.25).epsilon(1e-7));

  const auto& pw = derived("piecewise:1.5,2.5@1");
  const auto c2 = comparability_report(pw, 10.0, 1e4);
  CHECK_FALSE(c2.comparable);
  CHECK(c2.agrees_with_index);
  CHECK(c2.slope_at == 1e4);
  CHECK(c2.phi_slope == doctest::Approx(2.0).epsilon(0.02));

  // Phi = s^2 log(1/s) / 2 there, so the local slope is 2 - 1/log(1/s).
  const auto& lz = derived("logzero:2");
  const auto c3 = comparability_report(lz, 1e-8, 1e-2);
  CHECK_FALSE(c3.comparable);
  CHECK(c3.agrees_with_index);
  CHECK(c3.slope_at == 1e-8);
  CHECK(c3.phi_slope == doctest::Approx(2.0 - 1.0 / std::log(1e8)).epsilon(1e-4));
}

TEST_CASE("scale calculus holds for every catalog kernel") {
  for (const char* name : {"stable:1.5", "stable:1.9", "stable:1.2", "stable:0.5", "stable:1",
                           "logzero:2", "logzero:1.5", "loginf:0.5", "loginf:1", "loginf:2",
                           "piecewise:1.5,2.5@1", "piecewise:1.2,1.8@1"}) {
    const auto& ds = derived(name);
    const auto rep = check_scale_calculus(ds, 10000, 5);
    for (const auto& c : rep.checks) {
      CHECK_MESSAGE(c.violations == 0,
                    name << ": " << c.name << " worst " << c.worst_slack << " (" << c.note << ")");
    }
    if (rep.fitted_C3 && rep.theory_C3) CHECK(*rep.fitted_C3 <= *rep.theory_C3 * (1.0 + 1e-6));
  }
}

TEST_CASE("exponent comparison constant is 1 for pure powers") {
  for (const char* name : {"stable:1.5", "stable:1.2", "stable:1.9"}) {
    const auto rep = check_scale_calculus(derived(name), 10000, 9);
    REQUIRE(rep.fitted_C3);
    CHECK_MESSAGE(std::abs(*rep.fitted_C3 - 1.0) <= 1e-3, name << " C3=" << *rep.fitted_C3);
  }
  // t = 1, r = 10: Phi^-1(1) = 4^{2/3}, K^-1(0.1) = 0.16.
  const auto& st = derived("stable:1.5");
  const double lhs = std::pow(10.0 / st.phi_inv(1.0), 2.0);
  const double mid = 10.0 / st.K_inv(0.1);
  CHECK(lhs == doctest::Approx(15.749).epsilon(1e-4));
  CHECK(mid == doctest::Approx(62.5).epsilon(1e-8));
  CHECK(mid == doctest::Approx(std::pow(10.0 / st.phi_inv(1.0), 3.0)).epsilon(1e-8));
}

TEST_CASE("table CSV export") {
  std::ostringstream os;
  write_tables_csv(derived("stable:1.5"), os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "r,psi,phi,phi_inv_at_phi,K,K_inf");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 16 * 64 + 1);
}
