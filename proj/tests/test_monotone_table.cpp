#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hke/error.hpp"
#include "hke/monotone_table.hpp"

using namespace hke;

namespace {

MonotoneTable power_table(double p, double lo, double hi, int n) {
  std::vector<double> x, y;
  for (int i = 0; i <= n; ++i) {
    const double u = std::log(lo) + (std::log(hi) - std::log(lo)) * i / n;
    x.push_back(u);
    y.push_back(std::log(0.25) + p * u);
  }
  return MonotoneTable(x, y, Monotone::NonDecreasing);
}

}  // namespace

TEST_CASE("nodes are reproduced exactly") {
  std::vector<double> x{0.0, 0.5, 1.3, 2.0, 3.1};
  std::vector<double> y{-1.0, -0.2, 0.4, 0.4, 1.7};
  MonotoneTable t(x, y, Monotone::NonDecreasing);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(t.log_eval(x[i]) == y[i]);
}

TEST_CASE("interpolation stays monotone between nodes") {
  std::vector<double> x{0.0, 0.1, 0.2, 1.0, 1.05, 3.0};
  std::vector<double> y{0.0, 2.0, 2.0, 2.1, 5.0, 5.0};
  MonotoneTable t(x, y, Monotone::NonDecreasing);
  double prev = -1e300;
  for (int i = 0; i <= 3000; ++i) {
    const double v = t.log_eval(3.0 * i / 3000.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("power law is reproduced between nodes and extrapolated at the ends") {
  const auto t = power_table(1.5, 1e-2, 1e2, 4 * 64);
  for (double r : {0.0123, 0.5, 3.7, 99.0}) {
    CHECK(t(r) == doctest::Approx(0.25 * std::pow(r, 1.5)).epsilon(1e-12));
  }
  CHECK(t.left_exponent() == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(t(1e-4) == doctest::Approx(0.25 * std::pow(1e-4, 1.5)).epsilon(1e-10));
  CHECK(t(1e4) == doctest::Approx(0.25 * std::pow(1e4, 1.5)).epsilon(1e-10));
}

TEST_CASE("evaluation more than the trusted decades away is an error") {
  const auto t = power_table(1.5, 1e-2, 1e2, 64);
  CHECK_NOTHROW(t(1e-5 * 1.01));
  CHECK_THROWS_AS(t(1e-6), Error);
  CHECK_THROWS_AS(t(1e6), Error);
}

TEST_CASE("generalized inverse of a power table") {
  const auto t = power_table(1.5, 1e-3, 1e3, 6 * 64);
  CHECK(t.inverse(2.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(t.inverse(0.0) == 0.0);
}

TEST_CASE("round trip on a strictly increasing table") {
  const auto t = power_table(1.2, 1e-3, 1e3, 6 * 64);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(std::log(t(1e-3)), std::log(t(1e3)));
  for (int i = 0; i < 10000; ++i) {
    const double v = std::exp(u(rng));
    CHECK(std::abs(t(t.inverse(v)) / v - 1.0) <= 1e-6);
  }
}

TEST_CASE("inverse of a step table follows the strict-inequality infimum") {
  // f = 1 on [1, 2], jumping to 3 just after 2.
  std::vector<double> x{0.0, std::log(2.0), std::log(2.0) + 1e-9, std::log(10.0)};
  std::vector<double> y{0.0, 0.0, std::log(3.0), std::log(3.0)};
  MonotoneTable t(x, y, Monotone::NonDecreasing, {0.0, 0.0}, {0.0, 0.0});
  CHECK(t.inverse(1.0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(t.inverse(0.5) == 0.0);
  // Below every grid point f(s) <= t: the inf is not to the left of the plateau's end.
  const double s = t.inverse(1.0);
  for (double u : t.log_nodes()) {
    if (std::exp(u) < s * (1.0 - 1e-8)) CHECK(std::exp(t.log_eval(u)) <= 1.0 + 1e-12);
  }
}

TEST_CASE("plateau inside a table resolves to its right end") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  std::vector<double> y{0.0, 1.0, 1.0, 2.0};
  MonotoneTable t(x, y, Monotone::NonDecreasing);
  CHECK(std::log(t.inverse(std::exp(1.0))) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("decreasing tables are solved in log space") {
  std::vector<double> x, y;
  for (int i = 0; i <= 200; ++i) {
    x.push_back(std::log(0.1) + i * 0.05);
    y.push_back(std::log(2.0 / 3.0) - 1.5 * x.back());
  }
  MonotoneTable t(x, y, Monotone::NonIncreasing);
  const double target = 0.25 * std::exp(y.front());
  CHECK(std::exp(t.log_solve_decreasing(std::log(target))) ==
        doctest::Approx(0.1 * std::pow(0.25, -2.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("monotonicity violations are rejected") {
  std::vector<double> x{0.0, 1.0, 2.0};
  std::vector<double> y{0.0, 1.0, 0.5};
  CHECK_THROWS_AS(MonotoneTable(x, y, Monotone::NonDecreasing), Error);
}
