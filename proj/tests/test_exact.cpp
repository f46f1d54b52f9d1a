#include <doctest.h>

#include <cmath>
#include <random>

#include "bcle/errors.hpp"
#include "bcle/exact.hpp"

using namespace bcle;
using namespace bcle::exact;

TEST_CASE("one-arm special values") {
  CHECK(std::fabs(one_arm_exponent(ColoredCleParams::make(24.0 / 5, 1.0 / 3)) - 4.0 / 135) < 1e-10);
  CHECK(std::fabs(one_arm_exponent(ColoredCleParams::make(16.0 / 3, 0.5)) - 5.0 / 96) < 1e-10);
  CHECK(std::fabs(one_arm_exponent(ColoredCleParams::make(24.0 / 5, 2.0 / 3)) - 7.0 / 80) < 1e-10);
}

TEST_CASE("one-arm exponent is increasing in r and tends to the FK value") {
  for (double kp : {4.5, 16.0 / 3, 6.0, 7.5}) {
    double prev = 0;
    for (double r = 0.02; r < 1; r += 0.04) {
      const double a = one_arm_exponent(ColoredCleParams::make(kp, r));
      CHECK(a > prev);
      prev = a;
    }
    CHECK(one_arm_exponent(ColoredCleParams::make(kp, 1e-6)) < 1e-3);
    CHECK(std::fabs(one_arm_exponent(ColoredCleParams::make(kp, 1 - 1e-8)) - fk_one_arm_limit(kp)) < 1e-4);
  }
}

TEST_CASE("gap in closed form agrees with the assembled child moment") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> K(4.2, 7.8), R(0.05, 0.95), F(0.05, 1);
  for (int i = 0; i < 50; ++i) {
    const auto c = ColoredCleParams::make(K(rng), R(rng));
    // stay where the outer moment is finite
    const double lo = std::max(cle_threshold(c.kappaPrime), c.kappa() / 8 - 1);
    const double l = lo * F(rng);
    CHECK(one_arm_gap(c, l) == doctest::Approx(1 - child_cr_moment(c, l)).epsilon(1e-9));
  }
}

TEST_CASE("rho map round trip and the branch case") {
  // the printed arctan has a vanishing denominator here
  CHECK(rho_from_r(10.0 / 3, 1.0 / 3) == doctest::Approx(-1).epsilon(1e-12));
  CHECK(rho_from_r(3, 0.5) == doctest::Approx(-1.5).epsilon(1e-12));
  for (double k : {2.2, 2.9, 3.4, 3.9})
    for (double r : {0.01, 0.2, 0.5, 0.8, 0.99}) CHECK(r_from_rho(k, rho_from_r(k, r)) == doctest::Approx(r).epsilon(1e-10));
}

TEST_CASE("orientation probabilities") {
  const auto k4 = cr_moment_k4(K4Params::make(-1), 0);
  CHECK(k4.clockwise == 0.5);
  CHECK(k4.counterclockwise == 0.5);
  // self-dual weight rho = (kappa-6)/2 is symmetric
  const auto s = cr_moment_simple(SimpleParams::make(3, -1.5), 0);
  CHECK(s.clockwise == doctest::Approx(0.5).epsilon(1e-12));
  const auto n = cr_moment_nonsimple(NonSimpleParams::make(6, 0), 0.7);
  CHECK(n.clockwise == doctest::Approx(n.counterclockwise).epsilon(1e-12));
}

TEST_CASE("sine ratio branches") {
  CHECK(sine_ratio(0.3, 0) == 0.3);
  CHECK(sine_ratio(0.3, 1e-20) == doctest::Approx(0.3));
  const double th = std::numbers::pi / 4 * 2;
  CHECK(sine_ratio(0.3, 4) == doctest::Approx(std::sin(0.3 * th) / std::sin(th)));
  CHECK(sine_ratio(0.3, -4) == doctest::Approx(std::sinh(0.3 * th) / std::sinh(th)));
  // large imaginary angle stays finite
  CHECK(std::isfinite(sine_ratio(0.9, -1e6)));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(SimpleParams::make(3, -1), DomainError);
  CHECK_THROWS_AS(SimpleParams::make(4.5, -1.5), DomainError);
  CHECK_THROWS_AS(NonSimpleParams::make(6, 1.5), DomainError);
  CHECK_THROWS_AS(K4Params::make(0), DomainError);
  CHECK_THROWS_AS(ColoredCleParams::make(6, 1), DomainError);
  CHECK_THROWS_AS(cr_moment_simple(SimpleParams::make(3, -1.5), 3.0 / 8 - 1), Divergent);
  CHECK_THROWS_AS(cr_moment_k4(K4Params::make(-1), -0.5), Divergent);
  CHECK_THROWS_AS(cle_cr_moment(6, cle_threshold(6)), Divergent);
  CHECK(std::isfinite(cle_cr_moment(6, cle_threshold(6) + 1e-6)));
  CHECK(MomentOrder{-0.6, Regime::K4}.finite(4) == false);
  CHECK(MomentOrder{-0.4, Regime::K4}.finite(4) == true);
}
