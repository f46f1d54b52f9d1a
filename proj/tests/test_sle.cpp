#include <doctest.h>

#include <cmath>

#include "bcle/errors.hpp"
#include "bcle/sle.hpp"

using namespace bcle;
using namespace bcle::sle;

TEST_CASE("parameter dispatch") {
  CHECK(BcleParams::make(3, -1.5).regime == exact::Regime::Simple);
  CHECK(BcleParams::make(4, -1).regime == exact::Regime::K4);
  CHECK(BcleParams::make(6, -0.5).regime == exact::Regime::NonSimple);
  CHECK_THROWS_AS(BcleParams::make(3, 0), DomainError);
}

TEST_CASE("config validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  c.dt = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = SimConfig{};
  c.reflectionScheme = "euler";
  CHECK_THROWS_AS(c.validate(), Unsupported);
  const auto r = SimConfig{}.refined();
  CHECK(r.dt == SimConfig{}.dt / 2);
}

TEST_CASE("a sample is reproducible from its seed and keeps the state in range") {
  const auto p = BcleParams::make(3, -1.5);
  const auto a = sample_bcle_loop(p, SimConfig{}, 42), b = sample_bcle_loop(p, SimConfig{}, 42);
  CHECK(a.valid);
  CHECK(a.sigma1 == b.sigma1);
  CHECK(a.orientation == b.orientation);
  CHECK(a.cr() > 0);
  CHECK(a.cr() < 1);

  RadialIntegrator it(p, SimConfig{});
  Rng rng = make_stream(7, 0);
  while (it.step(rng)) {
    const auto s = it.state();
    REQUIRE(s.remainingArc >= 0);
    REQUIRE(s.remainingArc <= 2 * std::numbers::pi + 1e-12);
  }
  CHECK(it.closed());
}

TEST_CASE("censoring at maxSteps") {
  SimConfig c;
  c.maxSteps = 10;
  const auto s = sample_bcle_loop(BcleParams::make(6, -0.5), c, 1);
  CHECK_FALSE(s.valid);
  CHECK(s.steps == 10);
}

TEST_CASE("estimates do not depend on the thread count") {
  const auto p = BcleParams::make(3, -1.5);
  EstimateOptions o;
  o.batches = 8;
  const auto a = estimate_oriented_cr_moments(p, {0, 1}, 40, 5, o);
  o.threads = 3;
  const auto b = estimate_oriented_cr_moments(p, {0, 1}, 40, 5, o);
  CHECK(a.moments[1].mean.clockwise == b.moments[1].mean.clockwise);
  CHECK(a.moments[0].se.counterclockwise == b.moments[0].se.counterclockwise);
  CHECK_FALSE(a.partial);
}

TEST_CASE("lambda too close to the threshold is refused") {
  const auto p = BcleParams::make(3, -1.5);
  CHECK_THROWS_AS(estimate_oriented_cr_moments(p, {3.0 / 8 - 1 + 0.05}, 10, 1), Unsupported);
}

TEST_CASE("time budget marks the report partial") {
  EstimateOptions o;
  o.timeBudget = 0.2;
  const auto r = estimate_oriented_cr_moments(BcleParams::make(6, -0.5), {0}, 1000000, 1, o);
  CHECK(r.partial);
  CHECK(r.samplesPerLevel < 1000000);
}

TEST_CASE("Brownian exit walk at kappa = 4") {
  const auto e = bm_exit_check(-1, 0, 20000, 3);
  CHECK(std::fabs(e.mean.clockwise - 0.5) < 3.5 * e.se.clockwise);
  const auto ex = exact::cr_moment_k4(exact::K4Params::make(-0.5), 1);
  const auto f = bm_exit_check(-0.5, 1, 20000, 4);
  CHECK(std::fabs(f.mean.clockwise - ex.clockwise) < 3.5 * f.se.clockwise);
  CHECK(std::fabs(f.mean.counterclockwise - ex.counterclockwise) < 3.5 * f.se.counterclockwise);
}

TEST_CASE("hull reference reads the same loop as the driving function") {
  const auto p = BcleParams::make(3, -1.5);
  int agree = 0, closed = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto d = hull_reference_detail(p, SimConfig{}, s);
    CHECK(d.driving.valid);
    if (!d.geometric.valid) continue;
    ++closed;
    agree += d.geometric.orientation == d.driving.orientation;
    // the trace closes no later than the driving function says
    CHECK(d.geometric.sigma1 <= d.driving.sigma1 + 1e-12);
  }
  CHECK(closed >= 4);
  CHECK(agree >= closed - 1);
}
