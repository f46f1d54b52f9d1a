#include <doctest.h>

#include <cmath>

#include "bcle/errors.hpp"
#include "bcle/lcft.hpp"
#include "oracles.hpp"

using namespace bcle;
using namespace bcle::lcft;

TEST_CASE("double gamma normalisation and double sine reflection") {
  for (double g : {0.4, 1.0, 1.7, 1.95}) {
    const auto c = LcftContext::make(g);
    CHECK(std::abs(log_double_gamma(c, c.Q / 2)) < 1e-12);
    for (double re : {0.3, 0.9}) {
      const cplx z(re * c.Q, 0.4);
      CHECK(std::abs(log_double_sine(c.b, z) + log_double_sine(c.b, c.Q - z)) < 1e-10);
    }
  }
}

TEST_CASE("continuation agrees with the integral on its strip") {
  for (double b : {0.3, 0.7, 0.95})
    for (double re : {0.4, 1.0, 2.5}) {
      const cplx z(re, -0.7);
      CHECK(std::abs(std::exp(log_double_gamma(b, z) - log_double_gamma_integral(b, z)) - 1.0) < 1e-10);
    }
}

TEST_CASE("double sine integral representation") {
  const double b = 0.8, Q = b + 1 / b;
  for (double f : {0.2, 0.5, 0.8}) {
    const cplx z(f * Q, 0.3);
    CHECK(std::abs(std::exp(log_double_sine(b, z) - log_double_sine_integral(b, z)) - 1.0) < 1e-9);
  }
}

TEST_CASE("reflection derivative at the symmetric point") {
  const auto c = LcftContext::make(1.5);
  CHECK(refl_log_derivative(c, 1.2, 2.0, 2.0) == doctest::Approx((c.Q - 1.2) / (1.5 * 2.0)));
  // the integral part is odd in log mu1 - log mu2
  const double lead = (c.Q - 1.2) / (1.5 * 2.0);
  const double a = refl_log_derivative(c, 1.2, 2.0, 6.0) - lead;
  const double a2 = refl_log_derivative(c, 1.2, 2.0, 2.0 / 3.0) - lead;
  CHECK(a == doctest::Approx(-a2).epsilon(1e-8));
  CHECK_THROWS_AS(refl_log_derivative(c, 0.5, 1, 1), DomainError);
}

TEST_CASE("ratio identities at the Ising point") {
  for (const auto& r : ratio_identity_residuals(3, -1.5)) {
    INFO(r.name);
    CHECK(r.residual < 1e-8);
  }
  // self-dual weight: the simple ratio is 1
  for (const auto& r : ratio_identity_residuals(3, -1.5))
    if (r.name == "simple") CHECK(r.trigSide == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("qa moment against the Laplace quadrature oracle") {
  for (double g : {1.5, 1.8})
    for (double W : {0.3, 0.8})
      for (double y : {-0.1, -0.25, -0.5}) {
        const auto c = LcftContext::make(g);
        const double a = qa_moment(c, W, 1.7, y), o = oracle::qa_quadrature(c, W, 1.7, y);
        CHECK(std::fabs(a - o) / std::fabs(o) < 1e-6);
      }
}

TEST_CASE("gqa moment against the subordinated oracle") {
  const auto c = LcftContext::make(1.7);
  for (double W : {0.4, 1.1})
    for (double y : {-0.1, -0.3}) {
      const double a = gqa_moment(c, W, 0.9, y), o = oracle::gqa_quadrature(c, W, 0.9, y);
      CHECK(std::fabs(a - o) / std::fabs(o) < 1e-6);
      CHECK(a > 0);
    }
}

TEST_CASE("qa limits and ranges") {
  const auto c = LcftContext::make(1.6);
  const double W = 0.5, g2 = 1.6 * 1.6;
  // y -> 0-: sine ratio -> (g^2 - 2W)/g^2
  const double lim = std::pow(1 - 2 * W / g2, -2) * (g2 - 2 * W) / g2;
  CHECK(qa_moment(c, W, 1.0, -1e-9) == doctest::Approx(lim).epsilon(1e-6));
  CHECK_THROWS_AS(qa_moment(c, W, 1.0, -1.2), Unsupported);
  CHECK_THROWS_AS(qa_moment(LcftContext::make(1.2), W, 1.0, -0.3), DomainError);
}

TEST_CASE("levy moment") {
  const auto c = LcftContext::make(1.6);
  CHECK(levy_moment(c, 1e-9) == doctest::Approx(1).epsilon(1e-7));
  CHECK(std::isinf(levy_moment(c, 1.6 * 1.6 / 4)));
  const double v = levy_moment(c, 1.6 * 1.6 / 8);
  CHECK(std::isfinite(v));
  CHECK(v > 0);
}
