#include "bcle/exact.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "bcle/errors.hpp"

namespace bcle::exact {

using std::numbers::pi;

namespace {

bool inside(double x, double lo, double hi) { return x > lo && x < hi; }

std::string fmt(double x) { return std::to_string(x); }

void require_simple_kappa(double kappa) {
  if (!inside(kappa, 2, 4)) throw DomainError("kappa=" + fmt(kappa) + " not in (2,4)");
}

void require_nonsimple_kappa(double kp) {
  if (!inside(kp, 4, 8)) throw DomainError("kappa'=" + fmt(kp) + " not in (4,8)");
}

// Shared (kappa, rho) formula of both BCLE regimes; the caller checks ranges.
OrientedValue bcle_moment(double k, double rho, double lambda) {
  const double den = std::sin(pi * (4 - k) / k) * std::sin(pi / 4 * (k - 2 * rho - 4));
  const double pre = std::sin(pi * (4 - k) / 4) / den;
  const double disc = (4 - k) * (4 - k) - 8 * k * lambda;
  OrientedValue v;
  v.clockwise = pre * std::sin(2 * pi / k * (k - rho - 4)) * sine_ratio((k - 2 * rho - 4) / k, disc);
  v.counterclockwise = pre * std::sin(2 * pi / k * (rho + 2)) * sine_ratio((2 * rho + 8 - k) / k, disc);
  return v;
}

struct Ingredients {
  double kappa, rho;
};

Ingredients ingredients(const ColoredCleParams& c) {
  const double k = c.kappa();
  return {k, rho_from_r(k, c.r)};
}

}  // namespace

SimpleParams SimpleParams::make(double kappa, double rho) {
  require_simple_kappa(kappa);
  if (!inside(rho, -2, kappa - 4))
    throw DomainError("rho=" + fmt(rho) + " not in (-2, kappa-4) = (-2, " + fmt(kappa - 4) + ")");
  return {kappa, rho};
}

NonSimpleParams NonSimpleParams::make(double kp, double rp) {
  require_nonsimple_kappa(kp);
  if (!inside(rp, kp / 2 - 4, kp / 2 - 2))
    throw DomainError("rho'=" + fmt(rp) + " not in (kappa'/2-4, kappa'/2-2) = (" + fmt(kp / 2 - 4) +
                      ", " + fmt(kp / 2 - 2) + ")");
  return {kp, rp};
}

K4Params K4Params::make(double rho) {
  if (!inside(rho, -2, 0)) throw DomainError("rho=" + fmt(rho) + " not in (-2,0)");
  return {rho};
}

ColoredCleParams ColoredCleParams::make(double kp, double r) {
  require_nonsimple_kappa(kp);
  if (!inside(r, 0, 1)) throw DomainError("r=" + fmt(r) + " not in (0,1)");
  return {kp, r};
}

double MomentOrder::threshold(double kappa) const {
  switch (regime) {
    case Regime::Simple:
    case Regime::NonSimple:
      return kappa / 8 - 1;
    case Regime::K4:
      return -0.5;
  }
  return 0;
}

double sine_ratio(double a, double disc) {
  const double th = pi / 4 * std::sqrt(std::fabs(disc));
  if (th < 1e-8) return a;
  if (disc >= 0) return std::sin(a * th) / std::sin(th);
  // sinh(a th)/sinh(th) without overflow
  const double s = a < 0 ? -1.0 : 1.0;
  const double aa = std::fabs(a);
  return s * std::exp((aa - 1) * th) * std::expm1(-2 * aa * th) / std::expm1(-2 * th);
}

double r_from_rho(double kappa, double rho) {
  SimpleParams::make(kappa, rho);
  const double s1 = std::sin(pi * rho / 2);
  const double s2 = std::sin(pi * (kappa - rho) / 2);
  // (1-beta)/2 = s1/(s1-s2) is the blue probability 1-r
  return -s2 / (s1 - s2);
}

double rho_from_r(double kappa, double r) {
  require_simple_kappa(kappa);
  if (!inside(r, 0, 1)) throw DomainError("r=" + fmt(r) + " not in (0,1)");
  const double den = 1 + std::cos(pi * kappa / 2) - 1 / (1 - r);
  double rho = 2 / pi * std::atan(std::sin(pi * kappa / 2) / den) - 2;
  // the printed arctan is branch ambiguous; shift by pi when it lands outside
  if (!inside(rho, -2, kappa - 4)) rho += 2;
  if (inside(rho, -2, kappa - 4) && std::fabs(r_from_rho(kappa, rho) - r) < 1e-12) return rho;

  // r_from_rho decreases from 1 to 0 on (-2, kappa-4)
  auto f = [&](double x) { return r_from_rho(kappa, x) - r; };
  double lo = -2, hi = kappa - 4;
  const double w = hi - lo;
  lo += 1e-15 * w;
  hi -= 1e-15 * w;
  std::uintmax_t it = 200;
  auto br = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), it);
  return 0.5 * (br.first + br.second);
}

std::pair<double, double> bcle_child_weights(double kappa, double rho) {
  SimpleParams::make(kappa, rho);
  const double kp = 16 / kappa;
  return {-kp / 2 - kp / 4 * rho, kp - 4 + kp / 4 * rho};
}

OrientedValue cr_moment_simple(const SimpleParams& p, double lambda) {
  if (!(lambda > p.kappa / 8 - 1))
    throw Divergent("lambda=" + fmt(lambda) + " <= kappa/8-1: moment is infinite");
  return bcle_moment(p.kappa, p.rho, lambda);
}

OrientedValue cr_moment_nonsimple(const NonSimpleParams& p, double lambda) {
  if (!(lambda > p.kappaPrime / 8 - 1))
    throw Divergent("lambda'=" + fmt(lambda) + " <= kappa'/8-1: moment is infinite");
  return bcle_moment(p.kappaPrime, p.rhoPrime, lambda);
}

OrientedValue cr_moment_k4(const K4Params& p, double lambda) {
  if (!(lambda > -0.5)) throw Divergent("lambda=" + fmt(lambda) + " <= -1/2: moment is infinite");
  if (lambda == 0) return {-p.rho / 2, (p.rho + 2) / 2};
  // theta = pi sqrt(2 lambda) = (pi/4) sqrt(32 lambda)
  const double disc = -32 * lambda;
  return {sine_ratio(-p.rho / 2, disc), sine_ratio((p.rho + 2) / 2, disc)};
}

double cle_threshold(double kp) { return 3 * kp / 32 + 2 / kp - 1; }

double cle_cr_moment(double kp, double lambda) {
  require_nonsimple_kappa(kp);
  if (!(lambda > cle_threshold(kp)))
    throw Divergent("lambda=" + fmt(lambda) + " at or below the CLE threshold " + fmt(cle_threshold(kp)));
  const double k = 16 / kp;
  const double disc = (4 - k) * (4 - k) - 8 * k * lambda;
  const double x = pi / 4 * std::sqrt(std::fabs(disc));
  const double cx = disc >= 0 ? std::cos(x) : std::cosh(x);
  return std::cos(pi * (4 - k) / 4) / cx;
}

double child_cr_moment(const ColoredCleParams& c, double lambda) {
  const auto [k, rho] = ingredients(c);
  const auto outer = cr_moment_simple(SimpleParams::make(k, rho), lambda);
  const auto [rhoR, rhoB] = bcle_child_weights(k, rho);
  (void)rhoR;
  const auto inner = cr_moment_nonsimple(NonSimpleParams::make(c.kappaPrime, rhoB), lambda);
  return outer.counterclockwise * (cle_cr_moment(c.kappaPrime, lambda) * inner.clockwise + inner.counterclockwise);
}

double one_arm_gap(const ColoredCleParams& c, double lambda) {
  const double lmin = cle_threshold(c.kappaPrime);
  if (!(lambda > lmin && lambda <= 0))
    throw DomainError("lambda=" + fmt(lambda) + " not in (" + fmt(lmin) + ", 0]");
  const auto [k, rho] = ingredients(c);
  const double x = pi / 4 * std::sqrt((4 - k) * (4 - k) - 8 * k * lambda);
  const double y = 2 * rho / k * x;
  const double z = 4 / k * x;
  const double s0 = std::sin(pi / 4 * (k - 2 * rho - 4));
  const double num = std::sin(x - y - z) *
                     (s0 * std::sin(x + y + 2 * z) - std::sin(pi / 4 * (-k - 2 * rho + 4)) * std::sin(y + 2 * z - x));
  return num / (2 * std::sin(x) * std::cos(x) * std::sin(z) * s0);
}

double one_arm_residual(const ColoredCleParams& c, double x) {
  const auto [k, rho] = ingredients(c);
  const double s = std::sqrt((4 - k) * (4 - k) + 8 * k * x);
  const double ln = std::sin(pi * (k + 2 * rho + 8) / (4 * k) * s);
  const double ld = std::sin(pi * (k - 2 * rho - 8) / (4 * k) * s);
  return ln * std::sin(pi / 4 * (k - 2 * rho)) - ld * std::sin(pi / 4 * (k + 2 * rho));
}

double one_arm_exponent(const ColoredCleParams& c) {
  const double lmin = cle_threshold(c.kappaPrime);
  // the gap increases from -inf at lmin to a positive value at 0
  auto f = [&](double l) { return one_arm_gap(c, l); };
  auto tol = [](double a, double b) { return std::fabs(b - a) < 1e-14; };
  std::uintmax_t it = 200;
  double lo = lmin + 1e-15, hi = 0;
  auto br = boost::math::tools::bisect(f, lo, hi, tol, it);
  return -0.5 * (br.first + br.second);
}

double fk_one_arm_limit(double kp) {
  require_nonsimple_kappa(kp);
  return 1 - 2 / kp - 3 * kp / 32;
}

double loop_moment_fixed_point(const ColoredCleParams& c, double lambda) {
  const auto [k, rho] = ingredients(c);
  const double b = child_cr_moment(c, lambda);
  if (!(b < 1)) throw Divergent("lambda=" + fmt(lambda) + ": child moment " + fmt(b) + " >= 1");
  return cr_moment_simple(SimpleParams::make(k, rho), lambda).clockwise / (1 - b);
}

}  // namespace bcle::exact
