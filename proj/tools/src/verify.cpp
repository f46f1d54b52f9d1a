#include <gsl/gsl_sf_gamma.h>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "bcle/cli.hpp"
#include "bcle/errors.hpp"
#include "bcle/exact.hpp"
#include "bcle/lcft.hpp"

namespace bcle::cli {

namespace {

using namespace bcle::exact;
using lcft::cplx;
using std::numbers::pi;

struct Tally {
  SuiteReport rep;
  void add(double residual, const std::string& where) {
    ++rep.checks;
    // NaN counts as a failure
    if (!(residual <= rep.maxResidual)) {
      rep.maxResidual = std::isnan(residual) ? INFINITY : residual;
      rep.worst = where;
    }
  }
  // absolute difference scaled by max(1, |ref|)
  void compare(double got, double ref, const std::string& where) {
    add(std::fabs(got - ref) / std::max(1.0, std::fabs(ref)), where);
  }
};

std::string at(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream s;
  bool first = true;
  for (auto& [k, v] : kv) {
    s << (first ? "" : " ") << k << "=" << fmt17(v);
    first = false;
  }
  return s.str();
}

cplx lngamma(cplx z) {
  gsl_sf_result lnr, arg;
  gsl_sf_lngamma_complex_e(z.real(), z.imag(), &lnr, &arg);
  return {lnr.val, arg.val};
}

double rel_exp(cplx logRatio) { return std::abs(std::exp(logRatio) - 1.0); }

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * (i + 0.5) / n);
  return g;
}

void suite_normalization(Tally& t, double eps) {
  for (double k : grid(2, 4, 25))
    for (double f : grid(0, 1, 25)) {
      const double rho = -2 + f * (k - 2);
      t.compare(cr_moment_simple(SimpleParams::make(k, rho), 0).sum() * (1 + eps), 1, at({{"kappa", k}, {"rho", rho}}));
    }
  for (double kp : grid(4, 8, 25))
    for (double f : grid(0, 1, 25)) {
      const double rho = kp / 2 - 4 + 2 * f;
      t.compare(cr_moment_nonsimple(NonSimpleParams::make(kp, rho), 0).sum() * (1 + eps), 1,
                at({{"kappa'", kp}, {"rho'", rho}}));
    }
  for (double rho : grid(-2, 0, 50))
    t.compare(cr_moment_k4(K4Params::make(rho), 0).sum() * (1 + eps), 1, at({{"kappa", 4}, {"rho", rho}}));
}

void suite_duality(Tally& t, double eps) {
  const auto lams = {-0.3, 0.0, 0.3, 1.0, 4.0};
  for (double k : grid(2, 4, 20))
    for (double f : grid(0, 1, 20))
      for (double l : lams) {
        if (l <= k / 8 - 1) continue;
        const double rho = -2 + f * (k - 2);
        const auto a = cr_moment_simple(SimpleParams::make(k, rho), l);
        const auto b = cr_moment_simple(SimpleParams::make(k, k - 6 - rho), l);
        const auto w = at({{"kappa", k}, {"rho", rho}, {"lambda", l}});
        t.compare(a.clockwise * (1 + eps), b.counterclockwise, w);
        t.compare(a.counterclockwise * (1 + eps), b.clockwise, w);
      }
  for (double kp : grid(4, 8, 20))
    for (double f : grid(0, 1, 20))
      for (double l : lams) {
        if (l <= kp / 8 - 1) continue;
        const double rho = kp / 2 - 4 + 2 * f;
        const auto a = cr_moment_nonsimple(NonSimpleParams::make(kp, rho), l);
        const auto b = cr_moment_nonsimple(NonSimpleParams::make(kp, kp - 6 - rho), l);
        const auto w = at({{"kappa'", kp}, {"rho'", rho}, {"lambda", l}});
        t.compare(a.clockwise * (1 + eps), b.counterclockwise, w);
        t.compare(a.counterclockwise * (1 + eps), b.clockwise, w);
      }
  for (double rho : grid(-2, 0, 40))
    for (double l : lams) {
      const auto a = cr_moment_k4(K4Params::make(rho), l), b = cr_moment_k4(K4Params::make(-2 - rho), l);
      t.compare(a.clockwise * (1 + eps), b.counterclockwise, at({{"kappa", 4}, {"rho", rho}, {"lambda", l}}));
    }
}

void suite_k4(Tally& t, double eps) {
  const double e = 1e-4;
  for (double rho : grid(-2, 0, 40))
    for (double l : {-0.4, -0.2, 0.0, 0.3, 1.0, 3.0}) {
      const auto ref = cr_moment_k4(K4Params::make(rho), l);
      const auto w = at({{"rho", rho}, {"lambda", l}});
      // rho has to stay inside (-2, kappa-4) on the simple side
      if (rho < -e) {
        const auto lo = cr_moment_simple(SimpleParams::make(4 - e, rho), l);
        t.compare(lo.clockwise * (1 + eps), ref.clockwise, "kappa=4-1e-4 " + w);
        t.compare(lo.counterclockwise * (1 + eps), ref.counterclockwise, "kappa=4-1e-4 " + w);
      }
      const auto hi = cr_moment_nonsimple(NonSimpleParams::make(4 + e, rho), l);
      t.compare(hi.clockwise * (1 + eps), ref.clockwise, "kappa'=4+1e-4 " + w);
      t.compare(hi.counterclockwise * (1 + eps), ref.counterclockwise, "kappa'=4+1e-4 " + w);
    }
}

// Moments refuse lambda at or below the threshold and blow up approaching it.
// The residual is 0 per passing check and 1 per failing one.
void suite_divergence(Tally& t, double eps) {
  auto throws = [](auto f) {
    try {
      f();
    } catch (const Divergent&) {
      return true;
    }
    return false;
  };
  for (double k : grid(2, 4, 10))
    for (double f : grid(0, 1, 10)) {
      const double rho = -2 + f * (k - 2), thr = k / 8 - 1;
      const auto p = SimpleParams::make(k, rho);
      const auto w = at({{"kappa", k}, {"rho", rho}});
      t.add(throws([&] { cr_moment_simple(p, thr); }) ? 0 : 1, "at threshold " + w);
      t.add(throws([&] { cr_moment_simple(p, thr - 0.1); }) ? 0 : 1, "below threshold " + w);
      const double near = cr_moment_simple(p, thr + 1e-6).sum(), mid = cr_moment_simple(p, thr + 1e-2).sum();
      t.add(near * (1 + eps) > 50 * mid ? 0 : 1, "growth near threshold " + w);
    }
  for (double kp : grid(4, 8, 10))
    for (double f : grid(0, 1, 10)) {
      const double rho = kp / 2 - 4 + 2 * f, thr = kp / 8 - 1;
      const auto p = NonSimpleParams::make(kp, rho);
      const auto w = at({{"kappa'", kp}, {"rho'", rho}});
      t.add(throws([&] { cr_moment_nonsimple(p, thr); }) ? 0 : 1, "at threshold " + w);
      const double near = cr_moment_nonsimple(p, thr + 1e-6).sum(), mid = cr_moment_nonsimple(p, thr + 1e-2).sum();
      t.add(near * (1 + eps) > 50 * mid ? 0 : 1, "growth near threshold " + w);
    }
  for (double kp : grid(4, 8, 10)) {
    const double thr = cle_threshold(kp);
    t.add(throws([&] { cle_cr_moment(kp, thr); }) ? 0 : 1, at({{"kappa'", kp}}));
  }
}

void suite_one_arm(Tally& t, double eps) {
  const struct {
    double kp, r, value;
  } special[] = {{24.0 / 5, 1.0 / 3, 4.0 / 135}, {16.0 / 3, 0.5, 5.0 / 96}, {24.0 / 5, 2.0 / 3, 7.0 / 80}};
  for (auto s : special)
    t.add(std::fabs(one_arm_exponent(ColoredCleParams::make(s.kp, s.r)) * (1 + eps) - s.value),
          at({{"kappa'", s.kp}, {"r", s.r}}));
  for (double kp : grid(4, 8, 12))
    for (double r : grid(0, 1, 12)) {
      const auto c = ColoredCleParams::make(kp, r);
      const double a = one_arm_exponent(c) * (1 + eps);
      t.add(std::fabs(one_arm_residual(c, a)), at({{"kappa'", kp}, {"r", r}}));
    }
}

void suite_reflection(Tally& t, double eps) {
  for (double g : {0.6, 1.1, 1.45, 1.8}) {
    const auto c = lcft::LcftContext::make(g);
    for (double beta : {c.gamma / 2 + 0.1, 0.77 * c.Q, c.Q - 0.05, c.Q + 0.27})
      for (auto [m1, m2] : {std::pair{1.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}, {0.1, 3.0}}) {
        const auto a = lcft::BoundaryInsertion::make(beta, m1, m2);
        const auto b = lcft::BoundaryInsertion::make(2 * c.Q - beta, m1, m2);
        const double prod = lcft::reflection_coefficient(c, a, false) * lcft::reflection_coefficient(c, b, false);
        t.add(std::fabs(prod * (1 + eps) - 1), at({{"gamma", g}, {"beta", beta}, {"mu1", m1}, {"mu2", m2}}));
      }
  }
}

void suite_shift(Tally& t, double eps) {
  std::mt19937_64 rng(20261017);
  std::uniform_real_distribution<double> U(0.05, 3), V(-2, 2);
  const double e = std::log1p(eps);
  for (double g : {0.5, 1.0, 1.5, 1.9}) {
    const double b = g / 2, Q = b + 1 / b;
    t.add(std::abs(lcft::log_double_gamma(b, Q / 2) + e), at({{"b", b}}) + " at Q/2");
    for (int i = 0; i < 40; ++i) {
      const cplx z(U(rng), V(rng));
      const auto w = at({{"b", b}, {"re z", z.real()}, {"im z", z.imag()}});
      const double l2pi = std::log(2 * pi);
      // Gamma_b(z+b)/Gamma_b(z) = sqrt(2 pi) b^(bz-1/2) / Gamma(bz), and b <-> 1/b
      cplx lhs = lcft::log_double_gamma(b, z + b) - lcft::log_double_gamma(b, z);
      cplx rhs = 0.5 * l2pi + (b * z - 0.5) * std::log(b) - lngamma(b * z);
      t.add(rel_exp(lhs - rhs + e), "b-shift " + w);
      lhs = lcft::log_double_gamma(b, z + 1 / b) - lcft::log_double_gamma(b, z);
      rhs = 0.5 * l2pi + (z / b - 0.5) * std::log(1 / b) - lngamma(z / b);
      t.add(rel_exp(lhs - rhs + e), "1/b-shift " + w);
      // S_b(z+b) = 2 sin(pi b z) S_b(z), S_b(z) S_b(Q-z) = 1
      const cplx zz(U(rng) * Q / 3.2, V(rng));
      lhs = lcft::log_double_sine(b, zz + b) - lcft::log_double_sine(b, zz);
      t.add(std::abs(std::exp(lhs + e) / (2.0 * std::sin(pi * b * zz)) - 1.0), "sine shift " + w);
      t.add(rel_exp(lcft::log_double_sine(b, zz) + lcft::log_double_sine(b, Q - zz) + e), "sine reflection " + w);
    }
  }
}

void suite_ratio(Tally& t, double eps) {
  std::mt19937_64 rng(4135);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 200; ++i) {
    const double k = 2.05 + 1.9 * U(rng);
    const double rho = -2 + (k - 2) * (0.03 + 0.94 * U(rng));
    for (const auto& r : lcft::ratio_identity_residuals(k, rho))
      t.add(std::fabs(r.gammaSide * (1 + eps) - r.trigSide) / std::fabs(r.trigSide),
            r.name + " " + at({{"kappa", k}, {"rho", rho}}));
  }
}

// five-point central difference of log R in mu1
void suite_refl_derivative(Tally& t, double eps) {
  for (double g : {1.1, 1.7}) {
    const auto c = lcft::LcftContext::make(g);
    for (double beta : {c.gamma / 2 + 0.2, 0.5 * (c.gamma / 2 + c.Q), c.Q - 0.1})
      for (auto [m1, m2] : {std::pair{1.0, 2.0}, {3.0, 0.2}, {0.05, 5.0}}) {
        const double h = 1e-3 * m1;
        auto L = [&](double x) {
          return std::log(std::fabs(lcft::reflection_coefficient(c, lcft::BoundaryInsertion::make(beta, x, m2), false)));
        };
        const double fd = (8 * (L(m1 + h) - L(m1 - h)) - (L(m1 + 2 * h) - L(m1 - 2 * h))) / (12 * h);
        const double an = lcft::refl_log_derivative(c, beta, m1, m2) * (1 + eps);
        t.add(std::fabs(fd - an) / std::max(1.0, std::fabs(an)),
              at({{"gamma", g}, {"beta", beta}, {"mu1", m1}, {"mu2", m2}}));
      }
  }
}

struct SuiteDef {
  double tolerance;
  std::function<void(Tally&, double)> body;
};

const std::map<std::string, SuiteDef>& suites() {
  static const std::map<std::string, SuiteDef> s = {
      {"normalization", {1e-12, suite_normalization}},
      {"duality", {1e-12, suite_duality}},
      {"k4-limits", {1e-3, suite_k4}},
      {"divergence", {0.5, suite_divergence}},
      {"one-arm", {1e-9, suite_one_arm}},
      {"reflection-identity", {1e-8, suite_reflection}},
      {"shift-equations", {1e-9, suite_shift}},
      {"ratio-identities", {1e-8, suite_ratio}},
      {"reflection-derivative", {1e-6, suite_refl_derivative}},
  };
  return s;
}

}  // namespace

std::vector<std::string> suite_names() {
  // run order: cheap formula checks first
  return {"normalization",       "duality",         "k4-limits",        "divergence",           "one-arm",
          "reflection-identity", "shift-equations", "ratio-identities", "reflection-derivative"};
}

SuiteReport run_suite(const std::string& name, double perturb) {
  const auto it = suites().find(name);
  if (it == suites().end()) throw DomainError("unknown suite '" + name + "'");
  Tally t;
  t.rep.name = name;
  t.rep.tolerance = it->second.tolerance;
  it->second.body(t, perturb);
  t.rep.passed = t.rep.checks > 0 && t.rep.maxResidual < t.rep.tolerance;
  return t.rep;
}

}  // namespace bcle::cli
