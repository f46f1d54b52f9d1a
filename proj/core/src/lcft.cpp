#include "bcle/lcft.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>

#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "bcle/errors.hpp"
#include "bcle/exact.hpp"
#include "bcle/quad.hpp"

namespace bcle::lcft {

using std::numbers::pi;

namespace {

constexpr int kTerms = 96;
const double kLog2Pi = std::log(2 * pi);

std::string fmt(double x) { return std::to_string(x); }
std::string fmt(cplx z) { return "(" + fmt(z.real()) + "," + fmt(z.imag()) + ")"; }

cplx log_gamma(cplx z) {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
  const double k = std::round(z.real());
  if (k <= 0 && std::fabs(z.real() - k) < 1e-13 && std::fabs(z.imag()) < 1e-13)
    throw PoleError("Gamma pole at " + fmt(z));
  gsl_sf_result lnr, arg;
  if (gsl_sf_lngamma_complex_e(z.real(), z.imag(), &lnr, &arg) != GSL_SUCCESS)
    throw NumericError("complex log-gamma failed at " + fmt(z));
  return {lnr.val, arg.val};
}

template <class F>
cplx integrate(F f, double a, double b, double* err) {
  return integrate_abs(f, a, b, 1e-14, err);
}

// Coefficients (scaled by ts^n) of D(t) = 4 sinh(bt/2) sinh(t/2b) / t^2.
std::array<double, kTerms + 2> sinh_pair_series(double b, double ts) {
  const double Q = b + 1 / b, d = std::fabs(b - 1 / b);
  std::array<double, kTerms + 2> D{};
  for (int j = 0; 2 * j < kTerms + 2; ++j) {
    const int m = 2 * j + 2;
    // 2[(Q/2)^m - (d/2)^m]/m!, with the difference taken in relative form
    const double lead = std::exp(m * std::log(Q / 2) - std::lgamma(m + 1.0) + 2 * j * std::log(ts));
    D[2 * j] = 2 * lead * -std::expm1(m * std::log(d / Q));
  }
  return D;
}

// g = p / D for power series with D[0] = 1
template <size_t N>
std::array<cplx, N> divide(const std::array<cplx, N>& p, const std::array<double, N>& D) {
  std::array<cplx, N> g{};
  for (size_t n = 0; n < N; ++n) {
    cplx s = p[n];
    for (size_t k = 2; k <= n; k += 2) s -= D[k] * g[n - k];
    g[n] = s / D[0];
  }
  return g;
}

double series_radius(double b, cplx a) {
  return std::min(0.5 * pi * std::min(b, 1 / b), 3.0 / std::max(1.0, std::abs(a)));
}

}  // namespace

LcftContext LcftContext::make(double gamma) {
  if (!(gamma > 0 && gamma < 2)) throw DomainError("gamma=" + fmt(gamma) + " not in (0,2)");
  return {gamma, gamma / 2 + 2 / gamma, gamma / 2};
}

BoundaryInsertion BoundaryInsertion::make(double beta, double mu1, double mu2) {
  if (!(mu1 >= 0 && mu2 >= 0 && mu1 + mu2 > 0))
    throw DomainError("need mu1, mu2 >= 0 with mu1 + mu2 > 0");
  return {beta, mu1, mu2};
}

cplx BoundaryInsertion::sigma1(const LcftContext& c) const {
  if (!(mu1 > 0)) throw DomainError("sigma1 needs mu1 > 0");
  return {c.Q / 2, -std::log(mu1) / (pi * c.gamma)};
}

cplx BoundaryInsertion::sigma2(const LcftContext& c) const {
  if (!(mu2 > 0)) throw DomainError("sigma2 needs mu2 > 0");
  return {c.Q / 2, -std::log(mu2) / (pi * c.gamma)};
}

double WeightTriple::beta(const LcftContext& c, int i) const {
  const double W = i == 1 ? W1 : i == 2 ? W2 : W3;
  return c.gamma + (2 - W) / c.gamma;
}

double WeightTriple::beta_bar(const LcftContext& c) const { return beta(c, 1) + beta(c, 2) + beta(c, 3); }

double WeightTriple::beta_tilde(const LcftContext& c, int i) const {
  const double W = i == 1 ? W1 : i == 2 ? W2 : W3;
  const double bt = beta(c, i);
  return W > c.gamma * c.gamma / 2 ? bt : 2 * c.Q - bt;
}

bool WeightTriple::h_bound_ok(const LcftContext& c) const {
  const double t1 = beta_tilde(c, 1), t2 = beta_tilde(c, 2), t3 = beta_tilde(c, 3);
  return t1 < c.Q && t2 < c.Q && std::fabs(t1 - t2) < t3 && t1 + t2 + t3 > c.gamma;
}

cplx log_double_gamma_integral(double b, cplx z) {
  if (!(b > 0)) throw DomainError("b must be positive");
  if (!(z.real() > 0)) throw DomainError("integral form needs Re z > 0, got " + fmt(z));
  const double Q = b + 1 / b;
  const cplx a = Q / 2 - z;
  if (a == cplx(0)) return 0;

  // [0, ts]: power series of the whole integrand, counterterms included
  const double ts = series_radius(b, a);
  const auto D = sinh_pair_series(b, ts);
  std::array<cplx, kTerms + 2> P{};
  P[0] = a;
  for (int n = 1; n < kTerms + 2; ++n) P[n] = P[n - 1] * a * ts / double(n + 1);
  const auto G = divide(P, D);
  cplx head = 0;
  double fact = 1;  // ts^n / n!
  for (int n = 1; n <= kTerms; ++n) {
    fact *= ts / n;
    const cplx cn = G[n + 1] / ts - a * a / 2.0 * (n % 2 ? -fact : fact);
    head += cn / double(n);
  }

  // [ts, T]: e^{-Re z t} and e^{-t} both negligible past T
  const double rate = std::min({z.real(), 1.0, Q / 2});
  const double T = std::max(2 * ts, 42 / rate);
  auto f = [&](double t) -> cplx {
    const cplx F = (std::exp(-z * t) - std::exp(-Q * t / 2)) / (std::expm1(-b * t) * std::expm1(-t / b));
    return (F - a * a / 2.0 * std::exp(-t)) / t;
  };
  double err = 0;
  const cplx body = integrate(f, ts, T, &err);
  if (!(err < 1e-11 * std::max(1.0, std::abs(body))))
    throw NumericError("double gamma quadrature did not converge at z=" + fmt(z));
  return head + body - a / ts;
}

cplx log_double_gamma(double b, cplx z) {
  const double Q = b + 1 / b;
  const double lo = Q / 2 - b / 2, hi = Q / 2 + b / 2;
  if (std::fabs(z.real()) > 1e4 / std::min(b, 1.0)) throw DomainError("|Re z| too large: " + fmt(z));
  const double lb = std::log(b);
  cplx acc = 0;
  while (z.real() < lo) {
    // Gamma_b(z) = Gamma_b(z+b) Gamma(bz) / (sqrt(2pi) b^{bz-1/2})
    acc += log_gamma(b * z) - 0.5 * kLog2Pi - (b * z - 0.5) * lb;
    z += b;
  }
  while (z.real() > hi) {
    const cplx zm = z - b;
    acc += 0.5 * kLog2Pi + (b * zm - 0.5) * lb - log_gamma(b * zm);
    z = zm;
  }
  return acc + log_double_gamma_integral(b, z);
}

cplx log_double_gamma(const LcftContext& c, cplx z) { return log_double_gamma(c.b, z); }

cplx log_double_sine(double b, cplx z) { return log_double_gamma(b, z) - log_double_gamma(b, b + 1 / b - z); }

cplx double_sine(const LcftContext& c, cplx z) { return std::exp(log_double_sine(c.b, z)); }

cplx log_double_sine_integral(double b, cplx z) {
  const double Q = b + 1 / b;
  if (!(z.real() > 0 && z.real() < Q)) throw DomainError("need 0 < Re z < Q, got " + fmt(z));
  const cplx a = Q / 2 - z;
  if (a == cplx(0)) return 0;

  const double ts = series_radius(b, a);
  const auto D = sinh_pair_series(b, ts);
  // 2 sinh(at)/t, scaled
  std::array<cplx, kTerms + 2> P{};
  cplx ap = 2.0 * a;
  double sc = 1;
  for (int n = 0; n < kTerms + 2; n += 2) {
    P[n] = ap * sc;
    ap *= a * a;
    sc *= ts * ts / ((n + 2.0) * (n + 3.0));
  }
  const auto G = divide(P, D);
  cplx head = 0;
  for (int n = 2; n < kTerms + 2; n += 2) head += G[n] / (ts * (n - 1));

  const double rate = std::min(z.real(), Q - z.real());
  const double T = std::max(2 * ts, 42 / rate);
  auto f = [&](double t) -> cplx {
    const cplx num = std::exp((a - Q / 2) * t) - std::exp(-(a + Q / 2) * t);
    return num / (std::expm1(-b * t) * std::expm1(-t / b)) / t;
  };
  double err = 0;
  const cplx body = integrate(f, ts, T, &err);
  if (!(err < 1e-11 * std::max(1.0, std::abs(body))))
    throw NumericError("double sine quadrature did not converge at z=" + fmt(z));
  return head + body - 2.0 * a / ts;
}

namespace {

cplx log_refl_prefactor(const LcftContext& c, double beta) {
  const double g = c.gamma, d = c.Q - beta;
  if (d == 0) throw PoleError("beta = Q");
  return (2 / g * d - 0.5) * kLog2Pi + (g / 2 * d - 0.5) * std::log(2 / g) - std::log(cplx(d)) -
         2 / g * d * std::lgamma(1 - g * g / 4) + log_double_gamma(c, beta - g / 2) - log_double_gamma(c, d);
}

double real_part_checked(cplx v, const char* what) {
  if (!(std::fabs(v.imag()) <= 1e-10 * std::fabs(v.real())))
    throw NumericError(std::string(what) + " has a non-negligible imaginary part");
  return v.real();
}

}  // namespace

double reflection_coefficient(const LcftContext& c, const BoundaryInsertion& ins, bool normalized) {
  const double d = c.Q - ins.beta;
  cplx lr = log_refl_prefactor(c, ins.beta);
  if (ins.mu1 > 0 && ins.mu2 > 0) {
    const cplx s1 = ins.sigma1(c), s2 = ins.sigma2(c);
    lr += d / c.gamma * (std::log(ins.mu1) + std::log(ins.mu2));
    lr -= log_double_sine(c.b, ins.beta / 2 + s2 - s1) + log_double_sine(c.b, ins.beta / 2 + s1 - s2);
  } else {
    lr += 2 / c.gamma * d * std::log(ins.mu1 + ins.mu2);
  }
  const double rbar = real_part_checked(std::exp(lr), "reflection coefficient");
  if (normalized) return rbar;
  const double x = 1 - 2 / c.gamma * d;
  if (x <= 0 && std::fabs(x - std::round(x)) < 1e-13) throw PoleError("Gamma(1 - 2(Q-beta)/gamma) pole");
  return -std::tgamma(x) * rbar;
}

double h_coefficient(const LcftContext& c, double b1, double b2, double b3) {
  const double g = c.gamma, Q = c.Q, bb = b1 + b2 + b3;
  cplx l = ((2 * Q - bb) / g + 1) * kLog2Pi + ((g / 2 - 2 / g) * (Q - bb / 2) - 1) * std::log(2 / g) -
           (2 * Q - bb) / g * std::lgamma(1 - g * g / 4) - log_gamma((bb - 2 * Q) / g);
  l += log_double_gamma(c, bb / 2 - Q) + log_double_gamma(c, bb / 2 - b2) + log_double_gamma(c, bb / 2 - b1) +
       log_double_gamma(c, Q - bb / 2 + b3);
  l -= log_double_gamma(c, Q) + log_double_gamma(c, Q - b1) + log_double_gamma(c, Q - b2) +
       log_double_gamma(c, b3);
  return real_part_checked(std::exp(l), "H coefficient");
}

double qd_length_density(const LcftContext& c, double W, double mu1, double mu2, double ell) {
  if (!(W > 0 && W < c.gamma * c.Q)) throw DomainError("W=" + fmt(W) + " not in (0, gamma Q)");
  if (!(ell > 0)) throw DomainError("ell must be positive");
  const auto ins = BoundaryInsertion::make(c.gamma + (2 - W) / c.gamma, mu1, mu2);
  return reflection_coefficient(c, ins, true) * std::pow(ell, -2 * W / (c.gamma * c.gamma));
}

double qt_length_density(const LcftContext& c, const WeightTriple& wt, double ell) {
  const double h = c.gamma * c.gamma / 2;
  if (!(wt.W1 > 0 && wt.W2 > 0 && wt.W1 != h && wt.W2 != h && wt.W3 > h))
    throw Unsupported("weights outside W1,W2 in (0,g^2/2)u(g^2/2,inf), W3 > g^2/2");
  if (!wt.h_bound_ok(c)) throw Unsupported("weights violate the H-coefficient bounds");
  if (!(ell > 0)) throw DomainError("ell must be positive");
  const double b1 = wt.beta(c, 1), b2 = wt.beta(c, 2), b3 = wt.beta(c, 3), bb = b1 + b2 + b3;
  const double pre = 2 / (c.gamma * (c.Q - b1) * (c.Q - b2) * (c.Q - b3));
  return pre * h_coefficient(c, b1, b2, b3) * std::pow(ell, (bb - 2 * c.Q) / c.gamma - 1);
}

double refl_log_derivative(const LcftContext& c, double beta, double mu1, double mu2) {
  if (!(beta > c.gamma / 2 && beta < c.Q)) throw DomainError("beta=" + fmt(beta) + " not in (gamma/2, Q)");
  if (!(mu1 > 0 && mu2 > 0)) throw DomainError("mu1, mu2 must be positive");
  const double g = c.gamma, h = (c.Q - beta) / 2;
  const double w = (std::log(mu1) - std::log(mu2)) / (pi * g);
  const double lead = (c.Q - beta) / (g * mu1);
  if (w == 0) return lead;
  // sinh(h t)/(sinh(g t/4) sinh(t/g)) = 2 e^{-beta t/2}(1-e^{-2ht})/((1-e^{-gt/2})(1-e^{-2t/g}))
  auto f = [&](double t) {
    const double r = 2 * std::exp(-beta * t / 2) * std::expm1(-2 * h * t) / (std::expm1(-g * t / 2) * std::expm1(-2 * t / g));
    return -r * std::sin(w * t);
  };
  const double T = 2 * 42 / beta;
  double err = 0;
  double I = 0;
  // panels of a few periods each
  const int panels = std::max(1, int(std::ceil(T * std::fabs(w) / (8 * pi))));
  for (int k = 0; k < panels; ++k)
    I += integrate_abs(f, T * k / panels, T * (k + 1) / panels, 1e-12 / panels, &err);
  if (!(err < 1e-10)) throw NumericError("reflection derivative quadrature error " + fmt(err));
  return lead + I / (pi * g * mu1);
}

namespace {

void require_forested(const LcftContext& c, double W) {
  if (!(c.gamma > std::sqrt(2.0) && c.gamma < 2)) throw DomainError("gamma must lie in (sqrt2, 2)");
  if (!(W > 0 && W < c.gamma * c.gamma / 2)) throw DomainError("W=" + fmt(W) + " not in (0, gamma^2/2)");
}

}  // namespace

double qa_moment(const LcftContext& c, double W, double t, double y) {
  require_forested(c, W);
  if (!(t > 0)) throw DomainError("t must be positive");
  if (!(y > -1 && y < 0)) throw Unsupported("y=" + fmt(y) + " not in (-1,0)");
  const double g2 = c.gamma * c.gamma;
  const double s = std::sin((g2 - 2 * W) / 4 * pi * y) / std::sin(g2 / 4 * pi * y);
  return std::pow(t, -y - 1) * std::tgamma(y + 1) / std::pow(1 - 2 * W / g2, 2) * s;
}

double gqa_moment(const LcftContext& c, double W, double t, double y) {
  require_forested(c, W);
  if (!(t > 0)) throw DomainError("t must be positive");
  const double g2 = c.gamma * c.gamma;
  if (!(y > -g2 / 4 && y < 0)) throw Unsupported("y=" + fmt(y) + " not in (-gamma^2/4, 0)");
  const double s = std::sin((g2 - 2 * W) / g2 * pi * y) / std::sin(4 / g2 * pi * y);
  return std::pow(t, -y - 1) * std::tgamma(y + 1) / std::pow(1 - 2 * W / g2, 2) * s;
}

double levy_moment(const LcftContext& c, double p) {
  const double q = 4 / (c.gamma * c.gamma);
  if (p >= 1 / q) return std::numeric_limits<double>::infinity();
  // (4/g^2) Gamma(-qp)/Gamma(-p) = Gamma(1-qp)/Gamma(1-p)
  return std::exp(std::lgamma(1 - q * p) - std::lgamma(1 - p));
}

std::vector<RatioResidual> ratio_identity_residuals(double kappa, double rho) {
  exact::SimpleParams::make(kappa, rho);
  const auto c = LcftContext::make(std::sqrt(kappa));
  const double g = c.gamma, g2 = kappa, k = kappa;
  auto M = [&](double W) {
    return reflection_coefficient(c, BoundaryInsertion::make(g + (2 - W) / g, 1, 0), true);
  };
  auto G = [](double x) { return std::tgamma(x); };
  std::vector<RatioResidual> out;
  auto push = [&](std::string name, double lhs, double rhs) {
    out.push_back({std::move(name), lhs, rhs, std::fabs(lhs - rhs) / std::fabs(rhs)});
  };
  auto wrap = [](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const PoleError& e) {
      throw PoleError(name + ": " + e.what());
    }
  };

  double C1 = 0, C2 = 0, Cb1 = 0, Cb2 = 0;
  wrap("C1/C2", [&] {
    C1 = M(k - 2 - rho) / M(k - 4 - rho) / (G(1 - 2 * (k - 4 - rho) / g2) * G(2 * (k - 2 - rho) / g2));
    C2 = M(rho + 4) / M(rho + 2) / (G(1 - 2 * (rho + 2) / g2) * G(2 * (rho + 4) / g2));
  });
  const double q = (2 * rho + 8 - k) / (k - 2 * rho - 4);
  push("C1/C2", C1 / C2,
       q * q * std::sin(2 * pi / k * (rho + 2)) / std::sin(2 * pi / k * (k - 4 - rho)));

  wrap("Cbar1/Cbar2", [&] {
    const double common = M(k - 2) / (M(rho + 2) * M(k - 4 - rho)) * G(1 - 2 * (k - 2) / g2) /
                          (G(1 - 2 * (rho + 2) / g2) * G(1 - 2 * (k - 4 - rho) / g2));
    Cb1 = (1 - 2 * (k - 2) / g2) / (1 - 2 * (k - 4 - rho) / g2) * common;
    Cb2 = (1 - 2 * (k - 2) / g2) / (1 - 2 * (rho + 2) / g2) * common;
  });
  push("Cbar1/Cbar2", Cb1 / Cb2, (k - 2 * rho - 4) / (2 * rho + 8 - k));

  const double simple = std::pow(q, 4) * (C2 / C1) * std::pow(Cb1 / Cb2, 2);
  push("simple", simple, std::sin(2 * pi / k * (k - 4 - rho)) / std::sin(2 * pi / k * (rho + 2)));

  const double kp = 16 / k;
  const auto [rR, rB] = exact::bcle_child_weights(k, rho);
  for (const auto& [tag, rp] : {std::pair{"red", rR}, std::pair{"blue", rB}}) {
    const std::string sfx = std::string("(") + tag + ")";
    const double Wm = g2 / 4 * rp + g2 - 2, Wp = 2 - g2 / 2 - g2 / 4 * rp;
    const double bp = (2 + Wp) / g, bm = (2 + Wm) / g, b0 = 4 / g - g / 2;
    const double trig = std::sin(2 * pi * (kp - 4 - rp) / kp) / std::sin(2 * pi * (rp + 2) / kp);
    double H = 0, disk = 0;
    wrap("H" + sfx, [&] { H = h_coefficient(c, bp, b0, bm) / h_coefficient(c, bm, b0, bp); });
    push("H" + sfx, H, trig);
    wrap("disk" + sfx, [&] { disk = M(Wp) * M(g2 - Wp) / (M(Wm) * M(g2 - Wm)); });
    push("disk" + sfx, disk, (g2 - 2 * Wm) / (g2 - 2 * Wp));
    const double s = (g2 - 2 * Wp) / (g2 - 2 * Wm);
    push("nonsimple" + sfx, s * s * H * disk / s, trig);
  }
  return out;
}

}  // namespace bcle::lcft
