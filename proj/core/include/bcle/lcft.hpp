#pragma once

#include <complex>
#include <string>
#include <vector>

namespace bcle::lcft {

using cplx = std::complex<double>;

struct LcftContext {
  double gamma;
  double Q;
  double b;
  static LcftContext make(double gamma);
};

// boundary cosmological constants mu1, mu2 >= 0, mu1 + mu2 > 0
struct BoundaryInsertion {
  double beta;
  double mu1;
  double mu2;
  static BoundaryInsertion make(double beta, double mu1, double mu2);
  // Re sigma = Q/2, Im sigma = -ln(mu)/(pi gamma); only for mu > 0
  cplx sigma1(const LcftContext& c) const;
  cplx sigma2(const LcftContext& c) const;
};

struct WeightTriple {
  double W1, W2, W3;
  double beta(const LcftContext& c, int i) const;
  double beta_bar(const LcftContext& c) const;
  // beta_i, or 2Q - beta_i when W_i < gamma^2/2
  double beta_tilde(const LcftContext& c, int i) const;
  bool h_bound_ok(const LcftContext& c) const;
};

// Barnes double gamma with Gamma_b((b+1/b)/2) = 1; meromorphic continuation
// through the b-shift equation.
cplx log_double_gamma(double b, cplx z);
cplx log_double_gamma(const LcftContext& c, cplx z);
// the integral representation alone, Re z > 0
cplx log_double_gamma_integral(double b, cplx z);

// S_b(z) = Gamma_b(z) / Gamma_b(Q - z)
cplx log_double_sine(double b, cplx z);
cplx double_sine(const LcftContext& c, cplx z);
// sinh integral representation, 0 < Re z < b + 1/b
cplx log_double_sine_integral(double b, cplx z);

double reflection_coefficient(const LcftContext& c, const BoundaryInsertion& ins, bool normalized);
double h_coefficient(const LcftContext& c, double beta1, double beta2, double beta3);

double qd_length_density(const LcftContext& c, double W, double mu1, double mu2, double ell);
double qt_length_density(const LcftContext& c, const WeightTriple& wt, double ell);

// d/dmu1 log R(beta, mu1, mu2), beta in (gamma/2, Q)
double refl_log_derivative(const LcftContext& c, double beta, double mu1, double mu2);

double qa_moment(const LcftContext& c, double W, double t, double y);
double gqa_moment(const LcftContext& c, double W, double t, double y);
// +inf for p >= gamma^2/4
double levy_moment(const LcftContext& c, double p);

struct RatioResidual {
  std::string name;
  double gammaSide;
  double trigSide;
  double residual;
};

// Coefficient identities of the simple regime at (kappa, rho), and of the
// nonsimple regime at kappa' = 16/kappa for both child weights rho'.
std::vector<RatioResidual> ratio_identity_residuals(double kappa, double rho);

}  // namespace bcle::lcft
