#pragma once

#include <utility>

namespace bcle::exact {

enum class Regime { Simple, NonSimple, K4 };

// kappa in (2,4), rho in (-2, kappa-4)
struct SimpleParams {
  double kappa;
  double rho;
  static SimpleParams make(double kappa, double rho);
};

// kappa' in (4,8), rho' in (kappa'/2-4, kappa'/2-2)
struct NonSimpleParams {
  double kappaPrime;
  double rhoPrime;
  static NonSimpleParams make(double kappaPrime, double rhoPrime);
};

// kappa = 4, rho in (-2,0)
struct K4Params {
  double rho;
  static K4Params make(double rho);
};

// CLE_{kappa'} percolation with red probability r. kappa = 16/kappa'.
struct ColoredCleParams {
  double kappaPrime;
  double r;
  static ColoredCleParams make(double kappaPrime, double r);
  double kappa() const { return 16.0 / kappaPrime; }
  double beta() const { return 2.0 * r - 1.0; }
};

struct MomentOrder {
  double lambda;
  Regime regime;
  // kappa is ignored for K4; for NonSimple pass kappa'.
  double threshold(double kappa) const;
  bool finite(double kappa) const { return lambda > threshold(kappa); }
};

struct OrientedValue {
  double clockwise = 0;
  double counterclockwise = 0;
  double sum() const { return clockwise + counterclockwise; }
};

// sin(a*theta)/sin(theta) with theta = (pi/4) sqrt(disc). Negative disc gives
// the sinh form, |theta| -> 0 gives a.
double sine_ratio(double a, double disc);

double rho_from_r(double kappa, double r);
double r_from_rho(double kappa, double rho);

// (rho_R', rho_B') for the kappa' = 16/kappa children of BCLE_kappa(rho)
std::pair<double, double> bcle_child_weights(double kappa, double rho);

OrientedValue cr_moment_simple(const SimpleParams& p, double lambda);
OrientedValue cr_moment_nonsimple(const NonSimpleParams& p, double lambdaPrime);
OrientedValue cr_moment_k4(const K4Params& p, double lambda);

// E[CR^lambda] of the non-nested CLE_{kappa'} loop around 0
double cle_cr_moment(double kappaPrime, double lambda);
double cle_threshold(double kappaPrime);

// B(lambda) = E[CR(0,D_1)^lambda; D_1 nonempty], assembled from its parts
double child_cr_moment(const ColoredCleParams& c, double lambda);
// 1 - B(lambda) in closed factored form
double one_arm_gap(const ColoredCleParams& c, double lambda);
// cross-multiplied form of the one-arm equation at exponent x
double one_arm_residual(const ColoredCleParams& c, double x);
double one_arm_exponent(const ColoredCleParams& c);
double fk_one_arm_limit(double kappaPrime);
// A(lambda) / (1 - B(lambda))
double loop_moment_fixed_point(const ColoredCleParams& c, double lambda);

}  // namespace bcle::exact
