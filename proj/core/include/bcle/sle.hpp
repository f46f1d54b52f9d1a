#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcle/exact.hpp"
#include "bcle/rng.hpp"

namespace bcle::sle {

enum class Orientation { Clockwise, Counterclockwise };
const char* to_string(Orientation o);

// radial SLE_kappa(rho; kappa-6-rho) from 1 to 0
struct BcleParams {
  double kappa;
  double rho;
  exact::Regime regime;
  static BcleParams from(const exact::SimpleParams& p);
  static BcleParams from(const exact::NonSimpleParams& p);
  static BcleParams from(const exact::K4Params& p);
  // dispatches on kappa: (2,4) simple, 4, (4,8) nonsimple
  static BcleParams make(double kappa, double rho);
  exact::OrientedValue exact_moment(double lambda) const;
  double threshold() const;
};

struct SimConfig {
  double dt = 3e-3;             // step cap
  long maxSteps = 20'000'000;   // per sample, then censored
  double gapTolerance = 1e-10;  // closure when the collapsing arc drops below this
  // "implicit-corner": implicit pole solves, multiplicative residual arc near closure
  std::string reflectionScheme = "implicit-corner";
  double cornerFactor = 2e-3;  // h <= cornerFactor * (collapsing arc)^2
  double gapFactor = 0.1;      // h <= max(minStep, gapFactor * (small gap)^2)
  double minStep = 1e-6;
  void validate() const;
  // every step-size control halved
  SimConfig refined() const;
};

struct RadialState {
  double capacityTime = 0;
  double drivingAngle = 0;
  double v1 = 0, v2 = 0;
  double remainingArc = 0;
};

struct LoopSample {
  double sigma1 = 0;
  Orientation orientation = Orientation::Clockwise;
  bool valid = false;
  long steps = 0;
  double cr() const;
};

// One step of the angular SDE per call. Gaps X = w - v1, Y = v2 - w and the
// residual arc R = 2 pi - X - Y are the state.
class RadialIntegrator {
 public:
  RadialIntegrator(const BcleParams& p, const SimConfig& cfg);
  // false once the loop around 0 has closed
  bool step(Rng& rng);
  bool closed() const { return closed_; }
  Orientation orientation() const { return cw_ ? Orientation::Clockwise : Orientation::Counterclockwise; }
  RadialState state() const;
  long steps() const { return steps_; }
  double last_step() const { return lastH_; }

 private:
  double r1_, r2_, a1_, a2_, sk_;
  SimConfig cfg_;
  double X_ = 0, Y_ = 0, R_;
  double W_ = 0, t_ = 0, lastH_ = 0;
  long steps_ = 0;
  bool closed_ = false, cw_ = false;
};

LoopSample sample_bcle_loop(const BcleParams& p, const SimConfig& cfg, Rng& rng);
LoopSample sample_bcle_loop(const BcleParams& p, const SimConfig& cfg, std::uint64_t seed);

struct HullDetail {
  LoopSample geometric;
  LoopSample driving;
  double closureDistance = 0;  // gap between tip and the hit point at geometric closure, relative to |tip|
  int winding = 0;             // of the closed loop around 0
};

// Slow geometric reference: the same driving path, trace rebuilt from radial
// slit maps, closure and orientation read off the trace.
LoopSample hull_reference_sample(const BcleParams& p, const SimConfig& cfg, std::uint64_t seed);
HullDetail hull_reference_detail(const BcleParams& p, const SimConfig& cfg, std::uint64_t seed);

struct RawSample {
  std::uint64_t seed;
  int level;  // 0 coarse, 1 refined
  int replica;
  LoopSample s;
};

struct MomentEstimate {
  double lambda;
  exact::OrientedValue mean;  // extrapolated 2*fine - coarse
  exact::OrientedValue se;
  exact::OrientedValue coarse, coarseSe;
  exact::OrientedValue fine, fineSe;
};

struct MomentReport {
  std::vector<MomentEstimate> moments;
  long samplesPerLevel = 0;
  long censored = 0;
  double censoredFraction = 0;
  double meanSteps = 0;
  // time budget ran out; samplesPerLevel then counts what was drawn
  bool partial = false;
};

struct EstimateOptions {
  SimConfig cfg;
  int threads = 1;
  int batches = 100;
  std::vector<RawSample>* raw = nullptr;
  // wall-clock seconds, split evenly over the two levels; 0 = none
  double timeBudget = 0;
};

// E[exp(-lambda sigma1); orientation] at cfg and cfg.refined(), linearly
// extrapolated; batch-means standard errors.
MomentReport estimate_oriented_cr_moments(const BcleParams& p, const std::vector<double>& lambdas, long nSamples,
                                          std::uint64_t seed, const EstimateOptions& opt = {});

struct ScalarEstimate {
  double mean;
  double se;
};

// E[exp(-lambda tau)] for the angle diffusion of radial SLE_kappa'(kappa'-6)
// leaving (0, 2 pi)
ScalarEstimate cle_diffusion_check(double kappaPrime, double lambda, long nSamples, std::uint64_t seed,
                                   double dt = 1e-3, double cornerFactor = 5e-4);

struct OrientedEstimate {
  exact::OrientedValue mean, se;
};

// Brownian motion from 0 leaving (rho pi/2, (rho+2) pi/2); top exit counts as
// clockwise
OrientedEstimate bm_exit_check(double rho, double lambda, long nSamples, std::uint64_t seed, int threads = 1);

}  // namespace bcle::sle
