#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bcle/rng.hpp"

namespace bcle::lattice {

enum class Boundary { Free };
enum class Color : std::uint8_t { Blue = 0, Red = 1 };

// Box Lambda_{L/2} = [-L/2, L/2]^2, so (L+1)^2 sites.
struct LatticeConfig {
  int L = 64;
  int q = 2;
  double r = 0.5;
  Boundary boundary = Boundary::Free;
  double betaC() const;
  double pC() const;
  static LatticeConfig make(int L, int q, double r);
};

// Free-boundary rectangle, site index x + w*y.
struct Grid {
  int w = 0, h = 0;
  int size() const { return w * h; }
  static Grid box(const LatticeConfig& c) { return {c.L + 1, c.L + 1}; }
};

struct SpinField {
  Grid grid;
  std::vector<std::uint8_t> spin;  // 0..q-1
  static SpinField uniform(Grid g, int value = 0);
};

// right[v]: bond v -- v+1, up[v]: bond v -- v+w
struct FkBonds {
  Grid grid;
  std::vector<std::uint8_t> right, up;
  // cluster minimum per site, left by sw_sweep; clear after editing bonds
  std::vector<int> label;
  // cluster label (minimal site index) per site
  std::vector<int> clusters() const;
};

struct FuzzyColoring {
  Grid grid;
  std::vector<Color> color;
  std::vector<int> cluster;  // FK cluster label used for the coloring
};

// bond probability p between equal spins, q colours
void sw_sweep(SpinField& spins, FkBonds& bonds, int q, double p, Rng& rng);
inline void sw_sweep(SpinField& spins, FkBonds& bonds, const LatticeConfig& c, Rng& rng) {
  sw_sweep(spins, bonds, c.q, c.pC(), rng);
}

FuzzyColoring color_clusters(const FkBonds& bonds, double r, Rng& rng);

// Runs burnIn sweeps from the all-equal state, then colours the clusters with
// a stream separate from the dynamics.
FuzzyColoring fuzzy_sample(const LatticeConfig& c, int burnIn, std::uint64_t seed);
constexpr int kMinBurnIn = 10;

// Arm events live in the annulus {m < d <= n}, d the sup-distance to the
// centre of the box: a path of sites with d > m from a site next to Lambda_m
// to the layer d = n. Colour arms use nearest-neighbour paths, FK arms open
// bonds.
bool one_arm_event(const FuzzyColoring& col, int m, int n, Color c);
bool fk_arm_event(const FkBonds& b, int m, int n);
// For fixed n, flags for every m in [1, n): out[m] = A(m, n).
std::vector<std::uint8_t> arm_profile(const FuzzyColoring& col, int n, Color c);
// blue and red in one pass, indexed by Color
std::array<std::vector<std::uint8_t>, 2> arm_profiles(const FuzzyColoring& col, int n);
std::vector<std::uint8_t> fk_arm_profile(const FkBonds& b, int n);
// Independent oracle: a *-connected circuit of colour c in the annulus that
// winds around Lambda_m.
bool star_circuit(const FuzzyColoring& col, int m, int n, Color c);

struct ArmMeasurement {
  int m = 0, n = 0;
  long nSamples = 0;
  long blueHits = 0, redHits = 0, fkHits = 0;
  bool fkMeasured = true;
  std::uint64_t seed = 0;
  bool lowStatistics = false;  // fewer than minHits of some measured kind
  bool partial = false;        // stopped by the time budget
};

struct ArmOptions {
  int burnIn = 2000;
  int thin = 5;
  int chains = 1;  // independent replicas, split seeds
  int threads = 1;
  long minHits = 100;
  // FK arms at every outer radius; by default only at the largest
  bool fkAllScales = false;
  // wall-clock seconds for the whole run, 0 = none; measurements stop when it
  // runs out
  double timeBudget = 0;
};

// scales: (m, n) with n <= L/2 and m < n
std::vector<ArmMeasurement> run_arm_experiment(const LatticeConfig& c, const std::vector<std::pair<int, int>>& scales,
                                               long nSamples, std::uint64_t seed, const ArmOptions& opt = {});
// m = 4, 8, ... < n, n = L/2
std::vector<std::pair<int, int>> dyadic_scales(int L);
// every dyadic pair 4 <= m < n <= L/2
std::vector<std::pair<int, int>> dyadic_pairs(int L);

enum class ArmKind { Blue, Red, Fk };

struct ExponentFit {
  double exponent = 0;
  double stderr_ = 0;
  double intercept = 0;
  double chi2 = 0;
  int dof = 0;
  std::vector<double> residuals;  // standardized, per used scale
  std::vector<int> used;          // indices into the measurements
};

// Weighted least squares of log P on log(m/n), binomial weights, over the
// `largest` scales with the largest aspect ratio n/m at the largest n.
// Scales without hits are skipped.
ExponentFit fit_exponent(const std::vector<ArmMeasurement>& ms, ArmKind kind, int largest = 4);

// P(l,m) P(m,n) / P(l,n) for every triple l < m < n whose three annuli were
// measured
struct QuasiMultiplicativity {
  int l, m, n;
  double ratio;
};
std::vector<QuasiMultiplicativity> quasi_multiplicativity(const std::vector<ArmMeasurement>& ms, ArmKind kind);

}  // namespace bcle::lattice
