#include "bcle/sle.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <thread>

#include "bcle/errors.hpp"

namespace bcle::sle {

using std::numbers::pi;
constexpr double kTwoPi = 2 * pi;

namespace {

// Root of x - c cot(x/2) = xi near the pole at 0, with cot(x/2) - 2/x frozen
// at x0. Exact for the Bessel part, so the gap never goes negative.
double implicit_pole(double xi, double c, double x0) {
  const double reg = x0 > 0 ? 1 / std::tan(x0 / 2) - 2 / x0 : 0;
  const double xp = xi + c * reg;
  return 0.5 * (xp + std::sqrt(xp * xp + 8 * c));
}

double cot_half(double x) { return x > 0 ? 1 / std::tan(x / 2) : 0; }

std::string fmt(double x) { return std::to_string(x); }

}  // namespace

const char* to_string(Orientation o) { return o == Orientation::Clockwise ? "cw" : "ccw"; }

BcleParams BcleParams::from(const exact::SimpleParams& p) { return {p.kappa, p.rho, exact::Regime::Simple}; }
BcleParams BcleParams::from(const exact::NonSimpleParams& p) {
  return {p.kappaPrime, p.rhoPrime, exact::Regime::NonSimple};
}
BcleParams BcleParams::from(const exact::K4Params& p) { return {4.0, p.rho, exact::Regime::K4}; }

BcleParams BcleParams::make(double kappa, double rho) {
  if (kappa == 4) return from(exact::K4Params::make(rho));
  if (kappa > 4) return from(exact::NonSimpleParams::make(kappa, rho));
  return from(exact::SimpleParams::make(kappa, rho));
}

exact::OrientedValue BcleParams::exact_moment(double lambda) const {
  switch (regime) {
    case exact::Regime::Simple:
      return exact::cr_moment_simple({kappa, rho}, lambda);
    case exact::Regime::NonSimple:
      return exact::cr_moment_nonsimple({kappa, rho}, lambda);
    case exact::Regime::K4:
      return exact::cr_moment_k4({rho}, lambda);
  }
  return {};
}

double BcleParams::threshold() const { return exact::MomentOrder{0, regime}.threshold(kappa); }

void SimConfig::validate() const {
  if (!(dt > 0)) throw DomainError("dt must be positive");
  if (!(gapTolerance > 0 && gapTolerance < 1e-2)) throw DomainError("gapTolerance must lie in (0, 1e-2)");
  if (maxSteps <= 0) throw DomainError("maxSteps must be positive");
  if (!(cornerFactor > 0 && gapFactor > 0 && minStep > 0)) throw DomainError("step factors must be positive");
  if (reflectionScheme != "implicit-corner") throw Unsupported("reflection scheme " + reflectionScheme);
}

SimConfig SimConfig::refined() const {
  SimConfig c = *this;
  c.dt /= 2;
  c.cornerFactor /= 2;
  c.gapFactor /= 2;
  c.minStep /= 2;
  return c;
}

double LoopSample::cr() const { return std::exp(-sigma1); }

RadialIntegrator::RadialIntegrator(const BcleParams& p, const SimConfig& cfg)
    : r1_(p.rho), r2_(p.kappa - 6 - p.rho), a1_(p.rho + 2), a2_(p.kappa - 4 - p.rho), sk_(std::sqrt(p.kappa)),
      cfg_(cfg), R_(kTwoPi) {
  cfg.validate();
}

RadialState RadialIntegrator::state() const {
  return {t_, W_, W_ - X_, W_ + Y_, R_};
}

bool RadialIntegrator::step(Rng& rng) {
  if (closed_) return false;
  std::normal_distribution<double> nd;
  const auto& c = cfg_;
  double h, dW;
  if (R_ >= X_ && R_ >= Y_) {
    // both force points may be close to w: implicit in each gap, two
    // Gauss-Seidel sweeps, sweep order alternating to cancel its bias
    const double g = std::min(X_, Y_);
    h = std::min(c.dt, std::max(c.minStep, c.gapFactor * g * g));
    const double s = sk_ * std::sqrt(h) * nd(rng);
    const bool xFirst = steps_ & 1;
    double Xn = X_, Yn = Y_, dA = 0.5 * h * cot_half(X_), dB = 0.5 * h * cot_half(Y_);
    for (int k = 0; k < 4; ++k) {
      if ((k % 2 == 0) == xFirst) {
        Xn = implicit_pole(X_ + s - r2_ * dB, a1_ * h / 2, X_);
        dA = 0.5 * h * cot_half(Xn);
      } else {
        Yn = implicit_pole(Y_ - s - r1_ * dA, a2_ * h / 2, Y_);
        dB = 0.5 * h * cot_half(Yn);
      }
    }
    dW = s + r1_ * dA - r2_ * dB;
    X_ = Xn;
    Y_ = Yn;
    R_ = kTwoPi - X_ - Y_;
  } else {
    // one gap near 2 pi: the small gap G and the residual arc R collapse
    // together. R is advanced multiplicatively so it cannot hit 0 early.
    const bool xBig = X_ > Y_;
    const double G = xBig ? Y_ : X_;
    const double a = xBig ? a2_ : a1_;
    const double rr = xBig ? r1_ : r2_;
    const double E = G + R_;
    h = std::min({c.dt, c.cornerFactor * E * E, std::max(c.minStep, c.gapFactor * G * G)});
    const double s0 = sk_ * std::sqrt(h) * nd(rng);
    const double s = xBig ? s0 : -s0;
    double Gn = G, Rn = R_, En = E, dBig = 0;
    for (int k = 0; k < 2; ++k) {
      dBig = -0.5 * h * cot_half(En);
      Gn = implicit_pole(G - s - rr * dBig, a * h / 2, G);
      const double rate = h * std::sin(R_ / 2) / (R_ * std::sin(En / 2) * std::sin(Gn / 2));
      Rn = R_ * std::exp(-rate);
      En = Gn + Rn;
    }
    const double dSmall = 0.5 * h * cot_half(Gn);
    dW = xBig ? s0 + r1_ * dBig - r2_ * dSmall : s0 + r1_ * dSmall - r2_ * dBig;
    R_ = Rn;
    if (xBig) {
      Y_ = Gn;
      X_ = kTwoPi - En;
    } else {
      X_ = Gn;
      Y_ = kTwoPi - En;
    }
    if (En < c.gapTolerance) {
      closed_ = true;
      // the surviving gap wraps the whole circle; w - v1 -> 2 pi is ccw
      cw_ = !xBig;
    }
  }
  W_ += dW;
  t_ += h;
  lastH_ = h;
  ++steps_;
  return !closed_;
}

LoopSample sample_bcle_loop(const BcleParams& p, const SimConfig& cfg, Rng& rng) {
  RadialIntegrator it(p, cfg);
  while (it.step(rng))
    if (it.steps() >= cfg.maxSteps) break;
  LoopSample s;
  s.steps = it.steps();
  s.valid = it.closed();
  s.sigma1 = it.state().capacityTime;
  s.orientation = it.orientation();
  return s;
}

LoopSample sample_bcle_loop(const BcleParams& p, const SimConfig& cfg, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  return sample_bcle_loop(p, cfg, rng);
}

// ---------------------------------------------------------------------------
// hull reference

namespace {

using cplx = std::complex<double>;

// z/(1+z)^2 maps D onto C minus [1/4, inf); its inverse on that slit plane
cplx koebe_inv(cplx w) { return 2.0 * w / (1.0 - 2.0 * w + std::sqrt(1.0 - 4.0 * w)); }

// Inverse of the radial Loewner map for a slit grown at angle 0 during
// capacity time h: D -> D minus [tip, 1].
struct SlitMap {
  double scale;  // 4 K(tip)
  cplx rot;
  cplx tip;
  SlitMap(double h, double w) {
    const double e = std::exp(h);
    const double r = (2 * e - 1) - 2 * std::sqrt(e * e - e);
    scale = 4 * r / ((1 + r) * (1 + r));
    rot = std::polar(1.0, w);
    tip = rot * r;
  }
  cplx operator()(cplx z) const {
    const cplx u = z / rot;
    const cplx k = u / ((1.0 + u) * (1.0 + u));
    return rot * koebe_inv(scale * k);
  }
};

constexpr size_t kHullCheckpoints = 600;
constexpr double kHullDelta = 2e-4;

}  // namespace

HullDetail hull_reference_detail(const BcleParams& p, const SimConfig& cfg, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  RadialIntegrator it(p, cfg);
  std::vector<double> hs, ws, ts;
  while (it.step(rng)) {
    hs.push_back(it.last_step());
    ws.push_back(it.state().drivingAngle);
    ts.push_back(it.state().capacityTime);
    if (it.steps() >= cfg.maxSteps) break;
  }
  hs.push_back(it.last_step());
  ws.push_back(it.state().drivingAngle);
  ts.push_back(it.state().capacityTime);

  HullDetail out;
  out.driving.steps = it.steps();
  out.driving.valid = it.closed();
  out.driving.sigma1 = it.state().capacityTime;
  out.driving.orientation = it.orientation();
  out.geometric = out.driving;
  out.geometric.valid = false;
  if (!it.closed()) return out;

  const size_t n = hs.size();
  std::vector<SlitMap> maps;
  maps.reserve(n);
  for (size_t k = 0; k < n; ++k) maps.emplace_back(hs[k], ws[k]);
  auto trace = [&](size_t k) {
    cplx z = maps[k].tip;
    for (size_t j = k; j-- > 0;) z = maps[j](z);
    return z;
  };

  // checkpoints evenly spaced in step index, dense over the final steps
  std::vector<size_t> idx;
  const size_t coarse = kHullCheckpoints, tail = std::min(n, size_t(200));
  for (size_t i = 0; i < coarse; ++i) idx.push_back(i * (n - tail) / coarse);
  for (size_t k = n - tail; k < n; ++k) idx.push_back(k);
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  std::vector<cplx> pts{1.0};  // the curve starts at 1
  for (size_t k : idx) pts.push_back(trace(k));
  // S[i]: total turning of the trace around 0 up to point i
  std::vector<double> S(pts.size(), 0);
  for (size_t i = 1; i < pts.size(); ++i) S[i] = S[i - 1] + std::arg(pts[i] / pts[i - 1]);

  // geometric closure: first checkpoint whose tip is back near an earlier
  // trace point j, or near the circle, such that the closed loop winds
  // around 0. Distances are relative to |tip|, the scale of a loop around 0
  // that is closing there.
  for (size_t i = 2; i < pts.size(); ++i) {
    const cplx tip = pts[i];
    const double tol = kHullDelta * std::abs(tip);
    double best = 1e300;
    int wbest = 0;
    for (size_t j = 0; j + 1 < i; ++j) {
      const double d = std::abs(tip - pts[j]);
      if (d >= best) continue;
      const int wn = int(std::lround((S[i] - S[j] + std::arg(pts[j] / tip)) / kTwoPi));
      if (wn == 0) continue;
      best = d;
      wbest = wn;
    }
    // touching the unit circle closes the loop through the short boundary arc
    // back to the start
    const double toCircle = 1 - std::abs(tip);
    if (toCircle < tol && toCircle < best) {
      const int wn = int(std::lround((S[i] - std::arg(tip)) / kTwoPi));
      if (wn != 0) {
        best = toCircle;
        wbest = wn;
      }
    }
    // The discrete trace does not resolve the final pinch (for kappa > 4 it
    // can stay a sizeable fraction of |tip| open), so at the driving closure
    // the nearest winding candidate is taken whatever its distance.
    const bool last = i + 1 == pts.size();
    if (best >= tol && !(last && wbest != 0)) continue;
    out.winding = wbest;
    out.closureDistance = best / std::abs(tip);
    out.geometric.valid = true;
    out.geometric.orientation = wbest > 0 ? Orientation::Counterclockwise : Orientation::Clockwise;
    out.geometric.sigma1 = ts[idx[i - 1]];
    out.geometric.steps = long(idx[i - 1]) + 1;
    break;
  }
  return out;
}

LoopSample hull_reference_sample(const BcleParams& p, const SimConfig& cfg, std::uint64_t seed) {
  return hull_reference_detail(p, cfg, seed).geometric;
}

// ---------------------------------------------------------------------------
// estimators

namespace {

template <class F>
void run_parallel(int jobs, int threads, F&& f) {
  threads = std::max(1, std::min(threads, jobs));
  if (threads == 1) {
    for (int j = 0; j < jobs; ++j) f(j);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (int j = t; j < jobs; j += threads) f(j);
    });
  for (auto& th : pool) th.join();
}

struct BatchSums {
  long n = 0;
  std::vector<double> cw, ccw;  // per lambda
  long censored = 0;
  long steps = 0;
};

struct BatchStat {
  double mean, se;
};

// pooled mean with batch-means standard error
BatchStat batch_stat(const std::vector<BatchSums>& b, size_t li, bool cw) {
  long N = 0;
  double S = 0;
  for (const auto& x : b) {
    N += x.n;
    S += cw ? x.cw[li] : x.ccw[li];
  }
  const double m = S / double(N);
  double v = 0;
  int B = 0;
  for (const auto& x : b) {
    if (x.n == 0) continue;
    const double mb = (cw ? x.cw[li] : x.ccw[li]) / double(x.n);
    v += double(x.n) * (mb - m) * (mb - m);
    ++B;
  }
  v = B > 1 ? v / (B - 1) : 0;
  return {m, std::sqrt(v / double(N))};
}

}  // namespace

MomentReport estimate_oriented_cr_moments(const BcleParams& p, const std::vector<double>& lambdas, long nSamples,
                                          std::uint64_t seed, const EstimateOptions& opt) {
  const double thr = p.threshold();
  for (double l : lambdas)
    if (!(l >= thr + 0.1))
      throw Unsupported("lambda=" + fmt(l) + " closer than 0.1 to the finiteness threshold " + fmt(thr));
  if (nSamples < 2) throw DomainError("need at least 2 samples");
  opt.cfg.validate();
  const int B = int(std::min<long>(std::max(2, opt.batches), nSamples));
  const SimConfig level[2] = {opt.cfg, opt.cfg.refined()};
  std::vector<BatchSums> sums[2];
  std::vector<std::vector<RawSample>> raws(opt.raw ? 2 * B : 0);
  if (opt.timeBudget < 0) throw DomainError("negative time budget");
  std::atomic<bool> outOfTime{false};

  for (int lv = 0; lv < 2; ++lv) {
    sums[lv].assign(B, BatchSums{});
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(opt.timeBudget / 2);
    run_parallel(B, opt.threads, [&](int b) {
      auto& acc = sums[lv][b];
      acc.cw.assign(lambdas.size(), 0);
      acc.ccw.assign(lambdas.size(), 0);
      const long n = nSamples / B + (b < nSamples % B ? 1 : 0);
      Rng rng = make_stream(seed, std::uint64_t(b), std::uint64_t(lv));
      for (long i = 0; i < n; ++i) {
        if (opt.timeBudget > 0 && std::chrono::steady_clock::now() > deadline) {
          outOfTime = true;
          break;
        }
        const LoopSample s = sample_bcle_loop(p, level[lv], rng);
        ++acc.n;
        acc.steps += s.steps;
        if (opt.raw) raws[lv * B + b].push_back({seed, lv, b, s});
        if (!s.valid) {
          ++acc.censored;
          continue;
        }
        for (size_t li = 0; li < lambdas.size(); ++li) {
          const double v = std::exp(-lambdas[li] * s.sigma1);
          (s.orientation == Orientation::Clockwise ? acc.cw : acc.ccw)[li] += v;
        }
      }
    });
  }
  if (opt.raw)
    for (auto& r : raws) opt.raw->insert(opt.raw->end(), r.begin(), r.end());

  MomentReport rep;
  rep.partial = outOfTime;
  long steps = 0, drawn[2] = {0, 0};
  for (int lv = 0; lv < 2; ++lv)
    for (const auto& x : sums[lv]) {
      rep.censored += x.censored;
      steps += x.steps;
      drawn[lv] += x.n;
    }
  rep.samplesPerLevel = std::min(drawn[0], drawn[1]);
  if (drawn[0] == 0 || drawn[1] == 0) throw NumericError("time budget too small for a single sample per level");
  rep.censoredFraction = double(rep.censored) / double(drawn[0] + drawn[1]);
  rep.meanSteps = double(steps) / double(drawn[0] + drawn[1]);
  for (size_t li = 0; li < lambdas.size(); ++li) {
    MomentEstimate e;
    e.lambda = lambdas[li];
    const auto c0 = batch_stat(sums[0], li, true), c1 = batch_stat(sums[0], li, false);
    const auto f0 = batch_stat(sums[1], li, true), f1 = batch_stat(sums[1], li, false);
    e.coarse = {c0.mean, c1.mean};
    e.coarseSe = {c0.se, c1.se};
    e.fine = {f0.mean, f1.mean};
    e.fineSe = {f0.se, f1.se};
    e.mean = {2 * f0.mean - c0.mean, 2 * f1.mean - c1.mean};
    e.se = {std::hypot(2 * f0.se, c0.se), std::hypot(2 * f1.se, c1.se)};
    rep.moments.push_back(e);
  }
  return rep;
}

ScalarEstimate cle_diffusion_check(double kappaPrime, double lambda, long nSamples, std::uint64_t seed, double dt,
                                   double cornerFactor) {
  if (!(kappaPrime > 4 && kappaPrime < 8)) throw DomainError("kappa' must lie in (4,8)");
  if (!(lambda > exact::cle_threshold(kappaPrime)))
    throw Divergent("lambda at or below the CLE threshold " + fmt(exact::cle_threshold(kappaPrime)));
  if (nSamples < 2) throw DomainError("need at least 2 samples");
  const double a = (kappaPrime - 4) / 2, sk = std::sqrt(kappaPrime);
  Rng rng = make_stream(seed, 0, 7);
  std::normal_distribution<double> nd;
  double s = 0, s2 = 0;
  for (long i = 0; i < nSamples; ++i) {
    // theta near 0 reflects; near 2 pi track E = 2 pi - theta with the same
    // implicit pole solve
    double X = 0, E = kTwoPi, t = 0;
    bool far = false;
    while (true) {
      const double h = far ? std::min(dt, cornerFactor * E * E) : dt;
      const double dw = sk * std::sqrt(h) * nd(rng);
      if (!far) {
        X = implicit_pole(X + dw, a * h, X);
        if (X > pi) {
          far = true;
          E = kTwoPi - X;
        }
      } else {
        E = implicit_pole(E - dw, a * h, E);
        if (E > pi) {
          far = false;
          X = kTwoPi - E;
        }
      }
      t += h;
      if (far && E < 1e-10) break;
    }
    const double v = std::exp(-lambda * t);
    s += v;
    s2 += v * v;
  }
  const double m = s / double(nSamples);
  return {m, std::sqrt(std::max(0.0, s2 / double(nSamples) - m * m) / double(nSamples - 1))};
}

OrientedEstimate bm_exit_check(double rho, double lambda, long nSamples, std::uint64_t seed, int threads) {
  if (!(rho > -2 && rho < 0)) throw DomainError("rho must lie in (-2,0)");
  if (!(lambda > -0.5)) throw Divergent("lambda must exceed -1/2");
  if (nSamples < 2) throw DomainError("need at least 2 samples");
  const double lo = rho * pi / 2, hi = (rho + 2) * pi / 2;
  // Exit from a symmetric interval of half-width d: side is a fair coin,
  // independent of the exit time, and E[e^{-lambda tau}] = 1/cosh(d sqrt(2 lambda)).
  // In 1D the interval reaching the nearer end makes this walk exact.
  auto weight = [&](double d) {
    if (lambda >= 0) return 1 / std::cosh(d * std::sqrt(2 * lambda));
    return 1 / std::cos(d * std::sqrt(-2 * lambda));
  };
  const int B = int(std::min<long>(100, nSamples));
  std::vector<BatchSums> sums(B);
  run_parallel(B, threads, [&](int b) {
    auto& acc = sums[b];
    acc.cw.assign(1, 0);
    acc.ccw.assign(1, 0);
    std::vector<double> sq(2, 0);
    const long n = nSamples / B + (b < nSamples % B ? 1 : 0);
    Rng rng = make_stream(seed, std::uint64_t(b), 11);
    std::bernoulli_distribution coin(0.5);
    for (long i = 0; i < n; ++i) {
      double x = 0, w = 1;
      while (true) {
        const double dlo = x - lo, dhi = hi - x;
        const double d = std::min(dlo, dhi);
        w *= weight(d);
        const bool up = coin(rng);
        if (up && dhi <= dlo) {
          acc.cw[0] += w;
          break;
        }
        if (!up && dlo <= dhi) {
          acc.ccw[0] += w;
          break;
        }
        x += up ? d : -d;
      }
      ++acc.n;
    }
  });
  const auto cw = batch_stat(sums, 0, true), ccw = batch_stat(sums, 0, false);
  return {{cw.mean, ccw.mean}, {cw.se, ccw.se}};
}

}  // namespace bcle::sle
