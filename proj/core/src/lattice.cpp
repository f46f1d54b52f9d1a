#include "bcle/lattice.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <climits>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "bcle/errors.hpp"

namespace bcle::lattice {

double LatticeConfig::betaC() const { return std::log1p(std::sqrt(double(q))); }
double LatticeConfig::pC() const { return std::sqrt(double(q)) / (1 + std::sqrt(double(q))); }

LatticeConfig LatticeConfig::make(int L, int q, double r) {
  if (L < 2 || L % 2) throw DomainError("L must be even and >= 2");
  if (q < 2 || q > 4) throw DomainError("q must be in {2,3,4}");
  if (!(r >= 0 && r <= 1)) throw DomainError("r must lie in [0,1]");
  return {L, q, r, Boundary::Free};
}

SpinField SpinField::uniform(Grid g, int value) {
  return {g, std::vector<std::uint8_t>(std::size_t(g.size()), std::uint8_t(value))};
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(std::size_t(n)) {
    for (int i = 0; i < n; ++i) parent[std::size_t(i)] = i;
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // the smaller index becomes the root
  int unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (a > b) std::swap(a, b);
    parent[b] = a;
    return a;
  }
};

UnionFind bond_clusters(const FkBonds& b) {
  const int w = b.grid.w, n = b.grid.size();
  UnionFind uf(n);
  for (int v = 0; v < n; ++v) {
    if (b.right[v]) uf.unite(v, v + 1);
    if (b.up[v]) uf.unite(v, v + w);
  }
  return uf;
}

}  // namespace

std::vector<int> FkBonds::clusters() const {
  if (label.size() == std::size_t(grid.size())) return label;
  UnionFind uf = bond_clusters(*this);
  std::vector<int> lab(std::size_t(grid.size()));
  for (int v = 0; v < grid.size(); ++v) lab[v] = uf.find(v);
  return lab;
}

void sw_sweep(SpinField& spins, FkBonds& bonds, int q, double p, Rng& rng) {
  const Grid g = spins.grid;
  const int w = g.w, h = g.h, n = g.size();
  bonds.grid = g;
  bonds.right.assign(std::size_t(n), 0);
  bonds.up.assign(std::size_t(n), 0);
  bonds.label.resize(std::size_t(n));
  // two 32-bit uniforms per draw
  const std::uint64_t thr = p >= 1 ? (std::uint64_t(1) << 32) : std::uint64_t(std::ldexp(p, 32));
  std::uint64_t bits = 0;
  bool spare = false;
  auto coin = [&] {
    if (!spare) bits = rng();
    spare = !spare;
    const std::uint64_t u = spare ? bits & 0xffffffffu : bits >> 32;
    return u < thr;
  };
  // raster labelling: every site points at a smaller index or itself, roots
  // are cluster minima
  auto& P = bonds.label;
  auto find = [&](int x) {
    while (P[x] != x) {
      P[x] = P[P[x]];
      x = P[x];
    }
    return x;
  };
  const auto& s = spins.spin;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int v = x + w * y;
      int root = v;
      // draw unconditionally: fewer mispredicted branches
      const bool cl = coin(), cd = coin();
      const bool left = x > 0 && (s[v] == s[v - 1]) & cl;
      const bool down = y > 0 && (s[v] == s[v - w]) & cd;
      if (left) {
        bonds.right[v - 1] = 1;
        root = find(v - 1);
      }
      if (down) {
        bonds.up[v - w] = 1;
        int r2 = find(v - w);
        if (!left) {
          root = r2;
        } else if (r2 != root) {
          if (r2 > root) std::swap(r2, root);
          P[root] = r2;
          root = r2;
        }
      }
      P[v] = root;
    }
  for (int v = 0; v < n; ++v) P[v] = P[P[v]];
  std::uniform_int_distribution<int> pick(0, q - 1);
  for (int v = 0; v < n; ++v) {
    if (P[v] == v) spins.spin[v] = std::uint8_t(pick(rng));
    else spins.spin[v] = spins.spin[P[v]];
  }
}

FuzzyColoring color_clusters(const FkBonds& bonds, double r, Rng& rng) {
  FuzzyColoring col;
  col.grid = bonds.grid;
  col.cluster = bonds.clusters();
  col.color.resize(col.cluster.size());
  std::bernoulli_distribution red(r);
  for (std::size_t v = 0; v < col.cluster.size(); ++v) {
    const int root = col.cluster[v];
    if (root == int(v)) col.color[v] = red(rng) ? Color::Red : Color::Blue;
    col.color[v] = col.color[std::size_t(root)];
  }
  return col;
}

FuzzyColoring fuzzy_sample(const LatticeConfig& c, int burnIn, std::uint64_t seed) {
  if (burnIn < kMinBurnIn) throw DomainError("burn-in below " + std::to_string(kMinBurnIn) + " sweeps");
  Rng dyn = make_stream(seed, 0, 1), paint = make_stream(seed, 0, 2);
  SpinField s = SpinField::uniform(Grid::box(c));
  FkBonds b;
  for (int i = 0; i < burnIn; ++i) sw_sweep(s, b, c, dyn);
  return color_clusters(b, c.r, paint);
}

// ---------------------------------------------------------------------------
// arm events

namespace {

struct Centre {
  int cx, cy;
  explicit Centre(const Grid& g) : cx(g.w / 2), cy(g.h / 2) {}
};

void check_annulus(const Grid& g, int m, int n) {
  const Centre c(g);
  if (m < 1 || m >= n) throw DomainError("need 1 <= m < n");
  if (c.cx - n < 0 || c.cx + n >= g.w || c.cy - n < 0 || c.cy + n >= g.h) throw DomainError("annulus leaves the lattice");
}

// Sites of Lambda_n listed layer by layer from the outside in, each layer
// walked around its perimeter so that neighbours sit close in memory.
struct RingIndex {
  int n = 0;
  std::vector<int> site;                // position -> site
  std::vector<int> end;                 // end[k]: one past the last position of layer k
  std::vector<std::array<int, 4>> nb;   // left, right, down, up positions or -1
  std::vector<std::uint8_t> sideSite;   // not a corner
};

RingIndex build_ring_index(const Grid& g, int n) {
  const Centre c(g);
  RingIndex r;
  r.n = n;
  r.end.assign(std::size_t(n + 1), 0);
  std::vector<int> pos(std::size_t(g.size()), -1);
  auto add = [&](int x, int y) {
    pos[std::size_t(x + g.w * y)] = int(r.site.size());
    r.site.push_back(x + g.w * y);
    r.sideSite.push_back(std::abs(x - c.cx) != std::abs(y - c.cy));
  };
  for (int k = n; k >= 1; --k) {
    const int x0 = c.cx - k, x1 = c.cx + k, y0 = c.cy - k, y1 = c.cy + k;
    for (int y = y0; y < y1; ++y) add(x1, y);
    for (int x = x1; x > x0; --x) add(x, y1);
    for (int y = y1; y > y0; --y) add(x0, y);
    for (int x = x0; x < x1; ++x) add(x, y0);
    r.end[std::size_t(k)] = int(r.site.size());
  }
  r.nb.resize(r.site.size());
  for (std::size_t i = 0; i < r.site.size(); ++i) {
    const int v = r.site[i], x = v % g.w, y = v / g.w;
    r.nb[i] = {x > 0 ? pos[std::size_t(v - 1)] : -1, x + 1 < g.w ? pos[std::size_t(v + 1)] : -1,
               y > 0 ? pos[std::size_t(v - g.w)] : -1, y + 1 < g.h ? pos[std::size_t(v + g.w)] : -1};
  }
  return r;
}

const RingIndex& ring_index(const Grid& g, int n) {
  thread_local std::map<std::array<int, 3>, RingIndex> cache;
  auto key = std::array<int, 3>{g.w, g.h, n};
  auto it = cache.find(key);
  if (it == cache.end()) {
    if (cache.size() > 16) cache.clear();
    it = cache.emplace(key, build_ring_index(g, n)).first;
  }
  return it->second;
}

// Layers are added from the outside in. After layer k, out[k-1] records
// whether a site of layer k next to the box Lambda_{k-1} (so not a corner) is
// joined to layer n. Two colour classes are tracked at once: cls(site) gives
// 0 or 1, or -1 for an inactive site; links(site) is a mask over the
// directions left, right, down, up of the edges that count. Joining the outer
// layer is spread by flood fill, so each site is marked once.
template <class Class, class Links>
std::array<std::vector<std::uint8_t>, 2> layered_profile(const Grid& g, int n, Class&& cls, Links&& links) {
  check_annulus(g, 1, n);
  const RingIndex& R = ring_index(g, n);
  const std::size_t N = R.site.size();
  std::vector<std::int8_t> kind(N, -1);
  std::vector<std::uint8_t> mask(N, 0), outer(N, 0);
  std::vector<int> stack;
  std::array<std::vector<std::uint8_t>, 2> out;
  out[0].assign(std::size_t(n), 0);
  out[1].assign(std::size_t(n), 0);
  bool alive[2] = {true, true};
  int begin = 0;
  for (int k = n; k >= 2 && (alive[0] || alive[1]); --k) {
    const int end = R.end[std::size_t(k)];
    for (int i = begin; i < end; ++i) {
      const int v = R.site[std::size_t(i)];
      kind[i] = std::int8_t(cls(v));
      if (kind[i] >= 0) mask[i] = std::uint8_t(links(v));
    }
    auto flood = [&](int i0) {
      outer[i0] = 1;
      stack.assign(1, i0);
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int d = 0; d < 4; ++d) {
          const int u = R.nb[std::size_t(i)][std::size_t(d)];
          if (u < 0 || u >= end || outer[u] || kind[u] != kind[i] || !(mask[i] >> d & 1)) continue;
          outer[u] = 1;
          stack.push_back(u);
        }
      }
    };
    for (int i = begin; i < end; ++i) {
      if (kind[i] < 0 || outer[i]) continue;
      bool join = k == n;
      for (int d = 0; d < 4 && !join; ++d) {
        const int u = R.nb[std::size_t(i)][std::size_t(d)];
        join = u >= 0 && u < end && outer[u] && kind[u] == kind[i] && (mask[i] >> d & 1);
      }
      if (join) flood(i);
    }
    bool any[2] = {false, false};
    for (int i = begin; i < end; ++i) {
      const int t = kind[i];
      if (t < 0 || !outer[i]) continue;
      any[t] = true;
      if (R.sideSite[std::size_t(i)]) out[std::size_t(t)][std::size_t(k - 1)] = 1;
    }
    // every path inward crosses this layer
    alive[0] = alive[0] && any[0];
    alive[1] = alive[1] && any[1];
    begin = end;
  }
  return out;
}

// per-site mask of open bonds: left, right, down, up
std::vector<std::uint8_t> bond_masks(const FkBonds& b) {
  const int w = b.grid.w, n = b.grid.size();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    m[v] = std::uint8_t((v % w > 0 && b.right[v - 1]) | (b.right[v] << 1) | ((v >= w && b.up[v - w]) << 2) |
                        (b.up[v] << 3));
  return m;
}

}  // namespace

std::vector<std::uint8_t> arm_profile(const FuzzyColoring& col, int n, Color c) {
  return arm_profiles(col, n)[c == Color::Red];
}

std::array<std::vector<std::uint8_t>, 2> arm_profiles(const FuzzyColoring& col, int n) {
  return layered_profile(
      col.grid, n, [&](int v) { return int(col.color[v]); }, [](int) { return 15; });
}

std::vector<std::uint8_t> fk_arm_profile(const FkBonds& b, int n) {
  const auto m = bond_masks(b);
  return layered_profile(
      b.grid, n, [](int) { return 0; }, [&](int v) { return m[std::size_t(v)]; })[0];
}

bool one_arm_event(const FuzzyColoring& col, int m, int n, Color c) {
  check_annulus(col.grid, m, n);
  return arm_profile(col, n, c)[m];
}

bool fk_arm_event(const FkBonds& b, int m, int n) {
  check_annulus(b.grid, m, n);
  return fk_arm_profile(b, n)[m];
}

bool star_circuit(const FuzzyColoring& col, int m, int n, Color c) {
  check_annulus(col.grid, m, n);
  const Grid& g = col.grid;
  const Centre ce(g);
  auto inside = [&](int x, int y) {
    const int d = std::max(std::abs(x - ce.cx), std::abs(y - ce.cy));
    return d > m && d <= n;
  };
  // +1 for each upward crossing of the ray {y = cy - 1/2, x > cx}
  auto crossing = [&](int x0, int y0, int x1, int y1) {
    if (x0 + x1 <= 2 * ce.cx) return 0;
    if (y0 < ce.cy && y1 >= ce.cy) return 1;
    if (y0 >= ce.cy && y1 < ce.cy) return -1;
    return 0;
  };
  std::vector<int> label(std::size_t(g.size()), INT_MIN);
  std::vector<int> stack;
  for (int y0 = ce.cy - n; y0 <= ce.cy + n; ++y0)
    for (int x0 = ce.cx - n; x0 <= ce.cx + n; ++x0) {
      const int s = x0 + g.w * y0;
      if (!inside(x0, y0) || col.color[s] != c || label[s] != INT_MIN) continue;
      label[s] = 0;
      stack.assign(1, s);
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        const int x = v % g.w, y = v / g.w;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dx && !dy) continue;
            const int xx = x + dx, yy = y + dy;
            if (!inside(xx, yy)) continue;
            const int u = xx + g.w * yy;
            if (col.color[u] != c) continue;
            const int lu = label[v] + crossing(x, y, xx, yy);
            if (label[u] == INT_MIN) {
              label[u] = lu;
              stack.push_back(u);
            } else if (label[u] != lu) {
              return true;
            }
          }
      }
    }
  return false;
}

// ---------------------------------------------------------------------------
// experiments

std::vector<std::pair<int, int>> dyadic_scales(int L) {
  std::vector<std::pair<int, int>> s;
  for (int m = 4; m < L / 2; m *= 2) s.emplace_back(m, L / 2);
  return s;
}

std::vector<std::pair<int, int>> dyadic_pairs(int L) {
  std::vector<std::pair<int, int>> s;
  for (int n = 8; n <= L / 2; n *= 2)
    for (int m = 4; m < n; m *= 2) s.emplace_back(m, n);
  return s;
}

std::vector<ArmMeasurement> run_arm_experiment(const LatticeConfig& c, const std::vector<std::pair<int, int>>& scales,
                                               long nSamples, std::uint64_t seed, const ArmOptions& opt) {
  const Grid g = Grid::box(c);
  for (auto [m, n] : scales) {
    check_annulus(g, m, n);
    if (n > c.L / 2) throw DomainError("n exceeds L/2");
  }
  if (scales.empty()) throw DomainError("no scales");
  if (nSamples < 1) throw DomainError("need at least one measurement");
  if (opt.burnIn < kMinBurnIn) throw DomainError("burn-in below " + std::to_string(kMinBurnIn) + " sweeps");
  if (opt.thin < 1 || opt.chains < 1) throw DomainError("thin and chains must be positive");
  std::vector<int> outers;
  for (auto [m, n] : scales) outers.push_back(n);
  std::sort(outers.begin(), outers.end());
  outers.erase(std::unique(outers.begin(), outers.end()), outers.end());
  // FK arms are only needed for the exponent fit, at the largest n
  const std::set<int> fkOuters = opt.fkAllScales ? std::set<int>(outers.begin(), outers.end()) : std::set<int>{outers.back()};

  // per chain: hits[kind][scale]
  struct Tally {
    long samples = 0;
    std::vector<long> blue, red, fk;
  };
  std::vector<Tally> tallies(std::size_t(opt.chains));
  if (opt.timeBudget < 0) throw DomainError("negative time budget");
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(opt.timeBudget);
  std::atomic<bool> outOfTime{false};
  auto chain = [&](int ci) {
    Tally& t = tallies[std::size_t(ci)];
    t.blue.assign(scales.size(), 0);
    t.red.assign(scales.size(), 0);
    t.fk.assign(scales.size(), 0);
    const long todo = nSamples / opt.chains + (ci < nSamples % opt.chains ? 1 : 0);
    Rng dyn = make_stream(seed, std::uint64_t(ci), 1), paint = make_stream(seed, std::uint64_t(ci), 2);
    SpinField s = SpinField::uniform(g);
    FkBonds b;
    for (int i = 0; i < opt.burnIn; ++i) sw_sweep(s, b, c, dyn);
    for (long k = 0; k < todo; ++k) {
      if (opt.timeBudget > 0 && std::chrono::steady_clock::now() > deadline) {
        outOfTime = true;
        break;
      }
      for (int i = 0; i < opt.thin; ++i) sw_sweep(s, b, c, dyn);
      const FuzzyColoring col = color_clusters(b, c.r, paint);
      std::map<int, std::array<std::vector<std::uint8_t>, 2>> pc;
      std::map<int, std::vector<std::uint8_t>> pf;
      for (int n : outers) {
        pc[n] = arm_profiles(col, n);
        if (fkOuters.count(n)) pf[n] = fk_arm_profile(b, n);
      }
      for (std::size_t si = 0; si < scales.size(); ++si) {
        auto [m, n] = scales[si];
        t.blue[si] += pc[n][0][m];
        t.red[si] += pc[n][1][m];
        if (pf.count(n)) t.fk[si] += pf[n][m];
      }
      ++t.samples;
    }
  };
  const int threads = std::max(1, std::min(opt.threads, opt.chains));
  if (threads == 1) {
    for (int ci = 0; ci < opt.chains; ++ci) chain(ci);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int ci = t; ci < opt.chains; ci += threads) chain(ci);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<ArmMeasurement> out;
  for (std::size_t si = 0; si < scales.size(); ++si) {
    ArmMeasurement a;
    a.m = scales[si].first;
    a.n = scales[si].second;
    a.seed = seed;
    for (const auto& t : tallies) {
      a.nSamples += t.samples;
      a.blueHits += t.blue[si];
      a.redHits += t.red[si];
      a.fkHits += t.fk[si];
    }
    out.push_back(a);
  }
  for (auto& a : out) {
    a.fkMeasured = fkOuters.count(a.n) > 0;
    const long worst = std::min({a.blueHits, a.redHits, a.fkMeasured ? a.fkHits : LONG_MAX});
    a.lowStatistics = worst < opt.minHits;
    a.partial = outOfTime;
  }
  return out;
}

namespace {

long hits_of(const ArmMeasurement& a, ArmKind k) {
  switch (k) {
    case ArmKind::Blue:
      return a.blueHits;
    case ArmKind::Red:
      return a.redHits;
    case ArmKind::Fk:
      return a.fkHits;
  }
  return 0;
}

}  // namespace

ExponentFit fit_exponent(const std::vector<ArmMeasurement>& ms, ArmKind kind, int largest) {
  if (ms.empty()) throw DomainError("no measurements");
  int nMax = 0;
  for (const auto& a : ms) nMax = std::max(nMax, a.n);
  std::vector<int> cand;
  for (int i = 0; i < int(ms.size()); ++i)
    if (ms[i].n == nMax && hits_of(ms[i], kind) > 0 && ms[i].nSamples > 0) cand.push_back(i);
  // largest aspect ratios n/m first
  std::sort(cand.begin(), cand.end(), [&](int a, int b) { return ms[a].m < ms[b].m; });
  if (int(cand.size()) > largest) cand.resize(std::size_t(largest));
  if (cand.size() < 2) throw DomainError("degenerate design: fewer than two scales with hits");

  double Sw = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  std::vector<double> xs, ys, ws;
  for (int i : cand) {
    const auto& a = ms[i];
    const double P = double(hits_of(a, kind)) / double(a.nSamples);
    const double x = std::log(double(a.m) / double(a.n)), y = std::log(P);
    // delta method, var log P = (1 - P) / hits, with half a miss added so
    // that P = 1 keeps a finite weight
    const double h = double(hits_of(a, kind)), N = double(a.nSamples);
    const double var = (N - h + 0.5) / (N * h);
    const double wt = 1 / var;
    xs.push_back(x);
    ys.push_back(y);
    ws.push_back(wt);
    Sw += wt;
    Sx += wt * x;
    Sy += wt * y;
    Sxx += wt * x * x;
    Sxy += wt * x * y;
  }
  const double det = Sw * Sxx - Sx * Sx;
  if (!(det > 0)) throw DomainError("degenerate design: all scales share one ratio");
  ExponentFit f;
  f.exponent = (Sw * Sxy - Sx * Sy) / det;
  f.intercept = (Sxx * Sy - Sx * Sxy) / det;
  f.stderr_ = std::sqrt(Sw / det);
  f.used = cand;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = (ys[k] - f.intercept - f.exponent * xs[k]) * std::sqrt(ws[k]);
    f.residuals.push_back(r);
    f.chi2 += r * r;
  }
  f.dof = int(xs.size()) - 2;
  return f;
}

std::vector<QuasiMultiplicativity> quasi_multiplicativity(const std::vector<ArmMeasurement>& ms, ArmKind kind) {
  std::map<std::pair<int, int>, double> P;
  for (const auto& a : ms)
    if (a.nSamples > 0) P[{a.m, a.n}] = double(hits_of(a, kind)) / double(a.nSamples);
  std::vector<QuasiMultiplicativity> out;
  for (const auto& [ln, pln] : P) {
    const auto [l, n] = ln;
    for (const auto& [lm, plm] : P) {
      if (lm.first != l || lm.second >= n) continue;
      const int m = lm.second;
      auto it = P.find({m, n});
      if (it == P.end() || pln <= 0) continue;
      out.push_back({l, m, n, plm * it->second / pln});
    }
  }
  return out;
}

}  // namespace bcle::lattice
