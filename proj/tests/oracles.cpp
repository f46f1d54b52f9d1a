#include "oracles.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>

namespace oracle {

using bcle::lcft::LcftContext;

double qa_quadrature(const LcftContext& c, double W, double t, double y) {
  const double g = c.gamma, beta = g + (2 - W) / g, bp = 2 * c.Q - beta;
  auto f = [&](double r) { return std::exp(-r * y) * t * bcle::lcft::refl_log_derivative(c, bp, t, t * std::exp(r)); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double e1 = 0, e2 = 0;
  // the integrand decays like e^{-|y| r} to the left and like e^{-(1+y) r}
  // times the leading term to the right. Past r ~ 40 the reflection
  // derivative itself goes bad, so the right cut stays below that.
  const double R = std::min(40 / (1 + y), 36.0);
  const double I = GK::integrate(f, -40 / std::fabs(y), 0.0, 8, 1e-10, &e1) + GK::integrate(f, 0.0, R, 8, 1e-10, &e2);
  return std::pow(1 - 2 * W / (g * g), -2) * std::pow(t, -y - 1) / std::tgamma(-y) * I;
}

double gqa_quadrature(const LcftContext& c, double W, double t, double y) {
  const double g2 = c.gamma * c.gamma, yp = 4 * y / g2;
  return std::tgamma(-yp) / std::tgamma(-y) * std::pow(t, g2 / 4 - 1) * qa_quadrature(c, W, std::pow(t, g2 / 4), yp);
}

Graph grid_graph(const bcle::lattice::Grid& g) {
  Graph G;
  G.n = g.size();
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const int v = x + g.w * y;
      if (x + 1 < g.w) G.edges.emplace_back(v, v + 1);
      if (y + 1 < g.h) G.edges.emplace_back(v, v + g.w);
    }
  return G;
}

namespace {

int find(std::vector<int>& p, int v) {
  while (p[v] != v) v = p[v] = p[p[v]];
  return v;
}

// calls f(mask, weight, roots) for every bond configuration, roots[v] the
// cluster representative of v
template <class F>
void for_each_fk(const Graph& g, int q, double p, F&& f) {
  const int E = int(g.edges.size());
  for (long mask = 0; mask < (1L << E); ++mask) {
    std::vector<int> par(g.n);
    std::iota(par.begin(), par.end(), 0);
    int open = 0;
    for (int e = 0; e < E; ++e)
      if (mask >> e & 1) {
        ++open;
        par[find(par, g.edges[e].first)] = find(par, g.edges[e].second);
      }
    std::vector<int> roots(g.n);
    int k = 0;
    for (int v = 0; v < g.n; ++v) {
      roots[v] = find(par, v);
      k += roots[v] == v;
    }
    const double w = std::pow(p, open) * std::pow(1 - p, E - open) * std::pow(double(q), k);
    f(open, k, w, roots);
  }
}

std::vector<double> normalized(std::vector<double> v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

std::vector<double> potts_agreeing_edges_law(const Graph& g, int q, double p) {
  std::vector<double> law(g.edges.size() + 1, 0.0);
  std::vector<int> s(g.n, 0);
  const double eb = 1 / (1 - p);  // e^beta
  long states = 1;
  for (int i = 0; i < g.n; ++i) states *= q;
  for (long idx = 0; idx < states; ++idx) {
    long x = idx;
    for (int v = 0; v < g.n; ++v) {
      s[v] = int(x % q);
      x /= q;
    }
    int a = 0;
    for (auto [u, v] : g.edges) a += s[u] == s[v];
    law[a] += std::pow(eb, a);
  }
  return normalized(law);
}

std::vector<double> fk_open_edges_law(const Graph& g, int q, double p) {
  std::vector<double> law(g.edges.size() + 1, 0.0);
  for_each_fk(g, q, p, [&](int open, int, double w, const std::vector<int>&) { law[open] += w; });
  return normalized(law);
}

std::vector<double> fk_clusters_law(const Graph& g, int q, double p) {
  std::vector<double> law(g.n + 1, 0.0);
  for_each_fk(g, q, p, [&](int, int k, double w, const std::vector<int>&) { law[k] += w; });
  return normalized(law);
}

std::vector<double> fuzzy_color_law(const Graph& g, int q, double p, double r) {
  std::vector<double> law(std::size_t(1) << g.n, 0.0);
  for_each_fk(g, q, p, [&](int, int, double w, const std::vector<int>& roots) {
    std::vector<int> rs;
    for (int v = 0; v < g.n; ++v)
      if (roots[v] == v) rs.push_back(v);
    // every red/blue assignment of the clusters
    for (long c = 0; c < (1L << rs.size()); ++c) {
      double pr = w;
      long mask = 0;
      for (std::size_t i = 0; i < rs.size(); ++i) pr *= (c >> i & 1) ? r : 1 - r;
      for (int v = 0; v < g.n; ++v) {
        const auto i = std::size_t(std::find(rs.begin(), rs.end(), roots[v]) - rs.begin());
        if (c >> i & 1) mask |= 1L << v;
      }
      law[std::size_t(mask)] += pr;
    }
  });
  return normalized(law);
}

std::vector<double> recolored_potts_law(const Graph& g, int q, double p, int k) {
  std::vector<double> law(std::size_t(1) << g.n, 0.0);
  std::vector<int> s(g.n, 0);
  const double eb = 1 / (1 - p);
  long states = 1;
  for (int i = 0; i < g.n; ++i) states *= q;
  for (long idx = 0; idx < states; ++idx) {
    long x = idx, mask = 0;
    for (int v = 0; v < g.n; ++v) {
      s[v] = int(x % q);
      x /= q;
      if (s[v] < k) mask |= 1L << v;
    }
    int a = 0;
    for (auto [u, v] : g.edges) a += s[u] == s[v];
    law[std::size_t(mask)] += std::pow(eb, a);
  }
  return normalized(law);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double D = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    D = std::max(D, std::fabs(double(i) / na - double(j) / nb));
  }
  // Kolmogorov tail with the Stephens small-sample correction
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lam = (ne + 0.12 + 0.11 / ne) * D;
  double p = 0;
  for (int k = 1; k <= 100; ++k) p += 2 * ((k % 2) ? 1 : -1) * std::exp(-2.0 * k * k * lam * lam);
  if (lam < 0.3) p = 1;
  return {D, std::clamp(p, 0.0, 1.0)};
}

MeanSe batch_means(const std::vector<double>& x, int batches) {
  const std::size_t B = std::size_t(batches), per = x.size() / B;
  double m = 0;
  std::vector<double> bm(B, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < per; ++i) bm[b] += x[b * per + i];
    bm[b] /= double(per);
    m += bm[b];
  }
  m /= double(B);
  double v = 0;
  for (double y : bm) v += (y - m) * (y - m);
  v /= double(B - 1);
  return {m, std::sqrt(v / double(B))};
}

}  // namespace oracle
