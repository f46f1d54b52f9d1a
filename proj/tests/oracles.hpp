#pragma once

// Test-side references that do not go through the library code paths they
// check.

#include <cstdint>
#include <utility>
#include <vector>

#include "bcle/lattice.hpp"
#include "bcle/lcft.hpp"

namespace oracle {

// qa moment through its Laplace-transform route: an integral of the
// reflection log-derivative, done by plain Gauss-Kronrod. Reliable for
// y in [-0.5, 0).
double qa_quadrature(const bcle::lcft::LcftContext& c, double W, double t, double y);

// gqa through the subordinator relation and qa_quadrature
double gqa_quadrature(const bcle::lcft::LcftContext& c, double W, double t, double y);

// small graphs in the site/bond layout of lattice::FkBonds
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};
Graph grid_graph(const bcle::lattice::Grid& g);

// exhaustive laws; indices are counts or colour bitmasks (bit v set = red)
std::vector<double> potts_agreeing_edges_law(const Graph& g, int q, double p);
std::vector<double> fk_open_edges_law(const Graph& g, int q, double p);
std::vector<double> fk_clusters_law(const Graph& g, int q, double p);
std::vector<double> fuzzy_color_law(const Graph& g, int q, double p, double r);
// colour law of the Potts measure with spins < k painted red
std::vector<double> recolored_potts_law(const Graph& g, int q, double p, int k);

// two-sample Kolmogorov-Smirnov statistic and asymptotic p-value
struct KsResult {
  double D;
  double p;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// mean and batch-means standard error of a correlated series
struct MeanSe {
  double mean;
  double se;
};
MeanSe batch_means(const std::vector<double>& x, int batches = 100);

}  // namespace oracle
