#pragma once

// Hand-rolled generators shared by the property tests.

#include <random>
#include <vector>

#include "mgw/mmspace.hpp"
#include "mgw/sinkhorn.hpp"
#include "mgw/treecost.hpp"

namespace mgw::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vector positive(Eigen::Index n, double lo = 0.1, double hi = 1.0) {
    Vector v(n);
    for (Eigen::Index a = 0; a < n; ++a) v[a] = uniform(lo, hi);
    return v;
  }
  Vector probability(Eigen::Index n) {
    Vector v = positive(n);
    return v / v.sum();
  }
  Matrix matrix(Eigen::Index r, Eigen::Index c, double lo = 0.0, double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index a = 0; a < r; ++a)
      for (Eigen::Index b = 0; b < c; ++b) m(a, b) = uniform(lo, hi);
    return m;
  }

  /// Random points in the unit square with Euclidean distances.
  MmSpace euclidean_space(Eigen::Index n, bool probabilityWeights = true) {
    Matrix pts = matrix(n, 2);
    Matrix d(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) d(a, b) = (pts.row(a) - pts.row(b)).norm();
    for (Eigen::Index a = 0; a < n; ++a) d(a, a) = 0.0;
    return MmSpace(d, probabilityWeights ? probability(n) : positive(n, 0.2, 1.5));
  }

  /// Random points on the unit sphere with great-circle distance / pi.
  MmSpace sphere_space(Eigen::Index n) {
    Matrix d(n, n);
    std::vector<double> az(n), pol(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      az[a] = uniform(0.0, 6.283185307179586);
      pol[a] = std::acos(uniform(-1.0, 1.0));
    }
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        d(a, b) = a == b ? 0.0 : normalized_great_circle(az[a], pol[a], az[b], pol[b]);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < a; ++b) d(a, b) = d(b, a);
    return MmSpace(d, probability(n));
  }

  /// Factors with random kernels and potentials on `tree`.
  PlanFactors random_factors(const CostTree& tree, const std::vector<Eigen::Index>& sizes,
                             double eps, const std::vector<Vector>& logRef) {
    std::vector<Matrix> costs;
    for (const auto& e : tree.edges()) costs.push_back(matrix(sizes[e.i], sizes[e.j], 0.0, 2.0 * eps));
    std::vector<Vector> nodeCosts;
    for (auto s : sizes) nodeCosts.push_back(matrix(s, 1, 0.0, eps));
    PlanFactors p(tree, eps, logRef, costs, nodeCosts);
    for (int i = 0; i < p.n_nodes(); ++i) p.set_potential(i, eps * (matrix(sizes[i], 1, -1.0, 0.5)));
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace mgw::testing
