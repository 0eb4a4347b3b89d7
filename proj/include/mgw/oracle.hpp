#pragma once

// Dense brute-force references for tiny instances. Everything here
// materializes the full product grid (node 0 is the most significant index).

#include <optional>
#include <vector>

#include "mgw/mmspace.hpp"
#include "mgw/sinkhorn.hpp"
#include "mgw/treecost.hpp"
#include "mgw/umgw.hpp"

namespace mgw {

inline constexpr Eigen::Index kDenseLimit = 10000;

struct DensePlan {
  std::vector<Eigen::Index> sizes;
  Vector tensor;

  Eigen::Index flat(const std::vector<Eigen::Index>& x) const;
  std::vector<Eigen::Index> unflat(Eigen::Index k) const;
  Vector node_marginal(int i) const;
  Matrix pair_marginal(int i, int j) const;
  double mass() const { return tensor.sum(); }
};

/// Evaluates the implicit plan at every grid point.
DensePlan dense_from_factors(const PlanFactors& plan);

/// c(x, x') for the problem's cost graph (fused terms included).
double dense_cost(const UmgwProblem& problem, const std::vector<Eigen::Index>& x,
                  const std::vector<Eigen::Index>& y);

/// F^bi(pi, gamma) by explicit double sums, including eps |ref|^2.
double dense_objective_bi(const UmgwProblem& problem, const DensePlan& pi, const DensePlan& gamma);
double dense_objective(const UmgwProblem& problem, const DensePlan& pi);

struct DenseSinkhornResult {
  DensePlan plan;
  std::vector<Vector> potentials;
  int sweeps = 0;
  bool converged = false;
};

/// Sinkhorn on an explicit log kernel tensor (log ref - cost / eps).
DenseSinkhornResult dense_sinkhorn_tensor(const std::vector<Eigen::Index>& sizes,
                                          const Vector& logKernel,
                                          const std::vector<Vector>& marginals,
                                          const std::vector<MarginalPenalty>& penalties,
                                          const SinkhornConfig& cfg, const std::vector<int>& order,
                                          const std::vector<Vector>* warmStart = nullptr);

/// Same inputs and sweep order as sinkhorn's solve, with tensor contractions.
DenseSinkhornResult dense_sinkhorn(const CostTree& tree, const std::vector<EdgeCostMatrix>& edgeCosts,
                                   const std::vector<Vector>& nodeCosts,
                                   const std::vector<Vector>& marginals,
                                   const std::vector<MarginalPenalty>& penalties,
                                   const SinkhornConfig& cfg, const ReferenceMeasure& ref,
                                   const std::vector<Vector>* warmStart = nullptr);

struct DenseUmgwResult {
  DensePlan pi;
  DensePlan gamma;
  std::vector<double> objectiveTrace;  // full objective per half-iteration
  int iterations = 0;
};

/// The alternating scheme with c_gamma built by brute force; any cost graph.
DenseUmgwResult dense_umgw(const UmgwProblem& problem, const UmgwOptions& options);

struct GridSearchResult {
  double bestObjective = 0.0;
  DensePlan bestPlan;
  long long visited = 0;
};

/// Exhaustive search over couplings with entries in (1/resolution) N,
/// balanced marginals, unregularized objective.
GridSearchResult grid_search_mgw(const UmgwProblem& problem, int resolution);

struct FreeSupportBarycenter {
  std::vector<std::vector<Eigen::Index>> productSupport;
  Matrix dStar;
  Vector measure;
  Matrix labels;  // rho-averaged one-hot labels, empty when unlabelled

  MmSpace as_mmspace() const;
};

struct FreeSupportOptions {
  double eps = 1e-3;
  int outerIter = 100;
  SinkhornConfig inner;
  double beta = 0.0;           // label weight for labelled inputs
  double labelExponent = 2.0;
};

FreeSupportBarycenter dense_free_support_bary(const std::vector<MmSpace>& inputs,
                                              const std::vector<double>& rho,
                                              const FreeSupportOptions& options = {},
                                              const std::vector<LabelledMmSpace>* labelled = nullptr);

/// GW_0 cost of the explicit coupling `plan` between X (rows) and Y (cols).
double dense_gw_cost(const Matrix& dx, const Matrix& dy, const Matrix& plan);

}  // namespace mgw
