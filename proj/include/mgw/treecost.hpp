#pragma once

// Pairwise decomposition of the multi-marginal cost
//   c(x) = sum_{(i,j)} w_ij |d_i(x_i, x_i') - d_j(x_j, x_j')|^2
// and its linearization against a fixed plan.

#include <optional>
#include <utility>
#include <vector>

#include "mgw/mmspace.hpp"

namespace mgw {

class PlanFactors;

struct TreeEdge {
  int i = 0;
  int j = 0;
  double w = 1.0;
};

/// Weighted pair graph over nodes 0..nNodes-1. Any simple graph with positive
/// weights is accepted here; the Sinkhorn path additionally requires a spanning
/// tree (see is_spanning_tree).
class CostTree {
 public:
  CostTree() = default;
  CostTree(int nNodes, std::vector<TreeEdge> edges, std::vector<Eigen::Index> nodeSizes = {});

  int n_nodes() const { return nNodes_; }
  const std::vector<TreeEdge>& edges() const { return edges_; }
  const std::vector<Eigen::Index>& node_sizes() const { return nodeSizes_; }
  void set_node_sizes(std::vector<Eigen::Index> sizes);

  /// (neighbour, edge index) pairs.
  const std::vector<std::pair<int, int>>& neighbours(int node) const { return adj_[node]; }
  /// Edge index of {i, j} or -1.
  int edge_index(int i, int j) const;

  bool is_spanning_tree() const;
  void require_spanning_tree() const;

  /// DFS preorder from `root`, neighbours visited in edge order.
  std::vector<int> preorder(int root = 0) const;
  /// Preorder followed by its reverse without repeating the turnaround node.
  std::vector<int> sweep_order(int root = 0) const;

 private:
  int nNodes_ = 0;
  std::vector<TreeEdge> edges_;
  std::vector<Eigen::Index> nodeSizes_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
};

struct EdgeCostMatrix {
  int i = 0;
  int j = 0;
  Matrix matrix;  // n_i x n_j
};

struct FusedConfig {
  double beta = 0.0;
  double labelExponent = 2.0;
};

/// Label part of a fused cost: one n_i x n_j matrix per tree edge (zero where
/// the edge carries no label term), already multiplied by the edge weight.
struct FusedTerms {
  FusedConfig config;
  std::vector<Matrix> labelCost;
};

/// M[a][b] = sum_{a',b'} |Di[a,a'] - Dj[b,b']|^2 gammaEdge[a',b'] via the
/// three-term expansion of the square.
Matrix gw_edge_linearization(const Matrix& Di, const Matrix& Dj, const Matrix& gammaEdge,
                             const Vector& gammaI, const Vector& gammaJ);

/// The fixed-plan cost c_gamma split into tree-aligned pieces.
struct LinearizedCost {
  std::vector<EdgeCostMatrix> edgeCosts;
  std::vector<Vector> nodeCosts;
  double constant = 0.0;  // x-independent part; added to every point of the grid

  /// Copy of nodeCosts with `constant` folded into node 0.
  std::vector<Vector> node_costs_with_constant() const;
};

LinearizedCost assemble_cgamma(const CostTree& tree, const std::vector<MmSpace>& spaces,
                               const PlanFactors& gamma,
                               const std::vector<MarginalPenalty>& penalties, double eps,
                               const FusedTerms* fused = nullptr);

CostTree barycenter_star_tree(const std::vector<Eigen::Index>& inputSizes,
                              Eigen::Index supportSize, const std::vector<double>& rho);

CostTree chain_tree(const std::vector<Eigen::Index>& sizes);

/// Complete graph with weights rho_i rho_j (free-support barycenter cost).
CostTree complete_graph(const std::vector<Eigen::Index>& sizes, const std::vector<double>& rho);

/// L_i[a][y] = rho_i e(label_i(a), label_Y(y))^p for every star edge (i, hub).
/// The result is aligned with barycenter_star_tree's edge order.
std::vector<Matrix> fused_star_costs(const std::vector<LabelledMmSpace>& inputs,
                                     const std::vector<int>& barycenterLabels,
                                     const FusedConfig& fused, const std::vector<double>& rho);

/// sum_{x,x'} c(x,x') alpha(x) alpha(x') for alpha on the full product grid
/// (node 0 is the most significant index).
double mcnd_quadratic_form(const CostTree& tree, const std::vector<Matrix>& dists,
                           const Vector& alpha);

/// Removes all one-node marginals from a product-grid tensor.
Vector project_zero_marginals(const std::vector<Eigen::Index>& sizes, const Vector& alpha);

/// Product of node sizes, throwing UnsupportedScale above `limit`.
Eigen::Index product_size(const std::vector<Eigen::Index>& sizes, Eigen::Index limit);

}  // namespace mgw
