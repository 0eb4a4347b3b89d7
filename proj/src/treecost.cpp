#include "mgw/treecost.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "mgw/sinkhorn.hpp"

namespace mgw {

CostTree::CostTree(int nNodes, std::vector<TreeEdge> edges, std::vector<Eigen::Index> nodeSizes)
    : nNodes_(nNodes), edges_(std::move(edges)), adj_(static_cast<std::size_t>(std::max(0, nNodes))) {
  if (nNodes_ < 1) throw Error(ErrorKind::Config, "cost graph needs at least one node");
  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    std::ostringstream where;
    where << "edge (" << ed.i << "," << ed.j << ")";
    if (ed.i < 0 || ed.j < 0 || ed.i >= nNodes_ || ed.j >= nNodes_) {
      throw Error(ErrorKind::Config, where.str() + ": node index out of range");
    }
    if (ed.i == ed.j) throw Error(ErrorKind::Config, where.str() + ": self loop");
    if (!(ed.w > 0.0) || !std::isfinite(ed.w)) {
      throw Error(ErrorKind::Config, where.str() + ": weight must be positive");
    }
    if (!seen.emplace(std::min(ed.i, ed.j), std::max(ed.i, ed.j)).second) {
      throw Error(ErrorKind::Config, where.str() + ": repeated edge");
    }
    adj_[ed.i].emplace_back(ed.j, static_cast<int>(e));
    adj_[ed.j].emplace_back(ed.i, static_cast<int>(e));
  }
  if (!nodeSizes.empty()) set_node_sizes(std::move(nodeSizes));
}

void CostTree::set_node_sizes(std::vector<Eigen::Index> sizes) {
  if (static_cast<int>(sizes.size()) != nNodes_) {
    throw Error(ErrorKind::Dimension, "one size per node expected");
  }
  nodeSizes_ = std::move(sizes);
}

int CostTree::edge_index(int i, int j) const {
  if (i < 0 || i >= nNodes_) return -1;
  for (const auto& [nb, e] : adj_[i]) {
    if (nb == j) return e;
  }
  return -1;
}

bool CostTree::is_spanning_tree() const {
  if (static_cast<int>(edges_.size()) != nNodes_ - 1) return false;
  return static_cast<int>(preorder(0).size()) == nNodes_;
}

void CostTree::require_spanning_tree() const {
  if (!is_spanning_tree()) {
    throw Error(ErrorKind::Config, "cost graph must be a connected tree for Sinkhorn");
  }
}

std::vector<int> CostTree::preorder(int root) const {
  std::vector<int> order;
  std::vector<char> seen(static_cast<std::size_t>(nNodes_), 0);
  std::function<void(int)> visit = [&](int u) {
    seen[u] = 1;
    order.push_back(u);
    for (const auto& [v, e] : adj_[u]) {
      (void)e;
      if (!seen[v]) visit(v);
    }
  };
  visit(root);
  return order;
}

std::vector<int> CostTree::sweep_order(int root) const {
  std::vector<int> order = preorder(root);
  for (int k = static_cast<int>(order.size()) - 2; k >= 0; --k) order.push_back(order[k]);
  return order;
}

// ---------------------------------------------------------------------------

Matrix gw_edge_linearization(const Matrix& Di, const Matrix& Dj, const Matrix& gammaEdge,
                             const Vector& gammaI, const Vector& gammaJ) {
  const auto ni = Di.rows(), nj = Dj.rows();
  if (Di.cols() != ni || Dj.cols() != nj || gammaEdge.rows() != ni || gammaEdge.cols() != nj ||
      gammaI.size() != ni || gammaJ.size() != nj) {
    throw Error(ErrorKind::Dimension, "edge linearization: inconsistent sizes");
  }
  const Vector si = Di.cwiseProduct(Di) * gammaI;
  const Vector sj = Dj.cwiseProduct(Dj) * gammaJ;
  Matrix M = -2.0 * (Di * gammaEdge * Dj.transpose());
  M.colwise() += si;
  M.rowwise() += sj.transpose();
  return M;
}

std::vector<Vector> LinearizedCost::node_costs_with_constant() const {
  std::vector<Vector> out = nodeCosts;
  if (!out.empty()) out[0].array() += constant;
  return out;
}

LinearizedCost assemble_cgamma(const CostTree& tree, const std::vector<MmSpace>& spaces,
                               const PlanFactors& gamma,
                               const std::vector<MarginalPenalty>& penalties, double eps,
                               const FusedTerms* fused) {
  const int n = tree.n_nodes();
  if (static_cast<int>(spaces.size()) != n || static_cast<int>(penalties.size()) != n ||
      gamma.n_nodes() != n) {
    throw Error(ErrorKind::Dimension, "linearization: node counts disagree");
  }
  if (fused && fused->labelCost.size() != tree.edges().size()) {
    throw Error(ErrorKind::Dimension, "fused label costs must follow the tree edges");
  }
  const double beta = fused ? fused->config.beta : 0.0;
  std::vector<Vector> marg;
  for (const auto& lm : gamma.log_node_marginals()) marg.push_back(exp0(lm));
  const std::vector<Matrix> edges = gamma.edge_marginals();
  const double g = marg[0].sum();

  LinearizedCost out;
  for (std::size_t e = 0; e < tree.edges().size(); ++e) {
    const auto& ed = tree.edges()[e];
    Matrix M = gw_edge_linearization(spaces[ed.i].dist(), spaces[ed.j].dist(), edges[e],
                                     marg[ed.i], marg[ed.j]);
    M *= ed.w;
    if (fused) {
      const Matrix& L = fused->labelCost[e];
      if (L.rows() != M.rows() || L.cols() != M.cols()) {
        throw Error(ErrorKind::Dimension, "fused label cost has the wrong shape");
      }
      M = (1.0 - beta) * M + (0.5 * beta * g) * L;
      out.constant += 0.5 * beta * L.cwiseProduct(edges[e]).sum();
    }
    out.edgeCosts.push_back({ed.i, ed.j, std::move(M)});
  }
  for (int i = 0; i < n; ++i) {
    out.nodeCosts.push_back(Vector::Zero(marg[i].size()));
    if (penalties[i].kind != MarginalPenalty::Kind::ScaledKL) continue;
    const double integral = kl_integral(marg[i], spaces[i].weights());
    if (!std::isfinite(integral)) {
      std::ostringstream os;
      os << "iterate marginal " << i << " is not absolutely continuous w.r.t. its input";
      throw Error(ErrorKind::InfeasibleIterate, os.str());
    }
    out.constant += penalties[i].lambda * integral;
  }
  const double h = gamma.relative_entropy_integral();
  if (!std::isfinite(h)) {
    throw Error(ErrorKind::InfeasibleIterate, "iterate has infinite entropy w.r.t. the reference");
  }
  out.constant += eps * h;
  return out;
}

// ---------------------------------------------------------------------------

CostTree barycenter_star_tree(const std::vector<Eigen::Index>& inputSizes,
                              Eigen::Index supportSize, const std::vector<double>& rho) {
  if (inputSizes.empty() || inputSizes.size() != rho.size()) {
    throw Error(ErrorKind::Config, "one weight per barycenter input expected");
  }
  const double total = std::accumulate(rho.begin(), rho.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "barycenter weights must sum to 1 (got " << total << ")";
    throw Error(ErrorKind::Config, os.str());
  }
  const int n = static_cast<int>(inputSizes.size());
  std::vector<TreeEdge> edges;
  for (int i = 0; i < n; ++i) {
    if (!(rho[i] > 0.0)) {
      throw Error(ErrorKind::Config, "barycenter weights must be positive; drop zero-weight inputs");
    }
    edges.push_back({i, n, rho[i]});
  }
  std::vector<Eigen::Index> sizes = inputSizes;
  sizes.push_back(supportSize);
  return CostTree(n + 1, std::move(edges), std::move(sizes));
}

CostTree chain_tree(const std::vector<Eigen::Index>& sizes) {
  if (sizes.size() < 2) throw Error(ErrorKind::Config, "a chain needs at least two nodes");
  std::vector<TreeEdge> edges;
  for (int i = 0; i + 1 < static_cast<int>(sizes.size()); ++i) edges.push_back({i, i + 1, 1.0});
  return CostTree(static_cast<int>(sizes.size()), std::move(edges), sizes);
}

CostTree complete_graph(const std::vector<Eigen::Index>& sizes, const std::vector<double>& rho) {
  if (sizes.size() != rho.size()) throw Error(ErrorKind::Config, "one weight per node expected");
  std::vector<TreeEdge> edges;
  const int n = static_cast<int>(sizes.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = rho[i] * rho[j];
      if (w > 0.0) edges.push_back({i, j, w});
    }
  }
  return CostTree(n, std::move(edges), sizes);
}

std::vector<Matrix> fused_star_costs(const std::vector<LabelledMmSpace>& inputs,
                                     const std::vector<int>& barycenterLabels,
                                     const FusedConfig& fused, const std::vector<double>& rho) {
  if (inputs.size() != rho.size()) throw Error(ErrorKind::Config, "one weight per input expected");
  if (!(fused.beta >= 0.0 && fused.beta <= 1.0)) {
    throw Error(ErrorKind::Config, "fused beta must lie in [0, 1]");
  }
  if (!(fused.labelExponent > 0.0)) throw Error(ErrorKind::Config, "label exponent must be > 0");
  if (inputs.empty()) return {};
  const auto& shared = inputs.front().label_space();
  for (const auto& in : inputs) {
    const auto& ls = in.label_space();
    if (ls != shared && (ls->dist().rows() != shared->dist().rows() || ls->dist() != shared->dist())) {
      throw Error(ErrorKind::Precondition, "fused inputs must share one label space");
    }
  }
  for (int l : barycenterLabels) {
    if (l < 0 || l >= shared->size()) {
      throw Error(ErrorKind::Precondition, "barycenter label index out of range");
    }
  }
  const Matrix& e = shared->dist();
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& lab = inputs[i].label_of();
    Matrix L(static_cast<Eigen::Index>(lab.size()), static_cast<Eigen::Index>(barycenterLabels.size()));
    for (Eigen::Index a = 0; a < L.rows(); ++a) {
      for (Eigen::Index y = 0; y < L.cols(); ++y) {
        L(a, y) = rho[i] * std::pow(e(lab[a], barycenterLabels[y]), fused.labelExponent);
      }
    }
    out.push_back(std::move(L));
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::Index product_size(const std::vector<Eigen::Index>& sizes, Eigen::Index limit) {
  double p = 1.0;
  for (auto s : sizes) p *= static_cast<double>(s);
  if (p > static_cast<double>(limit)) {
    std::ostringstream os;
    os << "product grid has " << p << " points; dense evaluation is limited to " << limit;
    throw Error(ErrorKind::UnsupportedScale, os.str());
  }
  return static_cast<Eigen::Index>(p);
}

namespace {

std::vector<Eigen::Index> strides_of(const std::vector<Eigen::Index>& sizes) {
  std::vector<Eigen::Index> st(sizes.size(), 1);
  for (int k = static_cast<int>(sizes.size()) - 2; k >= 0; --k) st[k] = st[k + 1] * sizes[k + 1];
  return st;
}

}  // namespace

Vector project_zero_marginals(const std::vector<Eigen::Index>& sizes, const Vector& alpha) {
  const Eigen::Index total = product_size(sizes, 10000);
  if (alpha.size() != total) throw Error(ErrorKind::Dimension, "alpha does not fit the grid");
  const auto st = strides_of(sizes);
  const double mean = alpha.mean();
  std::vector<Vector> main(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    main[i] = Vector::Zero(sizes[i]);
    for (Eigen::Index x = 0; x < total; ++x) main[i][(x / st[i]) % sizes[i]] += alpha[x];
    main[i] /= static_cast<double>(total / sizes[i]);
    main[i].array() -= mean;
  }
  Vector out = alpha;
  for (Eigen::Index x = 0; x < total; ++x) {
    double s = mean;
    for (std::size_t i = 0; i < sizes.size(); ++i) s += main[i][(x / st[i]) % sizes[i]];
    out[x] -= s;
  }
  return out;
}

double mcnd_quadratic_form(const CostTree& tree, const std::vector<Matrix>& dists,
                           const Vector& alpha) {
  const int n = tree.n_nodes();
  if (static_cast<int>(dists.size()) != n) throw Error(ErrorKind::Dimension, "one metric per node");
  std::vector<Eigen::Index> sizes(n);
  for (int i = 0; i < n; ++i) sizes[i] = dists[i].rows();
  const Eigen::Index total = product_size(sizes, 10000);
  if (alpha.size() != total) throw Error(ErrorKind::Dimension, "alpha does not fit the grid");
  const auto st = strides_of(sizes);
  for (int i = 0; i < n; ++i) {
    Vector m = Vector::Zero(sizes[i]);
    for (Eigen::Index x = 0; x < total; ++x) m[(x / st[i]) % sizes[i]] += alpha[x];
    if (m.cwiseAbs().maxCoeff() > 1e-10) {
      std::ostringstream os;
      os << "alpha has a nonvanishing marginal at node " << i;
      throw Error(ErrorKind::Precondition, os.str());
    }
  }
  double q = 0.0;
  for (const auto& ed : tree.edges()) {
    const Eigen::Index ni = sizes[ed.i], nj = sizes[ed.j];
    Matrix pair = Matrix::Zero(ni, nj);
    for (Eigen::Index x = 0; x < total; ++x) {
      pair((x / st[ed.i]) % ni, (x / st[ed.j]) % nj) += alpha[x];
    }
    const Matrix& Di = dists[ed.i];
    const Matrix& Dj = dists[ed.j];
    double s = 0.0;
    for (Eigen::Index a = 0; a < ni; ++a)
      for (Eigen::Index b = 0; b < nj; ++b)
        for (Eigen::Index a2 = 0; a2 < ni; ++a2)
          for (Eigen::Index b2 = 0; b2 < nj; ++b2) {
            const double d = Di(a, a2) - Dj(b, b2);
            s += d * d * pair(a, b) * pair(a2, b2);
          }
    q += ed.w * s;
  }
  return q;
}

}  // namespace mgw
