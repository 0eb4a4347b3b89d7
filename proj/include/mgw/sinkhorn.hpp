#pragma once

// Log-domain unbalanced multi-marginal Sinkhorn on tree-structured costs.
//
// The plan is kept implicit:
//   log pi(x) = sum_i [ f_i(x_i)/eps + base_i(x_i) ] + sum_e E_e(x_i, x_j)
// with base_i = logRef_i - nodeCost_i/eps and E_e = -C_e/eps.

#include <string>
#include <vector>

#include "mgw/mmspace.hpp"
#include "mgw/treecost.hpp"

namespace mgw {

struct ReferenceMeasure {
  enum class Kind { Counting, ProductOfInputs };

  Kind kind = Kind::Counting;
  std::vector<Vector> logWeights;

  /// ProductOfInputs requires strictly positive measures.
  static ReferenceMeasure build(Kind kind, const std::vector<Vector>& measures);
  static Kind parse_kind(const std::string& text);
  static std::string kind_name(Kind kind);
};

struct SinkhornConfig {
  double eps = 1e-2;
  int maxIter = 2000;
  double tolerance = 1e-7;
  bool logDomain = true;
  /// Log domain only: sweep through cached rescaled kernels instead of
  /// exponentiating every entry on every message.
  bool absorb = true;
  bool recordTrace = false;
  /// eps-scaling: solve at eps / epsFactor^k for k = epsStages..1 first,
  /// carrying the potentials over. 0 disables.
  int epsStages = 0;
  double epsFactor = 0.5;
};

class PlanFactors {
 public:
  PlanFactors() = default;

  /// edgeCosts aligned with tree.edges(); nodeCosts may be empty (zero).
  PlanFactors(CostTree tree, double eps, std::vector<Vector> logRef,
              const std::vector<Matrix>& edgeCosts, const std::vector<Vector>& nodeCosts);

  /// The product measure (x) measures, represented with zero costs.
  static PlanFactors product(CostTree tree, double eps, const std::vector<Vector>& measures,
                             std::vector<Vector> logRef);

  const CostTree& tree() const { return tree_; }
  double eps() const { return eps_; }
  int n_nodes() const { return tree_.n_nodes(); }

  const std::vector<Vector>& potentials() const { return f_; }
  const Vector& potential(int i) const { return f_[i]; }
  void set_potential(int i, Vector f);

  const Vector& node_log_base(int i) const { return base_[i]; }
  const Vector& log_ref(int i) const { return logRef_[i]; }
  const Matrix& edge_log_kernel(int e) const { return edgeLog_[e]; }

  /// When false, messages use the clamped linear-domain products.
  bool log_domain() const { return logDomain_; }
  void set_log_domain(bool on) { logDomain_ = on; }

  std::vector<Vector> log_node_marginals() const;
  Vector node_marginal(int i) const;
  /// n_i x n_j pairwise marginal; (i, j) must be a tree edge (either orientation).
  Matrix edge_marginal(int i, int j) const;
  std::vector<Matrix> edge_marginals() const;  // aligned with tree edges

  double plan_mass() const;
  double log_mass() const;
  /// Multiplies the plan by t (through node 0's potential).
  void rescale_by(double t);
  PlanFactors rescaled(double t) const;

  /// sum pi log(pi / ref), exact from the factors.
  double relative_entropy_integral() const;
  /// Mass of the reference measure.
  double reference_mass() const;

  /// log pi at one grid point.
  double log_density(const std::vector<Eigen::Index>& x) const;

 private:
  CostTree tree_;
  double eps_ = 1.0;
  bool logDomain_ = true;
  std::vector<Vector> f_;
  std::vector<Vector> base_;
  std::vector<Vector> logRef_;
  std::vector<Matrix> edgeLog_;
};

struct SinkhornTraceRow {
  int sweep = 0;
  double drift = 0.0;
  std::vector<double> violation;
  double mass = 0.0;
};

struct SinkhornResult {
  PlanFactors plan;
  bool converged = false;
  int sweeps = 0;
  double drift = 0.0;
  std::vector<SinkhornTraceRow> trace;
};

/// Solves min <C, pi> + sum_i D_i(pi_i, mu_i) + eps KL(pi, ref).
/// `warmStart`, when non-null, seeds the potentials.
SinkhornResult solve(const CostTree& tree, const std::vector<EdgeCostMatrix>& edgeCosts,
                     const std::vector<Vector>& nodeCosts, const std::vector<Vector>& marginals,
                     const std::vector<MarginalPenalty>& penalties, const SinkhornConfig& cfg,
                     const ReferenceMeasure& ref, const std::vector<Vector>* warmStart = nullptr);

/// Runs sweeps on existing factors (used by solve and by tests that need
/// precise iteration control).
SinkhornResult iterate(PlanFactors plan, const std::vector<Vector>& marginals,
                       const std::vector<MarginalPenalty>& penalties, const SinkhornConfig& cfg);

/// Entropic dual value of the current potentials (non-decreasing over sweeps).
double dual_objective(const PlanFactors& plan, const std::vector<Vector>& marginals,
                      const std::vector<MarginalPenalty>& penalties);

/// Proximal step for one node given log s = log of the marginal without f_i.
Vector proxdiv_update(const MarginalPenalty& penalty, const Vector& mu, const Vector& logS,
                      double eps, const Vector& current);

Vector node_marginal(const PlanFactors& plan, int i);
Matrix edge_marginal(const PlanFactors& plan, int i, int j);
double plan_mass(const PlanFactors& plan);
PlanFactors rescale_by(const PlanFactors& plan, double t);

std::string sinkhorn_trace_csv(const std::vector<SinkhornTraceRow>& trace);

}  // namespace mgw
