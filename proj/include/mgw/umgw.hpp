#pragma once

// Bi-convex alternating minimization for unbalanced multi-marginal GW.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mgw/mmspace.hpp"
#include "mgw/sinkhorn.hpp"
#include "mgw/treecost.hpp"

namespace mgw {

struct UmgwProblem {
  std::vector<MmSpace> spaces;  // weights are the mu_i (placeholder at free nodes)
  CostTree tree;
  std::vector<MarginalPenalty> penalties;
  double eps = 1e-2;
  std::optional<FusedTerms> fused;
  ReferenceMeasure::Kind reference = ReferenceMeasure::Kind::Counting;
  /// Relative tolerance of the balanced indicator when evaluating iterates.
  double balancedTol = 1e-5;

  /// requireTree = false admits general cost graphs (dense oracle paths).
  void validate(bool requireTree = true) const;
  std::vector<Vector> marginals() const;
  ReferenceMeasure reference_measure() const;
  std::vector<Eigen::Index> sizes() const;
};

struct UmgwOptions {
  int outerIter = 50;
  double outerTol = 1e-7;
  SinkhornConfig inner;
  bool warmStart = true;
  double massFloor = 1e-100;
  /// Starting plan (pi = gamma); the product of the marginals when empty.
  std::optional<PlanFactors> initial;
};

struct UmgwResult;
/// Called after every outer iteration with the current iterate.
using UmgwObserver = std::function<void(int outer, const UmgwResult& current)>;

struct UmgwTraceRow {
  int outer = 0;
  std::string step;  // "init", "pi", "gamma"
  double objective = 0.0;
  double mass = 0.0;
  int sweeps = 0;
  bool innerConverged = true;
};

struct UmgwResult {
  PlanFactors pi;
  PlanFactors gamma;
  /// Bi-convex objective per half-iteration, without the constant eps |ref|^2.
  std::vector<double> objectiveTrace;
  std::vector<UmgwTraceRow> rows;
  bool converged = false;
  int iterations = 0;
  double objectiveOffset = 0.0;
  /// max_i |pi_i - gamma_i|_inf
  double marginalMismatch = 0.0;
};

UmgwResult solve_umgw(const UmgwProblem& problem, int outerIter, const SinkhornConfig& innerCfg);
UmgwResult solve_umgw(const UmgwProblem& problem, const UmgwOptions& options,
                      const UmgwObserver& observer = {});

/// Initial plan (x) mu_i on the problem's reference.
PlanFactors initial_plan(const UmgwProblem& problem);
/// Two-node problem: the plan equal to `coupling` (n_0 x n_1).
PlanFactors coupling_plan(const UmgwProblem& problem, const Matrix& coupling);

struct ObjectiveParts {
  double transport = 0.0;   // int c d(pi) d(gamma)
  double divergence = 0.0;  // sum_i D_i(pi_i (x) gamma_i, mu_i (x) mu_i)
  double entropy = 0.0;     // eps [ |gamma| H(pi) + |pi| H(gamma) - |pi||gamma| ]
  double offset = 0.0;      // eps |ref|^2

  double reduced() const { return transport + divergence + entropy; }
  double total() const { return reduced() + offset; }
};

ObjectiveParts objective_parts(const UmgwProblem& problem, const PlanFactors& pi,
                               const PlanFactors& gamma);
double transport_term(const UmgwProblem& problem, const PlanFactors& pi, const PlanFactors& gamma);

double objective_F(const UmgwProblem& problem, const PlanFactors& pi);
double objective_Fbi(const UmgwProblem& problem, const PlanFactors& pi, const PlanFactors& gamma);
double objective_Fbi_reduced(const UmgwProblem& problem, const PlanFactors& pi,
                             const PlanFactors& gamma);

struct TightnessReport {
  double gapPiPi = 0.0;        // F(pi,pi) - F(pi,gamma)
  double gapGammaGamma = 0.0;  // F(gamma,gamma) - F(pi,gamma)
  double fbi = 0.0;            // reduced F(pi,gamma)
  double fPiPi = 0.0;
  double fGammaGamma = 0.0;
  bool balanced = true;        // false when a KL penalty is present
};

TightnessReport tightness_report(const UmgwProblem& problem, const UmgwResult& result);

std::string objective_trace_csv(const UmgwResult& result);

}  // namespace mgw
