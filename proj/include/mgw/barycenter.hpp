#pragma once

// Fixed-support (fused) GW barycenters through the star-shaped N+1 marginal
// problem, the dense free-support construction and the barycentric loss.

#include <optional>
#include <vector>

#include "mgw/mmspace.hpp"
#include "mgw/oracle.hpp"
#include "mgw/umgw.hpp"

namespace mgw {

struct BarycenterSpec {
  std::vector<MmSpace> inputs;
  std::vector<double> rho;
  /// (Y, d). Its weights (normalized; uniform if unusable) are the free
  /// hub's placeholder measure and only enter the initial plan.
  MmSpace support;
  double eps = 1e-3;
  /// phi_i per input; scaled by rho_i when building the star problem.
  /// Empty means balanced for all inputs.
  std::vector<MarginalPenalty> inputPenalties;
  ReferenceMeasure::Kind reference = ReferenceMeasure::Kind::Counting;

  // fused variant
  std::vector<LabelledMmSpace> labelledInputs;
  std::optional<std::vector<int>> supportLabels;

  void validate() const;
};

struct FixedSupportBarycenter {
  MmSpace barycenter;  // support with the hub marginal as measure
  UmgwProblem problem;
  UmgwResult result;
  int hub = 0;
};

/// Star problem of the spec (hub = last node, Free).
UmgwProblem barycenter_problem(const BarycenterSpec& spec,
                               const std::optional<FusedConfig>& fused = std::nullopt);

FixedSupportBarycenter fixed_support_barycenter(const BarycenterSpec& spec,
                                                const UmgwOptions& options,
                                                const UmgwObserver& observer = {});

struct FusedBarycenter {
  LabelledMmSpace barycenter;
  UmgwProblem problem;
  UmgwResult result;
};

FusedBarycenter fused_fixed_support_barycenter(const BarycenterSpec& spec, const FusedConfig& fused,
                                               const UmgwOptions& options);

/// Dense construction on the product support (tiny instances only).
FreeSupportBarycenter free_support_barycenter(const std::vector<MmSpace>& inputs,
                                              const std::vector<double>& rho,
                                              const FreeSupportOptions& options = {});
FreeSupportBarycenter free_support_barycenter(const std::vector<LabelledMmSpace>& inputs,
                                              const std::vector<double>& rho,
                                              const FreeSupportOptions& options);

/// Squared regularized (U)GW between two spaces: F_eps of the two-node
/// solution, entropy taken relative to mu_x (x) mu_y.
/// `init` optionally seeds the alternation with a coupling (n_x x n_y).
double gw2_eps(const MmSpace& x, const MmSpace& y, double eps, const MarginalPenalty& penalty,
               const UmgwOptions& options, const Matrix* init = nullptr);

/// Mean of gw2_eps(X_i, barycenter) over the inputs; solves run concurrently.
/// `couplings` (one per input) seed the two-node solves.
double barycentric_loss(const std::vector<MmSpace>& inputs, const MmSpace& barycenter, double eps,
                        const MarginalPenalty& penalty, const UmgwOptions& options,
                        const std::vector<Matrix>* couplings = nullptr);

/// Input-to-hub couplings of a star plan, as seeds for barycentric_loss.
std::vector<Matrix> hub_couplings(const PlanFactors& plan);

inline constexpr double kEssentialMass = 1e-4;

/// Indices with mass > threshold.
std::vector<Eigen::Index> essential_support(const Vector& measure, double threshold = kEssentialMass);

}  // namespace mgw
