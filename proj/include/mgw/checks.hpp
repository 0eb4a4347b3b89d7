#pragma once

// Invariant suites shared by `mgw check` and the acceptance runner. Each
// returns the worst observed value next to its verdict.

#include <cstdint>
#include <string>
#include <vector>

#include "mgw/barycenter.hpp"
#include "mgw/umgw.hpp"

namespace mgw::checks {

struct Outcome {
  bool pass = false;
  double worst = 0.0;
  int trials = 0;
  std::string detail;
};

/// |KL(a1 (x) a2, a3 (x) a3) - factorized| on random positive triples, n <= 5.
Outcome kl_factorization(int trials, double tol, std::uint64_t seed = 1);

/// Largest quadratic form over zero-marginal directions (unit norm) on the
/// 2x2x2 and 3x3 grids, Euclidean and great-circle metrics.
Outcome mcnd(int trials, double tol, std::uint64_t seed = 2);

/// |F(t pi, gamma / t) - F(pi, gamma)| / (1 + |F|) for t in {0.5, 2, 10}.
Outcome scaling(int trials, double tol, std::uint64_t seed = 3);

/// Factorized F and F^bi against the dense tensor evaluation (N = 3, n = 3).
Outcome objective_oracle(int trials, double tol, std::uint64_t seed = 4);

/// Tree Sinkhorn against dense tensor Sinkhorn after equal sweep counts,
/// N = 3 chain, n = 3. Alternates balanced and KL instances.
Outcome sinkhorn_oracle(int trials, double tol, std::uint64_t seed = 5);

/// Every half step of the trace is at most the previous value + slack.
Outcome trace_monotone(const std::vector<double>& trace, double slack);

/// Balanced spade/heart star problem used by the tightness suite.
struct TightnessFixture {
  int grid = 12;
  double eps = 0.15e-3;
  std::vector<double> innerTolerances{1e-5, 1e-7, 1e-9};
  /// Tolerance at which the gaps are compared with tol * |F^bi|.
  double reportTolerance = 1e-7;
  int innerMaxIter = 20000;
  int outerIter = 60;
  double outerTol = 1e-10;
};

BarycenterSpec spade_heart_spec(int grid, double eps);

struct TightnessRun {
  double innerTolerance = 0.0;
  TightnessReport report;
  int iterations = 0;
  double seconds = 0.0;
  std::vector<double> trace;
};

struct TightnessOutcome {
  Outcome outcome;
  std::vector<TightnessRun> runs;
  bool monotoneGaps = true;
};

/// Gaps at reportTolerance <= tol * |F^bi| and |gaps| non-increasing along
/// the tolerance schedule.
TightnessOutcome tightness(const TightnessFixture& fixture, double tol);

}  // namespace mgw::checks
