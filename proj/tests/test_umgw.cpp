#include <gtest/gtest.h>

#include <cmath>

#include "mgw/oracle.hpp"
#include "mgw/umgw.hpp"
#include "support.hpp"

using namespace mgw;
using mgw::testing::Gen;

namespace {

UmgwProblem random_chain(Gen& g, int nodes, Eigen::Index n, MarginalPenalty pen,
                         ReferenceMeasure::Kind ref = ReferenceMeasure::Kind::Counting) {
  UmgwProblem p;
  std::vector<Eigen::Index> sizes;
  for (int i = 0; i < nodes; ++i) {
    p.spaces.push_back(g.euclidean_space(n, pen.kind == MarginalPenalty::Kind::Balanced));
    sizes.push_back(n);
  }
  p.tree = chain_tree(sizes);
  p.penalties.assign(static_cast<std::size_t>(nodes), pen);
  p.eps = g.uniform(0.01, 0.2);
  p.reference = ref;
  return p;
}

PlanFactors random_plan(Gen& g, const UmgwProblem& p) {
  const auto ref = p.reference_measure();
  return g.random_factors(p.tree, p.sizes(), p.eps, ref.logWeights);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Objective, FactorizedMatchesDense) {
  Gen g(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pen = trial % 3 == 0 ? MarginalPenalty::free() : MarginalPenalty::scaled_kl(g.uniform(0.1, 2));
    const auto kind = trial % 2 ? ReferenceMeasure::Kind::Counting : ReferenceMeasure::Kind::ProductOfInputs;
    UmgwProblem p = random_chain(g, 3, 3, pen, kind);
    PlanFactors a = random_plan(g, p), b = random_plan(g, p);
    const DensePlan da = dense_from_factors(a), db = dense_from_factors(b);
    EXPECT_LT(rel(objective_Fbi(p, a, b), dense_objective_bi(p, da, db)), 1e-10);
    EXPECT_LT(rel(objective_F(p, a), dense_objective(p, da)), 1e-10);
  }
}

TEST(Objective, DiagonalCoincidence) {
  Gen g(8);
  UmgwProblem p = random_chain(g, 3, 3, MarginalPenalty::scaled_kl(0.5));
  PlanFactors a = random_plan(g, p);
  EXPECT_NEAR(objective_Fbi(p, a, a), objective_F(p, a), 1e-12 * (1 + std::abs(objective_F(p, a))));
}

TEST(Objective, ScalingInvariance) {
  Gen g(9);
  for (int trial = 0; trial < 20; ++trial) {
    UmgwProblem p = random_chain(g, 3, 3, trial % 2 ? MarginalPenalty::free() : MarginalPenalty::scaled_kl(0.7));
    PlanFactors a = random_plan(g, p), b = random_plan(g, p);
    const double f = objective_Fbi(p, a, b);
    for (double t : {0.5, 2.0, 10.0}) {
      EXPECT_LE(std::abs(objective_Fbi(p, a.rescaled(t), b.rescaled(1.0 / t)) - f), 1e-10 * (1 + std::abs(f)));
    }
  }
}

TEST(Umgw, MatchesDenseAlternationForTwoMarginals) {
  Gen g(12);
  for (int trial = 0; trial < 4; ++trial) {
    UmgwProblem p = random_chain(g, 2, 4, trial % 2 ? MarginalPenalty::balanced() : MarginalPenalty::scaled_kl(0.5));
    p.eps = 0.05;
    UmgwOptions o;
    o.outerIter = 30;
    o.inner.tolerance = 1e-11;
    o.inner.maxIter = 20000;
    const auto r = solve_umgw(p, o);
    const auto d = dense_umgw(p, o);
    const double fr = r.objectiveTrace.back() + r.objectiveOffset;
    EXPECT_NEAR(fr, d.objectiveTrace.back(), 1e-6) << trial;
    EXPECT_LT((dense_from_factors(r.pi).tensor - d.pi.tensor).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Umgw, TraceIsMonotone) {
  Gen g(13);
  for (int trial = 0; trial < 6; ++trial) {
    UmgwProblem p = random_chain(g, 3, 4, trial % 2 ? MarginalPenalty::balanced() : MarginalPenalty::scaled_kl(0.3));
    UmgwOptions o;
    o.outerIter = 20;
    o.inner.tolerance = 1e-9;
    o.inner.maxIter = 20000;
    const auto r = solve_umgw(p, o);
    for (std::size_t k = 1; k < r.objectiveTrace.size(); ++k) {
      if (!std::isfinite(r.objectiveTrace[k - 1])) continue;
      EXPECT_LE(r.objectiveTrace[k], r.objectiveTrace[k - 1] + 10 * o.inner.tolerance) << trial << " " << k;
    }
  }
}
