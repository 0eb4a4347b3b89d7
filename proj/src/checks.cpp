#include "mgw/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "mgw/fixtures.hpp"
#include "mgw/oracle.hpp"

namespace mgw::checks {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  Vector vector(Eigen::Index n, double lo, double hi) {
    Vector v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  Matrix matrix(Eigen::Index r, Eigen::Index c, double lo, double hi) {
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = uniform(lo, hi);
    return m;
  }

 private:
  std::mt19937_64 eng_;
};

Matrix euclidean_dist(Rng& g, Eigen::Index n) {
  const Matrix p = g.matrix(n, 2, 0.0, 1.0);
  Matrix d(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) d(a, b) = a == b ? 0.0 : (p.row(a) - p.row(b)).norm();
  return d;
}

Matrix sphere_dist(Rng& g, Eigen::Index n) {
  std::vector<double> az(n), pol(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    az[a] = g.uniform(0.0, 2.0 * std::numbers::pi);
    pol[a] = std::acos(g.uniform(-1.0, 1.0));
  }
  Matrix d(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b <= a; ++b)
      d(a, b) = d(b, a) = a == b ? 0.0 : normalized_great_circle(az[a], pol[a], az[b], pol[b]);
  return d;
}

UmgwProblem random_chain(Rng& g, const MarginalPenalty& pen, ReferenceMeasure::Kind ref) {
  UmgwProblem p;
  for (int i = 0; i < 3; ++i) {
    Vector w = g.vector(3, 0.1, 1.0);
    if (pen.kind == MarginalPenalty::Kind::Balanced) w /= w.sum();
    p.spaces.emplace_back(euclidean_dist(g, 3), w);
  }
  p.tree = chain_tree({3, 3, 3});
  p.penalties.assign(3, pen);
  p.eps = g.uniform(0.01, 0.2);
  p.reference = ref;
  return p;
}

PlanFactors random_plan(Rng& g, const UmgwProblem& p) {
  std::vector<Matrix> costs;
  for (std::size_t e = 0; e < p.tree.edges().size(); ++e) costs.push_back(g.matrix(3, 3, 0.0, 2.0 * p.eps));
  std::vector<Vector> nodeCosts;
  for (int i = 0; i < 3; ++i) nodeCosts.push_back(g.vector(3, 0.0, p.eps));
  PlanFactors plan(p.tree, p.eps, p.reference_measure().logWeights, costs, nodeCosts);
  for (int i = 0; i < 3; ++i) plan.set_potential(i, p.eps * g.vector(3, -1.0, 0.5));
  return plan;
}

MarginalPenalty random_soft_penalty(Rng& g, int trial) {
  return trial % 3 == 0 ? MarginalPenalty::free() : MarginalPenalty::scaled_kl(g.uniform(0.1, 2.0));
}

ReferenceMeasure::Kind alternate_ref(int trial) {
  return trial % 2 ? ReferenceMeasure::Kind::Counting : ReferenceMeasure::Kind::ProductOfInputs;
}

std::string fmt(const char* label, double v) {
  std::ostringstream s;
  s << label << ' ' << v;
  return s.str();
}

Outcome verdict(double worst, double tol, int trials, const char* label) {
  return Outcome{worst <= tol, worst, trials, fmt(label, worst)};
}

}  // namespace

Outcome kl_factorization(int trials, double tol, std::uint64_t seed) {
  Rng g(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::Index n = g.integer(1, 5);
    worst = std::max(worst, kl_factorization_check(g.vector(n, 0.01, 2.0), g.vector(n, 0.01, 2.0),
                                                   g.vector(n, 0.01, 2.0)));
  }
  // strict: the residual must stay below tol
  Outcome o = verdict(worst, tol, trials, "max residual");
  o.pass = worst < tol;
  return o;
}

Outcome mcnd(int trials, double tol, std::uint64_t seed) {
  Rng g(seed);
  const std::vector<std::vector<Eigen::Index>> grids{{2, 2, 2}, {3, 3}};
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const auto& sizes = grids[t % 2];
    const bool sphere = (t / 2) % 2 == 1;
    std::vector<Matrix> dists;
    for (auto n : sizes) dists.push_back(sphere ? sphere_dist(g, n) : euclidean_dist(g, n));
    const std::vector<double> rho(sizes.size(), 1.0 / static_cast<double>(sizes.size()));
    const CostTree tree = t % 4 < 2 ? chain_tree(sizes) : complete_graph(sizes, rho);
    Eigen::Index total = 1;
    for (auto n : sizes) total *= n;
    Vector alpha = project_zero_marginals(sizes, g.matrix(total, 1, -1.0, 1.0));
    alpha /= alpha.norm();
    worst = std::max(worst, mcnd_quadratic_form(tree, dists, alpha));
  }
  return verdict(worst, tol, trials, "max quadratic form");
}

Outcome scaling(int trials, double tol, std::uint64_t seed) {
  Rng g(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const UmgwProblem p = random_chain(g, random_soft_penalty(g, t), alternate_ref(t));
    const PlanFactors a = random_plan(g, p), b = random_plan(g, p);
    const double f = objective_Fbi(p, a, b);
    for (double s : {0.5, 2.0, 10.0}) {
      worst = std::max(worst, std::abs(objective_Fbi(p, a.rescaled(s), b.rescaled(1.0 / s)) - f) / (1.0 + std::abs(f)));
    }
  }
  return verdict(worst, tol, trials, "max relative change");
}

Outcome objective_oracle(int trials, double tol, std::uint64_t seed) {
  Rng g(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const UmgwProblem p = random_chain(g, random_soft_penalty(g, t), alternate_ref(t));
    const PlanFactors a = random_plan(g, p), b = random_plan(g, p);
    const DensePlan da = dense_from_factors(a), db = dense_from_factors(b);
    worst = std::max(worst, std::abs(objective_Fbi(p, a, b) - dense_objective_bi(p, da, db)));
    worst = std::max(worst, std::abs(objective_F(p, a) - dense_objective(p, da)));
  }
  return verdict(worst, tol, trials, "max |factorized - dense|");
}

Outcome sinkhorn_oracle(int trials, double tol, std::uint64_t seed) {
  Rng g(seed);
  double worst = 0.0;
  bool sameSweeps = true;
  for (int t = 0; t < trials; ++t) {
    const CostTree tree = chain_tree({3, 3, 3});
    std::vector<EdgeCostMatrix> costs;
    for (const auto& e : tree.edges()) costs.push_back({e.i, e.j, g.matrix(3, 3, 0.0, 1.0)});
    std::vector<Vector> nodeCosts, marginals;
    for (int i = 0; i < 3; ++i) {
      nodeCosts.push_back(g.vector(3, 0.0, 0.2));
      Vector m = g.vector(3, 0.1, 1.0);
      marginals.push_back(m / m.sum());
    }
    const std::vector<MarginalPenalty> pens(
        3, t % 2 ? MarginalPenalty::scaled_kl(g.uniform(0.05, 1.0)) : MarginalPenalty::balanced());
    SinkhornConfig cfg;
    cfg.eps = g.uniform(0.05, 0.5);
    cfg.maxIter = 12;
    cfg.tolerance = 1e-300;
    const auto ref = ReferenceMeasure::build(ReferenceMeasure::Kind::Counting, marginals);
    const auto fact = solve(tree, costs, nodeCosts, marginals, pens, cfg, ref);
    const auto dense = dense_sinkhorn(tree, costs, nodeCosts, marginals, pens, cfg, ref);
    sameSweeps = sameSweeps && fact.sweeps == dense.sweeps;
    worst = std::max(worst, (dense_from_factors(fact.plan).tensor - dense.plan.tensor).cwiseAbs().maxCoeff());
  }
  Outcome o = verdict(worst, tol, trials, "max sup-norm difference");
  o.pass = o.pass && sameSweeps;
  if (!sameSweeps) o.detail += " (sweep counts differ)";
  return o;
}

Outcome trace_monotone(const std::vector<double>& trace, double slack) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (!std::isfinite(trace[k - 1])) continue;
    worst = std::max(worst, trace[k] - trace[k - 1]);
  }
  if (trace.size() < 2) worst = 0.0;
  return Outcome{worst <= slack, worst, static_cast<int>(trace.size()), fmt("max increase", worst)};
}

BarycenterSpec spade_heart_spec(int grid, double eps) {
  const Matrix sp = spade_image(grid), he = heart_image(grid);
  BarycenterSpec s;
  s.inputs = {image_to_mmspace(sp, 0.0, DistanceNormalization::FullGrid).with_name("spade"),
              image_to_mmspace(he, 0.0, DistanceNormalization::FullGrid).with_name("heart")};
  s.support = union_support({sp, he});
  s.rho = {0.5, 0.5};
  s.eps = eps;
  return s;
}

TightnessOutcome tightness(const TightnessFixture& fx, double tol) {
  const BarycenterSpec spec = spade_heart_spec(fx.grid, fx.eps);
  TightnessOutcome out;
  double reported = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  double fbi = 0.0;
  bool found = false;
  for (double itol : fx.innerTolerances) {
    UmgwOptions o;
    o.inner.tolerance = itol;
    o.inner.maxIter = fx.innerMaxIter;
    o.outerIter = fx.outerIter;
    o.outerTol = fx.outerTol;
    const auto t0 = std::chrono::steady_clock::now();
    const auto b = fixed_support_barycenter(spec, o);
    TightnessRun run;
    run.innerTolerance = itol;
    run.report = tightness_report(b.problem, b.result);
    run.iterations = b.result.iterations;
    run.trace = b.result.objectiveTrace;
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double gap = std::max(std::abs(run.report.gapPiPi), std::abs(run.report.gapGammaGamma));
    out.monotoneGaps = out.monotoneGaps && gap <= prev;
    prev = gap;
    if (itol == fx.reportTolerance) {
      reported = gap;
      fbi = run.report.fbi;
      found = true;
    }
    out.runs.push_back(std::move(run));
  }
  if (!found) throw Error(ErrorKind::Config, "report tolerance is not in the tolerance schedule");
  const double rel = reported / std::abs(fbi);
  out.outcome = Outcome{rel <= tol && out.monotoneGaps, rel, static_cast<int>(out.runs.size()), {}};
  std::ostringstream d;
  d << "gap/|Fbi| " << rel << " at inner tol " << fx.reportTolerance << ", gaps";
  for (const auto& r : out.runs) d << ' ' << std::max(std::abs(r.report.gapPiPi), std::abs(r.report.gapGammaGamma));
  d << (out.monotoneGaps ? " non-increasing" : " NOT non-increasing");
  out.outcome.detail = d.str();
  return out;
}

}  // namespace mgw::checks
