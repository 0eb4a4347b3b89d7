#include "mgw/umgw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mgw {

void UmgwProblem::validate(bool requireTree) const {
  const int n = tree.n_nodes();
  if (static_cast<int>(spaces.size()) != n || static_cast<int>(penalties.size()) != n) {
    std::ostringstream os;
    os << "problem has " << spaces.size() << " spaces and " << penalties.size()
       << " penalties for a " << n << "-node cost tree";
    throw Error(ErrorKind::Config, os.str());
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::Config, "eps must be > 0");
  if (requireTree) tree.require_spanning_tree();
  for (const auto& s : spaces) {
    if (s.size() == 0) throw Error(ErrorKind::EmptySupport, "input space '" + s.name() + "' is empty");
  }
  if (fused) {
    if (!(fused->config.beta >= 0.0 && fused->config.beta <= 1.0)) {
      throw Error(ErrorKind::Config, "fused beta must lie in [0, 1]");
    }
    if (fused->labelCost.size() != tree.edges().size()) {
      throw Error(ErrorKind::Config, "fused label costs must follow the tree edges");
    }
  }
}

std::vector<Vector> UmgwProblem::marginals() const {
  std::vector<Vector> out;
  for (const auto& s : spaces) out.push_back(s.weights());
  return out;
}

ReferenceMeasure UmgwProblem::reference_measure() const {
  return ReferenceMeasure::build(reference, marginals());
}

std::vector<Eigen::Index> UmgwProblem::sizes() const {
  std::vector<Eigen::Index> out;
  for (const auto& s : spaces) out.push_back(s.size());
  return out;
}

PlanFactors initial_plan(const UmgwProblem& problem) {
  problem.validate();
  CostTree tree = problem.tree;
  tree.set_node_sizes(problem.sizes());
  return PlanFactors::product(tree, problem.eps, problem.marginals(),
                              problem.reference_measure().logWeights);
}

PlanFactors coupling_plan(const UmgwProblem& problem, const Matrix& coupling) {
  problem.validate();
  const auto sizes = problem.sizes();
  if (sizes.size() != 2 || problem.tree.edges().size() != 1) {
    throw Error(ErrorKind::Precondition, "coupling plans need a two-node problem");
  }
  const auto& ed = problem.tree.edges().front();
  const Matrix P = ed.i == 0 ? coupling : Matrix(coupling.transpose());
  if (coupling.rows() != sizes[0] || coupling.cols() != sizes[1]) {
    throw Error(ErrorKind::Dimension, "coupling does not match the node sizes");
  }
  if ((coupling.array() < 0.0).any()) throw Error(ErrorKind::Precondition, "coupling must be >= 0");
  const auto logRef = problem.reference_measure().logWeights;
  const Vector& ri = logRef[ed.i];
  const Vector& rj = logRef[ed.j];
  Matrix C(P.rows(), P.cols());
  for (Eigen::Index b = 0; b < P.cols(); ++b)
    for (Eigen::Index a = 0; a < P.rows(); ++a)
      C(a, b) = P(a, b) > 0.0 ? -problem.eps * (std::log(P(a, b)) - ri[a] - rj[b])
                              : std::numeric_limits<double>::infinity();
  CostTree tree = problem.tree;
  tree.set_node_sizes(sizes);
  return PlanFactors(tree, problem.eps, logRef, {C}, {});
}

// ---------------------------------------------------------------------------

namespace {

struct PlanSummary {
  std::vector<Vector> nodes;
  std::vector<Matrix> edges;
  double mass = 0.0;
};

PlanSummary summarize(const PlanFactors& p) {
  PlanSummary s;
  for (const auto& lm : p.log_node_marginals()) s.nodes.push_back(exp0(lm));
  s.edges = p.edge_marginals();
  s.mass = s.nodes[0].sum();
  return s;
}

double transport_from(const UmgwProblem& problem, const PlanSummary& pi, const PlanSummary& gamma) {
  const double beta = problem.fused ? problem.fused->config.beta : 0.0;
  double k = 0.0;
  for (std::size_t e = 0; e < problem.tree.edges().size(); ++e) {
    const auto& ed = problem.tree.edges()[e];
    const Matrix M = gw_edge_linearization(problem.spaces[ed.i].dist(), problem.spaces[ed.j].dist(),
                                           gamma.edges[e], gamma.nodes[ed.i], gamma.nodes[ed.j]);
    double term = ed.w * M.cwiseProduct(pi.edges[e]).sum();
    if (problem.fused) {
      const Matrix& L = problem.fused->labelCost[e];
      term = (1.0 - beta) * term + 0.5 * beta *
                                       (gamma.mass * L.cwiseProduct(pi.edges[e]).sum() +
                                        pi.mass * L.cwiseProduct(gamma.edges[e]).sum());
    }
    k += term;
  }
  return k;
}

}  // namespace

double transport_term(const UmgwProblem& problem, const PlanFactors& pi, const PlanFactors& gamma) {
  return transport_from(problem, summarize(pi), summarize(gamma));
}

ObjectiveParts objective_parts(const UmgwProblem& problem, const PlanFactors& pi,
                               const PlanFactors& gamma) {
  problem.validate();
  const PlanSummary sp = summarize(pi);
  const PlanSummary sg = summarize(gamma);
  ObjectiveParts parts;
  parts.transport = transport_from(problem, sp, sg);
  for (int i = 0; i < problem.tree.n_nodes(); ++i) {
    parts.divergence += cross_tensor_divergence(problem.penalties[i], sp.nodes[i], sg.nodes[i],
                                                problem.spaces[i].weights(), problem.balancedTol);
  }
  const double hPi = pi.relative_entropy_integral();
  const double hGamma = &pi == &gamma ? hPi : gamma.relative_entropy_integral();
  parts.entropy = problem.eps * (sg.mass * hPi + sp.mass * hGamma - sp.mass * sg.mass);
  const double r = pi.reference_mass();
  parts.offset = problem.eps * r * r;
  return parts;
}

double objective_Fbi_reduced(const UmgwProblem& problem, const PlanFactors& pi,
                             const PlanFactors& gamma) {
  return objective_parts(problem, pi, gamma).reduced();
}

double objective_Fbi(const UmgwProblem& problem, const PlanFactors& pi, const PlanFactors& gamma) {
  return objective_parts(problem, pi, gamma).total();
}

double objective_F(const UmgwProblem& problem, const PlanFactors& pi) {
  return objective_Fbi(problem, pi, pi);
}

// ---------------------------------------------------------------------------

namespace {

std::string trace_tail(const std::vector<double>& trace) {
  std::ostringstream os;
  os << "objective trace:";
  const std::size_t from = trace.size() > 6 ? trace.size() - 6 : 0;
  for (std::size_t k = from; k < trace.size(); ++k) os << ' ' << trace[k];
  return os.str();
}

}  // namespace

UmgwResult solve_umgw(const UmgwProblem& problem, int outerIter, const SinkhornConfig& innerCfg) {
  UmgwOptions opt;
  opt.outerIter = outerIter;
  opt.inner = innerCfg;
  return solve_umgw(problem, opt);
}

UmgwResult solve_umgw(const UmgwProblem& problem, const UmgwOptions& options,
                      const UmgwObserver& observer) {
  problem.validate();
  if (options.outerIter < 0) throw Error(ErrorKind::Config, "outer iteration count must be >= 0");
  const auto marginals = problem.marginals();
  const ReferenceMeasure ref = problem.reference_measure();
  const FusedTerms* fused = problem.fused ? &*problem.fused : nullptr;
  const int n = problem.tree.n_nodes();

  UmgwResult res;
  if (options.initial) {
    const auto& init = *options.initial;
    if (init.n_nodes() != n) throw Error(ErrorKind::Dimension, "initial plan has the wrong node count");
    for (int i = 0; i < n; ++i) {
      if (init.potential(i).size() != problem.spaces[i].size()) {
        throw Error(ErrorKind::Dimension, "initial plan does not match the node sizes");
      }
    }
    res.pi = init;
  } else {
    res.pi = initial_plan(problem);
  }
  res.gamma = res.pi;
  res.objectiveOffset = objective_parts(problem, res.pi, res.gamma).offset;

  auto record = [&](int outer, const char* step, int sweeps, bool ok) {
    const double f = objective_Fbi_reduced(problem, res.pi, res.gamma);
    if (std::isnan(f)) {
      res.objectiveTrace.push_back(f);
      throw Error(ErrorKind::NumericalFailure, "NaN objective; " + trace_tail(res.objectiveTrace));
    }
    res.objectiveTrace.push_back(f);
    res.rows.push_back({outer, step, f, res.pi.plan_mass(), sweeps, ok});
  };

  // Minimizes over `x` with `fixed` held, then rescales the pair jointly.
  auto half_step = [&](PlanFactors& x, PlanFactors& fixed, int& sweeps, bool& ok) {
    const double g = fixed.plan_mass();
    if (!(g >= options.massFloor)) {
      throw Error(ErrorKind::DegenerateMass, "plan mass underflowed; " + trace_tail(res.objectiveTrace));
    }
    const LinearizedCost lin =
        assemble_cgamma(problem.tree, problem.spaces, fixed, problem.penalties, problem.eps, fused);
    std::vector<MarginalPenalty> pens;
    for (const auto& p : problem.penalties) pens.push_back(p.scaled(g));
    SinkhornConfig cfg = options.inner;
    cfg.eps = g * problem.eps;
    std::vector<Vector> warm = x.potentials();
    for (int i = 0; i < n; ++i) {
      if (problem.penalties[i].kind == MarginalPenalty::Kind::Free) warm[i].setZero();
    }
    SinkhornResult sr = solve(problem.tree, lin.edgeCosts, lin.node_costs_with_constant(), marginals,
                              pens, cfg, ref, options.warmStart ? &warm : nullptr);
    x = std::move(sr.plan);
    sweeps = sr.sweeps;
    ok = sr.converged;
    const double m = x.plan_mass();
    if (!(m >= options.massFloor)) {
      throw Error(ErrorKind::DegenerateMass, "plan mass underflowed; " + trace_tail(res.objectiveTrace));
    }
    const double t = std::sqrt(g / m);
    x.rescale_by(t);
    fixed.rescale_by(1.0 / t);
  };

  record(0, "init", 0, true);
  int calm = 0;
  double last = res.objectiveTrace.back();
  for (int k = 1; k <= options.outerIter; ++k) {
    int sweeps = 0;
    bool ok = true;
    half_step(res.pi, res.gamma, sweeps, ok);
    record(k, "pi", sweeps, ok);
    half_step(res.gamma, res.pi, sweeps, ok);
    record(k, "gamma", sweeps, ok);
    res.iterations = k;
    if (observer) observer(k, res);
    const double f = res.objectiveTrace.back();
    const bool small = std::isfinite(f) && std::isfinite(last) &&
                       std::abs(f - last) <= options.outerTol * (std::abs(f) + problem.eps);
    calm = small ? calm + 1 : 0;
    last = f;
    if (calm >= 2) {
      res.converged = true;
      break;
    }
  }
  for (int i = 0; i < n; ++i) {
    const Vector d = res.pi.node_marginal(i) - res.gamma.node_marginal(i);
    res.marginalMismatch = std::max(res.marginalMismatch, d.cwiseAbs().maxCoeff());
  }
  return res;
}

TightnessReport tightness_report(const UmgwProblem& problem, const UmgwResult& result) {
  TightnessReport r;
  for (const auto& p : problem.penalties) {
    if (p.kind == MarginalPenalty::Kind::ScaledKL) r.balanced = false;
  }
  r.fbi = objective_Fbi_reduced(problem, result.pi, result.gamma);
  r.fPiPi = objective_Fbi_reduced(problem, result.pi, result.pi);
  r.fGammaGamma = objective_Fbi_reduced(problem, result.gamma, result.gamma);
  r.gapPiPi = r.fPiPi - r.fbi;
  r.gapGammaGamma = r.fGammaGamma - r.fbi;
  return r;
}

std::string objective_trace_csv(const UmgwResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "index,outer,step,objective,mass,sweeps,inner_converged\n";
  for (std::size_t k = 0; k < result.rows.size(); ++k) {
    const auto& r = result.rows[k];
    os << k << ',' << r.outer << ',' << r.step << ',' << r.objective << ',' << r.mass << ','
       << r.sweeps << ',' << (r.innerConverged ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace mgw
