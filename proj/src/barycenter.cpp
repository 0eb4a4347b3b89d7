#include "mgw/barycenter.hpp"

#include <cmath>

#include "mgw/parallel.hpp"

namespace mgw {

namespace {

std::vector<MmSpace> structure_of(const BarycenterSpec& spec) {
  if (!spec.inputs.empty()) return spec.inputs;
  std::vector<MmSpace> out;
  for (const auto& l : spec.labelledInputs) out.push_back(l.base());
  return out;
}

}  // namespace

void BarycenterSpec::validate() const {
  const std::size_t n = inputs.empty() ? labelledInputs.size() : inputs.size();
  if (n == 0) throw Error(ErrorKind::Config, "barycenter needs at least one input");
  if (rho.size() != n) throw Error(ErrorKind::Config, "one barycenter weight per input expected");
  double total = 0.0;
  for (double r : rho) {
    if (!(r >= 0.0)) throw Error(ErrorKind::Config, "barycenter weights must be >= 0");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::Config, "barycenter weights must sum to 1");
  if (!inputPenalties.empty() && inputPenalties.size() != n) {
    throw Error(ErrorKind::Config, "one penalty per input expected");
  }
  if (support.size() == 0) throw Error(ErrorKind::EmptySupport, "barycenter support is empty");
  if (!(eps > 0.0)) throw Error(ErrorKind::Config, "eps must be positive");
  if (!inputs.empty() && !labelledInputs.empty()) {
    if (labelledInputs.size() != n) throw Error(ErrorKind::Config, "one label set per input expected");
    for (std::size_t i = 0; i < n; ++i) {
      if (labelledInputs[i].base().size() != inputs[i].size()) {
        throw Error(ErrorKind::Dimension, "labelled input does not match its structure");
      }
    }
  }
  if (supportLabels && static_cast<Eigen::Index>(supportLabels->size()) != support.size()) {
    throw Error(ErrorKind::Dimension, "one label per support point expected");
  }
}

UmgwProblem barycenter_problem(const BarycenterSpec& spec, const std::optional<FusedConfig>& fused) {
  spec.validate();
  UmgwProblem p;
  p.spaces = structure_of(spec);
  const std::size_t n = p.spaces.size();
  std::vector<Eigen::Index> sizes;
  for (const auto& s : p.spaces) sizes.push_back(s.size());
  // the support weights are the hub's placeholder measure; they only shape
  // the initial product plan. Unusable weights fall back to uniform.
  const Eigen::Index m = spec.support.size();
  const Vector& w = spec.support.weights();
  const bool usable = w.allFinite() && (w.array() >= 0.0).all() && w.sum() > 0.0;
  p.spaces.push_back(spec.support.with_weights(
      usable ? Vector(w / w.sum()) : Vector::Constant(m, 1.0 / static_cast<double>(m))));
  p.tree = barycenter_star_tree(sizes, m, spec.rho);
  for (std::size_t i = 0; i < n; ++i) {
    const MarginalPenalty phi = spec.inputPenalties.empty() ? MarginalPenalty::balanced() : spec.inputPenalties[i];
    p.penalties.push_back(phi.scaled(spec.rho[i]));
  }
  p.penalties.push_back(MarginalPenalty::free());
  p.eps = spec.eps;
  p.reference = spec.reference;
  if (fused) {
    if (spec.labelledInputs.size() != n || !spec.supportLabels) {
      throw Error(ErrorKind::Config, "fused barycenter needs labelled inputs and support labels");
    }
    const auto& shared = spec.labelledInputs.front().label_space();
    for (const auto& l : spec.labelledInputs) {
      const Matrix& e = l.label_space()->dist();
      const bool same = l.label_space() == shared ||
                        (e.rows() == shared->size() && e == shared->dist());
      if (!same) {
        throw Error(ErrorKind::Config, "inputs do not share one label space");
      }
    }
    for (int lab : *spec.supportLabels) {
      if (lab < 0 || lab >= shared->size()) throw Error(ErrorKind::Config, "support label out of range");
    }
    FusedTerms ft;
    ft.config = *fused;
    ft.labelCost = fused_star_costs(spec.labelledInputs, *spec.supportLabels, *fused, spec.rho);
    p.fused = std::move(ft);
  }
  return p;
}

FixedSupportBarycenter fixed_support_barycenter(const BarycenterSpec& spec, const UmgwOptions& options,
                                                const UmgwObserver& observer) {
  FixedSupportBarycenter out;
  out.problem = barycenter_problem(spec);
  out.hub = out.problem.tree.n_nodes() - 1;
  out.result = solve_umgw(out.problem, options, observer);
  out.barycenter = spec.support.with_weights(out.result.pi.node_marginal(out.hub)).with_name("barycenter");
  return out;
}

FusedBarycenter fused_fixed_support_barycenter(const BarycenterSpec& spec, const FusedConfig& fused,
                                               const UmgwOptions& options) {
  UmgwProblem problem = barycenter_problem(spec, fused);
  const int hub = problem.tree.n_nodes() - 1;
  UmgwResult result = solve_umgw(problem, options);
  MmSpace bary = spec.support.with_weights(result.pi.node_marginal(hub)).with_name("barycenter");
  return FusedBarycenter{LabelledMmSpace(std::move(bary), *spec.supportLabels,
                                         spec.labelledInputs.front().label_space()),
                         std::move(problem), std::move(result)};
}

FreeSupportBarycenter free_support_barycenter(const std::vector<MmSpace>& inputs,
                                              const std::vector<double>& rho,
                                              const FreeSupportOptions& options) {
  try {
    return dense_free_support_bary(inputs, rho, options);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnsupportedScale) throw;
    throw Error(ErrorKind::UnsupportedScale,
                std::string(e.what()) + "; free-support barycenters are dense only, use a fixed support");
  }
}

FreeSupportBarycenter free_support_barycenter(const std::vector<LabelledMmSpace>& inputs,
                                              const std::vector<double>& rho,
                                              const FreeSupportOptions& options) {
  std::vector<MmSpace> bases;
  for (const auto& l : inputs) bases.push_back(l.base());
  try {
    return dense_free_support_bary(bases, rho, options, &inputs);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnsupportedScale) throw;
    throw Error(ErrorKind::UnsupportedScale,
                std::string(e.what()) + "; free-support barycenters are dense only, use a fixed support");
  }
}

double gw2_eps(const MmSpace& x, const MmSpace& y, double eps, const MarginalPenalty& penalty,
               const UmgwOptions& options, const Matrix* init) {
  UmgwProblem p;
  p.spaces = {x, y};
  p.tree = chain_tree({x.size(), y.size()});
  p.penalties = {penalty, penalty};
  p.eps = eps;
  p.reference = ReferenceMeasure::Kind::ProductOfInputs;
  UmgwOptions o = options;
  if (init) o.initial = coupling_plan(p, *init);
  const UmgwResult r = solve_umgw(p, o);
  return objective_F(p, r.pi);
}

double barycentric_loss(const std::vector<MmSpace>& inputs, const MmSpace& barycenter, double eps,
                        const MarginalPenalty& penalty, const UmgwOptions& options,
                        const std::vector<Matrix>* couplings) {
  if (inputs.empty()) throw Error(ErrorKind::Config, "no inputs");
  if (couplings && couplings->size() != inputs.size()) {
    throw Error(ErrorKind::Config, "one seed coupling per input expected");
  }
  std::vector<double> vals(inputs.size());
  parallel_for(
      0, inputs.size(),
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) vals[i] = gw2_eps(inputs[i], barycenter, eps, penalty, options,
                                                       couplings ? &(*couplings)[i] : nullptr);
      },
      1);
  double s = 0.0;
  for (double v : vals) s += v;
  return s / static_cast<double>(vals.size());
}

std::vector<Matrix> hub_couplings(const PlanFactors& plan) {
  const int hub = plan.n_nodes() - 1;
  std::vector<Matrix> out;
  for (int i = 0; i < hub; ++i) out.push_back(plan.edge_marginal(i, hub));
  return out;
}

std::vector<Eigen::Index> essential_support(const Vector& measure, double threshold) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index a = 0; a < measure.size(); ++a) {
    if (measure[a] > threshold) out.push_back(a);
  }
  return out;
}

}  // namespace mgw
