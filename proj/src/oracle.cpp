#include "mgw/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace mgw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<Eigen::Index> strides_of(const std::vector<Eigen::Index>& sizes) {
  std::vector<Eigen::Index> st(sizes.size(), 1);
  for (int k = static_cast<int>(sizes.size()) - 2; k >= 0; --k) st[k] = st[k + 1] * sizes[k + 1];
  return st;
}

std::vector<std::vector<Eigen::Index>> all_points(const std::vector<Eigen::Index>& sizes) {
  const Eigen::Index total = product_size(sizes, kDenseLimit);
  DensePlan tmp{sizes, Vector()};
  std::vector<std::vector<Eigen::Index>> pts;
  pts.reserve(static_cast<std::size_t>(total));
  for (Eigen::Index k = 0; k < total; ++k) pts.push_back(tmp.unflat(k));
  return pts;
}

Vector log_reference(const UmgwProblem& problem, const std::vector<std::vector<Eigen::Index>>& pts) {
  const auto ref = problem.reference_measure();
  Vector out(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts[k].size(); ++i) s += ref.logWeights[i][pts[k][i]];
    out[static_cast<Eigen::Index>(k)] = s;
  }
  return out;
}

Matrix cost_matrix(const UmgwProblem& problem, const std::vector<std::vector<Eigen::Index>>& pts) {
  const auto P = static_cast<Eigen::Index>(pts.size());
  Matrix C(P, P);
  for (Eigen::Index a = 0; a < P; ++a) {
    for (Eigen::Index b = a; b < P; ++b) {
      const double c = dense_cost(problem, pts[a], pts[b]);
      C(a, b) = c;
      C(b, a) = c;
    }
  }
  return C;
}

double lse_of(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<int> default_order(const CostTree& tree) {
  if (tree.is_spanning_tree()) return tree.sweep_order(0);
  std::vector<int> order;
  const int n = tree.n_nodes();
  for (int i = 0; i < n; ++i) order.push_back(i);
  for (int i = n - 2; i >= 0; --i) order.push_back(i);
  return order;
}

}  // namespace

Eigen::Index DensePlan::flat(const std::vector<Eigen::Index>& x) const {
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) k = k * sizes[i] + x[i];
  return k;
}

std::vector<Eigen::Index> DensePlan::unflat(Eigen::Index k) const {
  std::vector<Eigen::Index> x(sizes.size());
  for (int i = static_cast<int>(sizes.size()) - 1; i >= 0; --i) {
    x[i] = k % sizes[i];
    k /= sizes[i];
  }
  return x;
}

Vector DensePlan::node_marginal(int i) const {
  const auto st = strides_of(sizes);
  Vector m = Vector::Zero(sizes[i]);
  for (Eigen::Index k = 0; k < tensor.size(); ++k) m[(k / st[i]) % sizes[i]] += tensor[k];
  return m;
}

Matrix DensePlan::pair_marginal(int i, int j) const {
  const auto st = strides_of(sizes);
  Matrix m = Matrix::Zero(sizes[i], sizes[j]);
  for (Eigen::Index k = 0; k < tensor.size(); ++k) {
    m((k / st[i]) % sizes[i], (k / st[j]) % sizes[j]) += tensor[k];
  }
  return m;
}

DensePlan dense_from_factors(const PlanFactors& plan) {
  DensePlan d;
  for (int i = 0; i < plan.n_nodes(); ++i) d.sizes.push_back(plan.potential(i).size());
  const Eigen::Index total = product_size(d.sizes, kDenseLimit);
  d.tensor.resize(total);
  for (Eigen::Index k = 0; k < total; ++k) d.tensor[k] = std::exp(plan.log_density(d.unflat(k)));
  return d;
}

double dense_cost(const UmgwProblem& problem, const std::vector<Eigen::Index>& x,
                  const std::vector<Eigen::Index>& y) {
  double mm = 0.0;
  for (const auto& ed : problem.tree.edges()) {
    const double d = problem.spaces[ed.i].dist()(x[ed.i], y[ed.i]) -
                     problem.spaces[ed.j].dist()(x[ed.j], y[ed.j]);
    mm += ed.w * d * d;
  }
  if (!problem.fused) return mm;
  const double beta = problem.fused->config.beta;
  double lx = 0.0, ly = 0.0;
  for (std::size_t e = 0; e < problem.tree.edges().size(); ++e) {
    const auto& ed = problem.tree.edges()[e];
    const Matrix& L = problem.fused->labelCost[e];
    lx += L(x[ed.i], x[ed.j]);
    ly += L(y[ed.i], y[ed.j]);
  }
  return (1.0 - beta) * mm + 0.5 * beta * (lx + ly);
}

double dense_objective_bi(const UmgwProblem& problem, const DensePlan& pi, const DensePlan& gamma) {
  problem.validate(false);
  const auto pts = all_points(pi.sizes);
  const auto P = static_cast<Eigen::Index>(pts.size());
  if (pi.tensor.size() != P || gamma.tensor.size() != P) {
    throw Error(ErrorKind::Dimension, "dense plans do not match the problem grid");
  }
  double transport = 0.0;
  for (Eigen::Index a = 0; a < P; ++a) {
    if (pi.tensor[a] == 0.0) continue;
    for (Eigen::Index b = 0; b < P; ++b) {
      transport += dense_cost(problem, pts[a], pts[b]) * pi.tensor[a] * gamma.tensor[b];
    }
  }
  double divergence = 0.0;
  for (int i = 0; i < problem.tree.n_nodes(); ++i) {
    const Vector a = pi.node_marginal(i);
    const Vector b = gamma.node_marginal(i);
    const Vector& mu = problem.spaces[i].weights();
    const auto n = mu.size();
    Vector lhs(n * n), rhs(n * n);
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = 0; q < n; ++q) {
        lhs[p * n + q] = a[p] * b[q];
        rhs[p * n + q] = mu[p] * mu[q];
      }
    }
    const auto& pen = problem.penalties[i];
    if (pen.kind == MarginalPenalty::Kind::ScaledKL) {
      divergence += pen.lambda * kl_divergence(lhs, rhs);
    } else if (pen.kind == MarginalPenalty::Kind::Balanced) {
      const double m = std::max(1.0, mu.sum());
      if ((lhs - rhs).cwiseAbs().maxCoeff() > problem.balancedTol * m * m) {
        divergence = std::numeric_limits<double>::infinity();
      }
    }
  }
  const Vector logR = log_reference(problem, pts);
  double kl = 0.0;
  double refMass = 0.0;
  for (Eigen::Index a = 0; a < P; ++a) refMass += std::exp(logR[a]);
  for (Eigen::Index a = 0; a < P; ++a) {
    for (Eigen::Index b = 0; b < P; ++b) {
      const double v = pi.tensor[a] * gamma.tensor[b];
      if (v == 0.0) continue;
      kl += v * (std::log(v) - logR[a] - logR[b]);
    }
  }
  kl += refMass * refMass - pi.mass() * gamma.mass();
  return transport + divergence + problem.eps * kl;
}

double dense_objective(const UmgwProblem& problem, const DensePlan& pi) {
  return dense_objective_bi(problem, pi, pi);
}

// ---------------------------------------------------------------------------

DenseSinkhornResult dense_sinkhorn_tensor(const std::vector<Eigen::Index>& sizes,
                                          const Vector& logKernel,
                                          const std::vector<Vector>& marginals,
                                          const std::vector<MarginalPenalty>& penalties,
                                          const SinkhornConfig& cfg, const std::vector<int>& order,
                                          const std::vector<Vector>* warmStart) {
  const Eigen::Index total = product_size(sizes, kDenseLimit);
  const int n = static_cast<int>(sizes.size());
  if (logKernel.size() != total) throw Error(ErrorKind::Dimension, "kernel does not fit the grid");
  if (static_cast<int>(marginals.size()) != n || static_cast<int>(penalties.size()) != n) {
    throw Error(ErrorKind::Dimension, "one marginal and one penalty per node expected");
  }
  const auto st = strides_of(sizes);
  const double eps = cfg.eps;
  DenseSinkhornResult res;
  res.potentials.resize(n);
  for (int i = 0; i < n; ++i) {
    res.potentials[i] = warmStart ? (*warmStart)[i] : Vector::Zero(sizes[i]);
  }
  auto coord = [&](Eigen::Index k, int i) { return (k / st[i]) % sizes[i]; };
  for (int sweep = 1; sweep <= cfg.maxIter; ++sweep) {
    const auto start = res.potentials;
    for (int i : order) {
      if (penalties[i].kind == MarginalPenalty::Kind::Free) continue;
      std::vector<std::vector<double>> slices(static_cast<std::size_t>(sizes[i]));
      for (Eigen::Index k = 0; k < total; ++k) {
        double v = logKernel[k];
        for (int j = 0; j < n; ++j) {
          if (j != i) v += res.potentials[j][coord(k, j)] / eps;
        }
        slices[static_cast<std::size_t>(coord(k, i))].push_back(v);
      }
      Vector logS(sizes[i]);
      for (Eigen::Index a = 0; a < sizes[i]; ++a) logS[a] = lse_of(slices[static_cast<std::size_t>(a)]);
      res.potentials[i] = proxdiv_update(penalties[i], marginals[i], logS, eps, res.potentials[i]);
    }
    double drift = 0.0;
    for (int i = 0; i < n; ++i) {
      for (Eigen::Index a = 0; a < sizes[i]; ++a) {
        const double x = res.potentials[i][a], y = start[i][a];
        if (x == kNegInf && y == kNegInf) continue;
        drift = std::max(drift, (x == kNegInf || y == kNegInf)
                                    ? std::numeric_limits<double>::infinity()
                                    : std::abs(x - y));
      }
    }
    res.sweeps = sweep;
    if (drift < cfg.tolerance * eps) {
      res.converged = true;
      break;
    }
  }
  res.plan.sizes = sizes;
  res.plan.tensor.resize(total);
  for (Eigen::Index k = 0; k < total; ++k) {
    double v = logKernel[k];
    for (int j = 0; j < n; ++j) v += res.potentials[j][coord(k, j)] / eps;
    res.plan.tensor[k] = std::exp(v);
  }
  return res;
}

DenseSinkhornResult dense_sinkhorn(const CostTree& tree, const std::vector<EdgeCostMatrix>& edgeCosts,
                                   const std::vector<Vector>& nodeCosts,
                                   const std::vector<Vector>& marginals,
                                   const std::vector<MarginalPenalty>& penalties,
                                   const SinkhornConfig& cfg, const ReferenceMeasure& ref,
                                   const std::vector<Vector>* warmStart) {
  tree.require_spanning_tree();
  std::vector<Eigen::Index> sizes;
  for (const auto& m : marginals) sizes.push_back(m.size());
  const Eigen::Index total = product_size(sizes, kDenseLimit);
  DensePlan grid{sizes, Vector()};
  Vector logK(total);
  for (Eigen::Index k = 0; k < total; ++k) {
    const auto x = grid.unflat(k);
    double c = 0.0;
    double lr = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      lr += ref.logWeights[i][x[i]];
      if (!nodeCosts.empty()) c += nodeCosts[i][x[i]];
    }
    for (std::size_t e = 0; e < edgeCosts.size(); ++e) {
      const auto& ec = edgeCosts[e];
      c += ec.matrix(x[ec.i], x[ec.j]);
    }
    logK[k] = lr - c / cfg.eps;
  }
  return dense_sinkhorn_tensor(sizes, logK, marginals, penalties, cfg, tree.sweep_order(0), warmStart);
}

// ---------------------------------------------------------------------------

DenseUmgwResult dense_umgw(const UmgwProblem& problem, const UmgwOptions& options) {
  problem.validate(false);
  const auto sizes = problem.sizes();
  const auto pts = all_points(sizes);
  const auto P = static_cast<Eigen::Index>(pts.size());
  const int n = problem.tree.n_nodes();
  const auto marginals = problem.marginals();
  const Matrix C = cost_matrix(problem, pts);
  const Vector logR = log_reference(problem, pts);
  const auto order = default_order(problem.tree);

  struct State {
    DensePlan plan;
    std::vector<Vector> potentials;
    double eps = 0.0;
  };
  State pi, gamma;
  pi.plan.sizes = sizes;
  pi.plan.tensor.resize(P);
  for (Eigen::Index k = 0; k < P; ++k) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= marginals[i][pts[k][i]];
    pi.plan.tensor[k] = v;
  }
  const auto ref = problem.reference_measure();
  for (int i = 0; i < n; ++i) {
    Vector f(sizes[i]);
    for (Eigen::Index a = 0; a < sizes[i]; ++a) {
      f[a] = marginals[i][a] > 0.0
                 ? problem.eps * (std::log(marginals[i][a]) - ref.logWeights[i][a])
                 : kNegInf;
    }
    pi.potentials.push_back(f);
  }
  pi.eps = problem.eps;
  gamma = pi;

  DenseUmgwResult res;
  auto half_step = [&](State& x, State& fixed) {
    const double g = fixed.plan.mass();
    if (!(g >= options.massFloor)) throw Error(ErrorKind::DegenerateMass, "plan mass underflowed");
    double constant = 0.0;
    for (int i = 0; i < n; ++i) {
      if (problem.penalties[i].kind != MarginalPenalty::Kind::ScaledKL) continue;
      constant += problem.penalties[i].lambda *
                  kl_integral(fixed.plan.node_marginal(i), marginals[i]);
    }
    double h = 0.0;
    for (Eigen::Index k = 0; k < P; ++k) {
      const double v = fixed.plan.tensor[k];
      if (v > 0.0) h += v * (std::log(v) - logR[k]);
    }
    constant += problem.eps * h;
    const Vector cg = (C * fixed.plan.tensor).array() + constant;
    const double epsEff = g * problem.eps;
    const Vector logK = logR - cg / epsEff;
    std::vector<MarginalPenalty> pens;
    for (const auto& p : problem.penalties) pens.push_back(p.scaled(g));
    SinkhornConfig cfg = options.inner;
    cfg.eps = epsEff;
    std::vector<Vector> warm = x.potentials;
    for (int i = 0; i < n; ++i) {
      if (problem.penalties[i].kind == MarginalPenalty::Kind::Free) warm[i].setZero();
    }
    auto sr = dense_sinkhorn_tensor(sizes, logK, marginals, pens, cfg, order,
                                    options.warmStart ? &warm : nullptr);
    x.plan = std::move(sr.plan);
    x.potentials = std::move(sr.potentials);
    x.eps = epsEff;
    const double m = x.plan.mass();
    if (!(m >= options.massFloor)) throw Error(ErrorKind::DegenerateMass, "plan mass underflowed");
    const double t = std::sqrt(g / m);
    x.plan.tensor *= t;
    x.potentials[0].array() += x.eps * std::log(t);
    fixed.plan.tensor /= t;
    fixed.potentials[0].array() -= fixed.eps * std::log(t);
  };

  double refMass = 0.0;
  for (Eigen::Index k = 0; k < P; ++k) refMass += std::exp(logR[k]);
  const double offset = problem.eps * refMass * refMass;
  res.objectiveTrace.push_back(dense_objective_bi(problem, pi.plan, gamma.plan));
  int calm = 0;
  double last = res.objectiveTrace.back() - offset;
  for (int k = 1; k <= options.outerIter; ++k) {
    half_step(pi, gamma);
    res.objectiveTrace.push_back(dense_objective_bi(problem, pi.plan, gamma.plan));
    half_step(gamma, pi);
    res.objectiveTrace.push_back(dense_objective_bi(problem, pi.plan, gamma.plan));
    res.iterations = k;
    const double f = res.objectiveTrace.back() - offset;
    const bool small = std::isfinite(f) && std::isfinite(last) &&
                       std::abs(f - last) <= options.outerTol * (std::abs(f) + problem.eps);
    calm = small ? calm + 1 : 0;
    last = f;
    if (calm >= 2) break;
  }
  res.pi = std::move(pi.plan);
  res.gamma = std::move(gamma.plan);
  return res;
}

// ---------------------------------------------------------------------------

GridSearchResult grid_search_mgw(const UmgwProblem& problem, int resolution) {
  problem.validate(false);
  if (resolution < 1) throw Error(ErrorKind::Config, "resolution must be >= 1");
  const auto sizes = problem.sizes();
  const Eigen::Index total = product_size(sizes, 64);
  const int n = static_cast<int>(sizes.size());
  std::vector<std::vector<long long>> rem(n);
  long long mass = -1;
  for (int i = 0; i < n; ++i) {
    if (problem.penalties[i].kind != MarginalPenalty::Kind::Balanced) {
      throw Error(ErrorKind::Precondition, "grid search handles balanced marginals only");
    }
    long long s = 0;
    for (Eigen::Index a = 0; a < sizes[i]; ++a) {
      const double v = problem.spaces[i].weights()[a] * resolution;
      const double r = std::round(v);
      if (std::abs(v - r) > 1e-9) {
        std::ostringstream os;
        os << "marginal " << i << " is not representable at grain 1/" << resolution;
        throw Error(ErrorKind::Precondition, os.str());
      }
      rem[i].push_back(static_cast<long long>(r));
      s += static_cast<long long>(r);
    }
    if (mass >= 0 && s != mass) throw Error(ErrorKind::Precondition, "marginal masses differ");
    mass = s;
  }
  DensePlan grid{sizes, Vector::Zero(total)};
  std::vector<std::vector<Eigen::Index>> pts;
  for (Eigen::Index k = 0; k < total; ++k) pts.push_back(grid.unflat(k));
  const Matrix C = cost_matrix(problem, pts);

  GridSearchResult best;
  best.bestObjective = std::numeric_limits<double>::infinity();
  std::vector<long long> cells(static_cast<std::size_t>(total), 0);
  std::vector<Eigen::Index> nz;
  const double unit = 1.0 / resolution;

  std::function<void(Eigen::Index)> rec = [&](Eigen::Index k) {
    if (k == total) {
      ++best.visited;
      double f = 0.0;
      for (auto a : nz)
        for (auto b : nz) f += C(a, b) * static_cast<double>(cells[a] * cells[b]);
      f *= unit * unit;
      if (f < best.bestObjective) {
        best.bestObjective = f;
        for (Eigen::Index q = 0; q < total; ++q) grid.tensor[q] = cells[q] * unit;
        best.bestPlan = grid;
      }
      return;
    }
    const auto& x = pts[k];
    long long hi = std::numeric_limits<long long>::max();
    long long forced = -1;
    bool clash = false;
    for (int i = 0; i < n; ++i) {
      hi = std::min(hi, rem[i][x[i]]);
      bool last = true;
      for (int j = 0; j < n && last; ++j) {
        if (j != i && x[j] != sizes[j] - 1) last = false;
      }
      if (last) {
        if (forced >= 0 && forced != rem[i][x[i]]) clash = true;
        forced = rem[i][x[i]];
      }
    }
    if (clash) return;
    long long lo = 0;
    if (forced >= 0) {
      if (forced > hi) return;
      lo = hi = forced;
    }
    for (long long v = lo; v <= hi; ++v) {
      for (int i = 0; i < n; ++i) rem[i][x[i]] -= v;
      cells[k] = v;
      if (v > 0) nz.push_back(k);
      rec(k + 1);
      if (v > 0) nz.pop_back();
      cells[k] = 0;
      for (int i = 0; i < n; ++i) rem[i][x[i]] += v;
    }
  };
  rec(0);
  return best;
}

// ---------------------------------------------------------------------------

MmSpace FreeSupportBarycenter::as_mmspace() const { return MmSpace(dStar, measure, "free-support"); }

FreeSupportBarycenter dense_free_support_bary(const std::vector<MmSpace>& inputs,
                                              const std::vector<double>& rho,
                                              const FreeSupportOptions& options,
                                              const std::vector<LabelledMmSpace>* labelled) {
  if (inputs.empty() || inputs.size() != rho.size()) {
    throw Error(ErrorKind::Config, "one weight per input expected");
  }
  double total = 0.0;
  for (double r : rho) {
    if (r < 0.0) throw Error(ErrorKind::Config, "barycenter weights must be >= 0");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::Config, "barycenter weights must sum to 1");
  std::vector<Eigen::Index> sizes;
  for (const auto& s : inputs) sizes.push_back(s.size());
  const Eigen::Index P = product_size(sizes, kDenseLimit);
  const int n = static_cast<int>(inputs.size());

  UmgwProblem problem;
  problem.spaces = inputs;
  problem.tree = complete_graph(sizes, rho);
  problem.penalties.assign(inputs.size(), MarginalPenalty::balanced());
  problem.eps = options.eps;
  std::shared_ptr<const LabelSpace> labels;
  if (labelled) {
    if (labelled->size() != inputs.size()) throw Error(ErrorKind::Config, "one label set per input");
    labels = labelled->front().label_space();
    FusedTerms ft;
    ft.config.beta = options.beta;
    ft.config.labelExponent = options.labelExponent;
    for (const auto& ed : problem.tree.edges()) {
      const auto& li = (*labelled)[ed.i].label_of();
      const auto& lj = (*labelled)[ed.j].label_of();
      Matrix L(sizes[ed.i], sizes[ed.j]);
      for (Eigen::Index a = 0; a < L.rows(); ++a)
        for (Eigen::Index b = 0; b < L.cols(); ++b)
          L(a, b) = ed.w * std::pow(labels->dist()(li[a], lj[b]), options.labelExponent);
      ft.labelCost.push_back(std::move(L));
    }
    problem.fused = std::move(ft);
  }
  UmgwOptions uo;
  uo.outerIter = options.outerIter;
  uo.inner = options.inner;
  const DenseUmgwResult r = dense_umgw(problem, uo);

  FreeSupportBarycenter out;
  DensePlan grid{sizes, Vector()};
  for (Eigen::Index k = 0; k < P; ++k) out.productSupport.push_back(grid.unflat(k));
  out.measure = r.pi.tensor;
  out.dStar = Matrix::Zero(P, P);
  for (Eigen::Index a = 0; a < P; ++a) {
    for (Eigen::Index b = 0; b < P; ++b) {
      double d = 0.0;
      for (int i = 0; i < n; ++i) {
        d += rho[i] * inputs[i].dist()(out.productSupport[a][i], out.productSupport[b][i]);
      }
      out.dStar(a, b) = d;
    }
  }
  if (labelled) {
    out.labels = Matrix::Zero(P, labels->size());
    for (Eigen::Index a = 0; a < P; ++a) {
      for (int i = 0; i < n; ++i) {
        out.labels(a, (*labelled)[i].label_of()[out.productSupport[a][i]]) += rho[i];
      }
    }
  }
  return out;
}

double dense_gw_cost(const Matrix& dx, const Matrix& dy, const Matrix& plan) {
  if (plan.rows() != dx.rows() || plan.cols() != dy.rows()) {
    throw Error(ErrorKind::Dimension, "coupling does not match the spaces");
  }
  double s = 0.0;
  for (Eigen::Index a = 0; a < plan.rows(); ++a)
    for (Eigen::Index b = 0; b < plan.cols(); ++b) {
      if (plan(a, b) == 0.0) continue;
      for (Eigen::Index a2 = 0; a2 < plan.rows(); ++a2)
        for (Eigen::Index b2 = 0; b2 < plan.cols(); ++b2) {
          const double d = dx(a, a2) - dy(b, b2);
          s += d * d * plan(a, b) * plan(a2, b2);
        }
    }
  return s;
}

}  // namespace mgw
