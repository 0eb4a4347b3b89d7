#include "mgw/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "messages.hpp"
#include "mgw/parallel.hpp"

namespace mgw {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kFloor = 1e-300;
}  // namespace

namespace detail {

double lse(const Vector& v) {
  if (v.size() == 0) return kNegInf;
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

Vector lse_cols(const Matrix& E, const Vector& v) {
  Vector out(E.cols());
  parallel_for(0, static_cast<std::size_t>(E.cols()), [&](std::size_t lo, std::size_t hi) {
    Eigen::ArrayXd col(E.rows());
    for (std::size_t b = lo; b < hi; ++b) {
      col = E.col(static_cast<Eigen::Index>(b)).array() + v.array();
      const double m = col.maxCoeff();
      out[static_cast<Eigen::Index>(b)] =
          (m == kNegInf) ? kNegInf : m + std::log((col - m).exp().sum());
    }
  }, 16);
  return out;
}

Vector lse_rows(const Matrix& E, const Vector& v) {
  Vector out(E.rows());
  parallel_for(0, static_cast<std::size_t>(E.rows()), [&](std::size_t lo, std::size_t hi) {
    const auto rows = static_cast<Eigen::Index>(hi - lo);
    const auto block = E.middleRows(static_cast<Eigen::Index>(lo), rows);
    Eigen::ArrayXd mx = Eigen::ArrayXd::Constant(rows, kNegInf);
    for (Eigen::Index b = 0; b < E.cols(); ++b) {
      if (v[b] == kNegInf) continue;
      mx = mx.max(block.col(b).array() + v[b]);
    }
    const Eigen::ArrayXd shift = (mx == kNegInf).select(0.0, mx);
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(rows);
    for (Eigen::Index b = 0; b < E.cols(); ++b) {
      if (v[b] == kNegInf) continue;
      acc += (block.col(b).array() + (v[b] - shift)).exp();
    }
    for (Eigen::Index a = 0; a < rows; ++a) {
      out[static_cast<Eigen::Index>(lo) + a] =
          (mx[a] == kNegInf) ? kNegInf : shift[a] + std::log(acc[a]);
    }
  }, 16);
  return out;
}

Vector linear_cols(const Matrix& E, const Vector& v) {
  const double vm = v.maxCoeff();
  const double s = std::isfinite(vm) ? vm : 0.0;
  const Vector u = (v.array() - s).exp().matrix();
  const Vector r = E.array().exp().matrix().transpose() * u;
  return (r.array().max(kFloor).log() + s).matrix();
}

Vector linear_rows(const Matrix& E, const Vector& v) {
  const double vm = v.maxCoeff();
  const double s = std::isfinite(vm) ? vm : 0.0;
  const Vector u = (v.array() - s).exp().matrix();
  const Vector r = E.array().exp().matrix() * u;
  return (r.array().max(kFloor).log() + s).matrix();
}

bool AbsorbedKernel::stale(const Vector& v) const {
  if (v0_.size() != v.size()) return true;
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    const bool i0 = v0_[a] == kNegInf, i1 = v[a] == kNegInf;
    if (i1) continue;  // contributes nothing either way
    if (i0 || !(std::abs(v[a] - v0_[a]) <= kMaxShift)) return true;
  }
  return false;
}

void AbsorbedKernel::rebuild(const Matrix& E, const Vector& v, bool transpose) {
  v0_ = v;
  const Eigen::Index n = transpose ? E.cols() : E.rows();
  const Eigen::Index m = transpose ? E.rows() : E.cols();
  k_.resize(n, m);
  c_ = transpose ? lse_rows(E, v) : lse_cols(E, v);
  for (Eigen::Index b = 0; b < m; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      const double e = transpose ? E(b, a) : E(a, b);
      k_(a, b) = (v[a] == kNegInf || c_[b] == kNegInf) ? 0.0 : std::exp(e + v[a] - c_[b]);
    }
  }
  ++rebuilds_;
}

Vector AbsorbedKernel::apply(const Matrix& E, const Vector& v, bool transpose) {
  if (stale(v)) {
    rebuild(E, v, transpose);
    return c_;
  }
  Vector w(v.size());
  for (Eigen::Index a = 0; a < v.size(); ++a) w[a] = v[a] == kNegInf ? 0.0 : std::exp(v[a] - v0_[a]);
  const Vector s = k_.transpose() * w;
  Vector out(s.size());
  for (Eigen::Index b = 0; b < s.size(); ++b) out[b] = s[b] > 0.0 ? c_[b] + std::log(s[b]) : kNegInf;
  return out;
}

Messages::Messages(const PlanFactors& plan, bool absorb)
    : plan_(plan),
      msg_(2 * plan.tree().edges().size()),
      valid_(2 * plan.tree().edges().size(), 0),
      absorb_(absorb),
      kernels_(absorb ? 2 * plan.tree().edges().size() : 0) {}

int Messages::slot(int from, int to, int& edge) const {
  edge = plan_.tree().edge_index(from, to);
  if (edge < 0) {
    throw Error(ErrorKind::UnsupportedPair, "no tree edge between the requested nodes");
  }
  const bool forward = plan_.tree().edges()[edge].i == from;
  return 2 * edge + (forward ? 0 : 1);
}

const Vector& Messages::message(int from, int to) {
  int e = 0;
  const int s = slot(from, to, e);
  if (valid_[s]) return msg_[s];
  const Vector v = node_log_weight(from, to);
  const Matrix& E = plan_.edge_log_kernel(e);
  const bool forward = (s % 2) == 0;  // from == edge.i: contract over rows
  if (plan_.log_domain() && absorb_) {
    msg_[s] = kernels_[s].apply(E, v, !forward);
  } else if (plan_.log_domain()) {
    msg_[s] = forward ? lse_cols(E, v) : lse_rows(E, v);
  } else {
    msg_[s] = forward ? linear_cols(E, v) : linear_rows(E, v);
  }
  valid_[s] = 1;
  return msg_[s];
}

Vector Messages::node_log_weight(int node, int exclude) {
  Vector w = plan_.node_log_base(node);
  const Vector& f = plan_.potential(node);
  const double eps = plan_.eps();
  for (Eigen::Index a = 0; a < w.size(); ++a) w[a] += f[a] / eps;
  for (const auto& [nb, e] : plan_.tree().neighbours(node)) {
    (void)e;
    if (nb == exclude) continue;
    w += message(nb, node);
  }
  return w;
}

Vector Messages::log_scaling(int node) {
  Vector w = plan_.node_log_base(node);
  for (const auto& [nb, e] : plan_.tree().neighbours(node)) {
    (void)e;
    w += message(nb, node);
  }
  return w;
}

void Messages::invalidate_from(int node) {
  // Messages pointing away from `node` carry its potential.
  std::deque<std::pair<int, int>> queue;  // (current, parent)
  queue.emplace_back(node, -1);
  while (!queue.empty()) {
    const auto [u, parent] = queue.front();
    queue.pop_front();
    for (const auto& [v, e] : plan_.tree().neighbours(u)) {
      if (v == parent) continue;
      const bool forward = plan_.tree().edges()[e].i == u;
      valid_[2 * e + (forward ? 0 : 1)] = 0;
      queue.emplace_back(v, u);
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

ReferenceMeasure ReferenceMeasure::build(Kind kind, const std::vector<Vector>& measures) {
  ReferenceMeasure r;
  r.kind = kind;
  for (const auto& mu : measures) {
    if (kind == Kind::Counting) {
      r.logWeights.push_back(Vector::Zero(mu.size()));
    } else {
      if ((mu.array() <= 0.0).any()) {
        throw Error(ErrorKind::Precondition,
                    "product-of-inputs reference needs strictly positive input weights");
      }
      r.logWeights.push_back(mu.array().log().matrix());
    }
  }
  return r;
}

ReferenceMeasure::Kind ReferenceMeasure::parse_kind(const std::string& text) {
  if (text == "counting") return Kind::Counting;
  if (text == "product" || text == "product-of-inputs") return Kind::ProductOfInputs;
  throw Error(ErrorKind::Config, "unknown reference '" + text + "' (counting | product)");
}

std::string ReferenceMeasure::kind_name(Kind kind) {
  return kind == Kind::Counting ? "counting" : "product";
}

// ---------------------------------------------------------------------------

PlanFactors::PlanFactors(CostTree tree, double eps, std::vector<Vector> logRef,
                         const std::vector<Matrix>& edgeCosts,
                         const std::vector<Vector>& nodeCosts)
    : tree_(std::move(tree)), eps_(eps), logRef_(std::move(logRef)) {
  if (!(eps_ > 0.0) || !std::isfinite(eps_)) {
    throw Error(ErrorKind::Config, "Sinkhorn needs eps > 0");
  }
  tree_.require_spanning_tree();
  const int n = tree_.n_nodes();
  if (static_cast<int>(logRef_.size()) != n) {
    throw Error(ErrorKind::Dimension, "one reference vector per node expected");
  }
  if (edgeCosts.size() != tree_.edges().size()) {
    throw Error(ErrorKind::Dimension, "one cost matrix per tree edge expected");
  }
  if (!nodeCosts.empty() && static_cast<int>(nodeCosts.size()) != n) {
    throw Error(ErrorKind::Dimension, "one node cost per node expected");
  }
  std::vector<Eigen::Index> sizes(n);
  for (int i = 0; i < n; ++i) sizes[i] = logRef_[i].size();
  tree_.set_node_sizes(sizes);
  f_.resize(n);
  base_.resize(n);
  for (int i = 0; i < n; ++i) {
    f_[i] = Vector::Zero(sizes[i]);
    base_[i] = logRef_[i];
    if (!nodeCosts.empty()) {
      if (nodeCosts[i].size() != sizes[i]) {
        throw Error(ErrorKind::Dimension, "node cost length mismatch");
      }
      base_[i] -= nodeCosts[i] / eps_;
    }
  }
  edgeLog_.resize(edgeCosts.size());
  for (std::size_t e = 0; e < edgeCosts.size(); ++e) {
    const auto& ed = tree_.edges()[e];
    if (edgeCosts[e].rows() != sizes[ed.i] || edgeCosts[e].cols() != sizes[ed.j]) {
      std::ostringstream os;
      os << "edge (" << ed.i << "," << ed.j << ") cost is " << edgeCosts[e].rows() << "x"
         << edgeCosts[e].cols() << ", expected " << sizes[ed.i] << "x" << sizes[ed.j];
      throw Error(ErrorKind::Dimension, os.str());
    }
    edgeLog_[e] = -edgeCosts[e] / eps_;
  }
}

PlanFactors PlanFactors::product(CostTree tree, double eps, const std::vector<Vector>& measures,
                                 std::vector<Vector> logRef) {
  std::vector<Matrix> zeros;
  for (const auto& e : tree.edges()) {
    zeros.push_back(Matrix::Zero(measures.at(e.i).size(), measures.at(e.j).size()));
  }
  PlanFactors p(std::move(tree), eps, std::move(logRef), zeros, {});
  for (int i = 0; i < p.n_nodes(); ++i) {
    Vector f(measures[i].size());
    for (Eigen::Index a = 0; a < f.size(); ++a) {
      f[a] = measures[i][a] > 0.0 ? eps * (std::log(measures[i][a]) - p.logRef_[i][a]) : kNegInf;
    }
    p.f_[i] = std::move(f);
  }
  return p;
}

void PlanFactors::set_potential(int i, Vector f) {
  if (f.size() != f_.at(i).size()) throw Error(ErrorKind::Dimension, "potential length mismatch");
  f_[i] = std::move(f);
}

std::vector<Vector> PlanFactors::log_node_marginals() const {
  detail::Messages m(*this);
  std::vector<Vector> out;
  for (int i = 0; i < n_nodes(); ++i) out.push_back(m.log_marginal(i));
  return out;
}

Vector PlanFactors::node_marginal(int i) const {
  if (i < 0 || i >= n_nodes()) throw Error(ErrorKind::Precondition, "node index out of range");
  detail::Messages m(*this);
  return exp0(m.log_marginal(i));
}

Matrix PlanFactors::edge_marginal(int i, int j) const {
  const int e = tree_.edge_index(i, j);
  if (e < 0) {
    std::ostringstream os;
    os << "pair (" << i << "," << j << ") is not a tree edge";
    throw Error(ErrorKind::UnsupportedPair, os.str());
  }
  detail::Messages m(*this);
  const auto& ed = tree_.edges()[e];
  const Vector vi = m.node_log_weight(ed.i, ed.j);
  const Vector vj = m.node_log_weight(ed.j, ed.i);
  Matrix out = edgeLog_[e];
  out.colwise() += vi;
  out.rowwise() += vj.transpose();
  out = exp0(out);
  if (ed.i == i) return out;
  return out.transpose();
}

std::vector<Matrix> PlanFactors::edge_marginals() const {
  detail::Messages m(*this);
  std::vector<Matrix> out;
  for (std::size_t e = 0; e < tree_.edges().size(); ++e) {
    const auto& ed = tree_.edges()[e];
    const Vector vi = m.node_log_weight(ed.i, ed.j);
    const Vector vj = m.node_log_weight(ed.j, ed.i);
    Matrix x = edgeLog_[e];
    x.colwise() += vi;
    x.rowwise() += vj.transpose();
    out.push_back(exp0(x));
  }
  return out;
}

double PlanFactors::log_mass() const {
  detail::Messages m(*this);
  return detail::lse(m.log_marginal(0));
}

double PlanFactors::plan_mass() const { return std::exp(log_mass()); }

void PlanFactors::rescale_by(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw Error(ErrorKind::Precondition, "rescale factor must be positive and finite");
  }
  f_[0].array() += eps_ * std::log(t);
}

PlanFactors PlanFactors::rescaled(double t) const {
  PlanFactors p = *this;
  p.rescale_by(t);
  return p;
}

double PlanFactors::relative_entropy_integral() const {
  detail::Messages m(*this);
  double h = 0.0;
  for (int i = 0; i < n_nodes(); ++i) {
    const Vector pi = exp0(m.log_marginal(i));
    for (Eigen::Index a = 0; a < pi.size(); ++a) {
      if (pi[a] == 0.0) continue;
      h += pi[a] * (f_[i][a] / eps_ + base_[i][a] - logRef_[i][a]);
    }
  }
  for (std::size_t e = 0; e < tree_.edges().size(); ++e) {
    const auto& ed = tree_.edges()[e];
    const Vector vi = m.node_log_weight(ed.i, ed.j);
    const Vector vj = m.node_log_weight(ed.j, ed.i);
    const Matrix& E = edgeLog_[e];
    for (Eigen::Index b = 0; b < E.cols(); ++b) {
      for (Eigen::Index a = 0; a < E.rows(); ++a) {
        const double lp = vi[a] + E(a, b) + vj[b];
        if (lp == kNegInf) continue;
        h += std::exp(lp) * E(a, b);
      }
    }
  }
  return h;
}

double PlanFactors::reference_mass() const {
  double r = 1.0;
  for (const auto& l : logRef_) r *= exp0(l).sum();
  return r;
}

double PlanFactors::log_density(const std::vector<Eigen::Index>& x) const {
  if (static_cast<int>(x.size()) != n_nodes()) {
    throw Error(ErrorKind::Dimension, "grid point has the wrong number of coordinates");
  }
  double s = 0.0;
  for (int i = 0; i < n_nodes(); ++i) s += f_[i][x[i]] / eps_ + base_[i][x[i]];
  for (std::size_t e = 0; e < tree_.edges().size(); ++e) {
    const auto& ed = tree_.edges()[e];
    s += edgeLog_[e](x[ed.i], x[ed.j]);
  }
  return s;
}

// ---------------------------------------------------------------------------

Vector proxdiv_update(const MarginalPenalty& penalty, const Vector& mu, const Vector& logS,
                      double eps, const Vector& current) {
  if (penalty.kind == MarginalPenalty::Kind::Free) return current;
  const double theta =
      penalty.kind == MarginalPenalty::Kind::ScaledKL ? penalty.lambda / (penalty.lambda + eps) : 1.0;
  Vector f(mu.size());
  for (Eigen::Index a = 0; a < mu.size(); ++a) {
    if (mu[a] == 0.0) {
      f[a] = kNegInf;
    } else if (logS[a] == kNegInf) {
      if (penalty.kind == MarginalPenalty::Kind::Balanced) {
        std::ostringstream os;
        os << "balanced marginal infeasible: point " << a << " carries mass " << mu[a]
           << " but the kernel gives it none";
        throw Error(ErrorKind::Infeasible, os.str());
      }
      f[a] = 0.0;
    } else {
      f[a] = theta * eps * (std::log(mu[a]) - logS[a]);
    }
  }
  return f;
}

namespace {

double potential_drift(const Vector& a, const Vector& b) {
  double d = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const bool ia = a[k] == kNegInf, ib = b[k] == kNegInf;
    if (ia && ib) continue;
    if (ia != ib) return std::numeric_limits<double>::infinity();
    d = std::max(d, std::abs(a[k] - b[k]));
  }
  return d;
}

void check_inputs(const PlanFactors& plan, const std::vector<Vector>& marginals,
                  const std::vector<MarginalPenalty>& penalties) {
  const int n = plan.n_nodes();
  if (static_cast<int>(marginals.size()) != n || static_cast<int>(penalties.size()) != n) {
    throw Error(ErrorKind::Dimension, "one marginal and one penalty per node expected");
  }
  for (int i = 0; i < n; ++i) {
    if (marginals[i].size() != plan.potential(i).size()) {
      std::ostringstream os;
      os << "marginal " << i << " has length " << marginals[i].size() << ", node has "
         << plan.potential(i).size() << " points";
      throw Error(ErrorKind::Dimension, os.str());
    }
    if ((marginals[i].array() < 0.0).any()) {
      throw Error(ErrorKind::Precondition, "marginals must be nonnegative");
    }
  }
}

}  // namespace

SinkhornResult iterate(PlanFactors plan, const std::vector<Vector>& marginals,
                       const std::vector<MarginalPenalty>& penalties, const SinkhornConfig& cfg) {
  check_inputs(plan, marginals, penalties);
  if (!(cfg.tolerance > 0.0)) throw Error(ErrorKind::Config, "Sinkhorn tolerance must be > 0");
  if (cfg.maxIter < 0) throw Error(ErrorKind::Config, "maxIter must be >= 0");
  plan.set_log_domain(cfg.logDomain);
  const auto order = plan.tree().sweep_order(0);
  const double eps = plan.eps();
  SinkhornResult res;
  detail::Messages msgs(plan, cfg.logDomain && cfg.absorb);
  std::vector<Vector> start(plan.potentials());
  for (int sweep = 1; sweep <= cfg.maxIter; ++sweep) {
    start = plan.potentials();
    for (int i : order) {
      if (penalties[i].kind == MarginalPenalty::Kind::Free) continue;
      const Vector logS = msgs.log_scaling(i);
      plan.set_potential(i, proxdiv_update(penalties[i], marginals[i], logS, eps, plan.potential(i)));
      msgs.invalidate_from(i);
    }
    double drift = 0.0;
    for (int i = 0; i < plan.n_nodes(); ++i) {
      drift = std::max(drift, potential_drift(plan.potential(i), start[i]));
    }
    res.sweeps = sweep;
    res.drift = drift;
    if (cfg.recordTrace) {
      SinkhornTraceRow row;
      row.sweep = sweep;
      row.drift = drift;
      for (int i = 0; i < plan.n_nodes(); ++i) {
        if (penalties[i].kind == MarginalPenalty::Kind::Free) {
          row.violation.push_back(0.0);
          continue;
        }
        const Vector m = exp0(msgs.log_marginal(i));
        row.violation.push_back((m - marginals[i]).cwiseAbs().maxCoeff());
      }
      row.mass = std::exp(detail::lse(msgs.log_marginal(0)));
      res.trace.push_back(std::move(row));
    }
    if (!std::isfinite(drift) && drift != std::numeric_limits<double>::infinity()) {
      throw Error(ErrorKind::NumericalFailure, "NaN in Sinkhorn potentials");
    }
    if (drift < cfg.tolerance * eps) {
      res.converged = true;
      break;
    }
  }
  res.plan = std::move(plan);
  return res;
}

SinkhornResult solve(const CostTree& tree, const std::vector<EdgeCostMatrix>& edgeCosts,
                     const std::vector<Vector>& nodeCosts, const std::vector<Vector>& marginals,
                     const std::vector<MarginalPenalty>& penalties, const SinkhornConfig& cfg,
                     const ReferenceMeasure& ref, const std::vector<Vector>* warmStart) {
  if (edgeCosts.size() != tree.edges().size()) {
    throw Error(ErrorKind::Dimension, "one cost matrix per tree edge expected");
  }
  std::vector<Matrix> costs;
  costs.reserve(edgeCosts.size());
  for (std::size_t e = 0; e < edgeCosts.size(); ++e) {
    const auto& ed = tree.edges()[e];
    const auto& c = edgeCosts[e];
    if (c.i == ed.i && c.j == ed.j) {
      costs.push_back(c.matrix);
    } else if (c.i == ed.j && c.j == ed.i) {
      costs.push_back(c.matrix.transpose());
    } else {
      throw Error(ErrorKind::Dimension, "edge cost list does not follow the tree's edge order");
    }
    if (!costs.back().allFinite()) {
      throw Error(ErrorKind::Precondition, "edge costs must be finite");
    }
  }
  if (warmStart && static_cast<int>(warmStart->size()) != tree.n_nodes()) {
    throw Error(ErrorKind::Dimension, "warm start has the wrong number of nodes");
  }
  if (cfg.epsStages < 0 || !(cfg.epsFactor > 0.0 && cfg.epsFactor < 1.0)) {
    throw Error(ErrorKind::Config, "eps scaling needs stages >= 0 and a factor in (0, 1)");
  }
  std::vector<Vector> start;
  if (warmStart) start = *warmStart;
  int sweeps = 0;
  for (int k = cfg.epsStages; k >= 1; --k) {
    SinkhornConfig stage = cfg;
    stage.eps = cfg.eps / std::pow(cfg.epsFactor, k);
    stage.recordTrace = false;
    PlanFactors p(tree, stage.eps, ref.logWeights, costs, nodeCosts);
    for (int i = 0; i < p.n_nodes() && !start.empty(); ++i) p.set_potential(i, start[i]);
    SinkhornResult r = iterate(std::move(p), marginals, penalties, stage);
    sweeps += r.sweeps;
    start = r.plan.potentials();
  }
  PlanFactors plan(tree, cfg.eps, ref.logWeights, costs, nodeCosts);
  for (int i = 0; i < plan.n_nodes() && !start.empty(); ++i) plan.set_potential(i, start[i]);
  SinkhornResult res = iterate(std::move(plan), marginals, penalties, cfg);
  res.sweeps += sweeps;
  return res;
}

double dual_objective(const PlanFactors& plan, const std::vector<Vector>& marginals,
                      const std::vector<MarginalPenalty>& penalties) {
  check_inputs(plan, marginals, penalties);
  double d = 0.0;
  for (int i = 0; i < plan.n_nodes(); ++i) {
    const Vector& f = plan.potential(i);
    const Vector& mu = marginals[i];
    switch (penalties[i].kind) {
      case MarginalPenalty::Kind::Free:
        if ((f.array() != 0.0).any()) return -std::numeric_limits<double>::infinity();
        break;
      case MarginalPenalty::Kind::Balanced:
        for (Eigen::Index a = 0; a < f.size(); ++a) {
          if (mu[a] != 0.0) d += f[a] * mu[a];
        }
        break;
      case MarginalPenalty::Kind::ScaledKL: {
        const double lam = penalties[i].lambda;
        for (Eigen::Index a = 0; a < f.size(); ++a) {
          if (mu[a] != 0.0) d -= lam * (std::exp(-f[a] / lam) - 1.0) * mu[a];
        }
        break;
      }
    }
  }
  return d - plan.eps() * plan.plan_mass();
}

Vector node_marginal(const PlanFactors& plan, int i) { return plan.node_marginal(i); }
Matrix edge_marginal(const PlanFactors& plan, int i, int j) { return plan.edge_marginal(i, j); }
double plan_mass(const PlanFactors& plan) { return plan.plan_mass(); }
PlanFactors rescale_by(const PlanFactors& plan, double t) { return plan.rescaled(t); }

std::string sinkhorn_trace_csv(const std::vector<SinkhornTraceRow>& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "sweep,drift";
  const std::size_t n = trace.empty() ? 0 : trace.front().violation.size();
  for (std::size_t i = 0; i < n; ++i) os << ",violation_" << i;
  os << ",mass\n";
  for (const auto& r : trace) {
    os << r.sweep << ',' << r.drift;
    for (double v : r.violation) os << ',' << v;
    os << ',' << r.mass << '\n';
  }
  return os.str();
}

}  // namespace mgw
