#include "mgw/mmspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mgw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << what << ": length mismatch (" << a.size() << " vs " << b.size() << ")";
    throw Error(ErrorKind::Dimension, os.str());
  }
}

void require_nonnegative(const Vector& v, const char* what) {
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    if (!(v[a] >= 0.0) || !std::isfinite(v[a])) {
      throw Error(ErrorKind::Precondition,
                  std::string(what) + ": entries must be finite and >= 0");
    }
  }
}

bool approx_equal(const Vector& mu, const Vector& nu, double tol) {
  const double scale = std::max(1.0, nu.sum());
  return (mu - nu).cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Config: return "config";
    case ErrorKind::EmptySupport: return "empty-support";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::InfeasibleIterate: return "infeasible-iterate";
    case ErrorKind::DegenerateMass: return "degenerate-mass";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::UnsupportedPair: return "unsupported-pair";
    case ErrorKind::UnsupportedScale: return "unsupported-scale";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

MmSpace::MmSpace(Matrix dist, Vector weights, std::string name)
    : dist_(std::move(dist)), weights_(std::move(weights)), name_(std::move(name)) {
  const auto n = weights_.size();
  if (dist_.rows() != n || dist_.cols() != n) {
    std::ostringstream os;
    os << "mm-space '" << name_ << "': distance matrix is " << dist_.rows() << "x"
       << dist_.cols() << " but there are " << n << " weights";
    throw Error(ErrorKind::Dimension, os.str());
  }
  require_nonnegative(weights_, "mm-space weights");
  for (Eigen::Index a = 0; a < n; ++a) {
    if (dist_(a, a) != 0.0) {
      throw Error(ErrorKind::Precondition, "mm-space: nonzero diagonal distance");
    }
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double d = dist_(a, b);
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw Error(ErrorKind::Precondition, "mm-space: distances must be finite and >= 0");
      }
      if (d != dist_(b, a)) {
        std::ostringstream os;
        os << "mm-space: distance matrix not symmetric at (" << a << "," << b << ")";
        throw Error(ErrorKind::Precondition, os.str());
      }
    }
  }
}

MmSpace MmSpace::with_weights(Vector weights) const {
  MmSpace out(dist_, std::move(weights), name_);
  out.coords_ = coords_;
  return out;
}

MmSpace MmSpace::with_coords(Matrix coords) const {
  if (coords.rows() != size()) {
    throw Error(ErrorKind::Dimension, "mm-space: coordinate rows must match point count");
  }
  MmSpace out = *this;
  out.coords_ = std::move(coords);
  return out;
}

MmSpace MmSpace::with_name(std::string name) const {
  MmSpace out = *this;
  out.name_ = std::move(name);
  return out;
}

LabelSpace::LabelSpace(Matrix labelDist, std::vector<std::string> names)
    : dist_(std::move(labelDist)), names_(std::move(names)) {
  if (dist_.rows() != dist_.cols()) {
    throw Error(ErrorKind::Dimension, "label space: distance matrix must be square");
  }
  if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != dist_.rows()) {
    throw Error(ErrorKind::Dimension, "label space: one name per label expected");
  }
  for (Eigen::Index a = 0; a < dist_.rows(); ++a) {
    if (dist_(a, a) != 0.0) {
      throw Error(ErrorKind::Precondition, "label space: nonzero diagonal");
    }
    for (Eigen::Index b = 0; b < a; ++b) {
      if (dist_(a, b) != dist_(b, a) || dist_(a, b) < 0.0) {
        throw Error(ErrorKind::Precondition, "label space: metric must be symmetric and >= 0");
      }
    }
  }
}

LabelledMmSpace::LabelledMmSpace(MmSpace base, std::vector<int> labelOf,
                                 std::shared_ptr<const LabelSpace> labels)
    : base_(std::move(base)), labelOf_(std::move(labelOf)), labels_(std::move(labels)) {
  if (!labels_) {
    throw Error(ErrorKind::Precondition, "labelled mm-space: missing label space");
  }
  if (static_cast<Eigen::Index>(labelOf_.size()) != base_.size()) {
    throw Error(ErrorKind::Dimension, "labelled mm-space: one label per point expected");
  }
  for (int l : labelOf_) {
    if (l < 0 || l >= labels_->size()) {
      throw Error(ErrorKind::Precondition, "labelled mm-space: label index out of range");
    }
  }
}

// ---------------------------------------------------------------------------

MarginalPenalty MarginalPenalty::scaled_kl(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::Config, "ScaledKL penalty needs lambda > 0");
  }
  return {Kind::ScaledKL, lambda};
}

MarginalPenalty MarginalPenalty::scaled(double factor) const {
  if (kind != Kind::ScaledKL) return *this;
  return scaled_kl(lambda * factor);
}

std::string MarginalPenalty::to_string() const {
  switch (kind) {
    case Kind::Balanced: return "bal";
    case Kind::Free: return "free";
    case Kind::ScaledKL: {
      std::ostringstream os;
      os.precision(17);
      os << "kl:" << lambda;
      return os.str();
    }
  }
  return "?";
}

MarginalPenalty MarginalPenalty::parse(const std::string& text) {
  if (text == "bal" || text == "balanced") return balanced();
  if (text == "free") return free();
  if (text.rfind("kl:", 0) == 0) {
    try {
      return scaled_kl(std::stod(text.substr(3)));
    } catch (const std::invalid_argument&) {
    }
  }
  throw Error(ErrorKind::Config, "unknown penalty '" + text + "' (bal | free | kl:<lambda>)");
}

// ---------------------------------------------------------------------------

double kl_integral(const Vector& mu, const Vector& nu) {
  require_same_size(mu, nu, "kl");
  double s = 0.0;
  for (Eigen::Index a = 0; a < mu.size(); ++a) {
    if (mu[a] == 0.0) continue;
    if (nu[a] == 0.0) return kInf;
    s += mu[a] * std::log(mu[a] / nu[a]);
  }
  return s;
}

double kl_divergence(const Vector& mu, const Vector& nu) {
  const double integral = kl_integral(mu, nu);
  if (std::isinf(integral)) return kInf;
  return std::max(0.0, integral - mu.sum() + nu.sum());
}

double csiszar_divergence(const MarginalPenalty& penalty, const Vector& mu,
                          const Vector& nu, double balancedTol) {
  require_same_size(mu, nu, "csiszar divergence");
  switch (penalty.kind) {
    case MarginalPenalty::Kind::Balanced:
      return approx_equal(mu, nu, balancedTol) ? 0.0 : kInf;
    case MarginalPenalty::Kind::Free:
      return 0.0;
    case MarginalPenalty::Kind::ScaledKL:
      return penalty.lambda * kl_divergence(mu, nu);
  }
  return kInf;
}

double cross_tensor_divergence(const MarginalPenalty& penalty, const Vector& a1,
                               const Vector& a2, const Vector& a3, double balancedTol) {
  require_same_size(a1, a3, "tensor divergence");
  require_same_size(a2, a3, "tensor divergence");
  const double m1 = a1.sum();
  const double m2 = a2.sum();
  const double m3 = a3.sum();
  switch (penalty.kind) {
    case MarginalPenalty::Kind::Free:
      return 0.0;
    case MarginalPenalty::Kind::Balanced: {
      // a1 (x) a2 == a3 (x) a3 iff a1 = t a3 and a2 = a3 / t with t^2 = m1 / m2.
      const double scale = balancedTol * std::max(1.0, m3);
      if (m3 == 0.0) return (m1 * m2 <= scale * scale) ? 0.0 : kInf;
      if (m1 <= 0.0 || m2 <= 0.0) return kInf;
      const double t = std::sqrt(m1 / m2);
      const double e1 = (a1 - t * a3).cwiseAbs().maxCoeff();
      const double e2 = (a2 - a3 / t).cwiseAbs().maxCoeff();
      return (e1 <= scale && e2 <= scale) ? 0.0 : kInf;
    }
    case MarginalPenalty::Kind::ScaledKL: {
      const double k1 = kl_divergence(a1, a3);
      const double k2 = kl_divergence(a2, a3);
      if (std::isinf(k1) || std::isinf(k2)) {
        // 0 * inf = 0: a zero measure on one side kills the other's term.
        const bool inf1 = std::isinf(k1) && m2 > 0.0;
        const bool inf2 = std::isinf(k2) && m1 > 0.0;
        if (inf1 || inf2) return kInf;
      }
      const double t1 = (m2 > 0.0) ? m2 * k1 : 0.0;
      const double t2 = (m1 > 0.0) ? m1 * k2 : 0.0;
      return penalty.lambda * (t1 + t2 + (m1 - m3) * (m2 - m3));
    }
  }
  return kInf;
}

double tensor_divergence(const MarginalPenalty& penalty, const Vector& mu,
                         const Vector& nu, double balancedTol) {
  return cross_tensor_divergence(penalty, mu, mu, nu, balancedTol);
}

double kl_factorization_check(const Vector& alpha1, const Vector& alpha2,
                              const Vector& alpha3) {
  require_same_size(alpha1, alpha3, "kl factorization");
  require_same_size(alpha2, alpha3, "kl factorization");
  const auto n = alpha3.size();
  Vector lhsMu(n * n), lhsNu(n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      lhsMu[a * n + b] = alpha1[a] * alpha2[b];
      lhsNu[a * n + b] = alpha3[a] * alpha3[b];
    }
  }
  const double dense = kl_divergence(lhsMu, lhsNu);
  const double m1 = alpha1.sum(), m2 = alpha2.sum(), m3 = alpha3.sum();
  const double factored = m1 * kl_divergence(alpha2, alpha3) +
                          m2 * kl_divergence(alpha1, alpha3) + (m1 - m3) * (m2 - m3);
  if (std::isinf(dense) && std::isinf(factored)) return 0.0;
  return std::abs(dense - factored);
}

// ---------------------------------------------------------------------------

MmSpace image_to_mmspace(const Matrix& pixels, double threshold,
                         DistanceNormalization norm) {
  const auto h = pixels.rows();
  const auto w = pixels.cols();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> support;
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double v = pixels(r, c);
      if (!(v >= 0.0)) {
        throw Error(ErrorKind::Precondition, "image: pixel values must be >= 0");
      }
      if (v > threshold) support.emplace_back(r, c);
    }
  }
  if (support.empty()) {
    throw Error(ErrorKind::EmptySupport, "image: no pixel above the threshold");
  }
  const auto n = static_cast<Eigen::Index>(support.size());
  Matrix coords(n, 2);
  Vector weights(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    coords(a, 0) = static_cast<double>(support[a].first);
    coords(a, 1) = static_cast<double>(support[a].second);
    weights[a] = pixels(support[a].first, support[a].second);
  }
  weights /= weights.sum();

  Matrix dist(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    dist(a, a) = 0.0;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double d = (coords.row(a) - coords.row(b)).norm();
      dist(a, b) = d;
      dist(b, a) = d;
    }
  }
  double scale = 1.0;
  if (norm == DistanceNormalization::Support) {
    scale = dist.maxCoeff();
  } else {
    scale = std::hypot(static_cast<double>(h - 1), static_cast<double>(w - 1));
  }
  if (scale > 0.0) dist /= scale;
  return MmSpace(std::move(dist), std::move(weights)).with_coords(std::move(coords));
}

double normalized_great_circle(double az1, double pol1, double az2, double pol2) {
  const Eigen::Vector3d u(std::sin(pol1) * std::cos(az1), std::sin(pol1) * std::sin(az1),
                          std::cos(pol1));
  const Eigen::Vector3d v(std::sin(pol2) * std::cos(az2), std::sin(pol2) * std::sin(az2),
                          std::cos(pol2));
  return std::atan2(u.cross(v).norm(), u.dot(v)) / std::numbers::pi;
}

MmSpace restrict_to_support(const MmSpace& space) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index a = 0; a < space.size(); ++a) {
    if (space.weights()[a] > 0.0) keep.push_back(a);
  }
  if (keep.empty()) throw Error(ErrorKind::EmptySupport, "space has no positive weight");
  const auto k = static_cast<Eigen::Index>(keep.size());
  Matrix d(k, k);
  Vector w(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    w[a] = space.weights()[keep[a]];
    for (Eigen::Index b = 0; b < k; ++b) d(a, b) = space.dist()(keep[a], keep[b]);
  }
  MmSpace out(std::move(d), std::move(w), space.name());
  if (space.coords().rows() == space.size()) {
    Matrix c(k, space.coords().cols());
    for (Eigen::Index a = 0; a < k; ++a) c.row(a) = space.coords().row(keep[a]);
    out = out.with_coords(std::move(c));
  }
  return out;
}

MmSpace sphere_grid_mmspace(int nAzimuth, int nPolar, bool areaWeighted) {
  if (nAzimuth < 2 || nPolar < 2) {
    throw Error(ErrorKind::Config, "sphere grid needs at least 2x2 points");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(nAzimuth) * nPolar;
  Matrix coords(n, 2);
  Vector weights(n);
  std::vector<Eigen::Vector3d> xyz(static_cast<size_t>(n));
  for (int l = 0; l < nPolar; ++l) {
    const double pol = std::numbers::pi * (l + 0.5) / nPolar;
    for (int k = 0; k < nAzimuth; ++k) {
      const double az = 2.0 * std::numbers::pi * (k + 0.5) / nAzimuth;
      const Eigen::Index a = static_cast<Eigen::Index>(l) * nAzimuth + k;
      coords(a, 0) = az;
      coords(a, 1) = pol;
      xyz[static_cast<size_t>(a)] = {std::sin(pol) * std::cos(az),
                                     std::sin(pol) * std::sin(az), std::cos(pol)};
      weights[a] = areaWeighted ? std::sin(pol) : 1.0;
    }
  }
  weights /= weights.sum();
  Matrix dist(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    dist(a, a) = 0.0;
    const auto& u = xyz[static_cast<size_t>(a)];
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const auto& v = xyz[static_cast<size_t>(b)];
      const double d = std::atan2(u.cross(v).norm(), u.dot(v)) / std::numbers::pi;
      dist(a, b) = d;
      dist(b, a) = d;
    }
  }
  return MmSpace(std::move(dist), std::move(weights), "sphere").with_coords(std::move(coords));
}

}  // namespace mgw
