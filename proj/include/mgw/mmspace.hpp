#pragma once

// Discrete metric measure spaces, labelled variants and the Csiszar
// divergences (balanced / free / Kullback-Leibler) used as marginal penalties.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgw/error.hpp"

namespace mgw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Elementwise exp with exp(-inf) == 0 exactly (the vectorized exp clamps).
inline Matrix exp0(const Matrix& x) {
  return x.unaryExpr([](double v) { return std::exp(v); });
}
inline Vector exp0(const Vector& x) {
  return x.unaryExpr([](double v) { return std::exp(v); });
}

/// Finite mm-space: symmetric distance matrix and (unnormalized) weights.
///
/// `coords` optionally carries a per-point embedding (pixel row/col, sphere
/// azimuth/polar angle) used only for rendering and evaluation.
class MmSpace {
 public:
  MmSpace() = default;
  MmSpace(Matrix dist, Vector weights, std::string name = {});

  const Matrix& dist() const { return dist_; }
  const Vector& weights() const { return weights_; }
  const std::string& name() const { return name_; }
  const Matrix& coords() const { return coords_; }
  Eigen::Index size() const { return weights_.size(); }
  double mass() const { return weights_.sum(); }

  MmSpace with_weights(Vector weights) const;
  MmSpace with_coords(Matrix coords) const;
  MmSpace with_name(std::string name) const;

 private:
  Matrix dist_;
  Vector weights_;
  std::string name_;
  Matrix coords_;
};

class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(Matrix labelDist, std::vector<std::string> names = {});

  const Matrix& dist() const { return dist_; }
  const std::vector<std::string>& names() const { return names_; }
  Eigen::Index size() const { return dist_.rows(); }

 private:
  Matrix dist_;
  std::vector<std::string> names_;
};

class LabelledMmSpace {
 public:
  LabelledMmSpace(MmSpace base, std::vector<int> labelOf,
                  std::shared_ptr<const LabelSpace> labels);

  const MmSpace& base() const { return base_; }
  const std::vector<int>& label_of() const { return labelOf_; }
  const std::shared_ptr<const LabelSpace>& label_space() const { return labels_; }

 private:
  MmSpace base_;
  std::vector<int> labelOf_;
  std::shared_ptr<const LabelSpace> labels_;
};

struct MarginalPenalty {
  enum class Kind { Balanced, Free, ScaledKL };

  Kind kind = Kind::Balanced;
  double lambda = 0.0;

  static MarginalPenalty balanced() { return {Kind::Balanced, 0.0}; }
  static MarginalPenalty free() { return {Kind::Free, 0.0}; }
  static MarginalPenalty scaled_kl(double lambda);

  MarginalPenalty scaled(double factor) const;
  std::string to_string() const;
  static MarginalPenalty parse(const std::string& text);
};

/// Absolute tolerance for the balanced indicator: |mu - nu| <= 1e-12 max(1, |nu|_TV).
inline constexpr double kBalancedRelTol = 1e-12;

double kl_divergence(const Vector& mu, const Vector& nu);

/// Integral part of KL: sum mu log(mu / nu); +inf if mu is not << nu.
double kl_integral(const Vector& mu, const Vector& nu);

double csiszar_divergence(const MarginalPenalty& penalty, const Vector& mu,
                          const Vector& nu,
                          double balancedTol = kBalancedRelTol);

/// D_phi(mu (x) mu, nu (x) nu) computed from the factorized identities.
double tensor_divergence(const MarginalPenalty& penalty, const Vector& mu,
                         const Vector& nu,
                         double balancedTol = kBalancedRelTol);

/// D_phi(a1 (x) a2, a3 (x) a3) without materializing either product.
double cross_tensor_divergence(const MarginalPenalty& penalty, const Vector& a1,
                               const Vector& a2, const Vector& a3,
                               double balancedTol = kBalancedRelTol);

/// |KL(a1 (x) a2, a3 (x) a3) - factorized form|, left side evaluated densely.
double kl_factorization_check(const Vector& alpha1, const Vector& alpha2,
                              const Vector& alpha3);

/// Sub-space on the points with positive weight (coords follow along).
MmSpace restrict_to_support(const MmSpace& space);

enum class DistanceNormalization { Support, FullGrid };

/// Gray image (row-major h x w) to an mm-space on the pixels above threshold.
MmSpace image_to_mmspace(const Matrix& pixels, double threshold,
                         DistanceNormalization norm = DistanceNormalization::Support);

/// Spherical-coordinate grid with great-circle distance / pi.
MmSpace sphere_grid_mmspace(int nAzimuth, int nPolar, bool areaWeighted = false);

/// Great-circle distance / pi between (azimuth, polar) angle pairs.
double normalized_great_circle(double az1, double pol1, double az2, double pol2);

}  // namespace mgw
