#include "mgw/fixtures.hpp"

#include <cmath>
#include <functional>
#include <numbers>

namespace mgw {

namespace {

Matrix rasterize(int size, const std::function<bool(double, double)>& inside) {
  if (size < 1) throw Error(ErrorKind::Config, "image size must be positive");
  constexpr int kSub = 4;
  Matrix img = Matrix::Zero(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      int hits = 0;
      for (int sr = 0; sr < kSub; ++sr) {
        for (int sc = 0; sc < kSub; ++sc) {
          // (x, y) in [-1, 1]^2 with y pointing up
          const double x = -1.0 + 2.0 * (c + (sc + 0.5) / kSub) / size;
          const double y = 1.0 - 2.0 * (r + (sr + 0.5) / kSub) / size;
          if (inside(x, y)) ++hits;
        }
      }
      img(r, c) = static_cast<double>(hits) / (kSub * kSub);
    }
  }
  return img;
}

bool in_heart(double x, double y) {
  const double s = 1.2;
  x *= s;
  y = y * s - 0.1;
  const double q = x * x + y * y - 1.0;
  return q * q * q - x * x * y * y * y <= 0.0;
}

}  // namespace

Matrix heart_image(int size) { return rasterize(size, in_heart); }

Matrix spade_image(int size) {
  return rasterize(size, [](double x, double y) {
    if (in_heart(x, -y - 0.15)) return true;
    // stem: a small triangle below the body
    return y < -0.45 && y > -0.9 && std::abs(x) < 0.45 * (-0.45 - y) + 0.06;
  });
}

Matrix disc_image(int size, double radius) {
  return rasterize(size, [radius](double x, double y) { return x * x + y * y <= 4.0 * radius * radius; });
}

Vector sphere_caps(int nAzimuth, int nPolar, const std::vector<SphereCap>& caps, bool areaWeighted) {
  Vector w = Vector::Zero(static_cast<Eigen::Index>(nAzimuth) * nPolar);
  for (int l = 0; l < nPolar; ++l) {
    const double pol = std::numbers::pi * (l + 0.5) / nPolar;
    for (int k = 0; k < nAzimuth; ++k) {
      const double az = 2.0 * std::numbers::pi * (k + 0.5) / nAzimuth;
      double v = 0.0;
      for (const auto& cap : caps) {
        const double d = normalized_great_circle(az, pol, cap.azimuth, cap.polar);
        if (d < cap.radius) {
          const double t = d / cap.radius;
          v += cap.weight * (1.0 - t * t);
        }
      }
      if (areaWeighted) v *= std::sin(pol);
      w[static_cast<Eigen::Index>(l) * nAzimuth + k] = v;
    }
  }
  const double s = w.sum();
  if (!(s > 0.0)) throw Error(ErrorKind::EmptySupport, "sphere caps do not cover any grid cell");
  return w / s;
}

std::vector<SphereCap> sphere_source_caps() {
  // one connected landmass
  return {{2.4, 1.5, 0.2, 1.0}, {2.8, 1.2, 0.14, 0.8}, {2.1, 1.9, 0.13, 0.7}};
}

std::vector<SphereCap> sphere_target_caps() {
  // separated pieces spread over the same hemisphere
  return {{1.5, 1.1, 0.11, 1.0}, {2.5, 2.1, 0.1, 0.9}, {3.4, 1.0, 0.12, 1.0}, {3.9, 1.9, 0.09, 0.6}};
}

namespace {

Eigen::Vector3d unit(double az, double pol) {
  return {std::sin(pol) * std::cos(az), std::sin(pol) * std::sin(az), std::cos(pol)};
}

double angle(const Eigen::Vector3d& u, const Eigen::Vector3d& v) { return std::atan2(u.cross(v).norm(), u.dot(v)); }

// normalized distance from p to the minimal arc between u and v
double arc_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
  const double endpoints = std::min(angle(p, u), angle(p, v));
  Eigen::Vector3d n = u.cross(v);
  const double nn = n.norm();
  if (nn < 1e-12) return endpoints / std::numbers::pi;
  n /= nn;
  const Eigen::Vector3d q = p - p.dot(n) * n;
  if (q.norm() < 1e-12) return endpoints / std::numbers::pi;
  const Eigen::Vector3d qh = q.normalized();
  const double span = angle(u, v);
  if (std::abs(angle(u, qh) + angle(qh, v) - span) < 1e-9) {
    return std::min(endpoints, std::asin(std::min(1.0, std::abs(p.dot(n))))) / std::numbers::pi;
  }
  return endpoints / std::numbers::pi;
}

}  // namespace

double sphere_cell_size(int nAzimuth, int nPolar) {
  return std::max(2.0 * std::numbers::pi / nAzimuth, std::numbers::pi / nPolar) / std::numbers::pi;
}

double sphere_hull_share(const MmSpace& grid, const Vector& measure, const Vector& mu1, const Vector& mu2,
                         double dilation) {
  const Eigen::Index n = grid.size();
  if (measure.size() != n || mu1.size() != n || mu2.size() != n || grid.coords().rows() != n) {
    throw Error(ErrorKind::Dimension, "sphere measures must live on the grid");
  }
  std::vector<Eigen::Vector3d> pts(static_cast<std::size_t>(n)), support;
  for (Eigen::Index a = 0; a < n; ++a) {
    pts[static_cast<std::size_t>(a)] = unit(grid.coords()(a, 0), grid.coords()(a, 1));
    if (mu1[a] > 0.0 || mu2[a] > 0.0) support.push_back(pts[static_cast<std::size_t>(a)]);
  }
  double inside = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    if (measure[a] <= 0.0) continue;
    const auto& p = pts[static_cast<std::size_t>(a)];
    bool hit = false;
    for (std::size_t s = 0; s < support.size() && !hit; ++s)
      for (std::size_t t = s; t < support.size() && !hit; ++t) hit = arc_distance(p, support[s], support[t]) <= dilation;
    if (hit) inside += measure[a];
  }
  const double total = measure.sum();
  return total > 0.0 ? inside / total : 0.0;
}

std::vector<int> half_labels(const MmSpace& image, int width) {
  const Matrix& xy = image.coords();
  if (xy.rows() != image.size() || xy.cols() < 2) {
    throw Error(ErrorKind::Precondition, "half labels need pixel coordinates");
  }
  std::vector<int> out;
  for (Eigen::Index a = 0; a < xy.rows(); ++a) out.push_back(xy(a, 1) < width / 2.0 ? 0 : 1);
  return out;
}

MmSpace union_support(const std::vector<Matrix>& images, double threshold) {
  if (images.empty()) throw Error(ErrorKind::Config, "no images given");
  Matrix acc = Matrix::Zero(images.front().rows(), images.front().cols());
  for (const auto& img : images) {
    if (img.rows() != acc.rows() || img.cols() != acc.cols()) {
      throw Error(ErrorKind::Dimension, "support images must share one grid");
    }
    acc += (img.array() > threshold).cast<double>().matrix();
  }
  return image_to_mmspace(acc, 0.0, DistanceNormalization::FullGrid).with_name("support");
}

}  // namespace mgw
