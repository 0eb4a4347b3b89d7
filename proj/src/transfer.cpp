#include "mgw/transfer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace mgw {

TransferOperator transfer_operator(const Matrix& pairMarginal, int i, int j) {
  if ((pairMarginal.array() < 0.0).any()) throw Error(ErrorKind::Precondition, "pair marginal must be >= 0");
  const Vector src = pairMarginal.rowwise().sum();
  Matrix kt = pairMarginal;
  for (Eigen::Index a = 0; a < kt.rows(); ++a) {
    if (src[a] > kEmptyRowMass) {
      kt.row(a) /= src[a];
    } else {
      kt.row(a).setZero();
    }
  }
  return TransferOperator{kt.transpose(), i, j};
}

TransferOperator transfer_operator(const PlanFactors& plan, int i, int j) {
  if (i < 0 || j < 0 || i >= plan.n_nodes() || j >= plan.n_nodes() || plan.tree().edge_index(i, j) < 0) {
    throw Error(ErrorKind::UnsupportedPair, "transfer operators need adjacent snapshots; compose instead");
  }
  // the row sums of the pair marginal are the node marginal of i
  return transfer_operator(plan.edge_marginal(i, j), i, j);
}

TransferOperator compose(const std::vector<TransferOperator>& ops) {
  if (ops.empty()) throw Error(ErrorKind::Config, "nothing to compose");
  TransferOperator out = ops.front();
  for (std::size_t k = 1; k < ops.size(); ++k) {
    const auto& next = ops[k];
    if (next.sourceIndex != out.targetIndex || next.matrix.cols() != out.matrix.rows()) {
      throw Error(ErrorKind::Dimension, "operators are not chain compatible");
    }
    out.matrix = next.matrix * out.matrix;
    out.targetIndex = next.targetIndex;
  }
  return out;
}

Propagated propagate(const TransferOperator& op, const Vector& density) {
  if (density.size() != op.matrix.cols()) {
    throw Error(ErrorKind::Dimension, "density length does not match the operator source");
  }
  Propagated p;
  p.density = op.matrix * density;
  p.massIn = density.sum();
  p.massOut = p.density.sum();
  return p;
}

// ---------------------------------------------------------------------------

namespace {

// Fixed transforms so that the stream does not depend on the standard
// library's distribution implementations.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double normal() {
    if (spare_) {
      spare_ = false;
      return next_;
    }
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    next_ = r * std::sin(2.0 * std::numbers::pi * v);
    spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  std::mt19937_64 eng_;
  bool spare_ = false;
  double next_ = 0.0;
};

Matrix splat(const Matrix& pos, int n, double sigma) {
  Matrix img = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < pos.rows(); ++k) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const double dr = r - pos(k, 0), dc = c - pos(k, 1);
        img(r, c) += std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      }
  }
  return img;
}

}  // namespace

std::vector<ParticleSnapshot> synth_particles(const ParticleConfig& cfg) {
  if (cfg.nCoherent < 1 || cfg.nNoise < 0 || cfg.nSnapshots < 1 || cfg.gridSize < 4) {
    throw Error(ErrorKind::Config, "particle counts, snapshot count and grid size must be positive");
  }
  if (!(cfg.blurSigma > 0.0)) throw Error(ErrorKind::Config, "blur sigma must be positive");
  Stream rng(cfg.seed);
  const double centre = (cfg.gridSize - 1) / 2.0;
  const double scale = cfg.gridSize / 8.0;  // +-4 standard deviations fit the grid
  const double limit = cfg.gridSize / 2.0 - 1.0;

  Matrix base(cfg.nCoherent, 2);
  for (int k = 0; k < cfg.nCoherent; ++k) {
    // resample the rare far outliers so every particle stays on the grid
    double x = 0.0, y = 0.0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw Error(ErrorKind::Config, "cannot place particles with the requested separation");
      x = rng.normal() * scale;
      y = rng.normal() * scale;
      if (std::hypot(x, y) > 0.8 * limit) continue;
      bool apart = true;
      for (int l = 0; l < k; ++l) apart = apart && std::hypot(base(l, 0) - y, base(l, 1) - x) >= cfg.minSeparation;
      if (apart) break;
    }
    base(k, 0) = y;
    base(k, 1) = x;
  }

  std::vector<ParticleSnapshot> out;
  for (int s = 0; s < cfg.nSnapshots; ++s) {
    ParticleSnapshot snap;
    const double a = cfg.rotationPerStep * s;
    snap.coherent.resize(cfg.nCoherent, 2);
    for (int k = 0; k < cfg.nCoherent; ++k) {
      const double y = base(k, 0), x = base(k, 1);
      snap.coherent(k, 0) = centre + std::sin(a) * x + std::cos(a) * y + cfg.driftY * s;
      snap.coherent(k, 1) = centre + std::cos(a) * x - std::sin(a) * y + cfg.driftX * s;
    }
    snap.noise.resize(cfg.nNoise, 2);
    for (int k = 0; k < cfg.nNoise; ++k) {
      snap.noise(k, 0) = centre + (2.0 * rng.uniform() - 1.0) * 0.8 * limit;
      snap.noise(k, 1) = centre + (2.0 * rng.uniform() - 1.0) * 0.8 * limit;
    }
    for (Eigen::Index k = 0; k < snap.coherent.rows(); ++k) {
      if (snap.coherent.row(k).minCoeff() < 0.0 || snap.coherent.row(k).maxCoeff() > cfg.gridSize - 1) {
        throw Error(ErrorKind::Config, "particles drift off the grid; reduce drift or snapshots");
      }
    }
    snap.cleanImage = splat(snap.coherent, cfg.gridSize, cfg.blurSigma);
    snap.noiseImage = splat(snap.noise, cfg.gridSize, cfg.blurSigma);
    snap.image = snap.cleanImage + snap.noiseImage;
    snap.space = image_to_mmspace(snap.image, cfg.threshold, DistanceNormalization::FullGrid)
                     .with_name("snapshot" + std::to_string(s));
    out.push_back(std::move(snap));
  }
  return out;
}

Eigen::Index nearest_point(const MmSpace& space, double row, double col) {
  const Matrix& xy = space.coords();
  Eigen::Index best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < xy.rows(); ++a) {
    const double d = std::hypot(xy(a, 0) - row, xy(a, 1) - col);
    if (d < bd) {
      bd = d;
      best = a;
    }
  }
  if (best < 0) throw Error(ErrorKind::EmptySupport, "space has no coordinates");
  return best;
}

namespace {

int nearest_particle(const Matrix& particles, double row, double col) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < particles.rows(); ++k) {
    const double d = std::hypot(particles(k, 0) - row, particles(k, 1) - col);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace

double correspondence_accuracy(const std::vector<ParticleSnapshot>& snaps,
                               const std::vector<TransferOperator>& ops) {
  if (ops.size() + 1 != snaps.size()) throw Error(ErrorKind::Config, "one operator per consecutive pair expected");
  int hits = 0, total = 0;
  for (std::size_t s = 0; s < ops.size(); ++s) {
    const Matrix kt = ops[s].kt();
    const auto& from = snaps[s];
    const auto& to = snaps[s + 1];
    if (kt.rows() != from.space.size() || kt.cols() != to.space.size()) {
      throw Error(ErrorKind::Dimension, "operator does not match the snapshots");
    }
    for (Eigen::Index k = 0; k < from.coherent.rows(); ++k) {
      const Eigen::Index a = nearest_point(from.space, from.coherent(k, 0), from.coherent(k, 1));
      Eigen::Index b = 0;
      kt.row(a).maxCoeff(&b);
      const auto& xy = to.space.coords();
      hits += nearest_particle(to.coherent, xy(b, 0), xy(b, 1)) == k ? 1 : 0;
      ++total;
    }
  }
  return total ? static_cast<double>(hits) / total : 1.0;
}

double localization(const ParticleSnapshot& snap, const Vector& density, double radius) {
  if (density.size() != snap.space.size()) throw Error(ErrorKind::Dimension, "density does not match the snapshot");
  const auto& xy = snap.space.coords();
  double inside = 0.0;
  for (Eigen::Index a = 0; a < density.size(); ++a) {
    for (Eigen::Index k = 0; k < snap.coherent.rows(); ++k) {
      // cell distance to the pixel holding the particle
      const double r = std::round(snap.coherent(k, 0)), c = std::round(snap.coherent(k, 1));
      if (std::abs(xy(a, 0) - r) <= radius && std::abs(xy(a, 1) - c) <= radius) {
        inside += density[a];
        break;
      }
    }
  }
  const double total = density.sum();
  return total > 0.0 ? inside / total : 0.0;
}

Vector clean_density(const ParticleSnapshot& snap) {
  const auto& xy = snap.space.coords();
  Vector d(snap.space.size());
  for (Eigen::Index a = 0; a < d.size(); ++a) {
    d[a] = snap.cleanImage(static_cast<Eigen::Index>(xy(a, 0)), static_cast<Eigen::Index>(xy(a, 1)));
  }
  const double s = d.sum();
  if (!(s > 0.0)) throw Error(ErrorKind::EmptySupport, "no clean mass on the snapshot support");
  return d / s;
}

}  // namespace mgw
