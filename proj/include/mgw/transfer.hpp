#pragma once

// Transfer operators K_{i->j} from pairwise marginals of chain UMGW plans,
// their composition and a seeded rotating-particle generator.

#include <cstdint>
#include <vector>

#include "mgw/mmspace.hpp"
#include "mgw/sinkhorn.hpp"

namespace mgw {

/// Rows with source mass at or below this are treated as empty (0^-1 = 0).
inline constexpr double kEmptyRowMass = 1e-300;

struct TransferOperator {
  /// K (n_target x n_source): propagation is K * density.
  Matrix matrix;
  int sourceIndex = 0;
  int targetIndex = 0;

  /// K^T = diag(pi_source)^-1 pi_{source,target}.
  Matrix kt() const { return matrix.transpose(); }
};

TransferOperator transfer_operator(const PlanFactors& plan, int i, int j);
/// Same from an explicit pairwise marginal (n_i x n_j).
TransferOperator transfer_operator(const Matrix& pairMarginal, int i = 0, int j = 1);

/// ops in propagation order: compose({K_12, K_23}) = K_23 K_12.
TransferOperator compose(const std::vector<TransferOperator>& ops);

struct Propagated {
  Vector density;
  double massIn = 0.0;
  double massOut = 0.0;
};
Propagated propagate(const TransferOperator& op, const Vector& density);

struct ParticleConfig {
  int nCoherent = 10;
  int nNoise = 2;
  int nSnapshots = 3;
  double rotationPerStep = 0.3;  // radians, about the grid centre
  double driftX = 0.0;           // pixels per step
  double driftY = 0.0;
  int gridSize = 32;
  double blurSigma = 0.5;        // pixels
  double threshold = 1e-5;
  /// Coherent particles closer than this (pixels) are resampled so that
  /// each one stays resolvable on the grid; 0 disables.
  double minSeparation = 2.0;
  std::uint64_t seed = 7;
};

/// Stream identifier of the generator (engine + normal transform + version).
inline constexpr const char* kParticleStream = "mt19937_64/box-muller/v1";

struct ParticleSnapshot {
  MmSpace space;          // thresholded blurred image, full-grid distances
  Matrix image;           // gridSize x gridSize, all particles
  Matrix cleanImage;      // coherent particles only
  Matrix noiseImage;      // noise particles only
  Matrix coherent;        // nCoherent x 2 (row, col) in pixels
  Matrix noise;           // nNoise x 2
};

std::vector<ParticleSnapshot> synth_particles(const ParticleConfig& cfg);

/// Pixel of `space` nearest to a continuous (row, col) position.
Eigen::Index nearest_point(const MmSpace& space, double row, double col);

/// Fraction of coherent particles k (over all consecutive snapshot pairs)
/// whose pixel's K^T row has its argmax nearest to particle k's next position.
double correspondence_accuracy(const std::vector<ParticleSnapshot>& snaps,
                               const std::vector<TransferOperator>& ops);

/// Share of `density` (on snapshot s's support) within `radius` grid cells
/// (Chebyshev) of the pixel holding a coherent particle of that snapshot.
double localization(const ParticleSnapshot& snap, const Vector& density, double radius = 1.0);

/// Snapshot-0 clean mass restricted to the snapshot's support, normalized.
Vector clean_density(const ParticleSnapshot& snap);

}  // namespace mgw
