#pragma once

// Procedural test images and sphere measures used by the CLI, the tests and
// the acceptance suite.

#include <vector>

#include "mgw/mmspace.hpp"

namespace mgw {

/// Gray images in [0, 1] (row 0 on top), 4x4 supersampled coverage.
Matrix heart_image(int size);
Matrix spade_image(int size);
/// Filled disc of the given relative radius, centred.
Matrix disc_image(int size, double radius = 0.35);

struct SphereCap {
  double azimuth = 0.0;  // radians
  double polar = 0.0;    // radians
  double radius = 0.3;   // normalized great-circle radius (1 = half circumference)
  double weight = 1.0;
};

/// Cell weights of a union of smooth caps on the nAz x nPol sphere grid
/// (polar-major ordering, matching sphere_grid_mmspace), normalized to 1.
Vector sphere_caps(int nAzimuth, int nPolar, const std::vector<SphereCap>& caps,
                   bool areaWeighted = true);

/// Two continents-like measures used for the interpolation example.
std::vector<SphereCap> sphere_source_caps();
std::vector<SphereCap> sphere_target_caps();

/// Share of `measure` (on the sphere grid) within `dilation` (normalized
/// great-circle units) of the geodesic hull of supp(mu1) and supp(mu2): the
/// union of all minimal arcs between two support points.
double sphere_hull_share(const MmSpace& grid, const Vector& measure, const Vector& mu1,
                         const Vector& mu2, double dilation);
/// Normalized size of one grid cell (the larger of the two angular steps).
double sphere_cell_size(int nAzimuth, int nPolar);

/// Left/right half labels (0 / 1) for the pixels of an image mm-space.
std::vector<int> half_labels(const MmSpace& image, int width);

/// Support mm-space: all grid pixels with positive value in any of `images`,
/// distances normalized by the full-grid diagonal.
MmSpace union_support(const std::vector<Matrix>& images, double threshold = 0.0);

}  // namespace mgw
