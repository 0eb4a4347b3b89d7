#pragma once

// File formats: CSV matrices/vectors, mm-space directories, PGM and PNG
// images. Parse problems raise ErrorKind::Parse with file and line number;
// missing or unwritable files raise ErrorKind::Io.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mgw/mmspace.hpp"
#include "mgw/treecost.hpp"

namespace mgw::io {

namespace fs = std::filesystem;

/// Comma separated numbers, one matrix row per line. Blank lines are skipped.
Matrix read_csv_matrix(const fs::path& path);
/// One value per line (a single comma separated row is accepted too).
Vector read_csv_vector(const fs::path& path);
std::vector<int> read_csv_ints(const fs::path& path);

void write_csv_matrix(const fs::path& path, const Matrix& m);
void write_csv_vector(const fs::path& path, const Vector& v);
void write_text(const fs::path& path, const std::string& text);

/// A directory with dist.csv + weights.csv, or a PGM/PNG image.
MmSpace read_mmspace(const fs::path& path, double imageThreshold = 0.0,
                     DistanceNormalization norm = DistanceNormalization::Support);
/// Directory additionally holding labels.csv and label_dist.csv.
LabelledMmSpace read_labelled_mmspace(const fs::path& dir);
void write_mmspace(const fs::path& dir, const MmSpace& space);
bool is_image_file(const fs::path& path);

/// Gray values in [0, 1]; 8-bit PGM (P2 or P5) or PNG.
Matrix read_image(const fs::path& path);
Matrix read_pgm(const fs::path& path);
Matrix read_png(const fs::path& path);

/// Binary PGM; values are clamped to [0, 1] and mapped to 0..255.
void write_pgm(const fs::path& path, const Matrix& gray);
/// 8-bit RGB PNG from three [0, 1] channels of equal shape.
void write_png_rgb(const fs::path& path, const std::array<Matrix, 3>& rgb);

/// Scatters `values` onto an h x w grid through integer (row, col) coords and
/// divides by the maximum (all-zero input stays zero).
Matrix render_grid(const Vector& values, const Matrix& coords, int height, int width);

/// {"nodes": N, "edges": [[i, j, w], ...]}
CostTree read_tree_json(const fs::path& path);
std::string tree_json(const CostTree& tree);

}  // namespace mgw::io
