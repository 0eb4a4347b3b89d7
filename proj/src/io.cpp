#include "mgw/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace mgw::io {

namespace {

[[noreturn]] void parse_error(const fs::path& path, std::size_t line, const std::string& msg) {
  std::ostringstream os;
  os << path.string() << ":" << line << ": " << msg;
  throw Error(ErrorKind::Parse, os.str());
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t line, std::size_t col) {
  const std::string t = trim(cell);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last) {
    parse_error(path, line, "column " + std::to_string(col) + ": not a number: '" + t + "'");
  }
  return v;
}

std::vector<std::vector<double>> read_rows(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (line == 1 && text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
    if (trim(text).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(text);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) row.push_back(parse_number(cell, path, line, ++col));
    if (!text.empty() && text.back() == ',') parse_error(path, line, "trailing comma");
    if (!rows.empty() && row.size() != rows.front().size()) {
      parse_error(path, line, "expected " + std::to_string(rows.front().size()) + " columns, found " +
                                  std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

Matrix read_csv_matrix(const fs::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw Error(ErrorKind::Parse, path.string() + ": empty file");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

Vector read_csv_vector(const fs::path& path) {
  const Matrix m = read_csv_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw Error(ErrorKind::Parse, path.string() + ": expected one value per line");
}

std::vector<int> read_csv_ints(const fs::path& path) {
  const Vector v = read_csv_vector(path);
  std::vector<int> out;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (v[k] != std::floor(v[k]) || std::abs(v[k]) > 1e9) {
      throw Error(ErrorKind::Parse, path.string() + ": entry " + std::to_string(k + 1) + " is not an integer");
    }
    out.push_back(static_cast<int>(v[k]));
  }
  return out;
}

void write_csv_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  out.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

void write_csv_vector(const fs::path& path, const Vector& v) {
  std::ofstream out = open_out(path);
  out.precision(17);
  for (Eigen::Index k = 0; k < v.size(); ++k) out << v[k] << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

bool is_image_file(const fs::path& path) {
  const std::string e = lower_ext(path);
  return e == ".pgm" || e == ".png";
}

MmSpace read_mmspace(const fs::path& path, double imageThreshold, DistanceNormalization norm) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "no such input: " + path.string());
  if (!fs::is_directory(path)) {
    if (!is_image_file(path)) throw Error(ErrorKind::Io, path.string() + ": expected a directory or a PGM/PNG image");
    return image_to_mmspace(read_image(path), imageThreshold, norm).with_name(path.stem().string());
  }
  const Matrix d = read_csv_matrix(path / "dist.csv");
  const Vector w = read_csv_vector(path / "weights.csv");
  MmSpace s(d, w, path.filename().string());
  if (fs::exists(path / "coords.csv")) s = s.with_coords(read_csv_matrix(path / "coords.csv"));
  return s;
}

LabelledMmSpace read_labelled_mmspace(const fs::path& dir) {
  MmSpace base = read_mmspace(dir);
  auto labels = std::make_shared<const LabelSpace>(read_csv_matrix(dir / "label_dist.csv"));
  return LabelledMmSpace(std::move(base), read_csv_ints(dir / "labels.csv"), std::move(labels));
}

void write_mmspace(const fs::path& dir, const MmSpace& space) {
  fs::create_directories(dir);
  write_csv_matrix(dir / "dist.csv", space.dist());
  write_csv_vector(dir / "weights.csv", space.weights());
  if (space.coords().rows() == space.size() && space.coords().cols() > 0) {
    write_csv_matrix(dir / "coords.csv", space.coords());
  }
}

Matrix read_image(const fs::path& path) {
  const std::string e = lower_ext(path);
  if (e == ".pgm") return read_pgm(path);
  if (e == ".png") return read_png(path);
  throw Error(ErrorKind::Io, path.string() + ": unsupported image type");
}

Matrix read_pgm(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") throw Error(ErrorKind::Parse, path.string() + ": not a P2/P5 PGM file");
  auto next_int = [&](const char* what) {
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      long v = -1;
      if (!(in >> v) || v < 0) throw Error(ErrorKind::Parse, path.string() + ": bad PGM " + what);
      return v;
    }
  };
  const long w = next_int("width"), h = next_int("height"), maxval = next_int("maxval");
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorKind::Parse, path.string() + ": only 8-bit PGM images are supported");
  }
  Matrix img(h, w);
  if (magic == "P5") {
    in.get();
    std::vector<unsigned char> buf(static_cast<std::size_t>(w * h));
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw Error(ErrorKind::Parse, path.string() + ": truncated PGM data");
    }
    for (long r = 0; r < h; ++r)
      for (long c = 0; c < w; ++c) img(r, c) = buf[static_cast<std::size_t>(r * w + c)] / double(maxval);
  } else {
    for (long r = 0; r < h; ++r)
      for (long c = 0; c < w; ++c) {
        long v = -1;
        if (!(in >> v) || v < 0 || v > maxval) throw Error(ErrorKind::Parse, path.string() + ": bad PGM pixel");
        img(r, c) = v / double(maxval);
      }
  }
  return img;
}

namespace {

struct PngRead {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWrite {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

Matrix read_png(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::Io, "cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8)) {
    throw Error(ErrorKind::Parse, path.string() + ": not a PNG file");
  }
  PngRead r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw Error(ErrorKind::Io, "libpng initialisation failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw Error(ErrorKind::Io, "libpng initialisation failed");
  std::vector<png_bytep> rows;
  std::vector<unsigned char> data;
  png_uint_32 w = 0, h = 0;
  if (setjmp(png_jmpbuf(r.png))) throw Error(ErrorKind::Parse, path.string() + ": corrupt PNG data");
  png_init_io(r.png, fp.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);
  w = png_get_image_width(r.png, r.info);
  h = png_get_image_height(r.png, r.info);
  const int colour = png_get_color_type(r.png, r.info);
  if (png_get_bit_depth(r.png, r.info) == 16) png_set_strip_16(r.png);
  if (colour == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (colour == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(r.png, r.info) < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (colour & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
  if (colour == PNG_COLOR_TYPE_RGB || colour == PNG_COLOR_TYPE_RGB_ALPHA || colour == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
  }
  png_read_update_info(r.png, r.info);
  const std::size_t stride = png_get_rowbytes(r.png, r.info);
  data.resize(stride * h);
  for (png_uint_32 y = 0; y < h; ++y) rows.push_back(data.data() + y * stride);
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  Matrix img(h, w);
  for (png_uint_32 y = 0; y < h; ++y)
    for (png_uint_32 x = 0; x < w; ++x) img(y, x) = data[y * stride + x] / 255.0;
  return img;
}

void write_pgm(const fs::path& path, const Matrix& gray) {
  std::ofstream out = open_out(path, true);
  out << "P5\n" << gray.cols() << ' ' << gray.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < gray.rows(); ++r)
    for (Eigen::Index c = 0; c < gray.cols(); ++c) {
      const double v = std::clamp(gray(r, c), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
}

void write_png_rgb(const fs::path& path, const std::array<Matrix, 3>& rgb) {
  const Eigen::Index h = rgb[0].rows(), w = rgb[0].cols();
  for (const auto& ch : rgb) {
    if (ch.rows() != h || ch.cols() != w) throw Error(ErrorKind::Dimension, "PNG channels differ in shape");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::Io, "cannot write " + path.string());
  PngWrite pw;
  pw.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!pw.png) throw Error(ErrorKind::Io, "libpng initialisation failed");
  pw.info = png_create_info_struct(pw.png);
  if (!pw.info) throw Error(ErrorKind::Io, "libpng initialisation failed");
  std::vector<unsigned char> data(static_cast<std::size_t>(3 * w * h));
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      for (int k = 0; k < 3; ++k) {
        data[static_cast<std::size_t>(3 * (y * w + x) + k)] =
            static_cast<unsigned char>(std::lround(255.0 * std::clamp(rgb[k](y, x), 0.0, 1.0)));
      }
  std::vector<png_bytep> rows;
  for (Eigen::Index y = 0; y < h; ++y) rows.push_back(data.data() + 3 * y * w);
  if (setjmp(png_jmpbuf(pw.png))) throw Error(ErrorKind::Io, "writing " + path.string() + " failed");
  png_init_io(pw.png, fp.get());
  png_set_IHDR(pw.png, pw.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(pw.png, pw.info);
  png_write_image(pw.png, rows.data());
  png_write_end(pw.png, nullptr);
}

Matrix render_grid(const Vector& values, const Matrix& coords, int height, int width) {
  if (coords.rows() != values.size() || coords.cols() < 2) {
    throw Error(ErrorKind::Dimension, "render needs (row, col) coordinates for every value");
  }
  Matrix img = Matrix::Zero(height, width);
  for (Eigen::Index a = 0; a < values.size(); ++a) {
    const long r = std::lround(coords(a, 0)), c = std::lround(coords(a, 1));
    if (r < 0 || r >= height || c < 0 || c >= width) {
      throw Error(ErrorKind::Dimension, "coordinate outside the render grid");
    }
    img(r, c) += values[a];
  }
  const double mx = img.maxCoeff();
  if (mx > 0.0) img /= mx;
  return img;
}

CostTree read_tree_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
    const int n = j.at("nodes").get<int>();
    std::vector<TreeEdge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) {
        throw Error(ErrorKind::Parse, path.string() + ": edges must be [i, j] or [i, j, w]");
      }
      edges.push_back({e[0].get<int>(), e[1].get<int>(), e.size() == 3 ? e[2].get<double>() : 1.0});
    }
    return CostTree(n, std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

std::string tree_json(const CostTree& tree) {
  nlohmann::json j;
  j["nodes"] = tree.n_nodes();
  j["edges"] = nlohmann::json::array();
  for (const auto& e : tree.edges()) j["edges"].push_back({e.i, e.j, e.w});
  return j.dump(2);
}

}  // namespace mgw::io
