#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mgw/fixtures.hpp"
#include "mgw/io.hpp"

using namespace mgw;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mgw_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  std::string parse_error(const fs::path& p) {
    try {
      io::read_csv_matrix(p);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse);
      return e.what();
    }
    ADD_FAILURE() << "no parse error";
    return {};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(IoTest, CsvRoundTrip) {
  Matrix m(2, 3);
  m << 0.1, 1.0 / 3.0, -2.5e-17, 4, 5, 6;
  io::write_csv_matrix(dir_ / "m.csv", m);
  EXPECT_EQ(io::read_csv_matrix(dir_ / "m.csv"), m);
  Vector v(3);
  v << 1.0 / 7.0, 2, 3;
  io::write_csv_vector(dir_ / "v.csv", v);
  EXPECT_EQ(io::read_csv_vector(dir_ / "v.csv"), v);
}

TEST_F(IoTest, ParseErrorsCarryLineNumbers) {
  EXPECT_NE(parse_error(write("a.csv", "0,1\n1,x\n")).find("a.csv:2"), std::string::npos);
  EXPECT_NE(parse_error(write("b.csv", "0,1\n1,0,3\n")).find(":2"), std::string::npos);
  EXPECT_NE(parse_error(write("c.csv", "0,1,\n1,0\n")).find(":1"), std::string::npos);
  EXPECT_NO_THROW(io::read_csv_matrix(write("d.csv", "\xEF\xBB\xBF" "0,1\n\n1,0\n")));
}

TEST_F(IoTest, MissingFile) {
  try {
    io::read_csv_matrix(dir_ / "nope.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST_F(IoTest, MmSpaceDirectory) {
  Matrix d(2, 2);
  d << 0, 1, 1, 0;
  Vector w(2);
  w << 0.25, 0.75;
  io::write_mmspace(dir_ / "x", MmSpace(d, w));
  const MmSpace back = io::read_mmspace(dir_ / "x");
  EXPECT_EQ(back.dist(), d);
  EXPECT_EQ(back.weights(), w);
  write("x/dist.csv", "0,1\n1,0,\n");
  EXPECT_THROW(io::read_mmspace(dir_ / "x"), Error);
}

TEST_F(IoTest, Images) {
  const Matrix img = heart_image(9);
  io::write_pgm(dir_ / "h.pgm", img);
  const Matrix back = io::read_image(dir_ / "h.pgm");
  EXPECT_LE((back - img).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
  io::write_png_rgb(dir_ / "h.png", {img, img, img});
  EXPECT_LE((io::read_image(dir_ / "h.png") - img).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-3);
  const MmSpace s = io::read_mmspace(dir_ / "h.pgm");
  EXPECT_EQ(s.size(), image_to_mmspace(back, 0.0).size());
  write("bad.pgm", "P5\n3 3\n");
  EXPECT_THROW(io::read_image(dir_ / "bad.pgm"), Error);
}

TEST_F(IoTest, TreeJson) {
  const CostTree t = chain_tree({2, 3, 4});
  io::write_text(dir_ / "t.json", io::tree_json(t));
  const CostTree back = io::read_tree_json(dir_ / "t.json");
  ASSERT_EQ(back.n_nodes(), 3);
  ASSERT_EQ(back.edges().size(), 2u);
  EXPECT_EQ(back.edges()[1].i, 1);
  EXPECT_EQ(back.edges()[1].j, 2);
  write("bad.json", "{\"nodes\": 2, \"edges\": [[0, 5, 1]]}");
  EXPECT_THROW(io::read_tree_json(dir_ / "bad.json"), Error);
}

TEST(Render, MaxNormalized) {
  Matrix xy(2, 2);
  xy << 0, 0, 1, 2;
  Vector v(2);
  v << 1.0, 4.0;
  const Matrix g = io::render_grid(v, xy, 2, 3);
  EXPECT_DOUBLE_EQ(g(1, 2), 1.0);
  EXPECT_DOUBLE_EQ(g(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(g.sum(), 1.25);
}
