#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mgw/fixtures.hpp"
#include "mgw/mmspace.hpp"
#include "mgw/treecost.hpp"
#include "support.hpp"

using namespace mgw;
using mgw::testing::Gen;

namespace {

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

std::vector<double> sorted(const Matrix& m) {
  std::vector<double> v(m.data(), m.data() + m.size());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Divergence, KlClosedForms) {
  EXPECT_NEAR(kl_divergence(Vector::Constant(1, 2.0), Vector::Constant(1, 1.0)), 2 * std::log(2.0) - 1, 1e-15);
  EXPECT_NEAR(kl_divergence(Vector::Constant(1, 4.0), Vector::Constant(1, 1.0)), 4 * std::log(4.0) - 3, 1e-14);
  EXPECT_EQ(kl_divergence(Vector::Constant(2, 0.5), Vector::Constant(2, 0.5)), 0.0);
}

TEST(Divergence, KlNotAbsolutelyContinuous) {
  Vector mu(2), nu(2);
  mu << 0.5, 0.5;
  nu << 1.0, 0.0;
  EXPECT_TRUE(std::isinf(kl_divergence(mu, nu)));
  EXPECT_TRUE(std::isfinite(kl_divergence(nu, mu)));
}

TEST(Divergence, BalancedIndicator) {
  Vector v = Vector::Constant(3, 1.0 / 3);
  EXPECT_EQ(csiszar_divergence(MarginalPenalty::balanced(), v, v), 0.0);
  Vector w = v;
  w[0] += 1e-6;
  EXPECT_TRUE(std::isinf(csiszar_divergence(MarginalPenalty::balanced(), w, v)));
  EXPECT_EQ(csiszar_divergence(MarginalPenalty::free(), w, v), 0.0);
  EXPECT_NEAR(csiszar_divergence(MarginalPenalty::scaled_kl(3.0), w, v), 3.0 * kl_divergence(w, v), 1e-18);
}

TEST(Divergence, KlFactorizationRandomTriples) {
  Gen g(11);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = g.integer(1, 5);
    EXPECT_LT(kl_factorization_check(g.positive(n, 0.01, 2), g.positive(n, 0.01, 2), g.positive(n, 0.01, 2)), 1e-10);
  }
}

TEST(Divergence, TensorMatchesDense) {
  Gen g(12);
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index n = g.integer(1, 6);
    const Vector mu = g.positive(n, 0.05, 1.5), nu = g.positive(n, 0.05, 1.5);
    for (auto pen : {MarginalPenalty::scaled_kl(0.7), MarginalPenalty::free()}) {
      const double dense = csiszar_divergence(pen, kron(mu, mu), kron(nu, nu));
      EXPECT_NEAR(tensor_divergence(pen, mu, nu), dense, 1e-10 * (1 + std::abs(dense)));
    }
    EXPECT_EQ(tensor_divergence(MarginalPenalty::balanced(), nu, nu), 0.0);
  }
}

TEST(Penalty, ParseRoundTrip) {
  for (auto p : {MarginalPenalty::balanced(), MarginalPenalty::free(), MarginalPenalty::scaled_kl(0.25)}) {
    const auto q = MarginalPenalty::parse(p.to_string());
    EXPECT_EQ(q.kind, p.kind);
    EXPECT_EQ(q.lambda, p.lambda);
  }
  EXPECT_THROW(MarginalPenalty::parse("kl:-1"), Error);
  EXPECT_THROW(MarginalPenalty::parse("tv"), Error);
}

TEST(MmSpaceTest, RejectsBadInput) {
  Matrix d(2, 2);
  d << 0, 1, 2, 0;
  EXPECT_THROW(MmSpace(d, Vector::Ones(2)), Error);
  d << 0, 1, 1, 0;
  EXPECT_THROW(MmSpace(d, Vector::Ones(3)), Error);
  EXPECT_THROW(MmSpace(d, -Vector::Ones(2)), Error);
  EXPECT_NO_THROW(MmSpace(d, Vector::Ones(2)));
}

TEST(Image, ThresholdAndNormalization) {
  Matrix img = Matrix::Zero(4, 4);
  img(0, 0) = 1.0;
  img(3, 3) = 0.5;
  img(1, 2) = 0.01;
  const MmSpace s = image_to_mmspace(img, 0.05);
  ASSERT_EQ(s.size(), 2);
  EXPECT_DOUBLE_EQ(s.dist().maxCoeff(), 1.0);
  EXPECT_DOUBLE_EQ(s.mass(), 1.0);
  EXPECT_DOUBLE_EQ(s.weights()[0], 2.0 / 3.0);
  const MmSpace f = image_to_mmspace(img, 0.05, DistanceNormalization::FullGrid);
  EXPECT_DOUBLE_EQ(f.dist()(0, 1), 1.0);
  EXPECT_THROW(image_to_mmspace(Matrix::Zero(3, 3), 0.0), Error);
}

TEST(Image, PermutedPixelsIsometric) {
  const Matrix img = heart_image(10);
  const Matrix flipped = img.colwise().reverse();
  const Matrix transposed = img.transpose();
  const MmSpace a = image_to_mmspace(img, 0.0);
  for (const Matrix& other : {flipped, transposed}) {
    const MmSpace b = image_to_mmspace(other, 0.0);
    ASSERT_EQ(a.size(), b.size());
    const auto da = sorted(a.dist()), db = sorted(b.dist());
    for (std::size_t k = 0; k < da.size(); ++k) EXPECT_NEAR(da[k], db[k], 1e-14);
    EXPECT_EQ(sorted(a.weights()), sorted(b.weights()));
  }
}

TEST(Sphere, GreatCircle) {
  EXPECT_NEAR(normalized_great_circle(0, 0, 1.0, M_PI), 1.0, 1e-12);
  EXPECT_NEAR(normalized_great_circle(0, M_PI / 2, M_PI / 2, M_PI / 2), 0.5, 1e-12);
  const MmSpace s = sphere_grid_mmspace(6, 4);
  EXPECT_EQ(s.size(), 24);
  EXPECT_LE(s.dist().maxCoeff(), 1.0 + 1e-12);
  EXPECT_NEAR((s.dist() - s.dist().transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Support, RestrictKeepsPositive) {
  Matrix d = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  Vector w(3);
  w << 0.5, 0.0, 0.5;
  const MmSpace r = restrict_to_support(MmSpace(d, w));
  EXPECT_EQ(r.size(), 2);
  EXPECT_DOUBLE_EQ(r.mass(), 1.0);
}

// ---------------------------------------------------------------------------

TEST(Linearization, MatchesDenseSum) {
  Gen g(13);
  for (int t = 0; t < 20; ++t) {
    const MmSpace x = g.euclidean_space(g.integer(1, 5)), y = g.euclidean_space(g.integer(1, 5));
    const Matrix gam = g.matrix(x.size(), y.size());
    const Matrix m = gw_edge_linearization(x.dist(), y.dist(), gam, gam.rowwise().sum(), gam.colwise().sum().transpose());
    for (Eigen::Index a = 0; a < x.size(); ++a)
      for (Eigen::Index b = 0; b < y.size(); ++b) {
        double s = 0.0;
        for (Eigen::Index a2 = 0; a2 < x.size(); ++a2)
          for (Eigen::Index b2 = 0; b2 < y.size(); ++b2)
            s += std::pow(x.dist()(a, a2) - y.dist()(b, b2), 2) * gam(a2, b2);
        EXPECT_NEAR(m(a, b), s, 1e-12 * (1 + s));
      }
  }
}

TEST(Linearization, TrivialExamples) {
  Matrix z = Matrix::Zero(1, 1), one = Matrix::Ones(1, 1);
  EXPECT_EQ(gw_edge_linearization(z, z, one, Vector::Ones(1), Vector::Ones(1))(0, 0), 0.0);
  Matrix d(2, 2);
  d << 0, 1, 1, 0;
  const Matrix gam = Matrix::Identity(2, 2) / 2;
  Matrix expect(2, 2);
  expect << 0, 1, 1, 0;
  EXPECT_LT((gw_edge_linearization(d, d, gam, gam.rowwise().sum(), gam.colwise().sum().transpose()) - expect)
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(Trees, Structure) {
  const CostTree star = barycenter_star_tree({3, 4, 2}, 5, {0.2, 0.3, 0.5});
  EXPECT_EQ(star.n_nodes(), 4);
  EXPECT_TRUE(star.is_spanning_tree());
  for (const auto& e : star.edges()) EXPECT_EQ(e.j, 3);
  EXPECT_TRUE(chain_tree({2, 2, 2, 2}).is_spanning_tree());
  EXPECT_FALSE(complete_graph({2, 2, 2}, {0.3, 0.3, 0.4}).is_spanning_tree());
  EXPECT_THROW(complete_graph({2, 2, 2}, {0.3, 0.3, 0.4}).require_spanning_tree(), Error);
  EXPECT_THROW(barycenter_star_tree({2, 2}, 3, {0.5, 0.6}), Error);
  const auto order = chain_tree({1, 1, 1}).sweep_order();
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 1, 0}));
}

TEST(Mcnd, ProjectionRemovesMarginals) {
  Gen g(14);
  const std::vector<Eigen::Index> sizes{2, 3, 2};
  const Vector alpha = project_zero_marginals(sizes, g.matrix(12, 1, -1, 1));
  // marginal of node 1
  for (int b = 0; b < 3; ++b) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) s += alpha[a * 6 + b * 2 + c];
    EXPECT_NEAR(s, 0.0, 1e-14);
  }
}

TEST(Mcnd, NonPositiveForCndMetrics) {
  Gen g(15);
  const std::vector<std::vector<Eigen::Index>> grids{{2, 2, 2}, {3, 3}};
  for (int t = 0; t < 200; ++t) {
    const auto& sizes = grids[t % 2];
    const bool sphere = (t / 2) % 2 == 1;
    std::vector<Matrix> dists;
    for (auto n : sizes) dists.push_back(sphere ? g.sphere_space(n).dist() : g.euclidean_space(n).dist());
    std::vector<double> rho(sizes.size(), 1.0 / sizes.size());
    const CostTree tree = t % 4 < 2 ? chain_tree(sizes) : complete_graph(sizes, rho);
    Eigen::Index total = 1;
    for (auto n : sizes) total *= n;
    Vector alpha = project_zero_marginals(sizes, g.matrix(total, 1, -1, 1));
    alpha /= alpha.norm();
    EXPECT_LE(mcnd_quadratic_form(tree, dists, alpha), 1e-12) << "trial " << t;
  }
}

TEST(Mcnd, RejectsNonzeroMarginals) {
  const std::vector<Matrix> d{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  EXPECT_THROW(mcnd_quadratic_form(chain_tree({2, 2}), d, Vector::Ones(4)), Error);
  EXPECT_EQ(mcnd_quadratic_form(chain_tree({2, 2}), d, Vector::Zero(4)), 0.0);
}
