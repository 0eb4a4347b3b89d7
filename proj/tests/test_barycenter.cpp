#include <gtest/gtest.h>

#include <cmath>

#include "mgw/barycenter.hpp"
#include "mgw/fixtures.hpp"
#include "support.hpp"

using namespace mgw;
using mgw::testing::Gen;

namespace {

UmgwOptions tight() {
  UmgwOptions o;
  o.inner.tolerance = 1e-12;
  o.inner.maxIter = 20000;
  o.outerTol = 1e-13;
  o.outerIter = 200;
  return o;
}

}  // namespace

TEST(Barycenter, HubIsFreeAndLast) {
  Gen g(21);
  BarycenterSpec s;
  s.inputs = {g.euclidean_space(3), g.euclidean_space(4)};
  s.rho = {0.3, 0.7};
  s.support = g.euclidean_space(5);
  s.inputPenalties = {MarginalPenalty::scaled_kl(2.0), MarginalPenalty::balanced()};
  const UmgwProblem p = barycenter_problem(s);
  ASSERT_EQ(p.tree.n_nodes(), 3);
  EXPECT_EQ(p.penalties[2].kind, MarginalPenalty::Kind::Free);
  EXPECT_EQ(p.penalties[0].kind, MarginalPenalty::Kind::ScaledKL);
  EXPECT_DOUBLE_EQ(p.penalties[0].lambda, 0.6);
  for (const auto& e : p.tree.edges()) EXPECT_EQ(e.j, 2);
}

TEST(Barycenter, SpecValidation) {
  Gen g(22);
  BarycenterSpec s;
  s.inputs = {g.euclidean_space(3), g.euclidean_space(3)};
  s.support = g.euclidean_space(3);
  s.rho = {0.5, 0.6};
  EXPECT_THROW(s.validate(), Error);
  s.rho = {0.5};
  EXPECT_THROW(s.validate(), Error);
  s.rho = {0.5, 0.5};
  s.eps = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s.eps = 0.1;
  EXPECT_NO_THROW(s.validate());
}

TEST(Barycenter, MeasureLivesOnSupport) {
  Gen g(23);
  BarycenterSpec s;
  s.inputs = {g.euclidean_space(4), g.euclidean_space(3)};
  s.rho = {0.5, 0.5};
  s.support = g.euclidean_space(6);
  s.eps = 0.05;
  const auto b = fixed_support_barycenter(s, tight());
  EXPECT_EQ(b.barycenter.size(), 6);
  EXPECT_EQ(b.hub, 2);
  EXPECT_TRUE((b.barycenter.weights().array() >= 0.0).all());
  EXPECT_NEAR(b.barycenter.mass(), 1.0, 1e-6);
  EXPECT_EQ(b.barycenter.dist(), s.support.dist());
}

TEST(Barycenter, PermutationEquivariance) {
  Gen g(24);
  BarycenterSpec s;
  s.inputs = {g.euclidean_space(4), g.euclidean_space(3), g.euclidean_space(4)};
  s.rho = {0.2, 0.3, 0.5};
  s.support = g.euclidean_space(5);
  s.eps = 0.05;
  const auto a = fixed_support_barycenter(s, tight());
  BarycenterSpec t = s;
  t.inputs = {s.inputs[2], s.inputs[0], s.inputs[1]};
  t.rho = {0.5, 0.2, 0.3};
  const auto b = fixed_support_barycenter(t, tight());
  EXPECT_LT((a.barycenter.weights() - b.barycenter.weights()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Barycenter, FusedZeroBetaMatchesPlain) {
  Gen g(25);
  auto labels = std::make_shared<const LabelSpace>(Matrix::Ones(2, 2) - Matrix::Identity(2, 2));
  BarycenterSpec s;
  s.inputs = {g.euclidean_space(4), g.euclidean_space(3)};
  s.rho = {0.4, 0.6};
  s.support = g.euclidean_space(4);
  s.eps = 0.05;
  s.labelledInputs = {LabelledMmSpace(s.inputs[0], {0, 1, 1, 0}, labels),
                      LabelledMmSpace(s.inputs[1], {1, 0, 1}, labels)};
  s.supportLabels = std::vector<int>{0, 0, 1, 1};
  const auto plain = fixed_support_barycenter(s, tight());
  const auto fused = fused_fixed_support_barycenter(s, FusedConfig{0.0, 2.0}, tight());
  EXPECT_LT((plain.barycenter.weights() - fused.barycenter.base().weights()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(fused.barycenter.label_of(), *s.supportLabels);
}

TEST(Barycenter, FusedLabelMismatch) {
  Gen g(26);
  auto two = std::make_shared<const LabelSpace>(Matrix::Ones(2, 2) - Matrix::Identity(2, 2));
  auto three = std::make_shared<const LabelSpace>(Matrix::Ones(3, 3) - Matrix::Identity(3, 3));
  BarycenterSpec s;
  s.inputs = {g.euclidean_space(2), g.euclidean_space(2)};
  s.rho = {0.5, 0.5};
  s.support = g.euclidean_space(2);
  s.labelledInputs = {LabelledMmSpace(s.inputs[0], {0, 1}, two), LabelledMmSpace(s.inputs[1], {0, 2}, three)};
  s.supportLabels = std::vector<int>{0, 1};
  EXPECT_THROW(fused_fixed_support_barycenter(s, FusedConfig{0.5, 2.0}, tight()), Error);
}

TEST(Loss, SingleInputIsGw) {
  Gen g(27);
  const MmSpace x = g.euclidean_space(4), y = g.euclidean_space(5);
  UmgwOptions o;
  const double gw = gw2_eps(x, y, 0.05, MarginalPenalty::balanced(), o);
  EXPECT_DOUBLE_EQ(barycentric_loss({x}, y, 0.05, MarginalPenalty::balanced(), o), gw);
  EXPECT_TRUE(std::isfinite(gw));
}

TEST(Loss, OnePointSpacesVanish) {
  const MmSpace p(Matrix::Zero(1, 1), Vector::Ones(1));
  EXPECT_NEAR(gw2_eps(p, p, 0.1, MarginalPenalty::balanced(), UmgwOptions{}), 0.0, 1e-14);
}

TEST(Essential, Threshold) {
  Vector m(4);
  m << 0.5, 1e-5, 2e-4, 0.0;
  EXPECT_EQ(essential_support(m), (std::vector<Eigen::Index>{0, 2}));
}

// ---------------------------------------------------------------------------

TEST(FreeSupport, SingleInputIsIsomorphic) {
  Gen g(28);
  const MmSpace x = g.euclidean_space(4);
  FreeSupportOptions fo;
  fo.eps = 1e-2;
  const auto b = free_support_barycenter({x}, {1.0}, fo);
  ASSERT_EQ(b.productSupport.size(), 4u);
  EXPECT_LT((b.dStar - x.dist()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((b.measure - x.weights()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FreeSupport, GeodesicDistance) {
  Gen g(29);
  const MmSpace x = g.euclidean_space(3), y = g.euclidean_space(4);
  const double r = 0.3;
  FreeSupportOptions fo;
  fo.eps = 1e-2;
  const auto b = free_support_barycenter({x, y}, {1 - r, r}, fo);
  for (std::size_t a = 0; a < b.productSupport.size(); ++a)
    for (std::size_t c = 0; c < b.productSupport.size(); ++c) {
      const auto& u = b.productSupport[a];
      const auto& v = b.productSupport[c];
      EXPECT_NEAR(b.dStar(a, c), (1 - r) * x.dist()(u[0], v[0]) + r * y.dist()(u[1], v[1]), 1e-15);
    }
  EXPECT_NEAR(b.measure.sum(), 1.0, 1e-6);
}

TEST(FreeSupport, IdenticalInputsRecoverInput) {
  Matrix d(3, 3);
  d << 0, 0.3, 1, 0.3, 0, 0.8, 1, 0.8, 0;
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const MmSpace x(d, w);
  FreeSupportOptions fo;
  fo.eps = 1e-3;
  fo.inner.maxIter = 20000;
  const auto b = free_support_barycenter({x, x}, {0.5, 0.5}, fo);
  // couple the product support with X through its first coordinate
  Matrix plan = Matrix::Zero(b.measure.size(), 3);
  for (std::size_t k = 0; k < b.productSupport.size(); ++k) plan(k, b.productSupport[k][0]) = b.measure[k];
  EXPECT_LE(dense_gw_cost(b.dStar, d, plan), 1e-6);
}

TEST(FreeSupport, SizeLimit) {
  Gen g(30);
  const MmSpace big = g.euclidean_space(30);
  try {
    free_support_barycenter({big, big, big}, {0.3, 0.3, 0.4});
    FAIL() << "expected a scale error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedScale);
    EXPECT_NE(std::string(e.what()).find("fixed"), std::string::npos);
  }
}
