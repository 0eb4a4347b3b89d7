#include <gtest/gtest.h>

#include "mgw/transfer.hpp"
#include "support.hpp"

using namespace mgw;
using mgw::testing::Gen;

namespace {

TransferOperator random_op(Gen& g, Eigen::Index from, Eigen::Index to, int i) {
  return transfer_operator(g.matrix(from, to, 0.0, 1.0), i, i + 1);
}

}  // namespace

TEST(Transfer, DiagonalPlanIsIdentity) {
  const auto op = transfer_operator(Matrix(Matrix::Identity(2, 2) / 2));
  EXPECT_EQ(op.matrix, Matrix(Matrix::Identity(2, 2)));
  Vector w(3);
  w << 0.1, 2.0, 0.7;
  EXPECT_LT((transfer_operator(Matrix(w.asDiagonal())).matrix - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Transfer, UniformPlan) {
  const auto op = transfer_operator(Matrix::Constant(2, 2, 0.25));
  EXPECT_EQ(op.matrix, Matrix::Constant(2, 2, 0.5));
}

TEST(Transfer, EmptyRowsDropMass) {
  Matrix p(2, 2);
  p << 0.5, 0.5, 0.0, 0.0;
  const auto op = transfer_operator(p);
  EXPECT_EQ(op.kt().row(1).sum(), 0.0);
  Vector d(2);
  d << 0.4, 0.6;
  const auto out = propagate(op, d);
  EXPECT_DOUBLE_EQ(out.massIn, 1.0);
  EXPECT_DOUBLE_EQ(out.massOut, 0.4);
}

TEST(Transfer, Stochastic) {
  Gen g(31);
  for (int t = 0; t < 20; ++t) {
    const auto op = random_op(g, g.integer(1, 6), g.integer(1, 6), 0);
    const Vector rows = op.kt().rowwise().sum();
    for (Eigen::Index a = 0; a < rows.size(); ++a) EXPECT_NEAR(rows[a], 1.0, 1e-12);
    EXPECT_TRUE((op.matrix.array() >= 0.0).all());
  }
}

TEST(Transfer, ComposeAssociative) {
  Gen g(32);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_op(g, 3, 4, 0), b = random_op(g, 4, 5, 1), c = random_op(g, 5, 2, 2);
    const auto left = compose({compose({a, b}), c});
    const auto right = compose({a, compose({b, c})});
    EXPECT_LT((left.matrix - right.matrix).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(left.sourceIndex, 0);
    EXPECT_EQ(left.targetIndex, 3);
    const Vector d = g.probability(3);
    EXPECT_LT((propagate(compose({a, b}), d).density - propagate(b, propagate(a, d).density).density)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Transfer, ComposePermutations) {
  Matrix p(3, 3), q(3, 3);
  p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  q << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  const auto k = compose({transfer_operator(p, 0, 1), transfer_operator(q, 1, 2)});
  EXPECT_EQ(k.kt(), Matrix(p * q));
  EXPECT_EQ(compose({transfer_operator(Matrix(Matrix::Identity(3, 3)), 0, 1),
                     transfer_operator(Matrix(Matrix::Identity(3, 3)), 1, 2)})
                .matrix,
            Matrix(Matrix::Identity(3, 3)));
}

TEST(Transfer, ComposeChecksChain) {
  Gen g(33);
  EXPECT_THROW(compose({random_op(g, 3, 4, 0), random_op(g, 3, 4, 1)}), Error);
  EXPECT_THROW(compose({random_op(g, 3, 4, 0), random_op(g, 4, 4, 3)}), Error);
  EXPECT_THROW(propagate(random_op(g, 3, 4, 0), Vector::Ones(4)), Error);
}

TEST(Transfer, NonAdjacentPairRejected) {
  Gen g(34);
  const CostTree tree = chain_tree({2, 2, 2});
  std::vector<Vector> ref(3, Vector::Zero(2));
  const PlanFactors plan = g.random_factors(tree, {2, 2, 2}, 0.1, ref);
  try {
    transfer_operator(plan, 0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedPair);
  }
  EXPECT_NO_THROW(transfer_operator(plan, 2, 1));
}

TEST(Particles, Deterministic) {
  ParticleConfig c;
  const auto a = synth_particles(c), b = synth_particles(c);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t s = 0; s < a.size(); ++s) {
    EXPECT_EQ(a[s].image, b[s].image);
    EXPECT_EQ(a[s].coherent, b[s].coherent);
  }
  c.seed = 8;
  EXPECT_NE(synth_particles(c)[0].image, a[0].image);
}

TEST(Particles, StaticWithoutNoiseOrMotion) {
  ParticleConfig c;
  c.nNoise = 0;
  c.rotationPerStep = 0.0;
  const auto s = synth_particles(c);
  EXPECT_EQ(s[0].image, s[1].image);
  EXPECT_EQ(s[1].image, s[2].image);
  EXPECT_EQ(s[0].space.size(), s[2].space.size());
}

TEST(Particles, Separation) {
  ParticleConfig c;
  c.nCoherent = 20;
  const auto s = synth_particles(c);
  for (int k = 0; k < 20; ++k)
    for (int l = 0; l < k; ++l) EXPECT_GE((s[0].coherent.row(k) - s[0].coherent.row(l)).norm(), 2.0 - 1e-9);
}

TEST(Particles, RejectsBadConfig) {
  ParticleConfig c;
  c.nSnapshots = 0;
  EXPECT_THROW(synth_particles(c), Error);
  c = ParticleConfig{};
  c.blurSigma = 0.0;
  EXPECT_THROW(synth_particles(c), Error);
}

TEST(Particles, IdentityTransferIsAccurate) {
  ParticleConfig c;
  c.nNoise = 0;
  c.rotationPerStep = 0.0;
  const auto s = synth_particles(c);
  const Vector w = s[0].space.weights();
  const auto id = transfer_operator(Matrix(w.asDiagonal()), 0, 1);
  const auto id2 = transfer_operator(Matrix(w.asDiagonal()), 1, 2);
  EXPECT_EQ(correspondence_accuracy(s, {id, id2}), 1.0);
  const Vector clean = clean_density(s[0]);
  EXPECT_NEAR(clean.sum(), 1.0, 1e-12);
  EXPECT_GT(localization(s[2], propagate(compose({id, id2}), clean).density), 0.95);
}
