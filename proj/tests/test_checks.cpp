#include <gtest/gtest.h>

#include "mgw/checks.hpp"

using namespace mgw;

TEST(Checks, Suites) {
  EXPECT_TRUE(checks::kl_factorization(100, 1e-10).pass);
  EXPECT_TRUE(checks::mcnd(40, 1e-12).pass);
  EXPECT_TRUE(checks::scaling(20, 1e-10).pass);
  EXPECT_TRUE(checks::objective_oracle(10, 1e-10).pass);
  EXPECT_TRUE(checks::sinkhorn_oracle(6, 1e-8).pass);
}

TEST(Checks, TraceMonotone) {
  EXPECT_TRUE(checks::trace_monotone({3.0, 2.0, 2.0, 1.0}, 0.0).pass);
  const auto o = checks::trace_monotone({3.0, 2.0, 2.5}, 0.1);
  EXPECT_FALSE(o.pass);
  EXPECT_DOUBLE_EQ(o.worst, 0.5);
  EXPECT_TRUE(checks::trace_monotone({1.0}, 0.0).pass);
}

TEST(Checks, TightnessOnSmallFixture) {
  checks::TightnessFixture fx;
  fx.grid = 6;
  fx.eps = 1e-3;
  fx.outerIter = 200;
  const auto t = checks::tightness(fx, 1e-3);
  EXPECT_EQ(t.runs.size(), 3u);
  // gaps here sit at round-off level, where their order is noise
  EXPECT_LE(t.outcome.worst, 1e-3) << t.outcome.detail;
}
