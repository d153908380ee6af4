#include <gtest/gtest.h>

#include "groupprox/penalties.hpp"
#include "groupprox/rng.hpp"

using namespace groupprox;

TEST(Mcp, ScalarPieces) {
  // lambda |x| - x^2 / (2 beta) inside, beta lambda^2 / 2 outside.
  EXPECT_DOUBLE_EQ(mcp_scalar(1.0, 3.0, 1.0), 1.0 - 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(mcp_scalar(-1.0, 3.0, 1.0), 1.0 - 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(mcp_scalar(5.0, 3.0, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(mcp_scalar(3.0, 3.0, 1.0), 1.5);  // continuous at beta lambda
  EXPECT_DOUBLE_EQ(mcp_scalar(0.0, 3.0, 1.0), 0.0);
}

TEST(Mcp, RejectsBetaAtMostOne) {
  EXPECT_THROW(mcp_scalar(1.0, 1.0, 1.0), Error);
  PenaltyConfig cfg;
  cfg.kind = PenaltyKind::GroupMCP;
  cfg.beta = 0.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidBeta);
  }
}

TEST(Penalty, GroupWeights) {
  PenaltyConfig cfg;
  cfg.lambda = 0.5;
  EXPECT_DOUBLE_EQ(cfg.group_lambda(4), 1.0);
  cfg.group_weight_rule = GroupWeightRule::Unit;
  EXPECT_DOUBLE_EQ(cfg.group_lambda(4), 0.5);
}

TEST(Penalty, MixedNormValue) {
  ParamVector v(5);
  v << 3, 4, 0, 0, 1;
  GroupPartition p({{0, 1}, {2, 3}, {4}}, 5);
  PenaltyConfig cfg;
  cfg.lambda = 1.0;
  cfg.group_weight_rule = GroupWeightRule::Unit;
  EXPECT_DOUBLE_EQ(penalty_value(v, p, cfg), 6.0);
  cfg.group_weight_rule = GroupWeightRule::SqrtSize;
  EXPECT_DOUBLE_EQ(penalty_value(v, p, cfg), 5.0 * std::sqrt(2.0) + 1.0);
}

TEST(Penalty, SizeMismatch) {
  GroupPartition p({{0}}, 2);
  PenaltyConfig cfg;
  EXPECT_THROW(penalty_value(ParamVector::Zero(3), p, cfg), Error);
}

TEST(UnweightedProx, L2BlockSoftThreshold) {
  Vector<double> x(2);
  x << 3, 4;
  const auto z = prox_l2_unweighted(x, 1.0);
  EXPECT_NEAR(z(0), 3 * 0.8, 1e-15);
  EXPECT_NEAR(z(1), 4 * 0.8, 1e-15);
  const auto zero = prox_l2_unweighted(x, 5.0);
  EXPECT_EQ(zero(0), 0.0);
  EXPECT_EQ(zero(1), 0.0);
}

TEST(UnweightedProx, McpBranches) {
  Vector<double> x(2);
  x << 0.6, 0.8;  // norm 1
  // Identity above beta lambda.
  EXPECT_EQ(prox_mcp_l2_unweighted(x, 0.5, 3.0, 0.2), x);
  // Zero at or below alpha lambda.
  EXPECT_TRUE(prox_mcp_l2_unweighted(x, 0.5, 3.0, 2.0).isZero(0));
  // Interior: beta/(beta-alpha) (1 - alpha lambda / ||x||) x.
  const auto z = prox_mcp_l2_unweighted(x, 0.5, 3.0, 0.5);
  const double s = 3.0 / 2.5 * (1 - 0.25);
  EXPECT_NEAR(z(0), s * 0.6, 1e-15);
  EXPECT_NEAR(z(1), s * 0.8, 1e-15);
  EXPECT_THROW(prox_mcp_l2_unweighted(x, 3.0, 3.0, 0.5), Error);
}

// The closed forms must minimize 1/2 ||z - x||^2 + alpha h(z) along the ray
// through x, which contains the minimizer for any radial penalty.
TEST(UnweightedProx, RadialMinimality) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const Index n = 1 + static_cast<Index>(rng.below(4));
    const Vector<double> x = rng.normal_vector(n);
    const double alpha = rng.uniform(0.05, 1.0), lambda = rng.uniform(0.1, 2.0);
    const double beta = rng.uniform(1.5, 6.0);
    auto obj = [&](const Vector<double>& z, bool mcp) {
      const double h = mcp ? mcp_scalar(z.norm(), beta, lambda) : lambda * z.norm();
      return 0.5 * (z - x).squaredNorm() + alpha * h;
    };
    for (bool mcp : {false, true}) {
      const Vector<double> z = mcp ? prox_mcp_l2_unweighted(x, alpha, beta, lambda)
                                   : prox_l2_unweighted(x, alpha * lambda);
      const double best = obj(z, mcp);
      for (int s = 0; s <= 400; ++s) {
        const Vector<double> cand = (s / 200.0) * x;
        EXPECT_LE(best, obj(cand, mcp) + 1e-12);
      }
    }
  }
}

TEST(Names, RoundTrip) {
  EXPECT_EQ(penalty_kind_from_string(to_string(PenaltyKind::GroupMCP)),
            PenaltyKind::GroupMCP);
  EXPECT_EQ(group_weight_rule_from_string("unit"), GroupWeightRule::Unit);
  EXPECT_THROW(penalty_kind_from_string("lasso"), Error);
}
