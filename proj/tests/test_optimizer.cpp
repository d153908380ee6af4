#include <gtest/gtest.h>

#include "groupprox/optimizer.hpp"
#include "groupprox/problems.hpp"
#include "groupprox/rng.hpp"

using namespace groupprox;

namespace {

ParamVector vec(std::initializer_list<double> v) {
  ParamVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

PreconditionerRule rule_of(PreconditionerKind kind) {
  PreconditionerRule r;
  r.kind = kind;
  return r;
}

const PreconditionerKind kAllRules[] = {PreconditionerKind::Sgd, PreconditionerKind::Momentum,
                                        PreconditionerKind::Adagrad, PreconditionerKind::Rmsprop,
                                        PreconditionerKind::Adam};

}  // namespace

TEST(Moments, SgdIsIdentity) {
  auto state = OptimizerState::zeros(2);
  const auto m = update_moments(state, vec({1, -2}), rule_of(PreconditionerKind::Sgd));
  EXPECT_EQ(m.m, vec({1, -2}));
  EXPECT_EQ(m.D.diagonal(), vec({1, 1}));
}

TEST(Moments, AdamFirstStep) {
  auto state = OptimizerState::zeros(2);
  const auto m = update_moments(state, vec({0.5, -3}), rule_of(PreconditionerKind::Adam));
  EXPECT_NEAR(m.m(0), 0.5, 1e-15);
  EXPECT_NEAR(m.m(1), -3, 1e-15);
  EXPECT_NEAR(m.D(0), 0.5 + 1e-8, 1e-15);
  EXPECT_NEAR(m.D(1), 3 + 1e-8, 1e-14);
}

TEST(Moments, AdamConstantGradientIsUnbiased) {
  auto state = OptimizerState::zeros(3);
  const ParamVector g = vec({0.7, -1.1, 2.5});
  for (int t = 0; t < 200; ++t) {
    const auto m = update_moments(state, g, rule_of(PreconditionerKind::Adam));
    EXPECT_LE((m.m - g).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((m.D.diagonal() - g.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-8 + 1e-13);
  }
}

TEST(Moments, AdagradAccumulates) {
  auto state = OptimizerState::zeros(2);
  const auto rule = rule_of(PreconditionerKind::Adagrad);
  update_moments(state, vec({1, 2}), rule);
  const auto m = update_moments(state, vec({1, 2}), rule);
  EXPECT_EQ(state.v, vec({2, 8}));
  EXPECT_DOUBLE_EQ(m.D(0), std::sqrt(2.0) + 1e-8);
  EXPECT_DOUBLE_EQ(m.D(1), std::sqrt(8.0) + 1e-8);
}

TEST(Moments, MomentumAndRmsprop) {
  auto state = OptimizerState::zeros(1);
  auto rule = rule_of(PreconditionerKind::Momentum);
  rule.mu = 0.5;
  update_moments(state, vec({1}), rule);
  EXPECT_EQ(update_moments(state, vec({1}), rule).m(0), 1.5);

  auto rs = OptimizerState::zeros(1);
  auto rms = rule_of(PreconditionerKind::Rmsprop);
  rms.beta2 = 0.9;
  const auto m = update_moments(rs, vec({2}), rms);
  EXPECT_EQ(m.m(0), 2);
  EXPECT_NEAR(m.D(0), std::sqrt(0.1 * 4 + 1e-8), 1e-15);
}

TEST(Moments, MomentumDecay) {
  auto state = OptimizerState::zeros(1);
  auto rule = rule_of(PreconditionerKind::Momentum);
  rule.mu = 0.5;
  rule.momentum_decay = 0.5;
  update_moments(state, vec({1}), rule);
  // Second step uses mu * decay^1 = 0.25.
  EXPECT_EQ(update_moments(state, vec({1}), rule).m(0), 1.25);
}

TEST(Moments, PreconditionerStaysPositive) {
  Rng rng(6);
  for (auto kind : kAllRules) {
    auto state = OptimizerState::zeros(5);
    for (int t = 0; t < 50; ++t) {
      ParamVector g = rng.normal_vector(5);
      if (t % 7 == 0) g.setZero();
      const auto m = update_moments(state, g, rule_of(kind));
      EXPECT_GE(m.D.diagonal().minCoeff(), kind == PreconditionerKind::Rmsprop ? 1e-4 : 1e-8);
    }
  }
}

TEST(Moments, RejectsBadRule) {
  auto state = OptimizerState::zeros(1);
  auto rule = rule_of(PreconditionerKind::Adam);
  rule.beta1 = 1.0;
  EXPECT_THROW(update_moments(state, vec({1}), rule), Error);
}

TEST(Schedules, NonIncreasing) {
  LrSchedule lr;
  lr.alpha0 = 0.3;
  for (auto kind : {LrSchedule::Kind::Constant, LrSchedule::Kind::InverseSqrt}) {
    lr.kind = kind;
    for (long t = 1; t < 100; ++t) EXPECT_LE(lr.at(t + 1), lr.at(t));
  }
  ProxTolSchedule tol;
  tol.kind = ProxTolSchedule::Kind::Polynomial;
  EXPECT_DOUBLE_EQ(tol.at(1), 1e-6 / 2);
  tol.power = 0.5;
  EXPECT_THROW(tol.validate(), Error);
}

TEST(ProxGen, EmptyPartitionMatchesAdaptiveBitExact) {
  const auto problem = generate_group_sparse_regression(3, 4, 3, 2, 40, 0.1);
  for (auto kind : kAllRules) {
    ProxGenConfig cfg;
    cfg.rule = rule_of(kind);
    cfg.partition = GroupPartition({}, problem.n_params());
    cfg.lr.alpha0 = 0.01;
    auto s1 = OptimizerState::zeros(problem.n_params());
    auto s2 = s1;
    ParamVector x1 = ParamVector::Zero(problem.n_params()), x2 = x1;
    for (int t = 0; t < 30; ++t) {
      x1 = proxgen_step(s1, x1, loss_and_grad(problem, x1).grad, cfg).x_next;
      x2 = adaptive_step(s2, x2, loss_and_grad(problem, x2).grad, cfg.rule, cfg.lr).x_next;
      ASSERT_EQ(x1, x2) << to_string(kind) << " step " << t;
    }
  }
}

TEST(ProxGen, QuadraticComposition) {
  ProxGenConfig cfg;
  cfg.rule = rule_of(PreconditionerKind::Sgd);
  cfg.penalty.lambda = 0.1;
  cfg.penalty.group_weight_rule = GroupWeightRule::Unit;
  cfg.partition = GroupPartition({{0, 1}}, 2);
  cfg.lr.alpha0 = 0.1;
  cfg.prox_tol.eps0 = 1e-14;
  auto state = OptimizerState::zeros(2);
  const ParamVector x0 = vec({3, 4});
  const auto out = proxgen_step(state, x0, x0, cfg);  // grad of 1/2 ||x||^2
  const ParamVector expected = (1 - 0.01 / 4.5) * vec({2.7, 3.6});
  EXPECT_LE((out.x_next - expected).norm(), 1e-14);
}

TEST(ProxGen, HugeLambdaZeroesGroupsInOneStep) {
  ProxGenConfig cfg;
  cfg.rule = rule_of(PreconditionerKind::Adam);
  cfg.penalty.lambda = 1e6;
  cfg.partition = GroupPartition::contiguous(3, 2, 7);
  auto state = OptimizerState::zeros(7);
  const ParamVector x = ParamVector::Ones(7);
  const auto out = proxgen_step(state, x, ParamVector::Ones(7), cfg);
  EXPECT_TRUE(out.x_next.head(6).isZero(0));
  EXPECT_NE(out.x_next(6), 0.0);
  EXPECT_EQ(out.prox.zero_groups, 3u);
}

TEST(ProxGen, UsesScheduledTolerance) {
  ProxGenConfig cfg;
  cfg.partition = GroupPartition::contiguous(1, 2, 2);
  cfg.prox_tol.kind = ProxTolSchedule::Kind::Polynomial;
  cfg.prox_tol.eps0 = 1e-3;
  auto state = OptimizerState::zeros(2);
  ParamVector x = vec({1, 2});
  proxgen_step(state, x, vec({0.1, 0.1}), cfg);
  const auto out = proxgen_step(state, x, vec({0.1, 0.1}), cfg);
  EXPECT_DOUBLE_EQ(out.prox_tolerance, 1e-3 / 3);
}

TEST(Subgradient, Selection) {
  PenaltyConfig pen;
  pen.lambda = 2.0;
  pen.group_weight_rule = GroupWeightRule::Unit;
  const GroupPartition p({{0, 1}, {2}}, 3);
  const auto sub = penalty_subgradient(vec({0, 0, -3}), p, pen);
  EXPECT_EQ(sub, vec({0, 0, -2}));
}

TEST(Subgradient, McpRadialDerivative) {
  PenaltyConfig pen;
  pen.kind = PenaltyKind::GroupMCP;
  pen.lambda = 1.0;
  pen.beta = 2.0;
  pen.group_weight_rule = GroupWeightRule::Unit;
  const GroupPartition p({{0, 1}}, 2);
  // d/dr MCP at r = 1: lambda - r / beta = 0.5.
  const auto sub = penalty_subgradient(vec({0.6, 0.8}), p, pen);
  EXPECT_NEAR(sub(0), 0.3, 1e-15);
  EXPECT_NEAR(sub(1), 0.4, 1e-15);
  EXPECT_TRUE(penalty_subgradient(vec({3, 4}), p, pen).isZero(0));
}

TEST(Stationarity, FixedPointIsZero) {
  const ParamVector x = vec({1, 2});
  EXPECT_EQ(stationarity_residual(x, x, x, DiagonalPreconditioner<double>::identity(2), 0.1,
                                  x),
            0.0);
}

TEST(Stationarity, UnpenalizedStepEqualsGradientNorm) {
  // With h = 0 the prox is the identity, so the witness reduces to the
  // gradient at the new point: (1 - alpha) |x| for f = x^2 / 2.
  const double alpha = 1e-3;
  const ParamVector x = vec({2.0});
  const ParamVector x_next = (1 - alpha) * x;
  const double r = stationarity_residual(x_next, x, x,
                                         DiagonalPreconditioner<double>::identity(1), alpha,
                                         x_next);
  EXPECT_NEAR(r, (1 - alpha) * 2.0, 1e-12);
}

TEST(Stationarity, ProxStepMatchesPenaltySubgradient) {
  // For an interior group the witness equals grad f(x+) + grad h(x+).
  ProxGenConfig cfg;
  cfg.rule = rule_of(PreconditionerKind::Adagrad);
  cfg.penalty.lambda = 0.05;
  cfg.partition = GroupPartition::contiguous(1, 3, 3);
  cfg.lr.alpha0 = 0.1;
  cfg.prox_tol.eps0 = 1e-14;
  auto state = OptimizerState::zeros(3);
  const ParamVector x = vec({1.0, -0.5, 2.0});
  const ParamVector g = vec({0.3, 0.2, -0.4});
  const auto out = proxgen_step(state, x, g, cfg);
  ASSERT_EQ(out.prox.interior_groups, 1u);
  const ParamVector grad_next = vec({0.7, -0.1, 0.05});
  const double r = stationarity_residual(out.x_next, x, out.m, out.D, out.alpha, grad_next);
  const ParamVector expected = grad_next + penalty_subgradient(out.x_next, cfg.partition,
                                                               cfg.penalty);
  EXPECT_NEAR(r, expected.norm(), 1e-8);
}

TEST(GroupSparsity, Counting) {
  const auto p = GroupPartition::contiguous(4, 2, 8);
  EXPECT_EQ(group_sparsity(ParamVector::Zero(8), p), 0.0);
  EXPECT_EQ(group_sparsity(ParamVector::Ones(8), p), 1.0);
  ParamVector v = ParamVector::Zero(8);
  v(7) = 1e-3;
  EXPECT_EQ(group_sparsity(v, p), 0.25);
  EXPECT_EQ(group_sparsity(v, p, 1e-2), 0.0);
}

TEST(Names, RuleRoundTrip) {
  for (auto kind : kAllRules) EXPECT_EQ(preconditioner_kind_from_string(to_string(kind)), kind);
  EXPECT_THROW(preconditioner_kind_from_string("lion"), Error);
}
