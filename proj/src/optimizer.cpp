#include "groupprox/optimizer.hpp"

#include <cmath>
#include <string>

namespace groupprox {

void PreconditionerRule::validate() const {
  auto unit = [](double c) { return c >= 0.0 && c < 1.0; };
  if (!unit(mu) || !unit(beta1) || !unit(beta2)) {
    throw Error(ErrorCode::InvalidArgument,
                "mu, beta1 and beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  }
  if (!(momentum_decay > 0.0 && momentum_decay <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "momentum_decay must lie in (0, 1]");
  }
}

OptimizerState OptimizerState::zeros(Index n) {
  OptimizerState s;
  s.m_hat = ParamVector::Zero(n);
  s.m = ParamVector::Zero(n);
  s.v = ParamVector::Zero(n);
  return s;
}

double LrSchedule::at(long t) const {
  if (kind == Kind::Constant) return alpha0;
  return alpha0 / std::sqrt(static_cast<double>(std::max(t, 1L)));
}

double ProxTolSchedule::at(long t) const {
  if (kind == Kind::Constant) return eps0;
  return eps0 / std::pow(static_cast<double>(t + 1), power);
}

void ProxTolSchedule::validate() const {
  if (!(eps0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "prox tolerance must be positive");
  }
  if (kind == Kind::Polynomial && !(power > 0.5)) {
    throw Error(ErrorCode::InvalidArgument,
                "polynomial tolerance schedule needs power > 0.5");
  }
}

Moments update_moments(OptimizerState& state, const ParamVector& g,
                       const PreconditionerRule& rule) {
  rule.validate();
  const Index n = g.size();
  if (state.m.size() != n) state = OptimizerState::zeros(n);
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double decay = std::pow(rule.momentum_decay, t - 1.0);

  switch (rule.kind) {
    case PreconditionerKind::Sgd:
      state.m = g;
      return {state.m, DiagonalPreconditioner<double>::identity(n)};

    case PreconditionerKind::Momentum:
      state.m_hat = rule.mu * decay * state.m_hat + g;
      state.m = state.m_hat;
      return {state.m, DiagonalPreconditioner<double>::identity(n)};

    case PreconditionerKind::Adagrad: {
      state.m = g;
      state.v += g.cwiseAbs2();
      ParamVector d = state.v.cwiseSqrt().array() + rule.eps;
      return {state.m, DiagonalPreconditioner<double>(std::move(d))};
    }

    case PreconditionerKind::Rmsprop: {
      state.m = g;
      state.v = rule.beta2 * state.v + (1.0 - rule.beta2) * g.cwiseAbs2();
      ParamVector d = (state.v.array() + rule.eps).sqrt();
      return {state.m, DiagonalPreconditioner<double>(std::move(d))};
    }

    case PreconditionerKind::Adam: {
      const double b1 = rule.beta1 * decay;
      state.m_hat = b1 * state.m_hat + (1.0 - b1) * g;
      state.beta1_product *= b1;
      state.m = state.m_hat / (1.0 - state.beta1_product);
      state.v = rule.beta2 * state.v + (1.0 - rule.beta2) * g.cwiseAbs2();
      const double correction = 1.0 - std::pow(rule.beta2, t);
      ParamVector d = (state.v / correction).cwiseSqrt().array() + rule.eps;
      return {state.m, DiagonalPreconditioner<double>(std::move(d))};
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown preconditioner rule");
}

ParamVector preconditioned_step(const ParamVector& x, const Moments& moments,
                                double alpha) {
  return x - alpha * moments.m.cwiseQuotient(moments.D.diagonal());
}

StepResult adaptive_step(OptimizerState& state, const ParamVector& x,
                         const ParamVector& g, const PreconditionerRule& rule,
                         const LrSchedule& lr) {
  if (x.size() != g.size()) {
    throw Error(ErrorCode::DimensionMismatch, "x and gradient sizes differ");
  }
  auto moments = update_moments(state, g, rule);
  state.alpha = lr.at(state.t);
  StepResult out;
  out.x_next = preconditioned_step(x, moments, state.alpha);
  out.m = std::move(moments.m);
  out.D = std::move(moments.D);
  out.alpha = state.alpha;
  return out;
}

StepResult proxgen_step(OptimizerState& state, const ParamVector& x,
                        const ParamVector& g, const ProxGenConfig& cfg) {
  if (x.size() != g.size() || x.size() != cfg.partition.n_params()) {
    throw Error(ErrorCode::DimensionMismatch,
                "x, gradient and partition sizes differ");
  }
  cfg.prox_tol.validate();
  auto moments = update_moments(state, g, cfg.rule);
  state.alpha = cfg.lr.at(state.t);

  StepResult out;
  out.alpha = state.alpha;
  out.prox_tolerance = cfg.prox_tol.at(state.t);
  const ParamVector x_hat = preconditioned_step(x, moments, state.alpha);

  SolverConfig solver = cfg.solver;
  solver.tolerance = out.prox_tolerance;
  auto prox = weighted_prox_full(x_hat, cfg.partition, cfg.penalty, moments.D,
                                 state.alpha, solver);
  out.x_next = std::move(prox.x);
  out.prox = prox.summary;
  out.m = std::move(moments.m);
  out.D = std::move(moments.D);
  return out;
}

ParamVector penalty_subgradient(const ParamVector& x, const GroupPartition& p,
                                const PenaltyConfig& penalty) {
  penalty.validate();
  ParamVector sub = ParamVector::Zero(x.size());
  for (std::size_t g = 0; g < p.size(); ++g) {
    const auto idx = p.group(g);
    const double norm = group_l2_norm(x, idx);
    if (norm == 0.0) continue;
    const double lambda_g = penalty.group_lambda(idx.size());
    double radial = lambda_g;
    if (penalty.kind == PenaltyKind::GroupMCP) {
      radial = std::max(0.0, lambda_g - norm / penalty.beta);
    }
    for (Index i : idx) sub(i) = radial * x(i) / norm;
  }
  return sub;
}

StepResult subgradient_step(OptimizerState& state, const ParamVector& x,
                            const ParamVector& g, const ProxGenConfig& cfg) {
  const ParamVector total = g + penalty_subgradient(x, cfg.partition, cfg.penalty);
  return adaptive_step(state, x, total, cfg.rule, cfg.lr);
}

double stationarity_residual(const ParamVector& x_next, const ParamVector& x_t,
                             const ParamVector& m_t,
                             const DiagonalPreconditioner<double>& D_t,
                             double alpha_t, const ParamVector& grad_next) {
  if (!(alpha_t > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  }
  const ParamVector r =
      grad_next - m_t - D_t.diagonal().cwiseProduct(x_next - x_t) / alpha_t;
  return r.norm();
}

double group_sparsity(const ParamVector& v, const GroupPartition& p,
                      double zero_tol) {
  if (p.empty()) return 0.0;
  std::size_t nonzero = 0;
  for (std::size_t g = 0; g < p.size(); ++g) {
    if (group_l2_norm(v, p.group(g)) > zero_tol) ++nonzero;
  }
  return static_cast<double>(nonzero) / static_cast<double>(p.size());
}

std::string_view to_string(PreconditionerKind kind) noexcept {
  switch (kind) {
    case PreconditionerKind::Sgd: return "sgd";
    case PreconditionerKind::Momentum: return "momentum";
    case PreconditionerKind::Adagrad: return "adagrad";
    case PreconditionerKind::Rmsprop: return "rmsprop";
    case PreconditionerKind::Adam: return "adam";
  }
  return "unknown";
}

PreconditionerKind preconditioner_kind_from_string(std::string_view s) {
  if (s == "sgd") return PreconditionerKind::Sgd;
  if (s == "momentum") return PreconditionerKind::Momentum;
  if (s == "adagrad") return PreconditionerKind::Adagrad;
  if (s == "rmsprop") return PreconditionerKind::Rmsprop;
  if (s == "adam") return PreconditionerKind::Adam;
  throw Error(ErrorCode::ConfigParse,
              "unknown preconditioner '" + std::string(s) + "'");
}

}  // namespace groupprox
