#pragma once

#include <string_view>

#include "groupprox/core.hpp"
#include "groupprox/penalties.hpp"
#include "groupprox/root_solvers.hpp"
#include "groupprox/weighted_prox.hpp"

namespace groupprox {

enum class PreconditionerKind { Sgd, Momentum, Adagrad, Rmsprop, Adam };

/// Mean-estimate and preconditioner recurrences of the standard adaptive
/// optimizers. `beta2` doubles as the RMSprop decay. The first-moment
/// coefficient at step t is beta1 * momentum_decay^(t-1) (mu for Momentum);
/// momentum_decay = 1 gives the usual constant coefficient.
struct PreconditionerRule {
  PreconditionerKind kind = PreconditionerKind::Adam;
  double mu = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum_decay = 1.0;

  void validate() const;
};

struct OptimizerState {
  ParamVector m_hat;
  ParamVector m;
  ParamVector v;
  long t = 0;
  double alpha = 0.0;
  double beta1_product = 1.0;

  static OptimizerState zeros(Index n);
};

struct LrSchedule {
  enum class Kind { Constant, InverseSqrt };
  Kind kind = Kind::Constant;
  double alpha0 = 1e-2;

  /// Step size of the t-th update (t >= 1): alpha0 or alpha0 / sqrt(t).
  double at(long t) const;
};

struct ProxTolSchedule {
  enum class Kind { Constant, Polynomial };
  Kind kind = Kind::Constant;
  double eps0 = 1e-6;
  double power = 1.0;

  /// eps0, or eps0 / (t + 1)^power for the t-th update. power > 0.5 keeps
  /// the squared tolerances summable.
  double at(long t) const;
  void validate() const;
};

enum class UpdateMode { Proximal, Subgradient };

struct ProxGenConfig {
  PreconditionerRule rule;
  PenaltyConfig penalty;
  GroupPartition partition;
  SolverConfig solver;
  LrSchedule lr;
  UpdateMode mode = UpdateMode::Proximal;
  ProxTolSchedule prox_tol;
};

struct Moments {
  ParamVector m;
  DiagonalPreconditioner<double> D;
};

struct StepResult {
  ParamVector x_next;
  ParamVector m;
  DiagonalPreconditioner<double> D;
  double alpha = 0.0;
  double prox_tolerance = 0.0;
  ProxSummary prox;
};

/// Advances the state by one step with gradient g and returns m_t and D_t.
Moments update_moments(OptimizerState& state, const ParamVector& g,
                       const PreconditionerRule& rule);

/// x_t - alpha_t D_t^{-1} m_t
ParamVector preconditioned_step(const ParamVector& x, const Moments& moments,
                                double alpha);

/// Plain adaptive update (no penalty handling).
StepResult adaptive_step(OptimizerState& state, const ParamVector& x,
                         const ParamVector& g, const PreconditionerRule& rule,
                         const LrSchedule& lr);

/// x_{t+1} = prox^{D_t}_{alpha_t h}(x_t - alpha_t D_t^{-1} m_t), with the
/// prox solved to tolerance prox_tol.at(t).
StepResult proxgen_step(OptimizerState& state, const ParamVector& x,
                        const ParamVector& g, const ProxGenConfig& cfg);

/// One element of the penalty's (radial) subdifferential per group; zero is
/// chosen at x_g = 0.
ParamVector penalty_subgradient(const ParamVector& x, const GroupPartition& p,
                                const PenaltyConfig& penalty);

/// Adds the penalty subgradient to g and takes the plain adaptive step.
StepResult subgradient_step(OptimizerState& state, const ParamVector& x,
                            const ParamVector& g, const ProxGenConfig& cfg);

/// || grad f(x_next) - m_t - D_t (x_next - x_t) / alpha_t ||_2
double stationarity_residual(const ParamVector& x_next, const ParamVector& x_t,
                             const ParamVector& m_t,
                             const DiagonalPreconditioner<double>& D_t,
                             double alpha_t, const ParamVector& grad_next);

/// Fraction of groups whose l2 norm exceeds zero_tol.
double group_sparsity(const ParamVector& v, const GroupPartition& p,
                      double zero_tol = 0.0);

std::string_view to_string(PreconditionerKind kind) noexcept;
PreconditionerKind preconditioner_kind_from_string(std::string_view s);

}  // namespace groupprox
