#pragma once

// Weighted proximal operators  argmin_z 1/2 ||z - x||_D^2 + alpha h(z)  for
// h = lambda ||.||_2 and h = MCP(||.||_2; beta, lambda), with D positive
// diagonal. In the nontrivial branch the minimizer is parameterized by a
// scalar theta = ||z||_2, the unique positive root of a convex decreasing
// residual G, which is bracketed in closed form and solved numerically.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "groupprox/core.hpp"
#include "groupprox/penalties.hpp"
#include "groupprox/root_solvers.hpp"

namespace groupprox {

enum class ProxBranch { Zero, Interior, Identity };

template <typename Scalar>
struct WeightedProxOutcome {
  Vector<Scalar> z;
  ProxBranch branch = ProxBranch::Zero;
  Scalar theta_star = std::numeric_limits<Scalar>::quiet_NaN();
  SolverStats stats;
  Scalar effective_alpha = Scalar(0);
  bool alpha_clamped = false;
};

namespace detail {

template <typename DerivedX, typename DerivedD>
void check_group_inputs(const Eigen::MatrixBase<DerivedX>& x,
                        const Eigen::MatrixBase<DerivedD>& d) {
  if (x.size() != d.size()) {
    throw Error(ErrorCode::DimensionMismatch, "x and d sizes differ");
  }
  if (x.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "empty group");
  }
  if (!(d.minCoeff() > 0)) {
    throw Error(ErrorCode::InvalidArgument, "preconditioner must be positive");
  }
}

template <typename DerivedX, typename DerivedD>
Residual<typename DerivedX::Scalar> l2_residual(
    typename DerivedX::Scalar theta, const Eigen::MatrixBase<DerivedX>& x,
    const Eigen::MatrixBase<DerivedD>& d, typename DerivedX::Scalar tau) {
  using Scalar = typename DerivedX::Scalar;
  Scalar g(0), dg(0);
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar denom = d(i) * theta + tau;
    const Scalar ratio = d(i) * x(i) / denom;
    g += ratio * ratio;
    dg -= Scalar(2) * d(i) * ratio * ratio / denom;
  }
  return {g - Scalar(1), dg};
}

template <typename DerivedX, typename DerivedD>
Residual<typename DerivedX::Scalar> mcp_residual(
    typename DerivedX::Scalar theta, const Eigen::MatrixBase<DerivedX>& x,
    const Eigen::MatrixBase<DerivedD>& d, typename DerivedX::Scalar alpha,
    typename DerivedX::Scalar beta, typename DerivedX::Scalar lambda) {
  using Scalar = typename DerivedX::Scalar;
  const Scalar offset = alpha * beta * lambda;
  Scalar g(0), dg(0);
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar slope = d(i) * beta - alpha;
    const Scalar denom = slope * theta + offset;
    const Scalar ratio = d(i) * x(i) / denom;
    g += ratio * ratio;
    dg -= Scalar(2) * slope * ratio * ratio / denom;
  }
  return {beta * beta * g - Scalar(1), beta * beta * dg};
}

template <typename DerivedD>
void check_mcp_step(const Eigen::MatrixBase<DerivedD>& d,
                    typename DerivedD::Scalar alpha,
                    typename DerivedD::Scalar beta) {
  if (!(alpha < beta * d.minCoeff())) {
    throw Error(ErrorCode::PreconditionViolated,
                "step alpha must be smaller than beta * d_min");
  }
}

}  // namespace detail

/// G(theta) = sum_i (d_i x_i / (d_i theta + tau))^2 - 1 and its derivative.
template <typename DerivedX, typename DerivedD>
Residual<typename DerivedX::Scalar> theta_residual_l2(
    typename DerivedX::Scalar theta, const Eigen::MatrixBase<DerivedX>& x,
    const Eigen::MatrixBase<DerivedD>& d, typename DerivedX::Scalar tau) {
  detail::check_group_inputs(x, d);
  return detail::l2_residual(theta, x, d, tau);
}

/// G(theta) = beta^2 sum_i (d_i x_i / ((d_i beta - alpha) theta +
/// alpha beta lambda))^2 - 1 and its derivative. Requires alpha < beta d_min.
template <typename DerivedX, typename DerivedD>
Residual<typename DerivedX::Scalar> theta_residual_mcp(
    typename DerivedX::Scalar theta, const Eigen::MatrixBase<DerivedX>& x,
    const Eigen::MatrixBase<DerivedD>& d, typename DerivedX::Scalar alpha,
    typename DerivedX::Scalar beta, typename DerivedX::Scalar lambda) {
  detail::check_group_inputs(x, d);
  detail::check_mcp_step(d, alpha, beta);
  return detail::mcp_residual(theta, x, d, alpha, beta, lambda);
}

/// [(||Dx|| - tau) / d_max, (||Dx|| - tau) / d_min]
template <typename DerivedX, typename DerivedD>
ThetaBracket<typename DerivedX::Scalar> theta_bounds_l2(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedD>& d,
    typename DerivedX::Scalar tau) {
  detail::check_group_inputs(x, d);
  const auto excess = d.cwiseProduct(x).norm() - tau;
  if (!(excess > 0)) {
    throw Error(ErrorCode::NotInterior, "||Dx|| does not exceed alpha * lambda");
  }
  return {excess / d.maxCoeff(), excess / d.minCoeff()};
}

/// [beta (||Dx|| - alpha lambda) / (d_max beta - alpha),
///  beta (||Dx|| - alpha lambda) / (d_min beta - alpha)]
template <typename DerivedX, typename DerivedD>
ThetaBracket<typename DerivedX::Scalar> theta_bounds_mcp(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedD>& d,
    typename DerivedX::Scalar alpha, typename DerivedX::Scalar beta,
    typename DerivedX::Scalar lambda) {
  detail::check_group_inputs(x, d);
  detail::check_mcp_step(d, alpha, beta);
  const auto excess = d.cwiseProduct(x).norm() - alpha * lambda;
  if (!(excess > 0) || x.norm() > beta * lambda) {
    throw Error(ErrorCode::NotInterior,
                "need ||x|| <= beta * lambda and ||Dx|| > alpha * lambda");
  }
  return {beta * excess / (d.maxCoeff() * beta - alpha),
          beta * excess / (d.minCoeff() * beta - alpha)};
}

/// z_i = d_i theta x_i / (d_i theta + tau)
template <typename DerivedX, typename DerivedD>
Vector<typename DerivedX::Scalar> l2_prox_from_theta(
    typename DerivedX::Scalar theta, const Eigen::MatrixBase<DerivedX>& x,
    const Eigen::MatrixBase<DerivedD>& d, typename DerivedX::Scalar tau) {
  Vector<typename DerivedX::Scalar> z(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    z(i) = d(i) * theta * x(i) / (d(i) * theta + tau);
  }
  return z;
}

/// z_i = d_i beta theta x_i / ((d_i beta - alpha) theta + alpha beta lambda)
template <typename DerivedX, typename DerivedD>
Vector<typename DerivedX::Scalar> mcp_prox_from_theta(
    typename DerivedX::Scalar theta, const Eigen::MatrixBase<DerivedX>& x,
    const Eigen::MatrixBase<DerivedD>& d, typename DerivedX::Scalar alpha,
    typename DerivedX::Scalar beta, typename DerivedX::Scalar lambda) {
  using Scalar = typename DerivedX::Scalar;
  Vector<Scalar> z(x.size());
  const Scalar offset = alpha * beta * lambda;
  for (Index i = 0; i < x.size(); ++i) {
    z(i) = d(i) * beta * theta * x(i) / ((d(i) * beta - alpha) * theta + offset);
  }
  return z;
}

namespace detail {

template <typename Scalar, typename Fn>
RootResult<Scalar> solve_theta(Fn&& residual, ThetaBracket<Scalar> bracket,
                               const SolverConfig& solver) {
  switch (solver.method) {
    case SolverMethod::Newton:
      return newton_solve(residual, bracket, solver);
    case SolverMethod::Bisection:
      return bisection_solve(residual, bracket, solver);
    case SolverMethod::AdaProx:
      break;
  }
  throw Error(ErrorCode::InvalidArgument,
              "root solve requires the newton or bisection method");
}

template <typename Scalar>
void require_converged(const RootResult<Scalar>& r) {
  if (!r.stats.converged) {
    throw Error(ErrorCode::SolverFailed,
                "theta solve did not converge after " +
                    std::to_string(r.stats.iterations) + " iterations (|G| = " +
                    std::to_string(std::abs(r.stats.final_residual)) + ")");
  }
}

}  // namespace detail

/// Weighted proximal operator of alpha * lambda_g * ||.||_2.
template <typename DerivedX, typename DerivedD>
WeightedProxOutcome<typename DerivedX::Scalar> weighted_prox_l2(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedD>& d,
    typename DerivedX::Scalar alpha, typename DerivedX::Scalar lambda_g,
    const SolverConfig& solver) {
  using Scalar = typename DerivedX::Scalar;
  detail::check_group_inputs(x, d);
  if (!(alpha > Scalar(0)) || !(lambda_g > Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "alpha and lambda must be positive");
  }
  WeightedProxOutcome<Scalar> out;
  out.effective_alpha = alpha;
  const Scalar tau = alpha * lambda_g;
  if (x.isZero(Scalar(0)) || !(d.cwiseProduct(x).norm() > tau)) {
    out.z = Vector<Scalar>::Zero(x.size());
    out.branch = ProxBranch::Zero;
    out.stats.converged = true;
    return out;
  }
  const auto bracket = theta_bounds_l2(x, d, tau);
  auto residual = [&](Scalar t) { return detail::l2_residual(t, x, d, tau); };
  const auto root = detail::solve_theta(residual, bracket, solver);
  detail::require_converged(root);
  out.z = l2_prox_from_theta(root.theta, x, d, tau);
  out.branch = ProxBranch::Interior;
  out.theta_star = root.theta;
  out.stats = root.stats;
  return out;
}

/// Weighted proximal operator of alpha * MCP(||.||_2; beta, lambda_g).
/// Requires alpha < beta * d_min unless the solver's MCP step policy clamps
/// the step to 0.99 * beta * d_min.
template <typename DerivedX, typename DerivedD>
WeightedProxOutcome<typename DerivedX::Scalar> weighted_prox_mcp_l2(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedD>& d,
    typename DerivedX::Scalar alpha, typename DerivedX::Scalar beta,
    typename DerivedX::Scalar lambda_g, const SolverConfig& solver) {
  using Scalar = typename DerivedX::Scalar;
  detail::check_group_inputs(x, d);
  if (!(beta > Scalar(1))) {
    throw Error(ErrorCode::InvalidBeta, "beta must exceed 1");
  }
  if (!(alpha > Scalar(0)) || !(lambda_g > Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "alpha and lambda must be positive");
  }
  WeightedProxOutcome<Scalar> out;
  out.effective_alpha = alpha;
  const Scalar step_limit = beta * d.minCoeff();
  if (!(alpha < step_limit)) {
    if (solver.mcp_step_policy == McpStepPolicy::Error) {
      detail::check_mcp_step(d, alpha, beta);
    }
    out.effective_alpha = Scalar(0.99) * step_limit;
    out.alpha_clamped = true;
  }
  const Scalar a = out.effective_alpha;

  if (x.norm() > beta * lambda_g) {
    out.z = x;
    out.branch = ProxBranch::Identity;
    out.stats.converged = true;
    return out;
  }
  if (x.isZero(Scalar(0)) || !(d.cwiseProduct(x).norm() > a * lambda_g)) {
    out.z = Vector<Scalar>::Zero(x.size());
    out.branch = ProxBranch::Zero;
    out.stats.converged = true;
    return out;
  }
  const auto bracket = theta_bounds_mcp(x, d, a, beta, lambda_g);
  auto residual = [&](Scalar t) {
    return detail::mcp_residual(t, x, d, a, beta, lambda_g);
  };
  const auto root = detail::solve_theta(residual, bracket, solver);
  detail::require_converged(root);
  out.z = mcp_prox_from_theta(root.theta, x, d, a, beta, lambda_g);
  out.branch = ProxBranch::Interior;
  out.theta_star = root.theta;
  out.stats = root.stats;
  return out;
}

/// Dispatch on the penalty kind for one group.
template <typename DerivedX, typename DerivedD>
WeightedProxOutcome<typename DerivedX::Scalar> weighted_prox_group(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedD>& d,
    const PenaltyConfig& penalty, typename DerivedX::Scalar lambda_g,
    typename DerivedX::Scalar alpha, const SolverConfig& solver) {
  using Scalar = typename DerivedX::Scalar;
  if (solver.method == SolverMethod::AdaProx) {
    detail::check_group_inputs(x, d);
    WeightedProxOutcome<Scalar> out;
    out.effective_alpha = alpha;
    if (penalty.kind == PenaltyKind::GroupMCP) {
      const Scalar step_limit = Scalar(penalty.beta) * d.minCoeff();
      if (!(alpha < step_limit)) {
        if (solver.mcp_step_policy == McpStepPolicy::Error) {
          detail::check_mcp_step(d, alpha, Scalar(penalty.beta));
        }
        out.effective_alpha = Scalar(0.99) * step_limit;
        out.alpha_clamped = true;
      }
    }
    auto [z, stats] =
        adaprox_solve(x, d, penalty, lambda_g, out.effective_alpha, solver);
    out.branch = z.isZero(Scalar(0)) ? ProxBranch::Zero : ProxBranch::Interior;
    if (out.branch == ProxBranch::Interior) out.theta_star = z.norm();
    out.z = std::move(z);
    out.stats = stats;
    return out;
  }
  if (penalty.kind == PenaltyKind::MixedL1L2) {
    return weighted_prox_l2(x, d, alpha, lambda_g, solver);
  }
  return weighted_prox_mcp_l2(x, d, alpha, Scalar(penalty.beta), lambda_g, solver);
}

/// Aggregate statistics of one full (all-groups) weighted prox evaluation.
struct ProxSummary {
  std::size_t n_groups = 0;
  std::size_t zero_groups = 0;
  std::size_t interior_groups = 0;
  std::size_t identity_groups = 0;
  long total_iterations = 0;
  std::size_t fallbacks = 0;
  std::size_t clamped = 0;
  std::size_t unconverged = 0;

  /// Solver iterations normalized by the total number of groups.
  double iterations_per_group() const {
    return n_groups == 0 ? 0.0
                         : static_cast<double>(total_iterations) /
                               static_cast<double>(n_groups);
  }
};

template <typename Scalar>
struct FullProxResult {
  Vector<Scalar> x;
  ProxSummary summary;
};

/// Applies the per-group weighted prox to every group of `p`; coordinates
/// outside all groups pass through unchanged. Groups are processed in
/// partition order. Failures are collected over all groups and rethrown as
/// one error naming the first failing group.
template <typename Derived>
FullProxResult<typename Derived::Scalar> weighted_prox_full(
    const Eigen::MatrixBase<Derived>& v, const GroupPartition& p,
    const PenaltyConfig& cfg,
    const DiagonalPreconditioner<typename Derived::Scalar>& D,
    typename Derived::Scalar alpha, const SolverConfig& solver) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  if (v.size() != p.n_params() || D.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector, partition and preconditioner sizes differ");
  }
  FullProxResult<Scalar> out{v, {}};
  out.summary.n_groups = p.size();

  std::string failures;
  std::optional<ErrorCode> first_code;
  std::optional<std::size_t> first_group;
  for (std::size_t g = 0; g < p.size(); ++g) {
    const auto idx = p.group(g);
    const Vector<Scalar> xg = gather(v, idx);
    const Vector<Scalar> dg = gather(D.diagonal(), idx);
    try {
      auto r = weighted_prox_group(xg, dg, cfg, Scalar(cfg.group_lambda(idx.size())),
                                   alpha, solver);
      scatter(r.z, idx, out.x);
      switch (r.branch) {
        case ProxBranch::Zero: ++out.summary.zero_groups; break;
        case ProxBranch::Interior: ++out.summary.interior_groups; break;
        case ProxBranch::Identity: ++out.summary.identity_groups; break;
      }
      out.summary.total_iterations += r.stats.iterations;
      if (r.stats.used_fallback) ++out.summary.fallbacks;
      if (r.alpha_clamped) ++out.summary.clamped;
      if (!r.stats.converged) ++out.summary.unconverged;
    } catch (const Error& e) {
      if (!first_code) {
        first_code = e.code();
        first_group = g;
      }
      if (!failures.empty()) failures += "; ";
      failures += "group " + std::to_string(g) + ": " + e.message();
    }
  }
  if (first_code) throw Error(*first_code, failures, first_group);
  return out;
}

}  // namespace groupprox
