#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "groupprox/core.hpp"

namespace groupprox {

enum class PenaltyKind { MixedL1L2, GroupMCP };
enum class GroupWeightRule { SqrtSize, Unit };

struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::MixedL1L2;
  double lambda = 1.0;
  double beta = 3.0;  // GroupMCP only
  GroupWeightRule group_weight_rule = GroupWeightRule::SqrtSize;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
    }
    if (kind == PenaltyKind::GroupMCP && !(beta > 1.0)) {
      throw Error(ErrorCode::InvalidBeta, "beta must exceed 1");
    }
  }

  /// lambda_g = lambda * sqrt(|g|) under sqrt_size, lambda under unit.
  double group_lambda(std::size_t group_size) const {
    return group_weight_rule == GroupWeightRule::SqrtSize
               ? lambda * std::sqrt(static_cast<double>(group_size))
               : lambda;
  }
};

std::string_view to_string(PenaltyKind kind) noexcept;
PenaltyKind penalty_kind_from_string(std::string_view s);
std::string_view to_string(GroupWeightRule rule) noexcept;
GroupWeightRule group_weight_rule_from_string(std::string_view s);

/// Minimax concave penalty of a scalar.
template <typename Scalar>
Scalar mcp_scalar(Scalar x, Scalar beta, Scalar lambda) {
  if (!(beta > Scalar(1))) {
    throw Error(ErrorCode::InvalidBeta, "beta must exceed 1");
  }
  const Scalar a = std::abs(x);
  if (a <= beta * lambda) return lambda * a - a * a / (Scalar(2) * beta);
  return beta * lambda * lambda / Scalar(2);
}

/// Penalty of one group given its l2 norm and its lambda_g.
template <typename Scalar>
Scalar group_penalty(Scalar norm, Scalar lambda_g, const PenaltyConfig& cfg) {
  if (cfg.kind == PenaltyKind::MixedL1L2) return lambda_g * norm;
  return mcp_scalar(norm, Scalar(cfg.beta), lambda_g);
}

template <typename Derived>
typename Derived::Scalar penalty_value(const Eigen::MatrixBase<Derived>& v,
                                       const GroupPartition& p,
                                       const PenaltyConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  if (v.size() != p.n_params()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector size does not match partition");
  }
  Scalar total(0);
  for (std::size_t g = 0; g < p.size(); ++g) {
    const auto idx = p.group(g);
    total += group_penalty(group_l2_norm(v, idx),
                           Scalar(cfg.group_lambda(idx.size())), cfg);
  }
  return total;
}

/// Block soft-thresholding: [1 - tau/||x||]_+ x. Exact zeros when ||x|| <= tau.
template <typename Derived>
Vector<typename Derived::Scalar> prox_l2_unweighted(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (tau < Scalar(0)) {
    throw Error(ErrorCode::InvalidArgument, "tau must be nonnegative");
  }
  const Scalar norm = x.norm();
  if (norm <= tau) return Vector<Scalar>::Zero(x.size());
  return (Scalar(1) - tau / norm) * x;
}

/// Proximal operator of alpha * MCP(||.||_2; beta, lambda) with identity
/// metric. Requires alpha < beta.
template <typename Derived>
Vector<typename Derived::Scalar> prox_mcp_l2_unweighted(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar alpha,
    typename Derived::Scalar beta, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  if (!(beta > Scalar(1))) {
    throw Error(ErrorCode::InvalidBeta, "beta must exceed 1");
  }
  if (!(alpha < beta)) {
    throw Error(ErrorCode::StepTooLarge, "alpha must be smaller than beta");
  }
  const Scalar norm = x.norm();
  if (norm > beta * lambda) return x;
  if (norm <= alpha * lambda) return Vector<Scalar>::Zero(x.size());
  return (beta / (beta - alpha)) * (Scalar(1) - alpha * lambda / norm) * x;
}

inline std::string_view to_string(PenaltyKind kind) noexcept {
  return kind == PenaltyKind::MixedL1L2 ? "mixed_l1l2" : "group_mcp";
}

inline PenaltyKind penalty_kind_from_string(std::string_view s) {
  if (s == "mixed_l1l2") return PenaltyKind::MixedL1L2;
  if (s == "group_mcp") return PenaltyKind::GroupMCP;
  throw Error(ErrorCode::ConfigParse, "unknown penalty kind '" + std::string(s) + "'");
}

inline std::string_view to_string(GroupWeightRule rule) noexcept {
  return rule == GroupWeightRule::SqrtSize ? "sqrt_size" : "unit";
}

inline GroupWeightRule group_weight_rule_from_string(std::string_view s) {
  if (s == "sqrt_size") return GroupWeightRule::SqrtSize;
  if (s == "unit") return GroupWeightRule::Unit;
  throw Error(ErrorCode::ConfigParse,
              "unknown group weight rule '" + std::string(s) + "'");
}

}  // namespace groupprox
