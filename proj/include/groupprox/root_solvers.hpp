#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "groupprox/core.hpp"
#include "groupprox/penalties.hpp"

namespace groupprox {

enum class SolverMethod { Newton, Bisection, AdaProx };

/// What to do when the MCP step condition alpha < beta * d_min(g) fails.
enum class McpStepPolicy { Error, Clamp };

struct SolverConfig {
  SolverMethod method = SolverMethod::Newton;
  double tolerance = 1e-6;
  int max_iters = 100;
  bool fallback_to_bisection = true;
  McpStepPolicy mcp_step_policy = McpStepPolicy::Error;

  void validate() const {
    if (!(tolerance > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "solver tolerance must be positive");
    }
    if (max_iters < 1) {
      throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
    }
  }
};

struct SolverStats {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  bool used_fallback = false;
};

template <typename Scalar>
struct ThetaBracket {
  Scalar lower;
  Scalar upper;
};

/// Value and derivative of a scalar residual.
template <typename Scalar>
struct Residual {
  Scalar value;
  Scalar slope;
};

template <typename Scalar>
struct RootResult {
  Scalar theta;
  SolverStats stats;
};

std::string_view to_string(SolverMethod m) noexcept;
SolverMethod solver_method_from_string(std::string_view s);

namespace detail {

// Bisection on [lo, hi] with g(lo) >= 0 >= g(hi) (decreasing residual).
template <typename Scalar, typename Fn>
RootResult<Scalar> bisect(Fn&& residual, Scalar lo, Scalar hi,
                          const SolverConfig& cfg, int budget) {
  RootResult<Scalar> out{lo, {}};
  const Scalar tol(cfg.tolerance);
  for (int it = 1; it <= budget; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    const Scalar g = residual(mid).value;
    out.theta = mid;
    out.stats.iterations = it;
    out.stats.final_residual = static_cast<double>(g);
    if (std::abs(g) <= tol) {
      out.stats.converged = true;
      return out;
    }
    if (mid <= lo || mid >= hi) break;  // interval exhausted in floating point
    if (g > Scalar(0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return out;
}

}  // namespace detail

/// Root of a decreasing residual by midpoint bisection inside `bracket`.
/// Convergence is declared on |G| <= tolerance.
template <typename Scalar, typename Fn>
RootResult<Scalar> bisection_solve(Fn&& residual, ThetaBracket<Scalar> bracket,
                                   const SolverConfig& cfg) {
  cfg.validate();
  const Scalar tol(cfg.tolerance);
  RootResult<Scalar> out{bracket.lower, {}};
  const Scalar g_lo = residual(bracket.lower).value;
  out.stats.final_residual = static_cast<double>(g_lo);
  if (std::abs(g_lo) <= tol || !(bracket.upper > bracket.lower)) {
    out.stats.converged = std::abs(g_lo) <= tol;
    return out;
  }
  const Scalar g_hi = residual(bracket.upper).value;
  if (std::abs(g_hi) <= tol) {
    out.theta = bracket.upper;
    out.stats.final_residual = static_cast<double>(g_hi);
    out.stats.converged = true;
    return out;
  }
  if (g_lo * g_hi > Scalar(0)) {
    throw Error(ErrorCode::BadBracket, "residual has the same sign at both ends");
  }
  // Orient so that the residual is nonnegative on the left end.
  if (g_lo < Scalar(0)) {
    auto flipped = [&](Scalar t) {
      auto r = residual(t);
      return Residual<Scalar>{-r.value, -r.slope};
    };
    out = detail::bisect(flipped, bracket.lower, bracket.upper, cfg, cfg.max_iters);
    out.stats.final_residual = -out.stats.final_residual;
    return out;
  }
  return detail::bisect(residual, bracket.lower, bracket.upper, cfg, cfg.max_iters);
}

/// Safeguarded Newton-Raphson for a convex decreasing residual, started at
/// bracket.lower. Steps leaving the current bracket are replaced by its
/// midpoint. After max_iters without |G| <= tolerance, falls back to
/// bisection on the remaining bracket when enabled. If `trace` is non-null,
/// every iterate (including the start point) is appended to it.
template <typename Scalar, typename Fn>
RootResult<Scalar> newton_solve(Fn&& residual, ThetaBracket<Scalar> bracket,
                                const SolverConfig& cfg,
                                std::vector<Scalar>* trace = nullptr) {
  cfg.validate();
  const Scalar tol(cfg.tolerance);
  Scalar lo = bracket.lower;
  Scalar hi = bracket.upper;
  Scalar theta = lo;
  if (trace) trace->push_back(theta);

  RootResult<Scalar> out{theta, {}};
  Residual<Scalar> r = residual(theta);
  out.stats.final_residual = static_cast<double>(r.value);
  if (std::abs(r.value) <= tol || !(hi > lo)) {
    out.stats.converged = std::abs(r.value) <= tol;
    return out;
  }

  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (r.value > Scalar(0)) {
      lo = std::max(lo, theta);
    } else {
      hi = std::min(hi, theta);
    }
    Scalar next = theta - r.value / r.slope;
    if (!std::isfinite(next) || next < lo || next > hi) {
      next = lo + (hi - lo) / Scalar(2);
    }
    theta = next;
    if (trace) trace->push_back(theta);
    r = residual(theta);
    out.theta = theta;
    out.stats.iterations = it;
    out.stats.final_residual = static_cast<double>(r.value);
    if (std::abs(r.value) <= tol) {
      out.stats.converged = true;
      return out;
    }
  }

  if (!cfg.fallback_to_bisection) return out;
  if (r.value > Scalar(0)) {
    lo = std::max(lo, theta);
  } else {
    hi = std::min(hi, theta);
  }
  auto fallback = detail::bisect(residual, lo, hi, cfg, cfg.max_iters);
  fallback.stats.iterations += out.stats.iterations;
  fallback.stats.used_fallback = true;
  if (trace) trace->push_back(fallback.theta);
  return fallback;
}

/// Proximal-gradient fixed point for the weighted prox subproblem, using the
/// unweighted prox of the group penalty with step 1/d_max:
///   z <- prox_{alpha/d_max h}(z - D (z - x) / d_max),  z^0 = x.
/// Stops when ||z^{k+1} - z^k|| <= tolerance; `iterations` is the index of
/// the accepted iterate, capped at max_iters.
template <typename DerivedX, typename DerivedD>
std::pair<Vector<typename DerivedX::Scalar>, SolverStats> adaprox_solve(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedD>& d,
    const PenaltyConfig& penalty, typename DerivedX::Scalar lambda_g,
    typename DerivedX::Scalar alpha, const SolverConfig& cfg) {
  using Scalar = typename DerivedX::Scalar;
  cfg.validate();
  if (x.size() != d.size()) {
    throw Error(ErrorCode::DimensionMismatch, "x and d sizes differ");
  }
  if (!(d.minCoeff() > Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "preconditioner must be positive");
  }
  const Scalar d_max = d.maxCoeff();
  const Scalar step = alpha / d_max;
  auto unweighted = [&](const Vector<Scalar>& y) {
    if (penalty.kind == PenaltyKind::MixedL1L2) {
      return prox_l2_unweighted(y, step * lambda_g);
    }
    return prox_mcp_l2_unweighted(y, step, Scalar(penalty.beta), lambda_g);
  };

  SolverStats stats;
  Vector<Scalar> z = x;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Vector<Scalar> next =
        unweighted(z - (d.cwiseProduct(z - x)) / d_max);
    const Scalar change = (next - z).norm();
    stats.final_residual = static_cast<double>(change);
    if (change <= Scalar(cfg.tolerance)) {
      stats.iterations = it - 1;
      stats.converged = true;
      return {std::move(next), stats};
    }
    z = std::move(next);
    stats.iterations = it;
  }
  return {std::move(z), stats};
}

inline std::string_view to_string(SolverMethod m) noexcept {
  switch (m) {
    case SolverMethod::Newton: return "newton";
    case SolverMethod::Bisection: return "bisection";
    case SolverMethod::AdaProx: return "adaprox";
  }
  return "unknown";
}

inline SolverMethod solver_method_from_string(std::string_view s) {
  if (s == "newton") return SolverMethod::Newton;
  if (s == "bisection") return SolverMethod::Bisection;
  if (s == "adaprox") return SolverMethod::AdaProx;
  throw Error(ErrorCode::ConfigParse, "unknown solver '" + std::string(s) + "'");
}

}  // namespace groupprox
