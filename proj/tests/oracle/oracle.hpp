#pragma once

// Brute-force reference implementations. Nothing here calls into the
// theta equations, brackets or root solvers of the library: the weighted prox
// is found by minimizing its objective directly over z.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "groupprox/core.hpp"
#include "groupprox/penalties.hpp"

namespace groupprox::oracle {

struct GroupPenalty {
  PenaltyKind kind = PenaltyKind::MixedL1L2;
  double lambda = 1.0;  // lambda_g
  double beta = 3.0;
};

/// h(z) for a single group.
double penalty_of(const Vector<double>& z, const GroupPenalty& pen);

/// 1/2 sum_i d_i (z_i - x_i)^2 + alpha h(z)
double objective_value(const Vector<double>& z, const Vector<double>& x,
                       const Vector<double>& d, double alpha,
                       const GroupPenalty& pen);

struct GridOptions {
  int points = 201;  // per axis and round
  int rounds = 3;    // zoom passes
  int window = 5;    // zoomed half-width, in spacings of the previous pass
};

struct OracleResult {
  Vector<double> z;
  double objective = 0.0;
};

/// Dense grid over the box [-1.5 |x_i|, 1.5 |x_i|], refined by zooming
/// around the best point. n <= 3 only.
OracleResult grid_minimize(const Vector<double>& x, const Vector<double>& d,
                           double alpha, const GroupPenalty& pen,
                           const GridOptions& options = {});

/// Damped Newton with the full Hessian and backtracking on the objective,
/// started from `start`. Returns `start` unchanged if it is the origin.
OracleResult newton_refine(const Vector<double>& start, const Vector<double>& x,
                           const Vector<double>& d, double alpha,
                           const GroupPenalty& pen, int max_iters = 200);

/// Accelerated proximal gradient on the prox subproblem (step 1/d_max,
/// adaptive momentum restart), from x and from restarts - 1 random points;
/// returns the best end point. Any n.
OracleResult descent_minimize(const Vector<double>& x, const Vector<double>& d,
                              double alpha, const GroupPenalty& pen,
                              std::uint64_t seed, int restarts = 50,
                              double tol = 1e-12, int max_iters = 100000);

/// Best of {0, x, grid, Newton from grid best, Newton from x}.
OracleResult brute_force_weighted_prox(const Vector<double>& x,
                                       const Vector<double>& d, double alpha,
                                       const GroupPenalty& pen,
                                       const GridOptions& options = {});

/// Plain bisection on a sign change; used to freeze reference roots.
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double width = 1e-15);

/// Minimizer of 1/2 (r - s)^2 + alpha p(r) over r >= 0 by a dense scan and
/// golden-section polish; p is the penalty on the radius.
double radial_scan_minimize(double s, double alpha,
                            const std::function<double(double)>& p, double r_max,
                            int points = 200001);

struct ProxCheckOptions {
  int instances = 500;
  std::uint64_t seed = 7;
  PenaltyKind kind = PenaltyKind::MixedL1L2;
  double objective_tol = 1e-8;
  double point_tol = 1e-3;
  double solver_tolerance = 1e-6;
  int descent_restarts = 50;
  /// Replace the operator under test with one whose zero test ignores D.
  bool negative_control = false;
};

struct ProxCheckReport {
  int instances = 0;
  int failures = 0;
  int zero_branch = 0;
  int interior_branch = 0;
  int identity_branch = 0;
  int flagged = 0;  // grid and descent oracles disagree (MCP only)
  double worst_objective_gap = 0.0;   // solver - oracle
  double worst_point_deviation = 0.0;
  std::vector<std::string> messages;  // first few failures

  bool passed() const { return failures == 0 && flagged == 0; }
};

ProxCheckReport run_prox_check(const ProxCheckOptions& options);

/// Root certification on random interior instances (n up to max_n): the
/// residual is re-evaluated here from its definition, at both bracket ends
/// and at the returned theta.
struct BracketCheckOptions {
  int instances = 10000;
  std::uint64_t seed = 11;
  PenaltyKind kind = PenaltyKind::MixedL1L2;
  int max_n = 512;
  double tolerance = 1e-6;
};

struct BracketCheckReport {
  int instances = 0;
  int failures = 0;
  int fallbacks = 0;
  double worst_residual = 0.0;
  double mean_iterations = 0.0;
  std::vector<std::string> messages;

  bool passed() const { return failures == 0; }
  double fallback_rate() const {
    return instances == 0 ? 0.0 : static_cast<double>(fallbacks) / instances;
  }
};

BracketCheckReport run_bracket_check(const BracketCheckOptions& options);

}  // namespace groupprox::oracle
