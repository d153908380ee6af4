#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "groupprox/core.hpp"

namespace groupprox {

/// f(x) = 1/(2|B|) sum_{i in B} (a_i . x - b_i)^2 over a minibatch B of rows.
struct LeastSquaresProblem {
  Matrix<double> design;
  Vector<double> targets;
  /// Generator ground truth, when known.
  ParamVector true_x;
  std::vector<std::size_t> true_support;
  Index group_size = 0;

  Index n_samples() const { return design.rows(); }
  Index n_params() const { return design.cols(); }
  /// Contiguous generator groups; empty partition when group_size == 0.
  GroupPartition natural_partition() const;
};

/// f(x) = 1/|B| sum_{i in B} log(1 + exp(-y_i a_i . x)), labels y_i = +-1.
struct LogisticProblem {
  Matrix<double> design;
  Vector<double> labels;
  ParamVector true_x;
  std::vector<std::size_t> true_support;
  Index group_size = 0;

  Index n_samples() const { return design.rows(); }
  Index n_params() const { return design.cols(); }
  GroupPartition natural_partition() const;
};

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Deterministic synthetic problem: n_active of n_groups contiguous groups
/// carry entries drawn uniformly from +-[0.5, 1.5]; design entries are
/// standard normal; targets = A x* + noise_sigma * N(0, 1).
LeastSquaresProblem generate_group_sparse_regression(std::uint64_t seed,
                                                     Index n_groups,
                                                     Index group_size,
                                                     Index n_active, Index m,
                                                     double noise_sigma);

/// Same ground-truth recipe; labels are sign(a_i . x* + noise_sigma * N(0,1)).
LogisticProblem generate_group_sparse_logistic(std::uint64_t seed,
                                               Index n_groups, Index group_size,
                                               Index n_active, Index m,
                                               double noise_sigma);

LossAndGrad loss_and_grad(const LeastSquaresProblem& problem,
                          const ParamVector& x, std::span<const Index> batch);
LossAndGrad loss_and_grad(const LeastSquaresProblem& problem,
                          const ParamVector& x);

LossAndGrad loss_and_grad(const LogisticProblem& problem, const ParamVector& x,
                          std::span<const Index> batch);
LossAndGrad loss_and_grad(const LogisticProblem& problem, const ParamVector& x);

/// Indices [0, n).
std::vector<Index> all_indices(Index n);

}  // namespace groupprox
