#include "groupprox/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "groupprox/rng.hpp"

namespace groupprox {

namespace {

struct GroundTruth {
  ParamVector x;
  std::vector<std::size_t> support;
};

void check_sizes(Index n_groups, Index group_size, Index n_active, Index m,
                 double noise_sigma) {
  if (n_groups < 1 || group_size < 1 || m < 1 || n_active < 0 ||
      n_active > n_groups || !(noise_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidSizes,
                "need n_groups, group_size, m >= 1, 0 <= n_active <= n_groups "
                "and noise_sigma >= 0");
  }
}

GroundTruth draw_ground_truth(Rng& rng, Index n_groups, Index group_size,
                              Index n_active) {
  GroundTruth truth;
  truth.x = ParamVector::Zero(n_groups * group_size);
  const auto order = rng.permutation(n_groups);
  truth.support.assign(order.begin(), order.begin() + n_active);
  std::sort(truth.support.begin(), truth.support.end());
  for (std::size_t g : truth.support) {
    for (Index j = 0; j < group_size; ++j) {
      const double magnitude = rng.uniform(0.5, 1.5);
      truth.x(static_cast<Index>(g) * group_size + j) =
          rng.coin() ? magnitude : -magnitude;
    }
  }
  return truth;
}

void check_batch(std::span<const Index> batch, Index m) {
  if (batch.empty()) throw Error(ErrorCode::EmptyMinibatch, "empty minibatch");
  for (Index i : batch) {
    if (i < 0 || i >= m) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "sample index " + std::to_string(i) + " out of range");
    }
  }
}

GroupPartition contiguous_or_empty(Index n_params, Index group_size) {
  if (group_size <= 0) return GroupPartition({}, n_params);
  return GroupPartition::contiguous(n_params / group_size, group_size, n_params);
}

}  // namespace

GroupPartition LeastSquaresProblem::natural_partition() const {
  return contiguous_or_empty(n_params(), group_size);
}

GroupPartition LogisticProblem::natural_partition() const {
  return contiguous_or_empty(n_params(), group_size);
}

std::vector<Index> all_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

LeastSquaresProblem generate_group_sparse_regression(std::uint64_t seed,
                                                     Index n_groups,
                                                     Index group_size,
                                                     Index n_active, Index m,
                                                     double noise_sigma) {
  check_sizes(n_groups, group_size, n_active, m, noise_sigma);
  Rng rng(seed);
  auto truth = draw_ground_truth(rng, n_groups, group_size, n_active);
  LeastSquaresProblem p;
  p.design = rng.normal_matrix(m, n_groups * group_size);
  p.targets = p.design * truth.x;
  for (Index i = 0; i < m; ++i) p.targets(i) += noise_sigma * rng.normal();
  p.true_x = std::move(truth.x);
  p.true_support = std::move(truth.support);
  p.group_size = group_size;
  return p;
}

LogisticProblem generate_group_sparse_logistic(std::uint64_t seed,
                                               Index n_groups, Index group_size,
                                               Index n_active, Index m,
                                               double noise_sigma) {
  check_sizes(n_groups, group_size, n_active, m, noise_sigma);
  Rng rng(seed);
  auto truth = draw_ground_truth(rng, n_groups, group_size, n_active);
  LogisticProblem p;
  p.design = rng.normal_matrix(m, n_groups * group_size);
  const Vector<double> scores = p.design * truth.x;
  p.labels.resize(m);
  for (Index i = 0; i < m; ++i) {
    p.labels(i) = scores(i) + noise_sigma * rng.normal() >= 0.0 ? 1.0 : -1.0;
  }
  p.true_x = std::move(truth.x);
  p.true_support = std::move(truth.support);
  p.group_size = group_size;
  return p;
}

LossAndGrad loss_and_grad(const LeastSquaresProblem& problem,
                          const ParamVector& x, std::span<const Index> batch) {
  if (x.size() != problem.n_params()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter size mismatch");
  }
  check_batch(batch, problem.n_samples());
  LossAndGrad out{0.0, ParamVector::Zero(x.size())};
  for (Index i : batch) {
    const double r = problem.design.row(i).dot(x) - problem.targets(i);
    out.loss += r * r;
    out.grad += r * problem.design.row(i).transpose();
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  out.loss *= 0.5 * scale;
  out.grad *= scale;
  return out;
}

LossAndGrad loss_and_grad(const LeastSquaresProblem& problem,
                          const ParamVector& x) {
  if (x.size() != problem.n_params()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter size mismatch");
  }
  const Vector<double> r = problem.design * x - problem.targets;
  const double scale = 1.0 / static_cast<double>(problem.n_samples());
  return {0.5 * scale * r.squaredNorm(),
          scale * (problem.design.transpose() * r)};
}

namespace {

// log(1 + exp(s)) without overflow.
double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

LossAndGrad loss_and_grad(const LogisticProblem& problem, const ParamVector& x,
                          std::span<const Index> batch) {
  if (x.size() != problem.n_params()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter size mismatch");
  }
  check_batch(batch, problem.n_samples());
  LossAndGrad out{0.0, ParamVector::Zero(x.size())};
  for (Index i : batch) {
    const double y = problem.labels(i);
    const double margin = y * problem.design.row(i).dot(x);
    out.loss += softplus(-margin);
    out.grad -= y * sigmoid(-margin) * problem.design.row(i).transpose();
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  out.loss *= scale;
  out.grad *= scale;
  return out;
}

LossAndGrad loss_and_grad(const LogisticProblem& problem, const ParamVector& x) {
  const auto idx = all_indices(problem.n_samples());
  return loss_and_grad(problem, x, idx);
}

}  // namespace groupprox
