#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "groupprox/error.hpp"

namespace groupprox {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Flat parameter vector. All arithmetic in the library is 64-bit.
using ParamVector = Vector<double>;

using IndexSet = std::vector<Index>;
using IndexSpan = std::span<const Index>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

/// Throws unless every group is nonempty, in range, and disjoint from the
/// groups before it. Errors name the first offending group.
inline void validate_partition(const std::vector<IndexSet>& groups,
                               Index n_params) {
  if (n_params < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative parameter count");
  }
  std::unordered_map<Index, std::size_t> owner;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw Error(ErrorCode::EmptyGroup,
                  "group " + std::to_string(g) + " is empty", g);
    }
    for (Index i : groups[g]) {
      if (i < 0 || i >= n_params) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "group " + std::to_string(g) + " has index " +
                        std::to_string(i) + " outside [0, " +
                        std::to_string(n_params) + ")",
                    g);
      }
    }
    for (Index i : groups[g]) {
      auto [it, inserted] = owner.emplace(i, g);
      if (!inserted) {
        throw Error(ErrorCode::OverlappingGroups,
                    "group " + std::to_string(g) + " shares index " +
                        std::to_string(i) + " with group " +
                        std::to_string(it->second),
                    g);
      }
    }
  }
}

/// Disjoint index groups over [0, n_params). Coordinates not covered by any
/// group are unpenalized. Index sets are stored sorted.
class GroupPartition {
 public:
  GroupPartition() = default;

  GroupPartition(std::vector<IndexSet> groups, Index n_params)
      : groups_(std::move(groups)), n_params_(n_params) {
    validate_partition(groups_, n_params_);
    for (auto& g : groups_) std::sort(g.begin(), g.end());
  }

  /// Contiguous groups of equal size covering [0, n_groups * group_size).
  static GroupPartition contiguous(Index n_groups, Index group_size,
                                   Index n_params) {
    std::vector<IndexSet> groups(static_cast<std::size_t>(n_groups));
    for (Index g = 0; g < n_groups; ++g) {
      for (Index j = 0; j < group_size; ++j) {
        groups[static_cast<std::size_t>(g)].push_back(g * group_size + j);
      }
    }
    return GroupPartition(std::move(groups), n_params);
  }

  std::size_t size() const noexcept { return groups_.size(); }
  bool empty() const noexcept { return groups_.empty(); }
  Index n_params() const noexcept { return n_params_; }
  IndexSpan group(std::size_t g) const { return groups_.at(g); }
  const std::vector<IndexSet>& groups() const noexcept { return groups_; }

  /// Number of coordinates covered by some group.
  Index covered() const {
    Index total = 0;
    for (const auto& g : groups_) total += static_cast<Index>(g.size());
    return total;
  }

 private:
  std::vector<IndexSet> groups_;
  Index n_params_ = 0;
};

namespace detail {

template <typename Derived>
void check_indices(const Eigen::MatrixBase<Derived>& v, IndexSpan g) {
  for (Index i : g) {
    if (i < 0 || i >= v.size()) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "index " + std::to_string(i) + " outside vector of size " +
                      std::to_string(v.size()));
    }
  }
}

}  // namespace detail

/// Copies the coordinates of `g` out of `v`, in the order of `g`.
template <typename Derived>
Vector<typename Derived::Scalar> gather(const Eigen::MatrixBase<Derived>& v,
                                        IndexSpan g) {
  detail::check_indices(v, g);
  Vector<typename Derived::Scalar> out(static_cast<Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) out(static_cast<Index>(k)) = v(g[k]);
  return out;
}

template <typename Derived, typename OtherDerived>
void scatter(const Eigen::MatrixBase<Derived>& sub, IndexSpan g,
             Eigen::MatrixBase<OtherDerived>& v) {
  for (std::size_t k = 0; k < g.size(); ++k) v(g[k]) = sub(static_cast<Index>(k));
}

/// sqrt(sum_{j in g} v_j^2)
template <typename Derived>
typename Derived::Scalar group_l2_norm(const Eigen::MatrixBase<Derived>& v,
                                       IndexSpan g) {
  detail::check_indices(v, g);
  typename Derived::Scalar sq(0);
  for (Index i : g) sq += v(i) * v(i);
  return std::sqrt(sq);
}

/// Positive diagonal preconditioner D = diag(d).
template <typename Scalar>
class DiagonalPreconditioner {
 public:
  DiagonalPreconditioner() = default;

  explicit DiagonalPreconditioner(Vector<Scalar> d) : d_(std::move(d)) {
    for (Index i = 0; i < d_.size(); ++i) {
      if (!(d_(i) > Scalar(0)) || !std::isfinite(d_(i))) {
        throw Error(ErrorCode::InvalidArgument,
                    "preconditioner entry " + std::to_string(i) +
                        " is not a positive finite number");
      }
    }
  }

  static DiagonalPreconditioner identity(Index n) {
    return DiagonalPreconditioner(Vector<Scalar>::Ones(n));
  }

  Index size() const noexcept { return d_.size(); }
  const Vector<Scalar>& diagonal() const noexcept { return d_; }
  Scalar operator()(Index i) const { return d_(i); }

  Scalar d_min(IndexSpan g) const {
    detail::check_indices(d_, g);
    Scalar m = d_(g.front());
    for (Index i : g) m = std::min(m, d_(i));
    return m;
  }

  Scalar d_max(IndexSpan g) const {
    detail::check_indices(d_, g);
    Scalar m = d_(g.front());
    for (Index i : g) m = std::max(m, d_(i));
    return m;
  }

 private:
  Vector<Scalar> d_;
};

/// sqrt(sum_{j in g} (d_j v_j)^2)
template <typename Derived, typename Scalar>
typename Derived::Scalar weighted_group_norm(
    const Eigen::MatrixBase<Derived>& v, const DiagonalPreconditioner<Scalar>& d,
    IndexSpan g) {
  detail::check_indices(v, g);
  detail::check_indices(d.diagonal(), g);
  typename Derived::Scalar sq(0);
  for (Index i : g) {
    const auto w = d(i) * v(i);
    sq += w * w;
  }
  return std::sqrt(sq);
}

}  // namespace groupprox
