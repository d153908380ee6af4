#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "groupprox/network.hpp"

namespace groupprox {

/// Per-layer view of a row/column partition: which rows and columns of the
/// weight matrix are groups, and which of those groups are zero.
struct LayerMasks {
  std::vector<bool> row_grouped;
  std::vector<bool> zero_rows;
  std::vector<bool> col_grouped;
  std::vector<bool> zero_cols;
};

/// Flags every group whose l2 norm is <= zero_tol. Every group of the
/// partition must be exactly one weight row or one weight column of a layer
/// (as built by row_groups / column_groups), otherwise partition-mismatch.
std::vector<LayerMasks> zero_group_masks(const LayeredNetwork& net,
                                         const GroupPartition& partition,
                                         double zero_tol = 0.0);

struct LayerPruneInfo {
  std::vector<Index> kept_rows;
  std::vector<Index> kept_cols;
  std::pair<Index, Index> original_shape;  // (out, in)
  std::pair<Index, Index> pruned_shape;
  Index original_params = 0;  // weights + biases
  Index pruned_params = 0;
  Index direct_params = 0;  // original minus weights in zero groups
  Index original_weights = 0;
  Index pruned_weights = 0;
  Index direct_weights = 0;

  double kept_weight_fraction() const {
    return static_cast<double>(pruned_weights) / static_cast<double>(original_weights);
  }
  double direct_weight_fraction() const {
    return static_cast<double>(direct_weights) / static_cast<double>(original_weights);
  }
};

struct PruneReport {
  std::vector<LayerPruneInfo> per_layer;
  /// Fraction of groups with nonzero norm.
  double direct_group_sparsity = 1.0;
  /// Pruned parameter count / original parameter count.
  double effective_sparsity = 1.0;
  /// Parameters outside zero groups / original parameter count.
  double direct_param_fraction = 1.0;
  Index original_params = 0;
  Index pruned_params = 0;
  Index direct_params = 0;
};

struct PruneOptions {
  /// Also remove hidden units whose incoming weights are all zero. Such a
  /// unit outputs the constant act(bias), which is folded into the next
  /// layer's bias. Needed when the groups are weight rows.
  bool fold_constant_units = false;
};

struct PruneResult {
  LayeredNetwork network;
  PruneReport report;
};

/// Removes hidden units that cannot influence the output, sweeping from the
/// output layer toward the input until nothing changes. A unit goes when all
/// its outgoing weights to surviving units are zero (masked or exactly 0.0),
/// or, with fold_constant_units, when all its incoming weights from
/// surviving units are zero. The input and output dimensions are kept.
/// Throws degenerate-layer if a hidden layer loses every unit.
PruneResult propagate_and_prune(const LayeredNetwork& net,
                                const std::vector<LayerMasks>& masks,
                                const PruneOptions& options = {});

/// max over n_inputs standard-normal inputs of ||f_a(u) - f_b(u)||_inf.
double functional_equivalence_check(const LayeredNetwork& original,
                                    const LayeredNetwork& pruned,
                                    Index n_inputs, std::uint64_t seed = 0);

}  // namespace groupprox
