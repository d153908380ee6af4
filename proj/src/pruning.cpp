#include "groupprox/pruning.hpp"

#include <algorithm>
#include <string>

#include "groupprox/rng.hpp"

namespace groupprox {

namespace {

enum class Orientation { Row, Column };

struct Locator {
  std::size_t layer;
  Orientation orientation;
  Index position;
};

// Identifies which weight row or column a group covers.
Locator locate(const LayeredNetwork& net, IndexSpan group, std::size_t g) {
  const Index first = group.front();
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const auto& layer = net.layer(l);
    const Index offset = net.layer_offset(l);
    if (first < offset || first >= offset + layer.weights.size()) continue;
    const Index local = first - offset;
    const Index r = local / layer.in();
    const Index c = local % layer.in();
    auto matches = [&](Orientation o) {
      const Index expected = o == Orientation::Row ? layer.in() : layer.out();
      if (static_cast<Index>(group.size()) != expected) return false;
      for (std::size_t k = 0; k < group.size(); ++k) {
        const Index kk = static_cast<Index>(k);
        const Index want = o == Orientation::Row ? offset + r * layer.in() + kk
                                                 : offset + kk * layer.in() + c;
        if (group[k] != want) return false;
      }
      return true;
    };
    // A group of size 1 in a 1-wide layer is both; prefer the row reading.
    if (c == 0 && matches(Orientation::Row)) return {l, Orientation::Row, r};
    if (r == 0 && matches(Orientation::Column)) return {l, Orientation::Column, c};
    break;
  }
  throw Error(ErrorCode::PartitionMismatch,
              "group " + std::to_string(g) +
                  " is not a single weight row or column",
              g);
}

}  // namespace

std::vector<LayerMasks> zero_group_masks(const LayeredNetwork& net,
                                         const GroupPartition& partition,
                                         double zero_tol) {
  if (partition.n_params() != net.n_params()) {
    throw Error(ErrorCode::PartitionMismatch,
                "partition does not match the network parameter count");
  }
  std::vector<LayerMasks> masks(net.n_layers());
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const auto& layer = net.layer(l);
    const auto rows = static_cast<std::size_t>(layer.out());
    const auto cols = static_cast<std::size_t>(layer.in());
    masks[l] = {std::vector<bool>(rows, false), std::vector<bool>(rows, false),
                std::vector<bool>(cols, false), std::vector<bool>(cols, false)};
  }
  const ParamVector params = net.flatten();
  for (std::size_t g = 0; g < partition.size(); ++g) {
    const auto group = partition.group(g);
    const auto where = locate(net, group, g);
    const bool zero = group_l2_norm(params, group) <= zero_tol;
    auto& m = masks[where.layer];
    const auto pos = static_cast<std::size_t>(where.position);
    if (where.orientation == Orientation::Row) {
      m.row_grouped[pos] = true;
      m.zero_rows[pos] = zero;
    } else {
      m.col_grouped[pos] = true;
      m.zero_cols[pos] = zero;
    }
  }
  return masks;
}

PruneResult propagate_and_prune(const LayeredNetwork& net,
                                const std::vector<LayerMasks>& masks,
                                const PruneOptions& options) {
  const std::size_t n_layers = net.n_layers();
  if (masks.size() != n_layers) {
    throw Error(ErrorCode::PartitionMismatch, "one mask set per layer required");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = net.layer(l);
    if (layer.activation != Activation::Relu &&
        layer.activation != Activation::Identity) {
      throw Error(ErrorCode::InvalidArgument,
                  "pruning needs activations with act(0) = 0");
    }
    if (masks[l].zero_rows.size() != static_cast<std::size_t>(layer.out()) ||
        masks[l].zero_cols.size() != static_cast<std::size_t>(layer.in())) {
      throw Error(ErrorCode::PartitionMismatch, "mask shape mismatch");
    }
  }

  auto is_zero = [&](std::size_t l, Index r, Index c) {
    return masks[l].zero_rows[static_cast<std::size_t>(r)] ||
           masks[l].zero_cols[static_cast<std::size_t>(c)] ||
           net.layer(l).weights(r, c) == 0.0;
  };

  // alive[l][j]: unit j of layer l survives. Output units always survive.
  std::vector<std::vector<bool>> alive(n_layers);
  std::vector<std::vector<bool>> constant(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    alive[l].assign(static_cast<std::size_t>(net.layer(l).out()), true);
    constant[l].assign(static_cast<std::size_t>(net.layer(l).out()), false);
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t l = n_layers - 1; l-- > 0;) {
      const auto& layer = net.layer(l);
      for (Index j = 0; j < layer.out(); ++j) {
        if (!alive[l][static_cast<std::size_t>(j)]) continue;
        bool outgoing_dead = true;
        for (Index k = 0; k < net.layer(l + 1).out() && outgoing_dead; ++k) {
          if (alive[l + 1][static_cast<std::size_t>(k)] && !is_zero(l + 1, k, j)) {
            outgoing_dead = false;
          }
        }
        bool incoming_dead = false;
        if (!outgoing_dead && options.fold_constant_units) {
          incoming_dead = true;
          for (Index c = 0; c < layer.in() && incoming_dead; ++c) {
            const bool input_alive =
                l == 0 || alive[l - 1][static_cast<std::size_t>(c)];
            if (input_alive && !is_zero(l, j, c)) incoming_dead = false;
          }
        }
        if (outgoing_dead || incoming_dead) {
          alive[l][static_cast<std::size_t>(j)] = false;
          constant[l][static_cast<std::size_t>(j)] = !outgoing_dead;
          changed = true;
        }
      }
    }
  }

  // Rebuild left to right so that folded constants see upstream folds.
  std::vector<Vector<double>> biases;
  for (const auto& layer : net.layers()) biases.push_back(layer.bias);

  PruneResult result;
  auto& report = result.report;
  std::vector<DenseLayer> layers;
  std::vector<Index> kept_inputs(static_cast<std::size_t>(net.input_dim()));
  for (Index c = 0; c < net.input_dim(); ++c) kept_inputs[static_cast<std::size_t>(c)] = c;

  std::size_t n_groups = 0, n_zero_groups = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = net.layer(l);
    if (l > 0) {
      const auto& prev = net.layer(l - 1);
      for (Index j = 0; j < prev.out(); ++j) {
        if (!constant[l - 1][static_cast<std::size_t>(j)]) continue;
        const double value = prev.activation == Activation::Relu
                                 ? std::max(0.0, biases[l - 1](j))
                                 : biases[l - 1](j);
        if (value != 0.0) biases[l] += value * layer.weights.col(j);
      }
    }
    std::vector<Index> kept_rows;
    for (Index r = 0; r < layer.out(); ++r) {
      if (alive[l][static_cast<std::size_t>(r)]) kept_rows.push_back(r);
    }
    if (kept_rows.empty()) {
      throw Error(ErrorCode::DegenerateLayer,
                  "every unit of hidden layer " + std::to_string(l) +
                      " was pruned; the network computes a constant");
    }

    DenseLayer pruned;
    pruned.activation = layer.activation;
    pruned.weights.resize(static_cast<Index>(kept_rows.size()),
                          static_cast<Index>(kept_inputs.size()));
    pruned.bias.resize(static_cast<Index>(kept_rows.size()));
    for (std::size_t r = 0; r < kept_rows.size(); ++r) {
      for (std::size_t c = 0; c < kept_inputs.size(); ++c) {
        pruned.weights(static_cast<Index>(r), static_cast<Index>(c)) =
            layer.weights(kept_rows[r], kept_inputs[c]);
      }
      pruned.bias(static_cast<Index>(r)) = biases[l](kept_rows[r]);
    }

    LayerPruneInfo info;
    info.kept_rows = kept_rows;
    info.kept_cols = kept_inputs;
    info.original_shape = {layer.out(), layer.in()};
    info.pruned_shape = {pruned.out(), pruned.in()};
    info.original_params = layer.n_params();
    info.pruned_params = pruned.n_params();
    info.direct_params = layer.n_params();
    info.original_weights = layer.weights.size();
    info.pruned_weights = pruned.weights.size();
    const auto& m = masks[l];
    for (std::size_t r = 0; r < m.row_grouped.size(); ++r) {
      if (!m.row_grouped[r]) continue;
      ++n_groups;
      if (m.zero_rows[r]) {
        ++n_zero_groups;
        info.direct_params -= layer.in();
      }
    }
    for (std::size_t c = 0; c < m.col_grouped.size(); ++c) {
      if (!m.col_grouped[c]) continue;
      ++n_groups;
      if (m.zero_cols[c]) {
        ++n_zero_groups;
        info.direct_params -= layer.out();
      }
    }
    info.direct_weights = info.original_weights - (info.original_params - info.direct_params);
    report.original_params += info.original_params;
    report.pruned_params += info.pruned_params;
    report.direct_params += info.direct_params;
    report.per_layer.push_back(std::move(info));

    layers.push_back(std::move(pruned));
    kept_inputs = std::move(kept_rows);
  }

  report.direct_group_sparsity =
      n_groups == 0 ? 1.0
                    : static_cast<double>(n_groups - n_zero_groups) /
                          static_cast<double>(n_groups);
  report.effective_sparsity = static_cast<double>(report.pruned_params) /
                              static_cast<double>(report.original_params);
  report.direct_param_fraction = static_cast<double>(report.direct_params) /
                                 static_cast<double>(report.original_params);
  result.network = LayeredNetwork(net.input_dim(), std::move(layers));
  return result;
}

double functional_equivalence_check(const LayeredNetwork& original,
                                    const LayeredNetwork& pruned,
                                    Index n_inputs, std::uint64_t seed) {
  if (original.input_dim() != pruned.input_dim() ||
      original.output_dim() != pruned.output_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "networks differ in input or output dimension");
  }
  if (n_inputs <= 0) return 0.0;
  Rng rng(seed);
  const Matrix<double> inputs = rng.normal_matrix(original.input_dim(), n_inputs);
  const Matrix<double> a = network_forward(original, inputs);
  const Matrix<double> b = network_forward(pruned, inputs);
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace groupprox
