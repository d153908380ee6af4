#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "groupprox/core.hpp"
#include "groupprox/problems.hpp"

namespace groupprox {

class Rng;

enum class Activation { Relu, Identity };

struct DenseLayer {
  Matrix<double> weights;  // out x in
  Vector<double> bias;     // out
  Activation activation = Activation::Relu;

  Index in() const { return weights.cols(); }
  Index out() const { return weights.rows(); }
  Index n_params() const { return weights.size() + bias.size(); }
};

/// Sequence of dense layers. Samples are columns: an input batch is
/// input_dim x B.
///
/// Parameter flattening (public contract, used by partitions, pruning and
/// checkpoints): layer-major; inside a layer, the weight matrix row-major
/// followed by the bias vector.
class LayeredNetwork {
 public:
  LayeredNetwork() = default;
  LayeredNetwork(Index input_dim, std::vector<DenseLayer> layers);

  /// Widths [in, h1, ..., out]; weights N(0, scale^2 / fan_in), zero biases.
  /// Hidden layers use `hidden`, the last layer `output`.
  static LayeredNetwork random(Rng& rng, const std::vector<Index>& widths,
                               Activation hidden = Activation::Relu,
                               Activation output = Activation::Identity,
                               double scale = 1.0);

  Index input_dim() const { return input_dim_; }
  Index output_dim() const;
  std::size_t n_layers() const { return layers_.size(); }
  const DenseLayer& layer(std::size_t l) const { return layers_.at(l); }
  DenseLayer& layer(std::size_t l) { return layers_.at(l); }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Index n_params() const;
  /// Offset of layer l's first weight in the flattened vector.
  Index layer_offset(std::size_t l) const;

  ParamVector flatten() const;
  void assign(const ParamVector& params);
  LayeredNetwork with_params(const ParamVector& params) const;

  bool operator==(const LayeredNetwork& other) const;

 private:
  Index input_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

struct ForwardTrace {
  std::vector<Matrix<double>> pre;   // per layer, before activation
  std::vector<Matrix<double>> post;  // post[0] = input, post[l+1] = layer l output
};

Matrix<double> network_forward(const LayeredNetwork& net,
                               const Matrix<double>& inputs);
ForwardTrace network_forward_trace(const LayeredNetwork& net,
                                   const Matrix<double>& inputs);

/// 1/(2B) sum_b ||f(u_b) - t_b||^2 and its gradient in flattened order.
LossAndGrad network_loss_and_grad(const LayeredNetwork& net,
                                  const Matrix<double>& inputs,
                                  const Matrix<double>& targets);

/// Softmax cross-entropy, averaged over the batch.
LossAndGrad network_loss_and_grad(const LayeredNetwork& net,
                                  const Matrix<double>& inputs,
                                  std::span<const Index> labels);

/// One group per weight-matrix row of each layer (biases excluded). With
/// include_output_layer = false the last layer is left unpenalized.
GroupPartition row_groups(const LayeredNetwork& net,
                          bool include_output_layer = true);
/// One group per weight-matrix column of each layer (biases excluded).
GroupPartition column_groups(const LayeredNetwork& net,
                             bool include_output_layer = true);

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view s);

/// Checkpoint container:
///   8 bytes  magic "GPROXCK1"
///   8 bytes  header length H, unsigned little-endian
///   H bytes  UTF-8 JSON header (input_dim, layers[{in, out, activation}],
///            flattening, endianness, dtype)
///   payload  per layer: weights row-major then bias, float64 little-endian
void save_checkpoint(const LayeredNetwork& net, const std::filesystem::path& path);
LayeredNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace groupprox
