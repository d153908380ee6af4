#include "groupprox/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "groupprox/rng.hpp"
#include "json.hpp"

namespace groupprox {

namespace {

constexpr char kMagic[8] = {'G', 'P', 'R', 'O', 'X', 'C', 'K', '1'};
constexpr std::string_view kFlattening =
    "layer-major; per layer weights row-major (out x in) then bias";

Matrix<double> apply(Activation a, const Matrix<double>& pre) {
  if (a == Activation::Identity) return pre;
  return pre.cwiseMax(0.0);
}

Matrix<double> derivative(Activation a, const Matrix<double>& pre) {
  if (a == Activation::Identity) return Matrix<double>::Ones(pre.rows(), pre.cols());
  return (pre.array() > 0.0).cast<double>().matrix();
}

LossAndGrad backprop(const LayeredNetwork& net, const ForwardTrace& trace,
                     Matrix<double> dloss_dout, double loss) {
  LossAndGrad out{loss, ParamVector::Zero(net.n_params())};
  for (std::size_t l = net.n_layers(); l-- > 0;) {
    const auto& layer = net.layer(l);
    const Matrix<double> delta =
        dloss_dout.cwiseProduct(derivative(layer.activation, trace.pre[l]));
    const Matrix<double> dW = delta * trace.post[l].transpose();
    const Vector<double> db = delta.rowwise().sum();
    Index offset = net.layer_offset(l);
    for (Index r = 0; r < dW.rows(); ++r)
      for (Index c = 0; c < dW.cols(); ++c) out.grad(offset++) = dW(r, c);
    out.grad.segment(offset, db.size()) = db;
    if (l > 0) dloss_dout = layer.weights.transpose() * delta;
  }
  return out;
}

void check_inputs(const LayeredNetwork& net, const Matrix<double>& inputs) {
  if (inputs.rows() != net.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "input rows " + std::to_string(inputs.rows()) +
                    " != input_dim " + std::to_string(net.input_dim()));
  }
  if (inputs.cols() == 0) throw Error(ErrorCode::EmptyMinibatch, "empty batch");
}

void write_le_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

std::uint64_t read_le_u64(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_le_f64(std::ostream& os, double x) {
  write_le_u64(os, std::bit_cast<std::uint64_t>(x));
}

double read_le_f64(std::istream& is) { return std::bit_cast<double>(read_le_u64(is)); }

}  // namespace

LayeredNetwork::LayeredNetwork(Index input_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ < 1) {
    throw Error(ErrorCode::DimensionMismatch, "input_dim must be positive");
  }
  if (layers_.empty()) throw Error(ErrorCode::InvalidSizes, "network has no layers");
  Index expected = input_dim_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.in() != expected || layer.bias.size() != layer.out()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "layer " + std::to_string(l) + " does not chain");
    }
    if (layer.out() < 1) {
      throw Error(ErrorCode::DegenerateLayer,
                  "layer " + std::to_string(l) + " has width 0");
    }
    expected = layer.out();
  }
}

LayeredNetwork LayeredNetwork::random(Rng& rng, const std::vector<Index>& widths,
                                      Activation hidden, Activation output,
                                      double scale) {
  if (widths.size() < 2) {
    throw Error(ErrorCode::InvalidSizes, "need at least input and output widths");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    const double std_dev = scale / std::sqrt(static_cast<double>(widths[l]));
    layer.weights = std_dev * rng.normal_matrix(widths[l + 1], widths[l]);
    layer.bias = Vector<double>::Zero(widths[l + 1]);
    layer.activation = l + 2 == widths.size() ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return LayeredNetwork(widths.front(), std::move(layers));
}

Index LayeredNetwork::output_dim() const {
  return layers_.empty() ? input_dim_ : layers_.back().out();
}

Index LayeredNetwork::n_params() const {
  Index n = 0;
  for (const auto& layer : layers_) n += layer.n_params();
  return n;
}

Index LayeredNetwork::layer_offset(std::size_t l) const {
  Index offset = 0;
  for (std::size_t k = 0; k < l; ++k) offset += layers_.at(k).n_params();
  return offset;
}

ParamVector LayeredNetwork::flatten() const {
  ParamVector p(n_params());
  Index k = 0;
  for (const auto& layer : layers_) {
    for (Index r = 0; r < layer.out(); ++r)
      for (Index c = 0; c < layer.in(); ++c) p(k++) = layer.weights(r, c);
    for (Index r = 0; r < layer.out(); ++r) p(k++) = layer.bias(r);
  }
  return p;
}

void LayeredNetwork::assign(const ParamVector& params) {
  if (params.size() != n_params()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter vector size mismatch");
  }
  Index k = 0;
  for (auto& layer : layers_) {
    for (Index r = 0; r < layer.out(); ++r)
      for (Index c = 0; c < layer.in(); ++c) layer.weights(r, c) = params(k++);
    for (Index r = 0; r < layer.out(); ++r) layer.bias(r) = params(k++);
  }
}

LayeredNetwork LayeredNetwork::with_params(const ParamVector& params) const {
  LayeredNetwork copy = *this;
  copy.assign(params);
  return copy;
}

bool LayeredNetwork::operator==(const LayeredNetwork& other) const {
  if (input_dim_ != other.input_dim_ || layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.activation != b.activation || a.weights.rows() != b.weights.rows() ||
        a.weights.cols() != b.weights.cols() || a.weights != b.weights ||
        a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

ForwardTrace network_forward_trace(const LayeredNetwork& net,
                                   const Matrix<double>& inputs) {
  check_inputs(net, inputs);
  ForwardTrace trace;
  trace.post.push_back(inputs);
  for (const auto& layer : net.layers()) {
    Matrix<double> pre = layer.weights * trace.post.back();
    pre.colwise() += layer.bias;
    trace.post.push_back(apply(layer.activation, pre));
    trace.pre.push_back(std::move(pre));
  }
  return trace;
}

Matrix<double> network_forward(const LayeredNetwork& net,
                               const Matrix<double>& inputs) {
  check_inputs(net, inputs);
  Matrix<double> a = inputs;
  for (const auto& layer : net.layers()) {
    Matrix<double> pre = layer.weights * a;
    pre.colwise() += layer.bias;
    a = apply(layer.activation, pre);
  }
  return a;
}

LossAndGrad network_loss_and_grad(const LayeredNetwork& net,
                                  const Matrix<double>& inputs,
                                  const Matrix<double>& targets) {
  const auto trace = network_forward_trace(net, inputs);
  const Matrix<double>& y = trace.post.back();
  if (targets.rows() != y.rows() || targets.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "target shape mismatch");
  }
  const double scale = 1.0 / static_cast<double>(inputs.cols());
  const Matrix<double> residual = y - targets;
  return backprop(net, trace, scale * residual,
                  0.5 * scale * residual.squaredNorm());
}

LossAndGrad network_loss_and_grad(const LayeredNetwork& net,
                                  const Matrix<double>& inputs,
                                  std::span<const Index> labels) {
  const auto trace = network_forward_trace(net, inputs);
  const Matrix<double>& y = trace.post.back();
  if (static_cast<Index>(labels.size()) != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "label count mismatch");
  }
  const double scale = 1.0 / static_cast<double>(inputs.cols());
  Matrix<double> dloss(y.rows(), y.cols());
  double loss = 0.0;
  for (Index b = 0; b < y.cols(); ++b) {
    const Index label = labels[static_cast<std::size_t>(b)];
    if (label < 0 || label >= y.rows()) {
      throw Error(ErrorCode::IndexOutOfRange, "label out of range");
    }
    const double top = y.col(b).maxCoeff();
    const Vector<double> e = (y.col(b).array() - top).exp();
    const double total = e.sum();
    loss += std::log(total) + top - y(label, b);
    dloss.col(b) = e / total;
    dloss(label, b) -= 1.0;
  }
  return backprop(net, trace, scale * dloss, scale * loss);
}

GroupPartition row_groups(const LayeredNetwork& net, bool include_output_layer) {
  std::vector<IndexSet> groups;
  const std::size_t n = include_output_layer ? net.n_layers() : net.n_layers() - 1;
  for (std::size_t l = 0; l < n; ++l) {
    const auto& layer = net.layer(l);
    const Index offset = net.layer_offset(l);
    for (Index r = 0; r < layer.out(); ++r) {
      IndexSet g;
      for (Index c = 0; c < layer.in(); ++c) g.push_back(offset + r * layer.in() + c);
      groups.push_back(std::move(g));
    }
  }
  return GroupPartition(std::move(groups), net.n_params());
}

GroupPartition column_groups(const LayeredNetwork& net, bool include_output_layer) {
  std::vector<IndexSet> groups;
  const std::size_t n = include_output_layer ? net.n_layers() : net.n_layers() - 1;
  for (std::size_t l = 0; l < n; ++l) {
    const auto& layer = net.layer(l);
    const Index offset = net.layer_offset(l);
    for (Index c = 0; c < layer.in(); ++c) {
      IndexSet g;
      for (Index r = 0; r < layer.out(); ++r) g.push_back(offset + r * layer.in() + c);
      groups.push_back(std::move(g));
    }
  }
  return GroupPartition(std::move(groups), net.n_params());
}

std::string_view to_string(Activation a) noexcept {
  return a == Activation::Relu ? "relu" : "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw Error(ErrorCode::ConfigParse, "unknown activation '" + std::string(s) + "'");
}

void save_checkpoint(const LayeredNetwork& net, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "groupprox-checkpoint";
  header["version"] = 1;
  header["dtype"] = "float64";
  header["endianness"] = "little";
  header["flattening"] = kFlattening;
  header["input_dim"] = net.input_dim();
  header["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    header["layers"].push_back({{"in", layer.in()},
                                {"out", layer.out()},
                                {"activation", to_string(layer.activation)}});
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  os.write(kMagic, sizeof kMagic);
  write_le_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& layer : net.layers()) {
    for (Index r = 0; r < layer.out(); ++r)
      for (Index c = 0; c < layer.in(); ++c) write_le_f64(os, layer.weights(r, c));
    for (Index r = 0; r < layer.out(); ++r) write_le_f64(os, layer.bias(r));
  }
  if (!os) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

LayeredNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(ErrorCode::Io, "'" + path.string() + "' is not a checkpoint");
  }
  const std::uint64_t length = read_le_u64(is);
  if (!is || length > (1u << 26)) throw Error(ErrorCode::Io, "corrupt checkpoint header");
  std::string text(length, '\0');
  is.read(text.data(), static_cast<std::streamsize>(length));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("checkpoint header: ") + e.what());
  }
  if (header.value("endianness", "") != "little" ||
      header.value("dtype", "") != "float64") {
    throw Error(ErrorCode::Io, "unsupported checkpoint encoding");
  }
  std::vector<DenseLayer> layers;
  for (const auto& spec : header.at("layers")) {
    DenseLayer layer;
    const Index in = spec.at("in").get<Index>();
    const Index out = spec.at("out").get<Index>();
    layer.activation = activation_from_string(spec.at("activation").get<std::string>());
    layer.weights.resize(out, in);
    layer.bias.resize(out);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.weights(r, c) = read_le_f64(is);
    for (Index r = 0; r < out; ++r) layer.bias(r) = read_le_f64(is);
    layers.push_back(std::move(layer));
  }
  if (!is) throw Error(ErrorCode::Io, "truncated checkpoint payload");
  return LayeredNetwork(header.at("input_dim").get<Index>(), std::move(layers));
}

}  // namespace groupprox
