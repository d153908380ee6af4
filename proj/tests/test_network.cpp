#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "groupprox/network.hpp"
#include "groupprox/rng.hpp"

using namespace groupprox;

namespace {

// Rejects points where some ReLU pre-activation sits near its kink.
bool smooth_point(const LayeredNetwork& net, const Matrix<double>& inputs) {
  const auto trace = network_forward_trace(net, inputs);
  for (std::size_t l = 0; l + 1 < net.n_layers(); ++l) {
    if (trace.pre[l].cwiseAbs().minCoeff() < 1e-3) return false;
  }
  return true;
}

template <typename Loss>
double max_rel_fd_error(const Loss& loss, const ParamVector& x, const ParamVector& grad) {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    ParamVector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fd = (loss(xp) - loss(xm)) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad(i)) / std::max(1.0, std::abs(grad(i))));
  }
  return worst;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("groupprox_" + name);
}

}  // namespace

TEST(Network, ConstructionChecks) {
  DenseLayer a{Matrix<double>::Zero(3, 2), Vector<double>::Zero(3), Activation::Relu};
  DenseLayer b{Matrix<double>::Zero(1, 4), Vector<double>::Zero(1), Activation::Identity};
  EXPECT_THROW(LayeredNetwork(2, {a, b}), Error);
  EXPECT_THROW(LayeredNetwork(3, {a}), Error);
  EXPECT_THROW(LayeredNetwork(2, {}), Error);
  const LayeredNetwork ok(2, {a});
  EXPECT_EQ(ok.n_params(), 9);
}

TEST(Network, FlatteningOrder) {
  DenseLayer a{Matrix<double>(2, 2), Vector<double>(2), Activation::Relu};
  a.weights << 1, 2, 3, 4;
  a.bias << 5, 6;
  DenseLayer b{Matrix<double>(1, 2), Vector<double>(1), Activation::Identity};
  b.weights << 7, 8;
  b.bias << 9;
  const LayeredNetwork net(2, {a, b});
  ParamVector expected(9);
  expected << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  EXPECT_EQ(net.flatten(), expected);
  EXPECT_EQ(net.layer_offset(1), 6);
  EXPECT_EQ(net.with_params(expected), net);
}

TEST(Network, SingleLinearLayerIsLeastSquares) {
  Rng rng(1);
  const auto ls = generate_group_sparse_regression(1, 3, 2, 1, 25, 0.1);
  DenseLayer layer{Matrix<double>(1, 6), Vector<double>::Zero(1), Activation::Identity};
  const ParamVector x = rng.normal_vector(6);
  layer.weights = x.transpose();
  const LayeredNetwork net(6, {layer});
  const auto r = network_loss_and_grad(net, ls.design.transpose(), ls.targets.transpose());
  const auto ref = loss_and_grad(ls, x);
  EXPECT_NEAR(r.loss, ref.loss, 1e-12);
  EXPECT_LE((r.grad.head(6) - ref.grad).norm(), 1e-12);
}

TEST(Network, DeadReluNetwork) {
  Rng rng(2);
  auto net = LayeredNetwork::random(rng, {4, 5, 3});
  net.assign(ParamVector::Zero(net.n_params()));
  const Matrix<double> u = rng.normal_matrix(4, 7);
  EXPECT_TRUE(network_forward(net, u).isZero(0));
  const auto r = network_loss_and_grad(net, u, rng.normal_matrix(3, 7));
  // Only the output bias receives gradient.
  const Index out_weights = net.layer_offset(1);
  EXPECT_TRUE(r.grad.head(out_weights + 3 * 5).isZero(0));
}

TEST(Network, SquaredErrorGradientMatchesFiniteDifferences) {
  Rng rng(3);
  int checked = 0;
  while (checked < 50) {
    auto net = LayeredNetwork::random(rng, {4, 6, 3});
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
      net.layer(l).bias = rng.normal_vector(net.layer(l).out()) * 0.5;
    }
    const Matrix<double> u = rng.normal_matrix(4, 5);
    if (!smooth_point(net, u)) continue;
    const Matrix<double> t = rng.normal_matrix(3, 5);
    const auto r = network_loss_and_grad(net, u, t);
    auto loss = [&](const ParamVector& p) {
      return network_loss_and_grad(net.with_params(p), u, t).loss;
    };
    EXPECT_LE(max_rel_fd_error(loss, net.flatten(), r.grad), 1e-5);
    ++checked;
  }
}

TEST(Network, CrossEntropyGradientMatchesFiniteDifferences) {
  Rng rng(4);
  int checked = 0;
  while (checked < 50) {
    const auto net = LayeredNetwork::random(rng, {3, 5, 4});
    const Matrix<double> u = rng.normal_matrix(3, 6);
    if (!smooth_point(net, u)) continue;
    std::vector<Index> labels;
    for (int b = 0; b < 6; ++b) labels.push_back(static_cast<Index>(rng.below(4)));
    const auto r = network_loss_and_grad(net, u, labels);
    auto loss = [&](const ParamVector& p) {
      return network_loss_and_grad(net.with_params(p), u, labels).loss;
    };
    EXPECT_LE(max_rel_fd_error(loss, net.flatten(), r.grad), 1e-5);
    ++checked;
  }
}

TEST(Network, ShapeErrors) {
  Rng rng(5);
  const auto net = LayeredNetwork::random(rng, {3, 2});
  try {
    network_forward(net, rng.normal_matrix(4, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(network_loss_and_grad(net, rng.normal_matrix(3, 2), rng.normal_matrix(2, 3)),
               Error);
}

TEST(Groups, RowsAndColumns) {
  Rng rng(6);
  const auto one = LayeredNetwork::random(rng, {2, 3});
  const auto rows = row_groups(one);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows.group(0).size(), 2u);
  const auto cols = column_groups(one);
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_EQ(cols.group(1).size(), 3u);
  EXPECT_EQ(cols.group(1)[1], 3);  // weight (1, 1) in row-major order

  const auto net = LayeredNetwork::random(rng, {4, 5, 3});
  Index weights = 0;
  for (const auto& l : net.layers()) weights += l.weights.size();
  EXPECT_EQ(row_groups(net).covered(), weights);
  EXPECT_EQ(column_groups(net).covered(), weights);
  EXPECT_EQ(row_groups(net, false).size(), 5u);
  EXPECT_EQ(column_groups(net, false).size(), 4u);
}

TEST(Checkpoint, BitExactRoundTrip) {
  Rng rng(7);
  auto net = LayeredNetwork::random(rng, {5, 4, 2});
  ParamVector p = net.flatten();
  p(0) = -0.0;
  p(1) = std::numeric_limits<double>::denorm_min();
  p(2) = 1.0 / 3.0;
  net.assign(p);
  const auto path = temp_file("roundtrip.ckpt");
  save_checkpoint(net, path);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back, net);
  EXPECT_TRUE(std::signbit(back.flatten()(0)));

  std::ifstream is(path, std::ios::binary);
  char magic[8];
  is.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "GPROXCK1");
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsGarbage) {
  const auto path = temp_file("garbage.ckpt");
  {
    std::ofstream os(path, std::ios::binary);
    os << "not a checkpoint";
  }
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(temp_file("missing.ckpt")), Error);
}

TEST(Activation, Names) {
  EXPECT_EQ(activation_from_string(to_string(Activation::Relu)), Activation::Relu);
  EXPECT_THROW(activation_from_string("tanh"), Error);
}
