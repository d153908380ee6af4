#include <gtest/gtest.h>

#include "groupprox/core.hpp"
#include "groupprox/rng.hpp"

using namespace groupprox;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(GroupPartition, ContiguousLayout) {
  const auto p = GroupPartition::contiguous(3, 2, 7);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.n_params(), 7);
  EXPECT_EQ(p.covered(), 6);
  EXPECT_EQ(p.group(2)[0], 4);
  EXPECT_EQ(p.group(2)[1], 5);
}

TEST(GroupPartition, StoresGroupsSorted) {
  GroupPartition p({{3, 1}, {0, 2}}, 4);
  EXPECT_EQ(p.group(0)[0], 1);
  EXPECT_EQ(p.group(0)[1], 3);
}

TEST(GroupPartition, RejectsOverlapNamingGroup) {
  try {
    GroupPartition({{0, 1}, {2}, {1, 3}}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OverlappingGroups);
    ASSERT_TRUE(e.group());
    EXPECT_EQ(*e.group(), 2u);
  }
}

TEST(GroupPartition, RejectsOutOfRangeAndEmpty) {
  EXPECT_EQ(code_of([] { GroupPartition({{0, 5}}, 5); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { GroupPartition({{-1}}, 5); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { GroupPartition({{0}, {}}, 5); }), ErrorCode::EmptyGroup);
}

TEST(GroupPartition, UncoveredCoordinatesAllowed) {
  GroupPartition p({{0}, {4}}, 6);
  EXPECT_EQ(p.covered(), 2);
}

TEST(GatherScatter, RoundTrip) {
  ParamVector v(5);
  v << 1, 2, 3, 4, 5;
  const IndexSet g{4, 1};
  const auto sub = gather(v, g);
  EXPECT_EQ(sub(0), 5);
  EXPECT_EQ(sub(1), 2);
  ParamVector w = ParamVector::Zero(5);
  scatter(sub, g, w);
  EXPECT_EQ(w(4), 5);
  EXPECT_EQ(w(1), 2);
  EXPECT_EQ(w(0), 0);
}

TEST(GroupNorms, KnownValues) {
  ParamVector v(4);
  v << 3, 4, 1, 0;
  const IndexSet g{0, 1};
  EXPECT_DOUBLE_EQ(group_l2_norm(v, g), 5.0);
  DiagonalPreconditioner<double> d(Vector<double>::Constant(4, 2.0));
  EXPECT_DOUBLE_EQ(weighted_group_norm(v, d, g), 10.0);
}

TEST(GroupNorms, IndexOutsideVector) {
  ParamVector v = ParamVector::Zero(3);
  const IndexSet g{0, 3};
  EXPECT_EQ(code_of([&] { group_l2_norm(v, g); }), ErrorCode::IndexOutOfRange);
}

TEST(Preconditioner, RejectsNonPositive) {
  Vector<double> d(3);
  d << 1, 0, 2;
  EXPECT_EQ(code_of([&] { DiagonalPreconditioner<double> D(d); }),
            ErrorCode::InvalidArgument);
  d(1) = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { DiagonalPreconditioner<double> D(d); }),
            ErrorCode::InvalidArgument);
}

TEST(Preconditioner, GroupExtremes) {
  Vector<double> d(4);
  d << 0.5, 3, 2, 0.1;
  DiagonalPreconditioner<double> D(d);
  const IndexSet g{0, 1, 2};
  EXPECT_EQ(D.d_min(g), 0.5);
  EXPECT_EQ(D.d_max(g), 3);
}

TEST(Templating, FloatScalarsWork) {
  Vector<float> v(2);
  v << 3.f, 4.f;
  const IndexSet g{0, 1};
  EXPECT_FLOAT_EQ(group_l2_norm(v, g), 5.f);
}

TEST(Rng, DocumentedTransforms) {
  Rng a(42), b(42);
  std::mt19937_64 engine(42);
  const auto raw = engine();
  EXPECT_EQ(a.next(), raw);
  const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  b.next();
  EXPECT_EQ(b.uniform(), u);
}

TEST(Rng, PermutationIsPermutation) {
  Rng rng(3);
  auto p = rng.permutation(50);
  std::sort(p.begin(), p.end());
  for (Index i = 0; i < 50; ++i) EXPECT_EQ(p[static_cast<std::size_t>(i)], i);
}

TEST(Rng, NormalMomentsRoughly) {
  Rng rng(9);
  const auto v = rng.normal_vector(200000);
  EXPECT_NEAR(v.mean(), 0.0, 0.01);
  EXPECT_NEAR((v.array() - v.mean()).square().mean(), 1.0, 0.02);
}
