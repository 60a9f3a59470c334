#include "complyfed/param_vector.h"

#include <gtest/gtest.h>

#include "complyfed/error.h"

namespace complyfed {
namespace {

Layout small_layout() { return {{"W", {2, 3}}, {"b", {2}}}; }

TEST(ParamVectorTest, SizeFollowsLayout) {
  ParamVector p(small_layout());
  EXPECT_EQ(p.size(), 8u);
  EXPECT_EQ(p.tensor("W").size(), 6u);
  EXPECT_EQ(p.tensor("b").size(), 2u);
  EXPECT_THROW(ParamVector(small_layout(), std::vector<double>(7)), Error);
}

TEST(ParamVectorTest, ElementwiseArithmetic) {
  ParamVector a(small_layout(), {1, 2, 3, 4, 5, 6, 7, 8});
  ParamVector b(small_layout(), {8, 7, 6, 5, 4, 3, 2, 1});
  const ParamVector sum = a + b;
  for (double v : sum.values()) EXPECT_EQ(v, 9.0);
  const ParamVector diff = a - a;
  EXPECT_EQ(diff.l2_norm(), 0.0);
  const ParamVector scaled = 2.0 * a;
  EXPECT_EQ(scaled[7], 16.0);
  ParamVector c = a;
  c.add_scaled(b, -1.0);
  EXPECT_EQ(c[0], -7.0);
  EXPECT_DOUBLE_EQ(l2_distance(a, a), 0.0);
}

TEST(ParamVectorTest, MismatchedLayoutsAreRejected) {
  ParamVector a(small_layout());
  ParamVector b(Layout{{"W", {3, 2}}, {"b", {2}}});
  try {
    a += b;
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kLayoutMismatch);
  }
  EXPECT_THROW(l2_distance(a, b), Error);
  EXPECT_THROW(a.tensor("missing"), Error);
}

}  // namespace
}  // namespace complyfed
