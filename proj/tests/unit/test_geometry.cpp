#include <gtest/gtest.h>

#include <random>

#include "sidforest/errors.hpp"
#include "sidforest/geometry.hpp"
#include "support/oracles.hpp"

using namespace sidforest;

namespace {

Cell box(std::vector<Interval> iv) { return Cell(std::move(iv)); }

}  // namespace

TEST(Geometry, SplitUnitSquareAtHalf) {
  const auto [l, r] = Cell::unit(2).split({0, 0.5});
  EXPECT_EQ(l, box({{0.0, 0.5, false}, {0.0, 1.0, true}}));
  EXPECT_EQ(r, box({{0.5, 1.0, true}, {0.0, 1.0, true}}));
  EXPECT_DOUBLE_EQ(l.volume(), 0.5);
  EXPECT_DOUBLE_EQ(r.volume(), 0.5);
}

TEST(Geometry, SplitAtLowerEndGivesEmptyLeft) {
  const auto [l, r] = Cell::unit(1).split({0, 0.0});
  EXPECT_TRUE(l.empty());
  EXPECT_EQ(r, Cell::unit(1));
}

TEST(Geometry, SplitOpenParentOnSecondAxis) {
  const Cell parent = box({{0.2, 0.8, false}, {0.0, 1.0, true}});
  const auto [l, r] = parent.split({1, 0.3});
  EXPECT_EQ(l, box({{0.2, 0.8, false}, {0.0, 0.3, false}}));
  EXPECT_EQ(r, box({{0.2, 0.8, false}, {0.3, 1.0, true}}));
}

TEST(Geometry, SplitOutsideIntervalThrows) {
  const Cell parent = box({{0.2, 0.8, false}});
  EXPECT_THROW(parent.split({0, 0.9}), InvalidSplitError);
  EXPECT_THROW(parent.split({0, 0.1}), InvalidSplitError);
  EXPECT_THROW(parent.split({1, 0.5}), std::exception);
}

TEST(Geometry, ContainsUsesHalfOpenConvention) {
  const Cell left = box({{0.0, 0.5, false}, {0.0, 1.0, true}});
  const std::vector<double> edge{0.5, 0.3};
  EXPECT_FALSE(left.contains(edge));
  const Cell right = box({{0.5, 1.0, true}, {0.0, 1.0, true}});
  const std::vector<double> corner{1.0, 1.0};
  EXPECT_TRUE(right.contains(corner));
  const std::vector<double> wrong_dim{0.5};
  EXPECT_THROW((void)right.contains(wrong_dim), DimensionError);
}

TEST(Geometry, RootContainsEveryPoint) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Cell root = Cell::unit(4);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x{u(rng), u(rng), 1.0, 0.0};
    EXPECT_TRUE(root.contains(x));
  }
}

TEST(Geometry, SnapExamples) {
  const GridConfig g{10};
  EXPECT_EQ(snap_to_grid(box({{0.12, 0.57, false}}), g), box({{0.1, 0.6, false}}));
  EXPECT_EQ(snap_to_grid(box({{0.1, 0.6, false}}), g), box({{0.1, 0.6, false}}));
  EXPECT_EQ(snap_to_grid(box({{0.15, 0.85, false}}), g), box({{0.2, 0.9, false}}));
}

TEST(Geometry, SnapCoordinateMatchesScanOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t G : {1u, 2u, 3u, 7u, 10u, 64u}) {
    for (int i = 0; i < 500; ++i) {
      const double x = u(rng);
      EXPECT_DOUBLE_EQ(snap_coordinate(x, {G}), oracle::snap_by_scan(x, G)) << "x=" << x << " G=" << G;
    }
    // Exact midpoints between grid lines round up.
    for (std::size_t i = 0; i < G; ++i) {
      const double mid = (static_cast<double>(i) + 0.5) / static_cast<double>(G);
      EXPECT_DOUBLE_EQ(snap_coordinate(mid, {G}), oracle::snap_by_scan(mid, G));
    }
  }
}

TEST(Geometry, IntersectAndSymmetricDifference) {
  const Cell a = box({{0.0, 0.5, false}, {0.0, 1.0, true}});
  const Cell b = box({{0.25, 1.0, true}, {0.0, 0.5, false}});
  const Cell both = a.intersect(b);
  EXPECT_EQ(both, box({{0.25, 0.5, false}, {0.0, 0.5, false}}));
  // |a| + |b| - 2|a ∩ b| = 0.5 + 0.375 - 0.25
  EXPECT_NEAR(symmetric_difference_volume(a, b), 0.625, 1e-15);
  EXPECT_DOUBLE_EQ(symmetric_difference_volume(a, a), 0.0);
}
