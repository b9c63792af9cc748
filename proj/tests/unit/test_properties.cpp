#include <gtest/gtest.h>

#include "support/properties.hpp"

namespace {

void expect_ok(const property::Outcome& o) {
  EXPECT_GT(o.cases, 0u);
  EXPECT_EQ(o.failures, 0u) << o.failures << " of " << o.cases << " failed; first: " << o.first_failure;
}

}  // namespace

TEST(Properties, SnappingIsIdempotent) { expect_ok(property::snap_idempotence(5000, 1)); }
TEST(Properties, SnappingMovesAtMostKOverG) { expect_ok(property::snap_measure_bound(5000, 2)); }
TEST(Properties, SnappedDaughtersComeFromTheSnappedParent) { expect_ok(property::snapped_daughters(5000, 3)); }
TEST(Properties, RemainingBiasPlusDecreaseIsTheVariance) { expect_ok(property::impurity_additivity(1000, 4)); }
TEST(Properties, DecreaseDominatesTheMeanGap) { expect_ok(property::decrease_lower_bound(1000, 5)); }
TEST(Properties, LeavesPartitionTheCube) { expect_ok(property::leaf_partition(10000, 6)); }
TEST(Properties, WorkerCountNeverChangesResults) { expect_ok(property::worker_determinism(7)); }
