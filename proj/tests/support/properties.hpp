#pragma once

// Randomized invariant checks shared by the unit tests and the acceptance
// runner. Each returns the number of cases tried and the first failure.

#include <cstddef>
#include <cstdint>
#include <string>

namespace property {

struct Outcome {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool ok() const { return cases > 0 && failures == 0; }
  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
};

/// snap(snap(t)) == snap(t) for random cells and resolutions.
Outcome snap_idempotence(std::size_t trials, std::uint64_t seed);

/// |t symmetric-difference t#| <= k / G for cells built from k splits.
Outcome snap_measure_bound(std::size_t trials, std::uint64_t seed);

/// Snapped daughters are the daughters of the snapped parent at the snapped threshold.
Outcome snapped_daughters(std::size_t trials, std::uint64_t seed);

/// (I) + (II) = Var on random (cell, split) pairs across every registered model.
Outcome impurity_additivity(std::size_t pairs, std::uint64_t seed);

/// (II) >= P(t'|t) P(t''|t) H^2 with H the gap between independently computed daughter means.
Outcome decrease_lower_bound(std::size_t pairs, std::uint64_t seed);

/// Every point lies in exactly one leaf, and find_leaf names it.
Outcome leaf_partition(std::size_t points, std::uint64_t seed);

/// Forest training, predictions and the envelope table do not depend on the worker count.
Outcome worker_determinism(std::uint64_t seed);

}  // namespace property
