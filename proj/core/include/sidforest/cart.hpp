#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sidforest/dataset.hpp"
#include "sidforest/geometry.hpp"

namespace sidforest {

struct SplitDecision {
  Split split;
  /// Sum of within-daughter squared deviations of y over the in-cell sample.
  double objective = 0.0;
  /// A random split was used because the cell held at most one sample point
  /// or no admissible candidate.
  bool degenerate = false;
  /// Binary CART only: every available coordinate was exhausted and the
  /// split leaves one daughter empty.
  bool trivial = false;
  std::size_t candidates_scanned = 0;
};

/// Members of `subsample` whose feature vectors lie in `cell`, ascending.
std::vector<Index> cell_members(const Dataset& data, std::span<const Index> subsample, const Cell& cell);

/// The split objective evaluated in a fixed order (ascending member index,
/// two-pass sums), so two code paths that agree on the split agree on the
/// value bit for bit. `members` must be sorted ascending.
double split_objective(const Dataset& data, std::span<const Index> members, const Split& split);

/// Sample CART split over j in `features` (0-based) and thresholds at the
/// in-cell sample values. Candidates whose left daughter would be the empty
/// set (c <= lo_j) are excluded. Ties between minimizers are broken
/// uniformly at random from `seed`.
SplitDecision sample_cart_split(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                std::span<const std::size_t> features, std::uint64_t seed);

/// Same as sample_cart_split, for callers that already hold the in-cell
/// members (ascending).
SplitDecision sample_cart_split_members(const Dataset& data, std::span<const Index> members, const Cell& cell,
                                        std::span<const std::size_t> features, std::uint64_t seed);

/// CART restricted to splits (j, 1) on {0,1}-valued features. Coordinates
/// whose range no longer holds both values are unavailable; when none is
/// available the result is a trivial split with objective 0.
SplitDecision binary_cart_split(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                std::span<const std::size_t> features, std::uint64_t seed);

SplitDecision binary_cart_split_members(const Dataset& data, std::span<const Index> members, const Cell& cell,
                                        std::span<const std::size_t> features, std::uint64_t seed);

/// Sample impurity decrease of a split, with 0/0 = 0.
double sample_impurity_decrease(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                const Split& split);

struct OracleResult {
  double objective = 0.0;
  std::vector<Split> minimizers;
  std::size_t candidates = 0;
  bool degenerate = false;
};

/// Exhaustive O(n^2 p) reference for sample_cart_split. Reports the full
/// minimizer set. Throws GuardError past `guard` candidates.
OracleResult brute_force_split_oracle(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                      std::span<const std::size_t> features, std::size_t guard = 100000);

}  // namespace sidforest
