#include "sidforest/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sidforest/errors.hpp"
#include "sidforest/rng.hpp"

namespace sidforest {

namespace {

void validate_features(const Dataset& data, std::span<const std::size_t> features) {
  if (features.empty()) throw ValidationError("features", "feature set must be non-empty");
  for (std::size_t j : features) {
    if (j >= data.p()) throw ValidationError("features", "feature " + std::to_string(j + 1) + " out of range");
  }
  for (std::size_t a = 0; a < features.size(); ++a) {
    for (std::size_t b = a + 1; b < features.size(); ++b) {
      if (features[a] == features[b]) throw ValidationError("features", "feature set has duplicates");
    }
  }
}

void validate_cell(const Dataset& data, const Cell& cell) {
  if (cell.dim() != data.p()) {
    throw DimensionError("cell has dimension " + std::to_string(cell.dim()) + ", data has p = " +
                         std::to_string(data.p()));
  }
}

/// Sum of squared deviations from the mean over the kept members, in the
/// order given.
double two_pass_sse(const Dataset& data, std::span<const Index> members, auto&& keep) {
  double sum = 0.0;
  std::size_t count = 0;
  for (Index i : members) {
    if (keep(i)) {
      sum += data.y(i);
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const double mean = sum / static_cast<double>(count);
  double sse = 0.0;
  for (Index i : members) {
    if (keep(i)) {
      const double d = data.y(i) - mean;
      sse += d * d;
    }
  }
  return sse;
}

SplitDecision random_split(const Dataset& data, std::span<const Index> members, const Cell& cell,
                           std::span<const std::size_t> features, Rng& rng, std::size_t scanned) {
  SplitDecision d;
  d.degenerate = true;
  d.candidates_scanned = scanned;
  const std::size_t j = features[rng.below(features.size())];
  const Interval& iv = cell[j];
  const double c = iv.hi > iv.lo ? rng.uniform_open(iv.lo, iv.hi) : iv.lo;
  d.split = Split{j, c};
  d.objective = members.size() <= 1 ? 0.0 : split_objective(data, members, d.split);
  return d;
}

}  // namespace

std::vector<Index> cell_members(const Dataset& data, std::span<const Index> subsample, const Cell& cell) {
  validate_cell(data, cell);
  std::vector<Index> out;
  out.reserve(subsample.size());
  for (Index i : subsample) {
    if (i >= data.n()) throw ValidationError("subsample", "subsample index " + std::to_string(i) + " out of range");
    if (cell.contains(data.row(i))) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double split_objective(const Dataset& data, std::span<const Index> members, const Split& split) {
  const std::size_t j = split.feature;
  const double c = split.threshold;
  return two_pass_sse(data, members, [&](Index i) { return data.x(i, j) < c; }) +
         two_pass_sse(data, members, [&](Index i) { return data.x(i, j) >= c; });
}

SplitDecision sample_cart_split(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                std::span<const std::size_t> features, std::uint64_t seed) {
  validate_features(data, features);
  if (subsample.empty()) throw ValidationError("subsample", "subsample must be non-empty");
  const std::vector<Index> members = cell_members(data, subsample, cell);
  return sample_cart_split_members(data, members, cell, features, seed);
}

SplitDecision sample_cart_split_members(const Dataset& data, std::span<const Index> members, const Cell& cell,
                                        std::span<const std::size_t> features, std::uint64_t seed) {
  validate_features(data, features);
  validate_cell(data, cell);
  Rng rng(seed);
  const std::size_t m = members.size();
  if (m <= 1) return random_split(data, members, cell, features, rng, 0);

  double total_sq = 0.0;
  for (Index i : members) total_sq += data.y(i) * data.y(i);

  // Fast pass: sorted scan with prefix sums. Every candidate within a small
  // tolerance of the fast minimum is kept for exact re-evaluation.
  struct Candidate {
    Split split;
    double fast;
  };
  std::vector<Candidate> candidates;
  std::vector<Index> order(members.begin(), members.end());
  std::vector<double> s1(m + 1), s2(m + 1);
  std::size_t scanned = 0;
  for (std::size_t j : features) {
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const double xa = data.x(a, j), xb = data.x(b, j);
      return xa < xb || (xa == xb && a < b);
    });
    for (std::size_t r = 0; r < m; ++r) {
      const double y = data.y(order[r]);
      s1[r + 1] = s1[r] + y;
      s2[r + 1] = s2[r] + y * y;
    }
    const double lo = cell[j].lo;
    for (std::size_t r = 0; r < m; ++r) {
      const double c = data.x(order[r], j);
      if (r > 0 && data.x(order[r - 1], j) == c) continue;  // same threshold as the group start
      if (c <= lo) continue;                                  // empty left daughter
      ++scanned;
      const double nl = static_cast<double>(r);
      const double nr = static_cast<double>(m - r);
      double obj = 0.0;
      if (r > 0) obj += s2[r] - s1[r] * s1[r] / nl;
      const double sr = s1[m] - s1[r];
      obj += (s2[m] - s2[r]) - sr * sr / nr;
      candidates.push_back({Split{j, c}, obj});
    }
  }
  if (candidates.empty()) return random_split(data, members, cell, features, rng, 0);

  double fast_min = candidates[0].fast;
  for (const auto& c : candidates) fast_min = std::min(fast_min, c.fast);
  const double tol = 1e-9 * total_sq + 1e-300;

  std::vector<Split> best;
  double best_obj = 0.0;
  for (const auto& c : candidates) {
    if (c.fast > fast_min + tol) continue;
    const double obj = split_objective(data, members, c.split);
    if (best.empty() || obj < best_obj) {
      best.assign(1, c.split);
      best_obj = obj;
    } else if (obj == best_obj) {
      best.push_back(c.split);
    }
  }
  SplitDecision d;
  d.split = best.size() == 1 ? best[0] : best[rng.below(best.size())];
  d.objective = best_obj;
  d.candidates_scanned = scanned;
  return d;
}

SplitDecision binary_cart_split(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                std::span<const std::size_t> features, std::uint64_t seed) {
  validate_features(data, features);
  if (subsample.empty()) throw ValidationError("subsample", "subsample must be non-empty");
  const std::vector<Index> members = cell_members(data, subsample, cell);
  return binary_cart_split_members(data, members, cell, features, seed);
}

SplitDecision binary_cart_split_members(const Dataset& data, std::span<const Index> members, const Cell& cell,
                                        std::span<const std::size_t> features, std::uint64_t seed) {
  validate_features(data, features);
  validate_cell(data, cell);
  for (std::size_t j : features) {
    for (Index i : members) {
      const double v = data.x(i, j);
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("data", "feature x" + std::to_string(j + 1) + " of row " + std::to_string(i + 1) +
                                          " is not binary");
      }
    }
  }
  Rng rng(seed);
  std::vector<Split> best;
  double best_obj = 0.0;
  std::size_t scanned = 0;
  for (std::size_t j : features) {
    if (!(cell[j].contains(0.0) && cell[j].contains(1.0))) continue;
    ++scanned;
    const Split s{j, 1.0};
    const double obj = split_objective(data, members, s);
    if (best.empty() || obj < best_obj) {
      best.assign(1, s);
      best_obj = obj;
    } else if (obj == best_obj) {
      best.push_back(s);
    }
  }
  SplitDecision d;
  d.candidates_scanned = scanned;
  if (best.empty()) {
    d.split = Split{features[0], 1.0};
    d.objective = 0.0;
    d.trivial = true;
    return d;
  }
  d.split = best.size() == 1 ? best[0] : best[rng.below(best.size())];
  d.objective = best_obj;
  return d;
}

double sample_impurity_decrease(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                const Split& split) {
  const std::vector<Index> members = cell_members(data, subsample, cell);
  if (members.size() <= 1) return 0.0;
  double sum = 0.0, sum_l = 0.0, sum_r = 0.0;
  std::size_t nl = 0, nr = 0;
  for (Index i : members) {
    const double y = data.y(i);
    sum += y;
    if (data.x(i, split.feature) < split.threshold) {
      sum_l += y;
      ++nl;
    } else {
      sum_r += y;
      ++nr;
    }
  }
  const double n = static_cast<double>(members.size());
  const double mean = sum / n;
  double out = 0.0;
  if (nl > 0) {
    const double d = sum_l / static_cast<double>(nl) - mean;
    out += static_cast<double>(nl) / n * d * d;
  }
  if (nr > 0) {
    const double d = sum_r / static_cast<double>(nr) - mean;
    out += static_cast<double>(nr) / n * d * d;
  }
  return out;
}

OracleResult brute_force_split_oracle(const Dataset& data, std::span<const Index> subsample, const Cell& cell,
                                      std::span<const std::size_t> features, std::size_t guard) {
  validate_features(data, features);
  if (subsample.empty()) throw ValidationError("subsample", "subsample must be non-empty");
  const std::vector<Index> members = cell_members(data, subsample, cell);
  if (members.size() * features.size() > guard) {
    throw GuardError("oracle candidate count " + std::to_string(members.size() * features.size()) +
                     " exceeds the guard " + std::to_string(guard));
  }
  OracleResult out;
  if (members.size() <= 1) {
    out.degenerate = true;
    return out;
  }
  std::vector<Split> seen;
  for (std::size_t j : features) {
    for (Index i : members) {
      const Split s{j, data.x(i, j)};
      if (s.threshold <= cell[j].lo) continue;
      if (std::find(seen.begin(), seen.end(), s) != seen.end()) continue;
      seen.push_back(s);
      const double obj = split_objective(data, members, s);
      if (out.minimizers.empty() || obj < out.objective) {
        out.minimizers.assign(1, s);
        out.objective = obj;
      } else if (obj == out.objective) {
        out.minimizers.push_back(s);
      }
    }
  }
  out.candidates = seen.size();
  out.degenerate = out.minimizers.empty();
  return out;
}

}  // namespace sidforest
