#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sidforest {

/// ceil(gamma0 * p), with gamma0 * p values within 1e-9 of an integer
/// treated as that integer (so gamma0 = 1/3, p = 6 gives 2).
std::size_t theta_size(std::size_t p, double gamma0);

/// Feature subsets Θ_{l,s} for levels l = 1..k, s = 0..2^{l-1}-1, stored in
/// heap order: node h = 2^{l-1} - 1 + s. Subsets hold 0-based features in
/// ascending order.
class ThetaSchedule {
 public:
  ThetaSchedule() = default;
  ThetaSchedule(std::size_t p, std::size_t k, std::vector<std::vector<std::size_t>> subsets);

  std::size_t p() const noexcept { return p_; }
  std::size_t k() const noexcept { return k_; }
  /// Number of subsets, 2^k - 1.
  std::size_t size() const noexcept { return subsets_.size(); }
  std::size_t subset_size() const noexcept { return subsets_.empty() ? 0 : subsets_[0].size(); }

  /// Θ used to split heap node h (the root is h = 0).
  std::span<const std::size_t> node(std::size_t h) const { return subsets_.at(h); }
  /// Θ_{l,s} with 1-based level l and 0-based position s.
  std::span<const std::size_t> at(std::size_t level, std::size_t s) const;

  const std::vector<std::vector<std::size_t>>& subsets() const noexcept { return subsets_; }

  friend bool operator==(const ThetaSchedule&, const ThetaSchedule&) = default;

 private:
  std::size_t p_ = 0;
  std::size_t k_ = 0;
  std::vector<std::vector<std::size_t>> subsets_;
};

/// Independent uniform draws of ceil(gamma0 * p_eff)-subsets of the allowed
/// features, where the allowed set is {0..p-1} minus `excluded` and p_eff is
/// its size. Deterministic in `seed`.
ThetaSchedule draw_theta_schedule(std::size_t p, double gamma0, std::size_t k, std::uint64_t seed,
                                  std::span<const std::size_t> excluded = {});

/// All q-subsets of `allowed` in lexicographic order.
std::vector<std::vector<std::size_t>> all_subsets(std::span<const std::size_t> allowed, std::size_t q);

/// Every schedule for (p, gamma0, k); throws GuardError past `guard` schedules.
std::vector<ThetaSchedule> enumerate_schedules(std::size_t p, double gamma0, std::size_t k,
                                               std::span<const std::size_t> excluded = {},
                                               std::size_t guard = 100000);

}  // namespace sidforest
