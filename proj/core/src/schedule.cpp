#include "sidforest/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sidforest/errors.hpp"
#include "sidforest/rng.hpp"

namespace sidforest {

std::size_t theta_size(std::size_t p, double gamma0) {
  if (!(gamma0 > 0.0 && gamma0 <= 1.0)) throw ValidationError("gamma0", "gamma0 must lie in (0, 1]");
  const double raw = gamma0 * static_cast<double>(p);
  const double nearest = std::round(raw);
  const double q = std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw);
  return std::max<std::size_t>(1, static_cast<std::size_t>(q));
}

ThetaSchedule::ThetaSchedule(std::size_t p, std::size_t k, std::vector<std::vector<std::size_t>> subsets)
    : p_(p), k_(k), subsets_(std::move(subsets)) {
  if (k >= 63) throw ValidationError("k", "tree height is too large");
  if (subsets_.size() != (std::size_t{1} << k) - 1) {
    throw ValidationError("schedule", "a height-" + std::to_string(k) + " schedule needs " +
                                          std::to_string((std::size_t{1} << k) - 1) + " subsets");
  }
  for (auto& s : subsets_) {
    std::sort(s.begin(), s.end());
    if (s.empty()) throw ValidationError("schedule", "feature subsets must be non-empty");
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
      throw ValidationError("schedule", "feature subsets must hold distinct features");
    }
    if (s.back() >= p) throw ValidationError("schedule", "feature index out of range");
    if (s.size() != subsets_[0].size()) throw ValidationError("schedule", "all subsets must have the same size");
  }
}

std::span<const std::size_t> ThetaSchedule::at(std::size_t level, std::size_t s) const {
  if (level < 1 || level > k_ || s >= (std::size_t{1} << (level - 1))) {
    throw ValidationError("schedule", "no subset at level " + std::to_string(level) + ", position " +
                                          std::to_string(s));
  }
  return subsets_[(std::size_t{1} << (level - 1)) - 1 + s];
}

namespace {

std::vector<std::size_t> allowed_features(std::size_t p, std::span<const std::size_t> excluded) {
  std::vector<std::size_t> allowed;
  for (std::size_t j = 0; j < p; ++j) {
    if (std::find(excluded.begin(), excluded.end(), j) == excluded.end()) allowed.push_back(j);
  }
  for (std::size_t e : excluded) {
    if (e >= p) throw ValidationError("exclude_features", "excluded feature " + std::to_string(e + 1) + " out of range");
  }
  if (allowed.empty()) throw ValidationError("exclude_features", "every feature is excluded");
  return allowed;
}

}  // namespace

ThetaSchedule draw_theta_schedule(std::size_t p, double gamma0, std::size_t k, std::uint64_t seed,
                                  std::span<const std::size_t> excluded) {
  if (p == 0) throw ValidationError("p", "p must be at least 1");
  const std::vector<std::size_t> allowed = allowed_features(p, excluded);
  const std::size_t q = theta_size(allowed.size(), gamma0);
  if (k >= 31) throw ValidationError("k", "tree height is too large");
  const std::size_t count = (std::size_t{1} << k) - 1;
  std::vector<std::vector<std::size_t>> subsets(count);
  Rng rng(derive_seed(seed, {0x7E7A}));
  std::vector<std::size_t> pool = allowed;
  for (auto& s : subsets) {
    // Partial Fisher-Yates over a fresh copy of the allowed set.
    pool = allowed;
    for (std::size_t i = 0; i < q; ++i) {
      const std::size_t r = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[r]);
    }
    s.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(q));
  }
  return ThetaSchedule(p, k, std::move(subsets));
}

std::vector<std::vector<std::size_t>> all_subsets(std::span<const std::size_t> allowed, std::size_t q) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = allowed.size();
  if (q == 0 || q > n) return out;
  std::vector<std::size_t> idx(q);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (;;) {
    std::vector<std::size_t> s(q);
    for (std::size_t i = 0; i < q; ++i) s[i] = allowed[idx[i]];
    out.push_back(std::move(s));
    std::size_t i = q;
    while (i > 0 && idx[i - 1] == n - q + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t t = i; t < q; ++t) idx[t] = idx[t - 1] + 1;
  }
  return out;
}

std::vector<ThetaSchedule> enumerate_schedules(std::size_t p, double gamma0, std::size_t k,
                                               std::span<const std::size_t> excluded, std::size_t guard) {
  const std::vector<std::size_t> allowed = allowed_features(p, excluded);
  const auto subsets = all_subsets(allowed, theta_size(allowed.size(), gamma0));
  if (k >= 31) throw ValidationError("k", "tree height is too large");
  const std::size_t slots = (std::size_t{1} << k) - 1;
  double total = std::pow(static_cast<double>(subsets.size()), static_cast<double>(slots));
  if (total > static_cast<double>(guard)) {
    throw GuardError("exhaustive schedule count " + std::to_string(total) + " exceeds the guard " +
                     std::to_string(guard));
  }
  std::vector<ThetaSchedule> out;
  std::vector<std::size_t> digits(slots, 0);
  for (;;) {
    std::vector<std::vector<std::size_t>> s(slots);
    for (std::size_t h = 0; h < slots; ++h) s[h] = subsets[digits[h]];
    out.emplace_back(p, k, std::move(s));
    std::size_t h = 0;
    while (h < slots && ++digits[h] == subsets.size()) digits[h++] = 0;
    if (h == slots) break;
  }
  return out;
}

}  // namespace sidforest
