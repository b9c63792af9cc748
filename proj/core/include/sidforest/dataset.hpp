#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sidforest {

using Index = std::uint32_t;

/// Immutable table of n observations (x in [0,1]^p, y real) with a
/// per-feature index sorted by (x_j, row).
class Dataset {
 public:
  /// `features` is row-major n x p. Throws ValidationError naming the first
  /// offending row (1-based) when a feature lies outside [0,1] or is not finite.
  Dataset(std::size_t p, std::vector<double> features, std::vector<double> responses);

  std::size_t n() const noexcept { return y_.size(); }
  std::size_t p() const noexcept { return p_; }

  double x(std::size_t i, std::size_t j) const noexcept { return x_[i * p_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {x_.data() + i * p_, p_}; }
  double y(std::size_t i) const noexcept { return y_[i]; }
  std::span<const double> responses() const noexcept { return y_; }
  std::span<const double> features() const noexcept { return x_; }

  /// Row indices ordered by (x_j, row).
  std::span<const Index> sorted_by(std::size_t j) const noexcept { return sorted_[j]; }

  /// All row indices 0..n-1.
  std::vector<Index> all_indices() const;

 private:
  std::size_t p_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<std::vector<Index>> sorted_;
};

/// Reads "x1,...,xp,y" CSV (header required). Throws ParseError with the
/// line number on malformed rows and ValidationError on out-of-range features.
Dataset load_csv(const std::filesystem::path& path);

void write_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace sidforest
