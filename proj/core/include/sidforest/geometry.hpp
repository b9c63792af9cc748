#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sidforest {

/// One coordinate range of a cell: the point set [lo, hi), plus the point
/// `hi` itself when `closed_hi` is set. Only a range ending at 1 may be
/// closed, which makes the leaves of any tree an exact partition of [0,1]^p.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool closed_hi = true;

  bool empty() const noexcept { return lo > hi || (lo == hi && !closed_hi); }
  double length() const noexcept { return hi > lo ? hi - lo : 0.0; }
  bool contains(double x) const noexcept { return (x >= lo && x < hi) || (closed_hi && x == hi); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis-aligned split: `feature` is a 0-based coordinate index.
struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Axis-aligned box inside the unit cube.
class Cell {
 public:
  Cell() = default;
  explicit Cell(std::vector<Interval> intervals);

  static Cell unit(std::size_t p);

  std::size_t dim() const noexcept { return intervals_.size(); }
  const Interval& operator[](std::size_t j) const { return intervals_[j]; }
  std::span<const Interval> intervals() const noexcept { return intervals_; }

  /// True when the cell contains no point at all.
  bool empty() const noexcept;
  /// Lebesgue measure; zero for empty and for degenerate (point-like) cells.
  double volume() const noexcept;

  /// Throws DimensionError when `point.size() != dim()`.
  bool contains(std::span<const double> point) const;

  /// Daughters (left, right) = (t ∩ {x_j < c}, t ∩ {x_j >= c}).
  /// Throws InvalidSplitError unless lo_j <= c <= hi_j; thresholds at the
  /// ends of the range produce one empty daughter.
  std::pair<Cell, Cell> split(const Split& s) const;

  /// Intersection of two cells of the same dimension.
  Cell intersect(const Cell& other) const;

  std::string to_string() const;

  friend bool operator==(const Cell&, const Cell&) = default;

 private:
  std::vector<Interval> intervals_;
};

inline std::pair<Cell, Cell> split_cell(const Cell& parent, const Split& s) { return parent.split(s); }
inline bool cell_contains(const Cell& cell, std::span<const double> point) { return cell.contains(point); }

/// Regular lattice with `resolution` intervals per axis (grid points i/G).
struct GridConfig {
  std::size_t resolution = 1;
};

/// Nearest grid line to x, ties rounded up.
double snap_coordinate(double x, const GridConfig& grid);

/// Moves every boundary of the cell to its nearest grid line (ties up).
/// Idempotent; snapped daughters are daughters of the snapped parent.
Cell snap_to_grid(const Cell& cell, const GridConfig& grid);

/// Lebesgue measure of the symmetric difference of two cells.
double symmetric_difference_volume(const Cell& a, const Cell& b);

}  // namespace sidforest
