#include "sidforest/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sidforest/errors.hpp"

namespace sidforest {

Cell::Cell(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  for (std::size_t j = 0; j < intervals_.size(); ++j) {
    const Interval& iv = intervals_[j];
    if (!(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo <= iv.hi)) {
      throw ValidationError("cell", "interval " + std::to_string(j + 1) + " is not inside [0,1]");
    }
    if (iv.closed_hi && iv.hi != 1.0) {
      throw ValidationError("cell", "only ranges ending at 1 may be closed");
    }
  }
}

Cell Cell::unit(std::size_t p) { return Cell(std::vector<Interval>(p, Interval{})); }

bool Cell::empty() const noexcept {
  return std::any_of(intervals_.begin(), intervals_.end(), [](const Interval& iv) { return iv.empty(); });
}

double Cell::volume() const noexcept {
  double v = 1.0;
  for (const Interval& iv : intervals_) v *= iv.length();
  return v;
}

bool Cell::contains(std::span<const double> point) const {
  if (point.size() != intervals_.size()) {
    throw DimensionError("point has dimension " + std::to_string(point.size()) + ", cell has " +
                         std::to_string(intervals_.size()));
  }
  for (std::size_t j = 0; j < point.size(); ++j) {
    if (!intervals_[j].contains(point[j])) return false;
  }
  return true;
}

std::pair<Cell, Cell> Cell::split(const Split& s) const {
  if (s.feature >= intervals_.size()) {
    throw InvalidSplitError("split feature " + std::to_string(s.feature + 1) + " out of range");
  }
  const Interval& iv = intervals_[s.feature];
  if (!(s.threshold >= iv.lo && s.threshold <= iv.hi)) {
    std::ostringstream os;
    os << "threshold " << s.threshold << " outside [" << iv.lo << ", " << iv.hi << "] on feature "
       << s.feature + 1;
    throw InvalidSplitError(os.str());
  }
  Cell left = *this;
  Cell right = *this;
  left.intervals_[s.feature] = Interval{iv.lo, s.threshold, false};
  right.intervals_[s.feature] = Interval{s.threshold, iv.hi, iv.closed_hi};
  return {std::move(left), std::move(right)};
}

Cell Cell::intersect(const Cell& other) const {
  if (other.dim() != dim()) throw DimensionError("cell dimensions differ");
  Cell out = *this;
  for (std::size_t j = 0; j < dim(); ++j) {
    const Interval& a = intervals_[j];
    const Interval& b = other.intervals_[j];
    Interval r;
    r.lo = std::max(a.lo, b.lo);
    if (a.hi < b.hi) {
      r.hi = a.hi;
      r.closed_hi = a.closed_hi;
    } else if (b.hi < a.hi) {
      r.hi = b.hi;
      r.closed_hi = b.closed_hi;
    } else {
      r.hi = a.hi;
      r.closed_hi = a.closed_hi && b.closed_hi;
    }
    if (r.lo > r.hi) {
      r.lo = r.hi;
      r.closed_hi = false;
    }
    out.intervals_[j] = r;
  }
  return out;
}

std::string Cell::to_string() const {
  std::ostringstream os;
  for (std::size_t j = 0; j < intervals_.size(); ++j) {
    if (j) os << " x ";
    const Interval& iv = intervals_[j];
    os << '[' << iv.lo << ", " << iv.hi << (iv.closed_hi ? ']' : ')');
  }
  return os.str();
}

double snap_coordinate(double x, const GridConfig& grid) {
  if (grid.resolution == 0) throw ValidationError("grid.resolution", "grid resolution must be positive");
  const double g = static_cast<double>(grid.resolution);
  const double i = std::floor(x * g + 0.5);
  return std::clamp(i / g, 0.0, 1.0);
}

Cell snap_to_grid(const Cell& cell, const GridConfig& grid) {
  std::vector<Interval> out;
  out.reserve(cell.dim());
  for (const Interval& iv : cell.intervals()) {
    Interval s{snap_coordinate(iv.lo, grid), snap_coordinate(iv.hi, grid), false};
    s.closed_hi = iv.closed_hi && s.hi == 1.0;
    out.push_back(s);
  }
  return Cell(std::move(out));
}

double symmetric_difference_volume(const Cell& a, const Cell& b) {
  const double overlap = a.intersect(b).volume();
  return std::max(0.0, a.volume() + b.volume() - 2.0 * overlap);
}

}  // namespace sidforest
