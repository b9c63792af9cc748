#pragma once

#include <cstddef>

namespace sidforest::detail {

/// Mean of value(0..count-1) accumulated as offsets from the first term, so
/// equal terms average to exactly that value. count must be positive.
template <class Value>
double shifted_mean(std::size_t count, Value&& value) {
  const double first = value(std::size_t{0});
  double offset = 0.0;
  for (std::size_t i = 1; i < count; ++i) offset += value(i) - first;
  return first + offset / static_cast<double>(count);
}

}  // namespace sidforest::detail
