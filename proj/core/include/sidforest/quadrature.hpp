#pragma once

#include <vector>

namespace sidforest {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule (1 <= n <= 64), computed once per n and cached.
const GaussLegendreRule& gauss_legendre(int n);

}  // namespace sidforest
