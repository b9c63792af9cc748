#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidforest/geometry.hpp"
#include "sidforest/models.hpp"

namespace sidforest {

/// Probability, conditional mean and conditional variance of m(X) on a cell.
/// When the cell has probability zero, mean and variance are 0 and
/// `zero_probability` is set.
struct CellMoments {
  double probability = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  bool zero_probability = false;
};

/// P(X in cell) under the model's feature law.
double cell_probability(const RegressionModel& model, const Cell& cell);

CellMoments conditional_moments(const RegressionModel& model, const Cell& cell);
double conditional_mean(const RegressionModel& model, const Cell& cell);
double conditional_variance(const RegressionModel& model, const Cell& cell);

/// Population impurity quantities of one split of a cell.
struct ImpurityReport {
  double variance = 0.0;        // Var(m(X) | X in t)
  double remaining_bias = 0.0;  // (I)
  double decrease = 0.0;        // (II)
  double p_left = 0.0;          // P(X in t' | X in t)
  double p_right = 0.0;         // P(X in t'' | X in t)
  double mean_left = 0.0;
  double mean_right = 0.0;
  bool zero_probability = false;
};

/// Throws InvalidSplitError when the threshold lies outside the cell.
ImpurityReport impurity_decrease_II(const RegressionModel& model, const Cell& cell, const Split& split);

/// Only (II) for a split; the hot path of the theoretical split search.
double impurity_decrease_only(const RegressionModel& model, const Cell& cell, const Split& split);

struct SearchConfig {
  /// Interior grid points per uniform coordinate.
  std::size_t grid_points = 512;
  /// Golden-section iterations around the best grid point.
  std::size_t refine_iterations = 60;
};

struct TheoreticalSplit {
  Split split;
  double decrease = 0.0;
  /// Set when every candidate has (II) = 0 (m constant on the cell along Θ).
  bool degenerate = false;
};

/// Approximate argsup of (II) over j in `features` (0-based) and c in the
/// cell's j-th range. Ties between coordinates go to the first listed one.
TheoreticalSplit theoretical_cart_split(const RegressionModel& model, const Cell& cell,
                                        std::span<const std::size_t> features, const SearchConfig& search = {});

struct SidSearchConfig {
  /// Number of probed cells, the root included.
  std::size_t budget = 2000;
  std::size_t max_depth = 8;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  SearchConfig search;
};

struct SidCertificate {
  std::string model_id;
  std::optional<double> claimed_alpha;
  /// Lower bound on the SID constant: max over probed cells of Var / sup (II).
  /// +inf when some cell has Var > 0 but sup (II) = 0.
  double alpha_hat = 0.0;
  /// The ratio at the root cell (NaN when Var(m) = 0).
  double root_ratio = 0.0;
  std::size_t budget = 0;
  std::size_t probed = 0;
  std::size_t skipped = 0;
  Cell worst_cell;
  double worst_variance = 0.0;
  double worst_decrease = 0.0;

  /// Refutes the claimed constant when alpha_hat exceeds it.
  bool refutes_claim() const noexcept { return claimed_alpha && alpha_hat > *claimed_alpha * (1.0 + 1e-9); }
  nlohmann::json to_json() const;
};

/// Throws Error("degenerate") when m is constant on every probed cell.
SidCertificate estimate_sid_alpha(const RegressionModel& model, const SidSearchConfig& config = {});

struct RelevanceEstimate {
  double iota = 0.0;
  double standard_error = 0.0;
  bool analytic = false;
};

/// E[Var(m(X) | X_s, s != j)] for a 0-based feature j. Exact for additive
/// models and for features m does not use; otherwise Monte Carlo over
/// X_{-j} with an exact inner variance.
RelevanceEstimate relevance_iota(const RegressionModel& model, std::size_t j, std::size_t mc_budget = 4096,
                                 std::uint64_t seed = 1);

}  // namespace sidforest
