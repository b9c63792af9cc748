#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidforest/dataset.hpp"
#include "sidforest/forest.hpp"
#include "sidforest/models.hpp"
#include "sidforest/population.hpp"

namespace sidforest {

/// Mean and Monte Carlo standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Sample mean and standard error of the mean (0 for fewer than two values).
Estimate mean_and_se(const std::vector<double>& values);

struct BiasVarianceReport {
  std::string model_id;
  std::size_t n = 0;
  std::size_t p = 0;
  ForestConfig forest;
  std::size_t n_test = 0;

  /// E(m - m*_T)^2 over test points and trees.
  Estimate sq_bias;
  /// The same quantity integrated exactly per tree (sum over leaves of P Var).
  Estimate sq_bias_exact;
  /// E(m*_T - m_hat_T)^2 over test points and trees.
  Estimate est_var;
  /// E(m - forest)^2 over test points.
  Estimate total_loss;
  /// E(m - m_hat_T)^2 averaged over trees (no aggregation).
  Estimate per_tree_loss;

  /// total <= 2 (bias + variance) + 3 SE.
  bool decomposition_holds() const noexcept;
  nlohmann::json to_json() const;
};

/// Monte Carlo decomposition of the L2 loss of a trained forest. Test points
/// are fresh draws from the model's feature law.
BiasVarianceReport bias_variance_decompose(const RegressionModel& model, const Dataset& data, const Forest& forest,
                                           std::size_t n_test, std::uint64_t test_seed);

/// Trains the forest, then decomposes.
BiasVarianceReport bias_variance_decompose(const RegressionModel& model, const Dataset& data,
                                           const ForestConfig& config, std::size_t n_test, std::uint64_t test_seed);

/// Same forest restricted to its first `height` levels (schedules and trees
/// are prefixes of the taller ones, so this equals training at that height).
Forest truncate_forest(const Forest& forest, const Dataset& data, std::size_t height);

// ---- theoretical-tree envelope ----------------------------------------------------

struct EnvelopeRow {
  std::size_t k = 0;
  Estimate bias;
  double bound = 0.0;
  bool pass = false;
};

struct Theorem3Table {
  std::string model_id;
  double alpha1 = 0.0;
  double gamma0 = 0.0;
  double variance = 0.0;
  std::size_t draws = 0;
  std::vector<EnvelopeRow> rows;
  bool all_pass() const noexcept;
  nlohmann::json to_json() const;
};

/// For k = 0..k_max: exact approximation error of theoretical-CART trees,
/// averaged over `draws` schedule draws, against (1 - gamma0/alpha1)^k Var(m).
Theorem3Table check_theorem3_bound(const RegressionModel& model, double alpha1, double gamma0, std::size_t k_max,
                                   std::size_t draws, std::uint64_t seed, std::size_t workers = 0,
                                   const SearchConfig& search = {});

// ---- binary model bounds ----------------------------------------------------------

struct Prop2Config {
  std::size_t s_star = 2;
  double beta = 1.0;
  std::size_t p = 10;
  double gamma0 = 1.0;
  std::size_t n = 5000;
  std::vector<std::size_t> k_grid{0, 1, 2, 3};
  double noise = 0.0;
  std::size_t M = 50;
  std::size_t B = 1;
  double b = 1.0;
  std::size_t n_test = 2000;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
};

struct Prop2Row {
  BiasVarianceReport report;
  double bound_bias = 0.0;
  std::optional<double> bound_bias_gamma1;
  double bound_var = 0.0;
  bool pass_bias = false;
  bool pass_var = false;
};

struct Prop2Table {
  Prop2Config config;
  double variance = 0.0;       // s* beta^2 / 4
  double root_sup_ii = 0.0;    // beta^2 / 4
  std::vector<Prop2Row> rows;
  bool all_pass() const noexcept;
};

/// Squared-bias envelope 2 (1 - gamma0/s*)^k Var(m).
double prop2_bias_bound(std::size_t s_star, double beta, double gamma0, std::size_t k);
/// max{(s* - k) beta^2 / 2, 0}, valid for gamma0 = 1.
double prop2_bias_bound_full_columns(std::size_t s_star, double beta, std::size_t k);
/// 2 (3 M0 + 2 M_eps)^2 2^k (ln max(n, p))^{2.01} / n.
double prop2_variance_bound(double m0, double noise, std::size_t k, std::size_t n, std::size_t p);

Prop2Table check_prop2_bounds(const Prop2Config& config);

// ---- relevance --------------------------------------------------------------------

struct RelevanceCheck {
  std::size_t feature = 0;  // 0-based
  Estimate loss;
  RelevanceEstimate iota;
  bool pass = false;
  nlohmann::json to_json() const;
};

/// Trains with feature j removed from every schedule and compares the total
/// loss with the relevance iota of j.
RelevanceCheck check_theorem2_relevance(const RegressionModel& model, std::size_t j, ForestConfig config,
                                        std::size_t n, std::size_t n_test, std::uint64_t seed,
                                        std::size_t iota_budget = 4096);

// ---- Certificate rate ------------------------------------------------------------

struct CertificateRate {
  std::size_t trees = 0;
  std::size_t passed = 0;
  double rate() const noexcept { return trees == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(trees); }
};

/// Fraction of the forest's trees that carry a split certificate with `params`.
CertificateRate condition5_certificate_rate(const RegressionModel& model, const Forest& forest,
                                            const Condition5Params& params, std::size_t workers = 0,
                                            const SearchConfig& search = {});

// ---- sweeps -----------------------------------------------------------------------

struct SweepConfig {
  std::string model_id;
  nlohmann::json model_params = nlohmann::json::object();
  std::vector<std::size_t> n_grid;
  /// Explicit heights; when empty, k = floor(c_height log2 n).
  std::vector<std::size_t> k_grid;
  double c_height = 0.125;
  std::vector<double> gamma0_grid{1.0};
  ForestConfig forest;
  std::size_t n_test = 1000;
  std::uint64_t seed = 1;
};

struct SweepRow {
  std::size_t n = 0;
  std::size_t k = 0;
  double gamma0 = 0.0;
  std::optional<BiasVarianceReport> report;
  std::string error;
};

struct SweepResult {
  std::string model_id;
  std::size_t p = 0;
  std::size_t s_star = 0;
  std::vector<SweepRow> rows;
  /// Least-squares slope of log(total loss) on log(n) per (gamma0, k-rule)
  /// group with at least two distinct n; descriptive only.
  nlohmann::json slopes = nlohmann::json::array();
};

/// Throws ValidationError("empty sweep") when the grid has no points.
SweepResult run_convergence_sweep(const SweepConfig& config);

}  // namespace sidforest
