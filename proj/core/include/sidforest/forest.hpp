#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidforest/dataset.hpp"
#include "sidforest/schedule.hpp"
#include "sidforest/tree.hpp"

namespace sidforest {

struct ForestConfig {
  std::size_t k = 3;
  double gamma0 = 1.0;
  /// Row-subsample fraction; each subsample has ceil(b n) rows.
  double b = 1.0;
  /// Number of row subsamples.
  std::size_t B = 1;
  /// Number of Θ-schedule draws averaged per subsample.
  std::size_t M = 1;
  std::uint64_t seed = 1;
  SplitterKind splitter = SplitterKind::SampleCart;
  /// 0-based features removed from every schedule.
  std::vector<std::size_t> excluded_features;
  /// 0 means default_workers(). Results never depend on it.
  std::size_t workers = 0;

  /// Throws ValidationError naming the offending field.
  void validate(std::size_t p) const;
  /// Every field except `workers`.
  nlohmann::json to_json() const;
};

/// Sorted row indices of subsample `id`: ceil(b n) rows drawn without
/// replacement, independent of the responses.
std::vector<Index> draw_subsample(std::size_t n, double b, std::uint64_t seed, std::uint64_t id);

/// Seed of the m-th schedule draw.
std::uint64_t schedule_seed(std::uint64_t master, std::uint64_t m);

/// B subsamples x M schedules of trees. Schedules are shared across
/// subsamples, so the tree for (subsample a, schedule m) is trees()[a M + m].
class Forest {
 public:
  Forest(ForestConfig config, std::size_t p, std::vector<std::vector<Index>> subsamples,
         std::vector<ThetaSchedule> schedules, std::vector<Tree> trees, std::vector<std::vector<double>> leaf_means);

  const ForestConfig& config() const noexcept { return config_; }
  std::size_t p() const noexcept { return p_; }
  std::size_t subsample_count() const noexcept { return subsamples_.size(); }
  std::size_t schedule_count() const noexcept { return schedules_.size(); }
  const std::vector<std::vector<Index>>& subsamples() const noexcept { return subsamples_; }
  const std::vector<ThetaSchedule>& schedules() const noexcept { return schedules_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const Tree& tree(std::size_t a, std::size_t m) const { return trees_.at(a * schedules_.size() + m); }
  const std::vector<double>& leaf_means(std::size_t a, std::size_t m) const {
    return leaf_means_.at(a * schedules_.size() + m);
  }

  /// Prediction of tree (a, m) at a point.
  double tree_value(std::size_t a, std::size_t m, std::span<const double> point) const;

  /// (1/B) sum_a (1/M) sum_m tree_value(a, m, point).
  double predict(std::span<const double> point) const;
  /// Same double average, summed over subsamples first.
  double predict_schedule_major(std::span<const double> point) const;

  /// (1/B) sum_a tree_value(a, m, point) for each schedule m.
  std::vector<double> per_schedule_predictions(std::span<const double> point) const;

 private:
  ForestConfig config_;
  std::size_t p_;
  std::vector<std::vector<Index>> subsamples_;
  std::vector<ThetaSchedule> schedules_;
  std::vector<Tree> trees_;
  std::vector<std::vector<double>> leaf_means_;
};

/// M i.i.d. schedule draws per the config.
Forest train_forest(const ForestConfig& config, const Dataset& data);

/// Every schedule for (p, gamma0, k) instead of M draws: the exact
/// Θ-expectation. `config.M` is ignored.
Forest train_forest_exhaustive(const ForestConfig& config, const Dataset& data, std::size_t guard = 100000);

/// Trains per the config and predicts at one point.
double forest_predict(const ForestConfig& config, const Dataset& data, std::span<const double> point);

}  // namespace sidforest
