#include "sidforest/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "average.hpp"
#include "sidforest/errors.hpp"
#include "sidforest/parallel.hpp"
#include "sidforest/rng.hpp"

namespace sidforest {

void ForestConfig::validate(std::size_t p) const {
  if (k > 20) throw ValidationError("forest.k", "k must be at most 20");
  if (!(gamma0 > 0.0 && gamma0 <= 1.0)) throw ValidationError("forest.gamma0", "gamma0 must lie in (0, 1]");
  if (!(b > 0.0 && b <= 1.0)) throw ValidationError("forest.b", "b must lie in (0, 1]");
  if (B < 1) throw ValidationError("forest.B", "B must be at least 1");
  if (M < 1) throw ValidationError("forest.M", "M must be at least 1");
  if (splitter == SplitterKind::Theoretical) {
    throw ValidationError("forest.splitter", "a forest is grown from data; use the sample or binary splitter");
  }
  for (std::size_t j : excluded_features) {
    if (j >= p) throw ValidationError("forest.exclude_features", "excluded feature " + std::to_string(j + 1) +
                                                                     " out of range");
  }
  if (excluded_features.size() >= p) {
    std::vector<std::size_t> e = excluded_features;
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    if (e.size() >= p) throw ValidationError("forest.exclude_features", "every feature is excluded");
  }
}

nlohmann::json ForestConfig::to_json() const {
  std::vector<std::size_t> excl;
  for (std::size_t j : excluded_features) excl.push_back(j + 1);
  return {{"k", k},     {"gamma0", gamma0}, {"b", b},
          {"B", B},     {"M", M},           {"seed", seed},
          {"splitter", to_string(splitter)}, {"exclude_features", excl}};
}

std::vector<Index> draw_subsample(std::size_t n, double b, std::uint64_t seed, std::uint64_t id) {
  if (n == 0) throw ValidationError("n", "dataset is empty");
  if (!(b > 0.0 && b <= 1.0)) throw ValidationError("forest.b", "b must lie in (0, 1]");
  const double raw = b * static_cast<double>(n);
  const double nearest = std::round(raw);
  std::size_t size = static_cast<std::size_t>(std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw));
  size = std::clamp<std::size_t>(size, 1, n);
  std::vector<Index> all(n);
  std::iota(all.begin(), all.end(), Index{0});
  if (size == n) return all;
  Rng rng(derive_seed(seed, {0x5AB5, id}));
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t r = i + rng.below(n - i);
    std::swap(all[i], all[r]);
  }
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

std::uint64_t schedule_seed(std::uint64_t master, std::uint64_t m) { return derive_seed(master, {0x5C4E, m}); }

Forest::Forest(ForestConfig config, std::size_t p, std::vector<std::vector<Index>> subsamples,
               std::vector<ThetaSchedule> schedules, std::vector<Tree> trees,
               std::vector<std::vector<double>> leaf_means)
    : config_(std::move(config)),
      p_(p),
      subsamples_(std::move(subsamples)),
      schedules_(std::move(schedules)),
      trees_(std::move(trees)),
      leaf_means_(std::move(leaf_means)) {
  if (trees_.size() != subsamples_.size() * schedules_.size() || leaf_means_.size() != trees_.size()) {
    throw ValidationError("forest", "tree count must equal subsamples x schedules");
  }
}

double Forest::tree_value(std::size_t a, std::size_t m, std::span<const double> point) const {
  const std::size_t idx = a * schedules_.size() + m;
  return leaf_means_[idx][trees_[idx].find_leaf(point)];
}

double Forest::predict(std::span<const double> point) const {
  return detail::shifted_mean(subsamples_.size(), [&](std::size_t a) {
    return detail::shifted_mean(schedules_.size(), [&](std::size_t m) { return tree_value(a, m, point); });
  });
}

double Forest::predict_schedule_major(std::span<const double> point) const {
  return detail::shifted_mean(schedules_.size(), [&](std::size_t m) {
    return detail::shifted_mean(subsamples_.size(), [&](std::size_t a) { return tree_value(a, m, point); });
  });
}

std::vector<double> Forest::per_schedule_predictions(std::span<const double> point) const {
  std::vector<double> out(schedules_.size(), 0.0);
  for (std::size_t m = 0; m < schedules_.size(); ++m) {
    out[m] = detail::shifted_mean(subsamples_.size(), [&](std::size_t a) { return tree_value(a, m, point); });
  }
  return out;
}

namespace {

Forest grow_all(const ForestConfig& config, const Dataset& data, std::vector<ThetaSchedule> schedules) {
  std::vector<std::vector<Index>> subsamples(config.B);
  for (std::size_t a = 0; a < config.B; ++a) subsamples[a] = draw_subsample(data.n(), config.b, config.seed, a);
  const std::size_t count = config.B * schedules.size();
  std::vector<Tree> trees(count);
  std::vector<std::vector<double>> means(count);
  parallel_for(count, config.workers, [&](std::size_t t) {
    const std::size_t a = t / schedules.size();
    const std::size_t m = t % schedules.size();
    Tree tree = grow_tree(data, subsamples[a], schedules[m], config.splitter, config.seed, a);
    means[t] = leaf_sample_means(tree, data, subsamples[a]);
    trees[t] = std::move(tree);
  });
  return Forest(config, data.p(), std::move(subsamples), std::move(schedules), std::move(trees), std::move(means));
}

}  // namespace

Forest train_forest(const ForestConfig& config, const Dataset& data) {
  config.validate(data.p());
  std::vector<ThetaSchedule> schedules(config.M);
  for (std::size_t m = 0; m < config.M; ++m) {
    schedules[m] = draw_theta_schedule(data.p(), config.gamma0, config.k, schedule_seed(config.seed, m),
                                       config.excluded_features);
  }
  return grow_all(config, data, std::move(schedules));
}

Forest train_forest_exhaustive(const ForestConfig& config, const Dataset& data, std::size_t guard) {
  config.validate(data.p());
  return grow_all(config, data,
                  enumerate_schedules(data.p(), config.gamma0, config.k, config.excluded_features, guard));
}

double forest_predict(const ForestConfig& config, const Dataset& data, std::span<const double> point) {
  return train_forest(config, data).predict(point);
}

}  // namespace sidforest
