#include "sidforest/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "average.hpp"
#include "sidforest/errors.hpp"
#include "sidforest/parallel.hpp"
#include "sidforest/rng.hpp"
#include "sidforest/tree.hpp"

namespace sidforest {

Estimate mean_and_se(const std::vector<double>& values) {
  Estimate e;
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  e.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return e;
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  e.se = std::sqrt(ss / (n - 1.0) / n);
  return e;
}

namespace {

Estimate combine(const std::vector<double>& per_point, const std::vector<double>& per_tree) {
  const Estimate a = mean_and_se(per_point);
  const Estimate b = mean_and_se(per_tree);
  return {a.mean, std::hypot(a.se, b.se)};
}

nlohmann::json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}}; }

std::vector<double> draw_points(const RegressionModel& model, std::size_t count, std::uint64_t seed) {
  std::vector<double> x(count * model.p());
  Rng rng(derive_seed(seed, {0x7E57}));
  for (std::size_t i = 0; i < count; ++i) draw_features(model, rng, std::span<double>(x.data() + i * model.p(), model.p()));
  return x;
}

}  // namespace

bool BiasVarianceReport::decomposition_holds() const noexcept {
  const double se = std::sqrt(sq_bias.se * sq_bias.se + est_var.se * est_var.se + total_loss.se * total_loss.se);
  return total_loss.mean <= 2.0 * (sq_bias.mean + est_var.mean) + 3.0 * se;
}

nlohmann::json BiasVarianceReport::to_json() const {
  return {{"model_id", model_id},
          {"n", n},
          {"p", p},
          {"forest", forest.to_json()},
          {"n_test", n_test},
          {"sq_bias", estimate_json(sq_bias)},
          {"sq_bias_exact", estimate_json(sq_bias_exact)},
          {"est_var", estimate_json(est_var)},
          {"total_loss", estimate_json(total_loss)},
          {"per_tree_loss", estimate_json(per_tree_loss)},
          {"decomposition_holds", decomposition_holds()}};
}

BiasVarianceReport bias_variance_decompose(const RegressionModel& model, const Dataset& data, const Forest& forest,
                                           std::size_t n_test, std::uint64_t test_seed) {
  if (n_test < 2) throw ValidationError("n_test", "at least two test points are required");
  if (data.p() != model.p()) throw DimensionError("data and model dimensions differ");
  const std::size_t p = model.p();
  const std::vector<double> x = draw_points(model, n_test, test_seed);
  std::vector<double> m(n_test);
  for (std::size_t i = 0; i < n_test; ++i) m[i] = model.eval_unchecked(std::span<const double>(x.data() + i * p, p));

  const std::size_t trees = forest.trees().size();
  const std::size_t schedules = forest.schedule_count();
  // Per tree: population and sample predictions at every test point.
  std::vector<std::vector<double>> star(trees), hat(trees);
  std::vector<double> exact(trees);
  parallel_for(trees, forest.config().workers, [&](std::size_t t) {
    const Tree& tree = forest.trees()[t];
    const std::vector<double> pop = leaf_population_means(model, tree);
    const std::vector<double>& sam = forest.leaf_means(t / schedules, t % schedules);
    star[t].resize(n_test);
    hat[t].resize(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
      const std::size_t leaf = tree.find_leaf(std::span<const double>(x.data() + i * p, p));
      star[t][i] = pop[leaf];
      hat[t][i] = sam[leaf];
    }
    exact[t] = tree_approximation_error(model, tree);
  });

  std::vector<double> bias_pt(n_test, 0.0), var_pt(n_test, 0.0), loss_pt(n_test, 0.0), tree_loss_pt(n_test, 0.0);
  std::vector<double> bias_tree(trees, 0.0), var_tree(trees, 0.0), tree_loss_tree(trees, 0.0);
  std::vector<double> agg(n_test, 0.0);
  const double inv_t = 1.0 / static_cast<double>(trees);
  const double inv_n = 1.0 / static_cast<double>(n_test);
  for (std::size_t t = 0; t < trees; ++t) {
    for (std::size_t i = 0; i < n_test; ++i) {
      const double b = (m[i] - star[t][i]) * (m[i] - star[t][i]);
      const double v = (star[t][i] - hat[t][i]) * (star[t][i] - hat[t][i]);
      const double l = (m[i] - hat[t][i]) * (m[i] - hat[t][i]);
      bias_pt[i] += b * inv_t;
      var_pt[i] += v * inv_t;
      tree_loss_pt[i] += l * inv_t;
      bias_tree[t] += b * inv_n;
      var_tree[t] += v * inv_n;
      tree_loss_tree[t] += l * inv_n;
    }
  }
  for (std::size_t i = 0; i < n_test; ++i) {
    agg[i] = detail::shifted_mean(trees, [&](std::size_t t) { return hat[t][i]; });
    loss_pt[i] = (m[i] - agg[i]) * (m[i] - agg[i]);
  }

  BiasVarianceReport r;
  r.model_id = model.id();
  r.n = data.n();
  r.p = p;
  r.forest = forest.config();
  r.forest.k = forest.trees().empty() ? 0 : forest.trees()[0].k();
  r.forest.M = schedules;
  r.n_test = n_test;
  r.sq_bias = combine(bias_pt, bias_tree);
  r.sq_bias_exact = mean_and_se(exact);
  r.est_var = combine(var_pt, var_tree);
  r.total_loss = mean_and_se(loss_pt);
  r.per_tree_loss = combine(tree_loss_pt, tree_loss_tree);
  return r;
}

BiasVarianceReport bias_variance_decompose(const RegressionModel& model, const Dataset& data,
                                           const ForestConfig& config, std::size_t n_test, std::uint64_t test_seed) {
  return bias_variance_decompose(model, data, train_forest(config, data), n_test, test_seed);
}

Forest truncate_forest(const Forest& forest, const Dataset& data, std::size_t height) {
  ForestConfig config = forest.config();
  config.k = height;
  std::vector<ThetaSchedule> schedules;
  for (const ThetaSchedule& s : forest.schedules()) {
    std::vector<std::vector<std::size_t>> subsets(
        s.subsets().begin(), s.subsets().begin() + static_cast<std::ptrdiff_t>((std::size_t{1} << height) - 1));
    schedules.emplace_back(s.p(), height, std::move(subsets));
  }
  std::vector<Tree> trees;
  std::vector<std::vector<double>> means;
  trees.reserve(forest.trees().size());
  for (std::size_t t = 0; t < forest.trees().size(); ++t) {
    trees.push_back(forest.trees()[t].truncated(height));
    means.push_back(leaf_sample_means(trees.back(), data, forest.subsamples()[t / forest.schedule_count()]));
  }
  return Forest(config, forest.p(), forest.subsamples(), std::move(schedules), std::move(trees), std::move(means));
}

// ---- theoretical-tree envelope ----------------------------------------------------

bool Theorem3Table::all_pass() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const EnvelopeRow& r) { return r.pass; });
}

nlohmann::json Theorem3Table::to_json() const {
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : rows) {
    rj.push_back({{"k", r.k}, {"bias", r.bias.mean}, {"bias_se", r.bias.se}, {"bound", r.bound}, {"pass", r.pass}});
  }
  return {{"model_id", model_id}, {"alpha1", alpha1}, {"gamma0", gamma0}, {"variance", variance},
          {"draws", draws},       {"rows", rj},       {"pass", all_pass()}};
}

Theorem3Table check_theorem3_bound(const RegressionModel& model, double alpha1, double gamma0, std::size_t k_max,
                                   std::size_t draws, std::uint64_t seed, std::size_t workers,
                                   const SearchConfig& search) {
  if (!(alpha1 >= 1.0)) throw ValidationError("alpha1", "alpha1 must be at least 1");
  if (draws < 1) throw ValidationError("mc_budget", "at least one schedule draw is required");
  Theorem3Table table;
  table.model_id = model.id();
  table.alpha1 = alpha1;
  table.gamma0 = gamma0;
  table.draws = draws;
  table.variance = conditional_variance(model, Cell::unit(model.p()));

  std::vector<std::vector<double>> errors(draws);
  parallel_for(draws, workers, [&](std::size_t d) {
    const ThetaSchedule sched = draw_theta_schedule(model.p(), gamma0, k_max, schedule_seed(seed, d));
    const Tree full = grow_theoretical_tree(model, sched, search);
    errors[d].resize(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) errors[d][k] = tree_approximation_error(model, full.truncated(k));
  });
  for (std::size_t k = 0; k <= k_max; ++k) {
    std::vector<double> col(draws);
    for (std::size_t d = 0; d < draws; ++d) col[d] = errors[d][k];
    EnvelopeRow row;
    row.k = k;
    row.bias = mean_and_se(col);
    row.bound = std::pow(1.0 - gamma0 / alpha1, static_cast<double>(k)) * table.variance;
    // Slack for rounding in the exact per-tree integrals.
    row.pass = row.bias.mean <= row.bound + 3.0 * row.bias.se + 1e-12 * std::max(table.variance, 1.0);
    table.rows.push_back(row);
  }
  return table;
}

// ---- binary model bounds ----------------------------------------------------------

double prop2_bias_bound(std::size_t s_star, double beta, double gamma0, std::size_t k) {
  const double var = static_cast<double>(s_star) * beta * beta / 4.0;
  return 2.0 * std::pow(1.0 - gamma0 / static_cast<double>(s_star), static_cast<double>(k)) * var;
}

double prop2_bias_bound_full_columns(std::size_t s_star, double beta, std::size_t k) {
  const double gap = static_cast<double>(s_star) - static_cast<double>(k);
  return std::max(gap * beta * beta / 2.0, 0.0);
}

double prop2_variance_bound(double m0, double noise, std::size_t k, std::size_t n, std::size_t p) {
  const double scale = 3.0 * m0 + 2.0 * noise;
  const double logterm = std::pow(std::log(static_cast<double>(std::max(n, p))), 2.01);
  return 2.0 * scale * scale * std::ldexp(1.0, static_cast<int>(k)) * logterm / static_cast<double>(n);
}

bool Prop2Table::all_pass() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const Prop2Row& r) { return r.pass_bias && r.pass_var; });
}

Prop2Table check_prop2_bounds(const Prop2Config& config) {
  if (config.k_grid.empty()) throw ValidationError("k_grid", "k_grid must be non-empty");
  const RegressionModel model = make_binary_linear_model(config.p, config.s_star, config.beta, config.noise);
  Prop2Table table;
  table.config = config;
  const Cell root = Cell::unit(config.p);
  table.variance = conditional_variance(model, root);
  for (std::size_t j = 0; j < config.p; ++j) {
    table.root_sup_ii = std::max(table.root_sup_ii, impurity_decrease_II(model, root, {j, 1.0}).decrease);
  }

  const Dataset data = generate_sample(model, config.n, derive_seed(config.seed, {0xDA7A}));
  ForestConfig fc;
  fc.k = *std::max_element(config.k_grid.begin(), config.k_grid.end());
  fc.gamma0 = config.gamma0;
  fc.b = config.b;
  fc.B = config.B;
  fc.M = config.M;
  fc.seed = config.seed;
  fc.splitter = SplitterKind::BinaryCart;
  fc.workers = config.workers;
  const Forest full = train_forest(fc, data);
  for (std::size_t k : config.k_grid) {
    Prop2Row row;
    const Forest forest = truncate_forest(full, data, k);
    row.report = bias_variance_decompose(model, data, forest, config.n_test, derive_seed(config.seed, {0x7E57}));
    row.bound_bias = prop2_bias_bound(config.s_star, config.beta, config.gamma0, k);
    row.bound_var = prop2_variance_bound(model.m0(), config.noise, k, config.n, config.p);
    const Estimate& bias = row.report.sq_bias;
    row.pass_bias = bias.mean <= row.bound_bias + 3.0 * bias.se;
    if (config.gamma0 == 1.0) {
      row.bound_bias_gamma1 = prop2_bias_bound_full_columns(config.s_star, config.beta, k);
      row.pass_bias = row.pass_bias && bias.mean <= *row.bound_bias_gamma1 + 3.0 * bias.se;
    }
    row.pass_var = row.report.est_var.mean <= row.bound_var + 3.0 * row.report.est_var.se;
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---- relevance --------------------------------------------------------------------

nlohmann::json RelevanceCheck::to_json() const {
  return {{"feature", feature + 1},
          {"loss", loss.mean},
          {"loss_se", loss.se},
          {"iota", iota.iota},
          {"iota_se", iota.standard_error},
          {"iota_analytic", iota.analytic},
          {"pass", pass}};
}

RelevanceCheck check_theorem2_relevance(const RegressionModel& model, std::size_t j, ForestConfig config,
                                        std::size_t n, std::size_t n_test, std::uint64_t seed,
                                        std::size_t iota_budget) {
  if (j >= model.p()) throw ValidationError("feature", "feature " + std::to_string(j + 1) + " out of range");
  if (std::find(config.excluded_features.begin(), config.excluded_features.end(), j) ==
      config.excluded_features.end()) {
    config.excluded_features.push_back(j);
  }
  const Dataset data = generate_sample(model, n, derive_seed(seed, {0xDA7A}));
  const Forest forest = train_forest(config, data);
  const std::size_t p = model.p();
  const std::vector<double> x = draw_points(model, n_test, derive_seed(seed, {0x7E57}));
  std::vector<double> loss(n_test);
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::span<const double> pt(x.data() + i * p, p);
    const double d = model.eval_unchecked(pt) - forest.predict(pt);
    loss[i] = d * d;
  }
  RelevanceCheck out;
  out.feature = j;
  out.loss = mean_and_se(loss);
  out.iota = relevance_iota(model, j, iota_budget, seed);
  out.pass = out.loss.mean >= out.iota.iota - 3.0 * std::hypot(out.loss.se, out.iota.standard_error);
  return out;
}

CertificateRate condition5_certificate_rate(const RegressionModel& model, const Forest& forest,
                                            const Condition5Params& params, std::size_t workers,
                                            const SearchConfig& search) {
  const auto& trees = forest.trees();
  std::vector<char> ok(trees.size(), 0);
  parallel_for(trees.size(), workers, [&](std::size_t t) {
    ok[t] = verify_condition5(model, trees[t], trees[t].schedule(), params, search).passed ? 1 : 0;
  });
  CertificateRate rate;
  rate.trees = trees.size();
  rate.passed = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  return rate;
}

// ---- sweeps -----------------------------------------------------------------------

SweepResult run_convergence_sweep(const SweepConfig& config) {
  if (config.n_grid.empty() || config.gamma0_grid.empty()) throw ValidationError("sweep", "empty sweep");
  const RegressionModel model = make_model(config.model_id, config.model_params);
  SweepResult result;
  result.model_id = model.id();
  result.p = model.p();
  result.s_star = model.active().size();

  for (std::size_t n : config.n_grid) {
    for (double gamma0 : config.gamma0_grid) {
      std::vector<std::size_t> ks = config.k_grid;
      if (ks.empty()) {
        ks.push_back(static_cast<std::size_t>(std::floor(config.c_height * std::log2(static_cast<double>(n)))));
      }
      try {
        if (n == 0) throw ValidationError("sweep.n_grid", "sample sizes must be positive");
        const Dataset data = generate_sample(model, n, derive_seed(config.seed, {0xDA7A, n}));
        ForestConfig fc = config.forest;
        fc.gamma0 = gamma0;
        fc.k = *std::max_element(ks.begin(), ks.end());
        fc.seed = derive_seed(config.seed, {0xF0E5, n});
        const Forest full = train_forest(fc, data);
        for (std::size_t k : ks) {
          SweepRow row{n, k, gamma0, std::nullopt, {}};
          row.report = bias_variance_decompose(model, data, truncate_forest(full, data, k), config.n_test,
                                               derive_seed(config.seed, {0x7E57, n}));
          result.rows.push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        for (std::size_t k : ks) result.rows.push_back(SweepRow{n, k, gamma0, std::nullopt, e.what()});
      }
    }
  }

  // Descriptive log-log slopes of total loss against n.
  std::map<std::pair<double, long long>, std::vector<std::pair<double, double>>> groups;
  for (const SweepRow& r : result.rows) {
    if (!r.report || !(r.report->total_loss.mean > 0.0)) continue;
    const long long key = config.k_grid.empty() ? -1 : static_cast<long long>(r.k);
    groups[{r.gamma0, key}].emplace_back(std::log(static_cast<double>(r.n)), std::log(r.report->total_loss.mean));
  }
  for (const auto& [key, pts] : groups) {
    double mx = 0.0, my = 0.0;
    for (const auto& [a, b] : pts) {
      mx += a;
      my += b;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [a, b] : pts) {
      sxx += (a - mx) * (a - mx);
      sxy += (a - mx) * (b - my);
    }
    if (sxx <= 0.0) continue;
    nlohmann::json s = {{"gamma0", key.first}, {"points", pts.size()}, {"slope", sxy / sxx}};
    s["k"] = key.second < 0 ? nlohmann::json("floor(c_height log2 n)") : nlohmann::json(key.second);
    result.slopes.push_back(s);
  }
  return result;
}

}  // namespace sidforest
