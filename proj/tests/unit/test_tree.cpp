#include <gtest/gtest.h>

#include <random>

#include "sidforest/errors.hpp"
#include "sidforest/models.hpp"
#include "sidforest/population.hpp"
#include "sidforest/tree.hpp"
#include "support/oracles.hpp"

using namespace sidforest;

namespace {

std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> f(p);
  for (std::size_t j = 0; j < p; ++j) f[j] = j;
  return f;
}

ThetaSchedule full_schedule(std::size_t p, std::size_t k) {
  return ThetaSchedule(p, k, std::vector<std::vector<std::size_t>>((std::size_t{1} << k) - 1, all_features(p)));
}

Tree hand_tree(std::size_t p, const ThetaSchedule& schedule, const std::vector<Split>& splits) {
  const std::size_t internal = splits.size();
  std::vector<TreeNode> nodes(2 * internal + 1);
  nodes[0].cell = Cell::unit(p);
  for (std::size_t h = 0; h < internal; ++h) {
    nodes[h].split = splits[h];
    auto [l, r] = nodes[h].cell.split(splits[h]);
    nodes[2 * h + 1].cell = l;
    nodes[2 * h + 2].cell = r;
  }
  return Tree(p, schedule, nodes, {});
}

}  // namespace

TEST(Tree, TwoPointStump) {
  const Dataset d(1, {0.2, 0.8}, {0.0, 1.0});
  const Tree t = grow_tree(d, d.all_indices(), full_schedule(1, 1), SplitterKind::SampleCart, 1);
  ASSERT_EQ(t.leaf_count(), 2u);
  EXPECT_EQ(*t.node(0).split, (Split{0, 0.8}));
  const std::vector<double> at_low{0.2}, at_high{0.8};
  EXPECT_EQ(tree_predict(t, d, d.all_indices(), at_low), 0.0);
  EXPECT_EQ(tree_predict(t, d, d.all_indices(), at_high), 1.0);
}

TEST(Tree, ConstantResponsesPredictTheConstant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(150);
  for (auto& v : x) v = u(rng);
  const Dataset d(3, x, std::vector<double>(50, -1.25));
  const Tree t = grow_tree(d, d.all_indices(), full_schedule(3, 3), SplitterKind::SampleCart, 4);
  const auto means = leaf_sample_means(t, d, d.all_indices());
  for (std::size_t i = 0; i < d.n(); ++i) {
    EXPECT_EQ(means[t.find_leaf(d.row(i))], -1.25);
    EXPECT_EQ(tree_predict(t, d, d.all_indices(), d.row(i)), -1.25);
  }
}

TEST(Tree, BinarySplitterExhaustsIntoTrivialSplits) {
  const RegressionModel m = make_binary_linear_model(2, 2, 1.0);
  const Dataset d = generate_sample(m, 200, 5);
  const Tree t = grow_tree(d, d.all_indices(), full_schedule(2, 4), SplitterKind::BinaryCart, 1);
  // Two levels use both coordinates; every split below is trivial.
  for (std::size_t h = 0; h < 3; ++h) EXPECT_FALSE(t.node(h).trivial) << h;
  for (std::size_t h = 3; h < 15; ++h) {
    EXPECT_TRUE(t.node(h).trivial) << h;
    EXPECT_EQ(t.node(h).split->threshold, 1.0);
  }
  // A trivial split sends the whole cell to the right, leaving the left empty.
  EXPECT_TRUE(t.node(7).cell.empty() || t.node(8).cell.empty());
}

TEST(Tree, PredictionConventions) {
  const Dataset single(2, {0.3, 0.6}, {4.5});
  const Tree t1 = grow_tree(single, single.all_indices(), full_schedule(2, 2), SplitterKind::SampleCart, 1);
  const std::vector<double> x{0.3, 0.6};
  EXPECT_EQ(tree_predict(t1, single, single.all_indices(), x), 4.5);

  const Dataset d(1, {0.2, 0.8}, {1.0, 3.0});
  const Tree t = hand_tree(1, full_schedule(1, 1), {{0, 0.1}});
  const std::vector<double> left{0.05};
  EXPECT_EQ(tree_predict(t, d, d.all_indices(), left), 0.0);
}

TEST(Tree, ChildrenAreSplitsOfTheirParents) {
  const RegressionModel m = make_model("sparse-quadratic", {{"noise", 0.2}});
  const Dataset d = generate_sample(m, 300, 1);
  const Tree t = grow_tree(d, d.all_indices(), draw_theta_schedule(3, 2.0 / 3.0, 4, 3), SplitterKind::SampleCart, 7);
  EXPECT_EQ(t.node(0).cell, Cell::unit(3));
  for (std::size_t h = 0; h + 1 < t.leaf_count(); ++h) {
    const auto [l, r] = t.node(h).cell.split(*t.node(h).split);
    EXPECT_EQ(t.node(2 * h + 1).cell, l);
    EXPECT_EQ(t.node(2 * h + 2).cell, r);
    const auto allowed = t.schedule().node(h);
    EXPECT_NE(std::find(allowed.begin(), allowed.end(), t.node(h).split->feature), allowed.end());
  }
  for (std::size_t s = 0; s < t.leaf_count(); ++s) EXPECT_FALSE(t.leaf(s).split.has_value());
}

TEST(Tree, TruncationEqualsGrowingShorter) {
  const RegressionModel m = make_model("additive-oracle");
  const Dataset d = generate_sample(m, 400, 9);
  const ThetaSchedule tall = draw_theta_schedule(5, 0.4, 5, 11);
  const Tree t = grow_tree(d, d.all_indices(), tall, SplitterKind::SampleCart, 3);
  for (std::size_t k = 0; k <= 5; ++k) {
    const Tree shorter = grow_tree(d, d.all_indices(), draw_theta_schedule(5, 0.4, k, 11), SplitterKind::SampleCart, 3);
    EXPECT_EQ(t.truncated(k), shorter) << k;
  }
  EXPECT_THROW((void)t.truncated(6), ValidationError);
}

TEST(Tree, SameScheduleSameTree) {
  const RegressionModel m = make_model("sparse-quadratic", {{"noise", 0.5}});
  const Dataset d = generate_sample(m, 200, 2);
  const ThetaSchedule s = draw_theta_schedule(3, 1.0 / 3.0, 3, 5);
  EXPECT_EQ(grow_tree(d, d.all_indices(), s, SplitterKind::SampleCart, 8, 0),
            grow_tree(d, d.all_indices(), s, SplitterKind::SampleCart, 8, 0));
  EXPECT_NE(grow_tree(d, d.all_indices(), s, SplitterKind::SampleCart, 8, 0),
            grow_tree(d, d.all_indices(), s, SplitterKind::SampleCart, 9, 0));
}

TEST(Tree, PopulationEstimateExamples) {
  const RegressionModel ind = make_indicator_model(2, 0.4);
  const Tree root = hand_tree(2, full_schedule(2, 0), {});
  const std::vector<double> pt{0.9, 0.1};
  EXPECT_NEAR(population_tree_estimate(ind, root, pt), 0.6, 1e-15);

  const RegressionModel lin = oracle::poly_model(oracle::Poly::variable(3, 0));
  const Tree half = hand_tree(3, full_schedule(3, 1), {{0, 0.5}});
  const std::vector<double> low{0.1, 0.9, 0.9};
  EXPECT_NEAR(population_tree_estimate(lin, half, low), 0.25, 1e-15);

  const Tree cut = hand_tree(2, full_schedule(2, 1), {{0, 0.7}});
  EXPECT_NEAR(population_tree_estimate(ind, cut, pt), 1.0, 1e-15);
}

TEST(Tree, ApproximationErrorMatchesMonteCarlo) {
  const RegressionModel m = make_model("logistic");
  const ThetaSchedule s = full_schedule(3, 3);
  const Tree t = grow_theoretical_tree(m, s);
  const auto means = leaf_population_means(m, t);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  std::vector<double> x(3);
  for (int i = 0; i < n; ++i) {
    for (auto& v : x) v = u(rng);
    const double e = m.eval(x) - means[t.find_leaf(x)];
    sum += e * e;
    sum_sq += e * e * e * e;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_NEAR(tree_approximation_error(m, t), mean, 4.0 * se);
}

TEST(Tree, SemiSampleTrimming) {
  const RegressionModel m = make_model("additive-oracle", {{"p", 2}, {"s_star", 2}});
  const ThetaSchedule s = full_schedule(2, 2);
  const Tree t = hand_tree(2, s, {{0, 1e-4}, {1, 0.5}, {1, 0.3}});

  EXPECT_EQ(trim_to_semi_sample(t, m, s, 0.0), t);

  // Only the 1e-4 branch falls under zeta = 1e-3.
  const Tree trimmed = trim_to_semi_sample(t, m, s, 1e-3);
  for (std::size_t h : {0u, 2u, 5u, 6u}) EXPECT_EQ(trimmed.node(h), t.node(h)) << h;
  EXPECT_TRUE(trimmed.node(1).regrown);
  EXPECT_EQ(trimmed.node(1).cell, t.node(1).cell);
  const TheoreticalSplit expect = theoretical_cart_split(m, t.node(1).cell, s.node(1));
  EXPECT_EQ(*trimmed.node(1).split, expect.split);
  EXPECT_TRUE(trimmed.node(3).regrown);
  EXPECT_TRUE(trimmed.node(4).regrown);

  // zeta = 1 leaves the root split alone and regrows everything below it.
  const Tree below = trim_to_semi_sample(t, m, s, 1.0);
  EXPECT_EQ(below.node(0), t.node(0));
  for (std::size_t h = 1; h < 7; ++h) EXPECT_TRUE(below.node(h).regrown) << h;

  EXPECT_THROW(trim_to_semi_sample(t, m, s, 1.5), ValidationError);
}

TEST(Tree, ParseSplitter) {
  EXPECT_EQ(parse_splitter("sample"), SplitterKind::SampleCart);
  EXPECT_EQ(parse_splitter("binary"), SplitterKind::BinaryCart);
  EXPECT_EQ(parse_splitter("theoretical"), SplitterKind::Theoretical);
  EXPECT_THROW(parse_splitter("gini"), ValidationError);
}
