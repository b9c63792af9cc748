#include <gtest/gtest.h>

#include <cmath>

#include "sidforest/errors.hpp"
#include "sidforest/evaluation.hpp"
#include "sidforest/rng.hpp"
#include "support/oracles.hpp"

using namespace sidforest;

namespace {

ForestConfig forest(std::size_t k, double gamma0, std::size_t M, SplitterKind splitter = SplitterKind::SampleCart) {
  ForestConfig c;
  c.k = k;
  c.gamma0 = gamma0;
  c.M = M;
  c.seed = 5;
  c.splitter = splitter;
  return c;
}

double combined_se(const Estimate& a, const Estimate& b) { return std::hypot(a.se, b.se); }

}  // namespace

TEST(Evaluation, MeanAndStandardError) {
  const Estimate e = mean_and_se({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(mean_and_se({7.0}).se, 0.0);
}

TEST(Evaluation, ConstantModelHasNoBiasOrVariance) {
  const RegressionModel m = oracle::poly_model(oracle::Poly::constant(2, 0.7));
  const Dataset d = generate_sample(m, 100, 1);
  const auto r = bias_variance_decompose(m, d, forest(0, 1.0, 3), 200, 9);
  EXPECT_EQ(r.sq_bias.mean, 0.0);
  EXPECT_EQ(r.est_var.mean, 0.0);
  EXPECT_EQ(r.total_loss.mean, 0.0);
  // Deeper trees keep zero bias. Their variance need not vanish: with
  // constant responses every threshold ties, and a leaf left without samples
  // predicts 0.
  const auto deep = bias_variance_decompose(m, d, forest(3, 1.0, 3), 200, 9);
  EXPECT_EQ(deep.sq_bias.mean, 0.0);
  EXPECT_EQ(deep.sq_bias_exact.mean, 0.0);
}

TEST(Evaluation, HeightZeroBiasIsTheVariance) {
  const RegressionModel m = make_binary_linear_model(6, 2, 1.0);
  const Dataset d = generate_sample(m, 500, 2);
  const auto r = bias_variance_decompose(m, d, forest(0, 1.0, 1, SplitterKind::BinaryCart), 4000, 3);
  EXPECT_NEAR(r.sq_bias_exact.mean, 0.5, 1e-12);
  EXPECT_NEAR(r.sq_bias.mean, 0.5, 3.0 * r.sq_bias.se);
}

TEST(Evaluation, FullHeightBinaryTreesHaveNoBias) {
  const RegressionModel m = make_binary_linear_model(8, 3, 1.0);
  const Dataset d = generate_sample(m, 3000, 4);
  const auto r = bias_variance_decompose(m, d, forest(3, 1.0, 5, SplitterKind::BinaryCart), 2000, 5);
  EXPECT_LE(r.sq_bias.mean, 3.0 * r.sq_bias.se + 1e-12);
  EXPECT_NEAR(r.sq_bias_exact.mean, 0.0, 1e-12);
}

TEST(Evaluation, DecompositionAndAggregationInequalities) {
  for (const char* id : {"sparse-quadratic", "additive-oracle", "logistic", "indicator"}) {
    const RegressionModel m = make_model(id, {{"noise", 0.3}});
    const Dataset d = generate_sample(m, 400, 6);
    const auto r = bias_variance_decompose(m, d, forest(3, 0.5, 8), 1000, 7);
    EXPECT_TRUE(r.decomposition_holds()) << id;
    EXPECT_LE(r.total_loss.mean, r.per_tree_loss.mean + 3.0 * combined_se(r.total_loss, r.per_tree_loss)) << id;
    // Monte Carlo and exact integration target the same squared bias.
    EXPECT_NEAR(r.sq_bias.mean, r.sq_bias_exact.mean, 4.0 * combined_se(r.sq_bias, r.sq_bias_exact) + 1e-9) << id;
  }
}

TEST(Evaluation, TruncatedForestEqualsShorterTraining) {
  const RegressionModel m = make_model("additive-oracle", {{"noise", 0.2}});
  const Dataset d = generate_sample(m, 300, 8);
  ForestConfig tall = forest(4, 0.4, 4);
  tall.B = 2;
  tall.b = 0.6;
  const Forest full = train_forest(tall, d);
  ForestConfig shorter = tall;
  shorter.k = 2;
  const Forest direct = train_forest(shorter, d);
  const Forest cut = truncate_forest(full, d, 2);
  EXPECT_EQ(cut.trees(), direct.trees());
  EXPECT_EQ(cut.schedules(), direct.schedules());
}

TEST(Evaluation, EnvelopeExamples) {
  const RegressionModel ind = make_model("indicator");
  const Theorem3Table t = check_theorem3_bound(ind, 1.0, 1.0, 2, 5, 1, 1);
  EXPECT_NEAR(t.rows[0].bias.mean, 0.25, 1e-12);
  EXPECT_NEAR(t.rows[1].bias.mean, 0.0, 1e-12);
  EXPECT_TRUE(t.all_pass());

  const RegressionModel bin = make_binary_linear_model(6, 2, 1.0);
  const Theorem3Table b = check_theorem3_bound(bin, 2.0, 1.0, 3, 10, 2, 1);
  EXPECT_NEAR(b.variance, 0.5, 1e-15);
  EXPECT_NEAR(b.rows[2].bound, 0.125, 1e-15);
  EXPECT_LE(b.rows[2].bias.mean, 0.125 + 3.0 * b.rows[2].bias.se);
  EXPECT_TRUE(b.all_pass());

  EXPECT_THROW(check_theorem3_bound(bin, 0.5, 1.0, 1, 1, 1), ValidationError);
}

TEST(Evaluation, ConvergenceBoundArithmetic) {
  EXPECT_DOUBLE_EQ(prop2_bias_bound(2, 1.0, 1.0, 0), 1.0);
  EXPECT_DOUBLE_EQ(prop2_bias_bound(4, 2.0, 0.5, 2), 2.0 * std::pow(0.875, 2) * 4.0);
  EXPECT_EQ(prop2_bias_bound_full_columns(3, 1.0, 1), 1.0);
  EXPECT_EQ(prop2_bias_bound_full_columns(3, 1.0, 5), 0.0);
  const double v1 = prop2_variance_bound(3.0, 0.5, 1, 5000, 10);
  const double v2 = prop2_variance_bound(3.0, 0.5, 2, 5000, 10);
  EXPECT_DOUBLE_EQ(v2, 2.0 * v1);
  EXPECT_NEAR(v1, 2.0 * 100.0 * 2.0 * std::pow(std::log(5000.0), 2.01) / 5000.0, 1e-12);
}

TEST(Evaluation, BinaryBoundTableExamples) {
  Prop2Config c;
  c.s_star = 2;
  c.p = 6;
  c.n = 2000;
  c.k_grid = {0, 1, 2};
  c.M = 5;
  c.n_test = 1000;
  c.workers = 1;
  const Prop2Table t = check_prop2_bounds(c);
  EXPECT_EQ(t.variance, 0.5);
  EXPECT_EQ(t.root_sup_ii, 0.25);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_NEAR(t.rows[0].report.sq_bias_exact.mean, 0.5, 1e-12);
  EXPECT_LE(t.rows[2].report.sq_bias.mean, 3.0 * t.rows[2].report.sq_bias.se + 1e-12);
  EXPECT_TRUE(t.all_pass());
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GT(t.rows[i].bound_var, t.rows[i - 1].bound_var);
}

TEST(Evaluation, RelevanceLowerBound) {
  const RegressionModel m = oracle::poly_model(oracle::Poly::variable(2, 0));
  ForestConfig c = forest(3, 1.0, 4);
  const RelevanceCheck r = check_theorem2_relevance(m, 0, c, 1000, 2000, 3, 20000);
  EXPECT_NEAR(r.iota.iota, 1.0 / 12.0, 4.0 * r.iota.standard_error + 1e-12);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.loss.mean, 1.0 / 12.0 - 3.0 * r.loss.se);

  const RegressionModel bin = make_binary_linear_model(6, 3, 1.0);
  const RelevanceCheck rb = check_theorem2_relevance(bin, 1, forest(3, 1.0, 2, SplitterKind::BinaryCart), 2000, 2000, 4);
  EXPECT_NEAR(rb.iota.iota, 0.25, 1e-12);
  EXPECT_TRUE(rb.pass);
}

TEST(Evaluation, CertificateRateOnTheBinaryModel) {
  const RegressionModel m = make_binary_linear_model(10, 3, 1.0);
  const Dataset d = generate_sample(m, 5000, 11);
  ForestConfig c = forest(4, 0.5, 50, SplitterKind::BinaryCart);
  const Forest f = train_forest(c, d);
  const CertificateRate rate = condition5_certificate_rate(m, f, {0.0, 1.0 + 1e-9});
  EXPECT_EQ(rate.trees, 50u);
  EXPECT_GE(rate.rate(), 0.99);
}

TEST(Evaluation, SweepSinglePointMatchesDirectDecompose) {
  SweepConfig s;
  s.model_id = "sparse-quadratic";
  s.model_params = {{"noise", 0.2}};
  s.n_grid = {300};
  s.k_grid = {2};
  s.gamma0_grid = {2.0 / 3.0};
  s.forest = forest(2, 1.0, 4);
  s.n_test = 500;
  s.seed = 21;
  const SweepResult r = run_convergence_sweep(s);
  ASSERT_EQ(r.rows.size(), 1u);
  ASSERT_TRUE(r.rows[0].report.has_value());

  const RegressionModel m = make_model(s.model_id, s.model_params);
  const Dataset d = generate_sample(m, 300, derive_seed(21, {0xDA7A, 300}));
  ForestConfig fc = s.forest;
  fc.gamma0 = 2.0 / 3.0;
  fc.seed = derive_seed(21, {0xF0E5, 300});
  const auto direct = bias_variance_decompose(m, d, fc, 500, derive_seed(21, {0x7E57, 300}));
  EXPECT_EQ(r.rows[0].report->total_loss.mean, direct.total_loss.mean);
  EXPECT_EQ(r.rows[0].report->sq_bias.mean, direct.sq_bias.mean);
  EXPECT_EQ(r.rows[0].report->est_var.mean, direct.est_var.mean);
}

TEST(Evaluation, SweepErrors) {
  SweepConfig s;
  s.model_id = "indicator";
  try {
    run_convergence_sweep(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("empty sweep"), std::string::npos);
  }
  // A failing grid point is recorded and the sweep continues.
  s.n_grid = {0, 200};
  s.k_grid = {1};
  s.n_test = 100;
  const SweepResult r = run_convergence_sweep(s);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[0].report.has_value());
  EXPECT_FALSE(r.rows[0].error.empty());
  EXPECT_TRUE(r.rows[1].report.has_value());
}

TEST(Evaluation, LossDoesNotGrowWithSampleSizeOnTheBinaryModel) {
  SweepConfig s;
  s.model_id = "binary-linear";
  s.model_params = {{"noise", 0.5}};
  s.n_grid = {250, 500, 1000, 2000};
  s.k_grid = {3};
  s.forest = forest(3, 1.0, 4, SplitterKind::BinaryCart);
  s.n_test = 2000;
  const SweepResult r = run_convergence_sweep(s);
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const auto& a = r.rows[i - 1].report->total_loss;
    const auto& b = r.rows[i].report->total_loss;
    EXPECT_LE(b.mean, a.mean + 3.0 * combined_se(a, b)) << r.rows[i].n;
  }
  EXPECT_EQ(r.slopes.size(), 1u);
}
