#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "sidforest/errors.hpp"
#include "sidforest/models.hpp"
#include "sidforest/rng.hpp"
#include "support/oracles.hpp"

using namespace sidforest;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "sidforest-tests";
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

}  // namespace

TEST(Dataset, SortedIndicesArePermutationsInFeatureOrder) {
  const Dataset d(2, {0.5, 0.1, 0.2, 0.9, 0.5, 0.3, 0.0, 0.3}, {1, 2, 3, 4});
  for (std::size_t j = 0; j < 2; ++j) {
    const auto idx = d.sorted_by(j);
    ASSERT_EQ(idx.size(), 4u);
    std::vector<Index> sorted(idx.begin(), idx.end());
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<Index>{0, 1, 2, 3}));
    for (std::size_t r = 1; r < idx.size(); ++r) {
      const double a = d.x(idx[r - 1], j), b = d.x(idx[r], j);
      EXPECT_TRUE(a < b || (a == b && idx[r - 1] < idx[r]));
    }
  }
}

TEST(Dataset, RejectsOutOfRangeFeaturesNamingTheRow) {
  try {
    Dataset(1, {0.2, 1.5}, {0, 1});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "row 2");
  }
  EXPECT_THROW(Dataset(1, {}, {}), ValidationError);
  EXPECT_THROW(Dataset(2, {0.1}, {0.0}), DimensionError);
}

TEST(Data, BinaryLinearSampleIsBinaryAndNoiseless) {
  const RegressionModel m = make_binary_linear_model(6, 3, 2.0);
  const Dataset d = generate_sample(m, 4, 123);
  for (std::size_t i = 0; i < d.n(); ++i) {
    double ones = 0.0;
    for (std::size_t j = 0; j < d.p(); ++j) {
      const double v = d.x(i, j);
      EXPECT_TRUE(v == 0.0 || v == 1.0);
      if (j < 3) ones += v;
    }
    EXPECT_EQ(d.y(i), 2.0 * ones);
  }
}

TEST(Data, IndicatorSampleMeanNearHalf) {
  const RegressionModel m = make_indicator_model(3, 0.5);
  const Dataset d = generate_sample(m, 1000, 77);
  const auto y = d.responses();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 1000.0;
  const double sigma_hat = std::sqrt(mean * (1.0 - mean) / 1000.0);
  EXPECT_NEAR(mean, 0.5, 3.0 * sigma_hat);
}

TEST(Data, SameSeedSameBits) {
  const RegressionModel m = make_model("sparse-quadratic", {{"noise", 0.3}});
  const Dataset a = generate_sample(m, 200, 5);
  const Dataset b = generate_sample(m, 200, 5);
  const Dataset c = generate_sample(m, 200, 6);
  EXPECT_TRUE(std::equal(a.features().begin(), a.features().end(), b.features().begin()));
  EXPECT_TRUE(std::equal(a.responses().begin(), a.responses().end(), b.responses().begin()));
  EXPECT_FALSE(std::equal(a.responses().begin(), a.responses().end(), c.responses().begin()));
}

TEST(Data, NoiseIsBoundedAndSymmetric) {
  const RegressionModel m = make_indicator_model(2, 0.5, 0.5);
  const Dataset d = generate_sample(m, 20000, 8);
  double sum = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double eps = d.y(i) - m.eval(d.row(i));
    EXPECT_LE(std::abs(eps), 0.5);
    sum += eps;
  }
  // Uniform on [-0.5, 0.5] has sd 1/sqrt(12).
  EXPECT_NEAR(sum / 20000.0, 0.0, 4.0 / std::sqrt(12.0 * 20000.0));
}

TEST(Data, EvalExamples) {
  const std::vector<double> x{0.7, 0.1, 0.2};
  EXPECT_EQ(make_indicator_model(3, 0.5).eval(x), 1.0);
  std::vector<double> bx(10, 0.0);
  bx[0] = bx[1] = 1.0;
  EXPECT_EQ(make_binary_linear_model(10, 3, 2.0).eval(bx), 4.0);
  const RegressionModel logistic = make_model("logistic", {{"beta", {1.0}}});
  std::vector<double> zero(logistic.p(), 0.0);
  EXPECT_DOUBLE_EQ(logistic.eval(zero), 0.5);
  const std::vector<double> outside{1.2, 0.0, 0.0};
  EXPECT_THROW(make_indicator_model(3, 0.5).eval(outside), ValidationError);
}

TEST(Data, CsvRoundTripAndErrors) {
  const Dataset d = load_csv(temp_file("two.csv", "x1,y\n0.2,0\n0.8,1\n"));
  EXPECT_EQ(d.n(), 2u);
  EXPECT_EQ(d.p(), 1u);
  EXPECT_EQ(d.x(1, 0), 0.8);
  EXPECT_EQ(d.y(1), 1.0);

  try {
    load_csv(temp_file("bad.csv", "x1,y\n0.2,0\n1.5,1\n"));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(e.field().find("3"), std::string::npos);
  }
  try {
    load_csv(temp_file("empty.csv", ""));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no observations"), std::string::npos);
  }
  try {
    load_csv(temp_file("ragged.csv", "x1,x2,y\n0.1,0.2,3\n0.1,4\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }

  const RegressionModel m = make_model("additive-oracle", {{"noise", 0.1}});
  const Dataset g = generate_sample(m, 50, 2);
  const fs::path out = fs::temp_directory_path() / "sidforest-tests" / "roundtrip.csv";
  write_csv(g, out);
  const Dataset back = load_csv(out);
  EXPECT_TRUE(std::equal(g.features().begin(), g.features().end(), back.features().begin()));
  EXPECT_TRUE(std::equal(g.responses().begin(), g.responses().end(), back.responses().begin()));
}

TEST(Data, RegistryListsEveryModelFamily) {
  const auto& reg = model_registry();
  EXPECT_GE(reg.size(), 9u);
  const auto listing = describe_models();
  ASSERT_EQ(listing["models"].size(), reg.size());
  for (const auto& m : listing["models"]) {
    for (const char* key : {"id", "label", "description", "feature_law", "parameters", "sid_constant"}) {
      EXPECT_TRUE(m.contains(key)) << key;
    }
  }
}

TEST(Data, UnknownModelIdSuggestsNeighbours) {
  try {
    make_model("binary-linaer");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "model.id");
    EXPECT_NE(std::string(e.what()).find("binary-linear"), std::string::npos);
  }
  const auto s = suggest_model_ids("indicatr");
  ASSERT_FALSE(s.empty());
  EXPECT_EQ(s.front(), "indicator");
  EXPECT_LE(s.size(), 3u);
}

TEST(Data, UnknownParameterRejected) {
  try {
    make_model("indicator", {{"bogus", 1}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "model.params.bogus");
  }
}

TEST(Data, M0BoundsEveryRegisteredModelOnAMillionPoints) {
  for (const auto& entry : model_registry()) {
    const RegressionModel m = make_model(entry.id);
    std::vector<double> x(m.p());
    double sup = 0.0;
    const std::uint64_t points = 1000000;
    for (std::uint64_t i = 1; i <= points; ++i) {
      for (std::size_t j = 0; j < m.p(); ++j) {
        const double h = halton(i + 4099, j);
        x[j] = m.law() == FeatureLaw::Bernoulli ? (h < 0.5 ? 0.0 : 1.0) : h;
      }
      sup = std::max(sup, std::abs(m.eval_unchecked(x)));
    }
    EXPECT_LE(sup, m.m0()) << entry.id;
  }
}

TEST(Data, FeatureMarginalsPassKolmogorovSmirnov) {
  const std::size_t n = 100000;
  // Critical value for significance 1e-3: sqrt(-ln(5e-4) / 2) / sqrt(n).
  const double crit = std::sqrt(-std::log(5e-4) / 2.0) / std::sqrt(static_cast<double>(n));
  const RegressionModel u = make_model("smooth-monotone-additive");
  const Dataset du = generate_sample(u, n, 31);
  for (std::size_t j = 0; j < du.p(); ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = du.x(i, j);
    EXPECT_LT(oracle::ks_statistic(col, [](double t) { return t; }), crit) << "feature " << j + 1;
  }
  const RegressionModel b = make_binary_linear_model(5, 2, 1.0);
  const Dataset db = generate_sample(b, n, 32);
  for (std::size_t j = 0; j < db.p(); ++j) {
    double ones = 0.0;
    for (std::size_t i = 0; i < n; ++i) ones += db.x(i, j);
    // KS distance for a two-point law is |p_hat - 1/2|.
    EXPECT_LT(std::abs(ones / static_cast<double>(n) - 0.5), crit) << "feature " << j + 1;
  }
}

TEST(Data, UserModelWithViolatedBoundIsRejected) {
  ModelSpec spec;
  spec.id = "too-big";
  spec.p = 2;
  spec.m0 = 0.5;
  spec.active = {0};
  spec.function = [](std::span<const double> x) { return x[0]; };
  try {
    RegressionModel m(spec);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "model.m0");
  }
}
