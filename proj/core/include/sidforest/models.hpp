#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidforest/dataset.hpp"
#include "sidforest/geometry.hpp"
#include "sidforest/rng.hpp"

namespace sidforest {

/// Per-coordinate feature law. Coordinates are independent.
enum class FeatureLaw { Uniform, Bernoulli };

enum class ModelKind {
  Indicator,
  SparseQuadratic,
  SmoothMonotoneAdditive,
  AdditiveOracle,
  BinaryLinear,
  Logistic,
  PolynomialInteraction,
  PiecewiseLinearAdditive,
  IndicatorCombination,
  SaddleCounterexample,
  User,
};

std::string to_string(ModelKind kind);
std::string to_string(FeatureLaw law);

/// Conditional moments of m on a cell, as returned by user-supplied oracles.
struct UserMoments {
  double probability = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Everything needed to build a RegressionModel. The registry fills this in
/// for the built-in kinds; user models fill it in directly.
struct ModelSpec {
  std::string id;
  ModelKind kind = ModelKind::User;
  std::size_t p = 1;
  FeatureLaw law = FeatureLaw::Uniform;
  /// Certified bound on sup |m| over the cube.
  double m0 = 1.0;
  /// Noise is uniform on [-noise, noise]; zero means noiseless.
  double noise = 0.0;

  std::function<double(std::span<const double>)> function;
  /// 0-based coordinates m depends on.
  std::vector<std::size_t> active;
  /// Interior discontinuity/kink locations per coordinate (size p or empty).
  std::vector<std::vector<double>> breakpoints;
  /// Gauss-Legendre nodes per smooth piece per active coordinate.
  int quadrature_nodes = 32;

  /// When set, m(x) = intercept + sum_j component(j, x_j) over active j.
  bool additive = false;
  double intercept = 0.0;
  std::function<double(std::size_t, double)> component;

  /// Optional user conditional-moment oracle; overrides quadrature.
  std::function<UserMoments(const Cell&)> moments;

  /// SID constant established analytically for this model, when one is known.
  std::optional<double> claimed_alpha;
  std::string claimed_alpha_formula;
  /// Resolved parameters (all defaults explicit).
  nlohmann::json params = nlohmann::json::object();
};

/// A registered regression function with its feature law and noise law.
/// Immutable and cheap to copy (shared callables).
class RegressionModel {
 public:
  /// Validates the spec and spot-checks |m| <= m0 on 4096 quasi-random points.
  explicit RegressionModel(ModelSpec spec);

  const std::string& id() const noexcept { return spec_.id; }
  ModelKind kind() const noexcept { return spec_.kind; }
  std::size_t p() const noexcept { return spec_.p; }
  FeatureLaw law() const noexcept { return spec_.law; }
  double m0() const noexcept { return spec_.m0; }
  double noise() const noexcept { return spec_.noise; }
  bool additive() const noexcept { return spec_.additive; }
  double intercept() const noexcept { return spec_.intercept; }
  int quadrature_nodes() const noexcept { return spec_.quadrature_nodes; }
  std::span<const std::size_t> active() const noexcept { return spec_.active; }
  bool depends_on(std::size_t j) const noexcept;
  std::span<const double> breakpoints(std::size_t j) const noexcept;
  const std::optional<double>& claimed_alpha() const noexcept { return spec_.claimed_alpha; }
  const std::string& claimed_alpha_formula() const noexcept { return spec_.claimed_alpha_formula; }
  const nlohmann::json& params() const noexcept { return spec_.params; }
  bool has_user_moments() const noexcept { return static_cast<bool>(spec_.moments); }
  UserMoments user_moments(const Cell& cell) const { return spec_.moments(cell); }

  /// m(point); throws ValidationError when the point is outside the cube.
  double eval(std::span<const double> point) const;
  /// m(point) without validation (hot loops).
  double eval_unchecked(std::span<const double> point) const { return spec_.function(point); }
  /// Additive component m_j(x); only valid for additive models.
  double component(std::size_t j, double x) const { return spec_.component(j, x); }

  /// Copy of this model with a different noise half-width.
  RegressionModel with_noise(double noise) const;

  nlohmann::json describe() const;

 private:
  ModelSpec spec_;
};

inline double eval_model(const RegressionModel& model, std::span<const double> point) { return model.eval(point); }

/// n i.i.d. draws (x_i, m(x_i) + eps_i); deterministic in (model, n, seed).
Dataset generate_sample(const RegressionModel& model, std::size_t n, std::uint64_t seed);

/// One draw of X from the model's feature law.
void draw_features(const RegressionModel& model, Rng& rng, std::span<double> out);

// ---- registry -------------------------------------------------------------

struct RegistryEntry {
  std::string id;
  ModelKind kind;
  std::string label;
  std::string description;
  /// name -> {"type", "default", "description"}
  nlohmann::json parameters;
  std::string sid_constant;
};

const std::vector<RegistryEntry>& model_registry();

/// Builds a registered model. `params` may hold any subset of the entry's
/// parameters plus "p" and "noise"; missing values take defaults.
/// Unknown ids throw ValidationError listing the closest ids.
RegressionModel make_model(const std::string& id, const nlohmann::json& params = nlohmann::json::object());

/// Registry listing: ids, parameter schemas and SID constants.
nlohmann::json describe_models();

/// Up to three registered ids closest to `id`, closest first.
std::vector<std::string> suggest_model_ids(const std::string& id);

// Direct builders used by tests and the registry.
RegressionModel make_indicator_model(std::size_t p, double b, double noise = 0.0);
RegressionModel make_binary_linear_model(std::size_t p, std::size_t s_star, double beta, double noise = 0.0);
/// m(x) = beta0 + sum_j linear[j] x_j + sum over (l, j, coef) coef x_l x_j (0-based l, j).
struct QuadraticTerm {
  std::size_t first = 0;
  std::size_t second = 0;
  double coefficient = 0.0;
};
RegressionModel make_sparse_quadratic_model(std::size_t p, double beta0, std::vector<double> linear,
                                            std::vector<QuadraticTerm> interactions, double noise = 0.0);
RegressionModel make_logistic_model(std::size_t p, std::vector<double> beta, double noise = 0.0);
RegressionModel make_saddle_model(std::size_t p, double noise = 0.0);

}  // namespace sidforest
