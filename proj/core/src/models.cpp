#include "sidforest/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "sidforest/errors.hpp"
#include "sidforest/format.hpp"
#include "sidforest/rng.hpp"

namespace sidforest {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Indicator: return "indicator";
    case ModelKind::SparseQuadratic: return "sparse-quadratic";
    case ModelKind::SmoothMonotoneAdditive: return "smooth-monotone-additive";
    case ModelKind::AdditiveOracle: return "additive-oracle";
    case ModelKind::BinaryLinear: return "binary-linear";
    case ModelKind::Logistic: return "logistic";
    case ModelKind::PolynomialInteraction: return "polynomial-interaction";
    case ModelKind::PiecewiseLinearAdditive: return "piecewise-linear-additive";
    case ModelKind::IndicatorCombination: return "indicator-combination";
    case ModelKind::SaddleCounterexample: return "saddle-counterexample";
    case ModelKind::User: return "user";
  }
  return "unknown";
}

std::string to_string(FeatureLaw law) { return law == FeatureLaw::Uniform ? "uniform" : "bernoulli"; }

// ---------------------------------------------------------------------------

RegressionModel::RegressionModel(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.p == 0) throw ValidationError("model.params.p", "p must be at least 1");
  if (!spec_.function) throw ValidationError("model", "model has no regression function");
  if (!(spec_.m0 > 0.0) || !std::isfinite(spec_.m0)) throw ValidationError("model.m0", "M0 must be positive and finite");
  if (!(spec_.noise >= 0.0) || !std::isfinite(spec_.noise)) {
    throw ValidationError("model.params.noise", "noise half-width must be non-negative");
  }
  if (spec_.quadrature_nodes < 1 || spec_.quadrature_nodes > 64) {
    throw ValidationError("model.quadrature_nodes", "quadrature nodes must be in [1, 64]");
  }
  std::sort(spec_.active.begin(), spec_.active.end());
  spec_.active.erase(std::unique(spec_.active.begin(), spec_.active.end()), spec_.active.end());
  for (std::size_t j : spec_.active) {
    if (j >= spec_.p) throw ValidationError("model.active", "active coordinate out of range");
  }
  if (spec_.additive && !spec_.component) throw ValidationError("model", "additive model needs a component function");
  spec_.breakpoints.resize(spec_.p);
  for (auto& bp : spec_.breakpoints) {
    bp.erase(std::remove_if(bp.begin(), bp.end(), [](double b) { return !(b > 0.0 && b < 1.0); }), bp.end());
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  }

  // Spot-check the declared bound on quasi-random points (plus the corners
  // for Bernoulli coordinates, which only take values 0 and 1).
  std::vector<double> x(spec_.p);
  for (std::uint64_t i = 1; i <= 4096; ++i) {
    for (std::size_t j = 0; j < spec_.p; ++j) {
      const double h = halton(i, j);
      x[j] = spec_.law == FeatureLaw::Bernoulli ? (h < 0.5 ? 0.0 : 1.0) : h;
    }
    const double v = spec_.function(x);
    if (!std::isfinite(v) || std::abs(v) > spec_.m0 * (1.0 + 1e-12)) {
      throw ValidationError("model.m0", "|m(x)| = " + format_double(std::abs(v)) + " exceeds declared M0 = " +
                                            format_double(spec_.m0));
    }
  }
}

bool RegressionModel::depends_on(std::size_t j) const noexcept {
  return std::binary_search(spec_.active.begin(), spec_.active.end(), j);
}

std::span<const double> RegressionModel::breakpoints(std::size_t j) const noexcept {
  if (j >= spec_.breakpoints.size()) return {};
  return spec_.breakpoints[j];
}

double RegressionModel::eval(std::span<const double> point) const {
  if (point.size() != spec_.p) {
    throw DimensionError("point has dimension " + std::to_string(point.size()) + ", model has p = " +
                         std::to_string(spec_.p));
  }
  for (std::size_t j = 0; j < point.size(); ++j) {
    if (!(point[j] >= 0.0 && point[j] <= 1.0)) {
      throw ValidationError("point", "coordinate x" + std::to_string(j + 1) + " = " + format_double(point[j]) +
                                         " is outside [0,1]");
    }
  }
  return spec_.function(point);
}

RegressionModel RegressionModel::with_noise(double noise) const {
  ModelSpec s = spec_;
  s.noise = noise;
  s.params["noise"] = noise;
  return RegressionModel(std::move(s));
}

nlohmann::json RegressionModel::describe() const {
  nlohmann::json j;
  j["id"] = spec_.id;
  j["kind"] = to_string(spec_.kind);
  j["p"] = spec_.p;
  j["feature_law"] = to_string(spec_.law);
  j["m0"] = spec_.m0;
  j["noise"] = spec_.noise;
  std::vector<std::size_t> active1;
  for (std::size_t a : spec_.active) active1.push_back(a + 1);
  j["active"] = active1;
  j["additive"] = spec_.additive;
  j["claimed_alpha"] = spec_.claimed_alpha ? nlohmann::json(*spec_.claimed_alpha) : nlohmann::json(nullptr);
  j["params"] = spec_.params;
  return j;
}

// ---------------------------------------------------------------------------

void draw_features(const RegressionModel& model, Rng& rng, std::span<double> out) {
  if (model.law() == FeatureLaw::Bernoulli) {
    for (double& v : out) v = rng.coin() ? 1.0 : 0.0;
  } else {
    for (double& v : out) v = rng.uniform01();
  }
}

Dataset generate_sample(const RegressionModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("n", "sample size must be at least 1");
  const std::size_t p = model.p();
  Rng rng(derive_seed(seed, {0x5A4D, n}));
  std::vector<double> x(n * p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row(x.data() + i * p, p);
    draw_features(model, rng, row);
    const double eps = model.noise() > 0.0 ? model.noise() * (2.0 * rng.uniform01() - 1.0) : 0.0;
    y[i] = model.eval_unchecked(row) + eps;
  }
  return Dataset(p, std::move(x), std::move(y));
}

// ---- parameter helpers ------------------------------------------------------

namespace {

using nlohmann::json;

std::string field(const std::string& name) { return "model.params." + name; }

double get_number(const json& params, const std::string& name, double fallback) {
  if (!params.contains(name)) return fallback;
  const json& v = params.at(name);
  if (!v.is_number()) throw ValidationError(field(name), name + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(field(name), name + " must be finite");
  return d;
}

std::size_t get_count(const json& params, const std::string& name, std::size_t fallback, std::size_t min_value = 1) {
  if (!params.contains(name)) return fallback;
  const json& v = params.at(name);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
    throw ValidationError(field(name), name + " must be an integer >= " + std::to_string(min_value));
  }
  return v.get<std::size_t>();
}

std::vector<double> get_vector(const json& params, const std::string& name, std::vector<double> fallback) {
  if (!params.contains(name)) return fallback;
  const json& v = params.at(name);
  if (!v.is_array()) throw ValidationError(field(name), name + " must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ValidationError(field(name), name + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

double get_noise(const json& params) {
  const double noise = get_number(params, "noise", 0.0);
  if (noise < 0.0) throw ValidationError(field("noise"), "noise must be non-negative");
  return noise;
}

void check_known_keys(const json& params, std::initializer_list<const char*> keys) {
  if (!params.is_object()) throw ValidationError("model.params", "params must be an object");
  for (auto it = params.begin(); it != params.end(); ++it) {
    bool known = it.key() == "p" || it.key() == "noise";
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ValidationError(field(it.key()), "unknown parameter '" + it.key() + "'");
  }
}

std::size_t require_p_at_least(std::size_t p, std::size_t needed) {
  if (p < needed) {
    throw ValidationError(field("p"), "p = " + std::to_string(p) + " is smaller than the " + std::to_string(needed) +
                                          " coordinates the model uses");
  }
  return p;
}

std::vector<std::size_t> first_coordinates(std::size_t s) {
  std::vector<std::size_t> a(s);
  std::iota(a.begin(), a.end(), std::size_t{0});
  return a;
}

}  // namespace

// ---- direct builders ----------------------------------------------------------

RegressionModel make_indicator_model(std::size_t p, double b, double noise) {
  if (!(b >= 0.0 && b <= 1.0)) throw ValidationError(field("b"), "b must lie in [0,1]");
  ModelSpec s;
  s.id = "indicator";
  s.kind = ModelKind::Indicator;
  s.p = p;
  s.noise = noise;
  s.m0 = 1.0;
  s.function = [b](std::span<const double> x) { return x[0] >= b ? 1.0 : 0.0; };
  s.additive = true;
  s.component = [b](std::size_t, double v) { return v >= b ? 1.0 : 0.0; };
  s.active = {0};
  s.breakpoints.assign(p, {});
  s.breakpoints[0] = {b};
  s.quadrature_nodes = 1;
  s.claimed_alpha = 1.0;
  s.claimed_alpha_formula = "1";
  s.params = {{"p", p}, {"noise", noise}, {"b", b}};
  return RegressionModel(std::move(s));
}

RegressionModel make_binary_linear_model(std::size_t p, std::size_t s_star, double beta, double noise) {
  if (s_star < 1 || s_star > p) throw ValidationError(field("s_star"), "s_star must lie in [1, p]");
  if (beta == 0.0) throw ValidationError(field("beta"), "beta must be non-zero");
  ModelSpec s;
  s.id = "binary-linear";
  s.kind = ModelKind::BinaryLinear;
  s.p = p;
  s.law = FeatureLaw::Bernoulli;
  s.noise = noise;
  s.m0 = static_cast<double>(s_star) * std::abs(beta);
  s.function = [s_star, beta](std::span<const double> x) {
    double v = 0.0;
    for (std::size_t j = 0; j < s_star; ++j) v += x[j] == 1.0 ? beta : 0.0;
    return v;
  };
  s.additive = true;
  s.component = [beta](std::size_t, double v) { return v == 1.0 ? beta : 0.0; };
  s.active = first_coordinates(s_star);
  s.quadrature_nodes = 1;
  s.claimed_alpha = static_cast<double>(s_star);
  s.claimed_alpha_formula = "s*";
  s.params = {{"p", p}, {"noise", noise}, {"s_star", s_star}, {"beta", beta}};
  return RegressionModel(std::move(s));
}

RegressionModel make_sparse_quadratic_model(std::size_t p, double beta0, std::vector<double> linear,
                                            std::vector<QuadraticTerm> interactions, double noise) {
  if (linear.size() > p) throw ValidationError(field("beta"), "more linear coefficients than features");
  std::set<std::size_t> active;
  bool cross = false;
  double m0 = std::abs(beta0);
  for (std::size_t j = 0; j < linear.size(); ++j) {
    if (linear[j] != 0.0) active.insert(j);
    m0 += std::abs(linear[j]);
  }
  for (auto& t : interactions) {
    if (t.first >= p || t.second >= p) throw ValidationError(field("interactions"), "interaction index out of range");
    if (t.first > t.second) std::swap(t.first, t.second);
    if (t.coefficient != 0.0) {
      active.insert(t.first);
      active.insert(t.second);
      cross = cross || t.first != t.second;
    }
    m0 += std::abs(t.coefficient);
  }

  // Coefficient sign restriction: for every coordinate j touched by a cross
  // term, all coefficients involving j (linear and interactions) share a sign.
  bool restriction_holds = true;
  for (std::size_t j : active) {
    bool has_cross = false;
    std::vector<double> coefs;
    if (j < linear.size()) coefs.push_back(linear[j]);
    for (const auto& t : interactions) {
      if (t.first == j || t.second == j) {
        coefs.push_back(t.coefficient);
        has_cross = has_cross || t.first != t.second;
      }
    }
    if (!has_cross) continue;
    for (double a : coefs)
      for (double b : coefs) restriction_holds = restriction_holds && a * b >= 0.0;
  }

  ModelSpec s;
  s.id = "sparse-quadratic";
  s.kind = ModelKind::SparseQuadratic;
  s.p = p;
  s.noise = noise;
  s.m0 = std::max(m0, 1e-300);
  s.function = [beta0, linear, interactions](std::span<const double> x) {
    double v = beta0;
    for (std::size_t j = 0; j < linear.size(); ++j) v += linear[j] * x[j];
    for (const auto& t : interactions) v += t.coefficient * x[t.first] * x[t.second];
    return v;
  };
  s.active.assign(active.begin(), active.end());
  s.quadrature_nodes = 3;
  if (!cross) {
    std::vector<double> square(p, 0.0);
    for (const auto& t : interactions) square[t.first] += t.coefficient;
    std::vector<double> lin(p, 0.0);
    std::copy(linear.begin(), linear.end(), lin.begin());
    s.additive = true;
    s.intercept = beta0;
    s.component = [lin, square](std::size_t j, double v) { return lin[j] * v + square[j] * v * v; };
  }
  nlohmann::json inter = nlohmann::json::array();
  for (const auto& t : interactions) inter.push_back({{"i", t.first + 1}, {"j", t.second + 1}, {"coef", t.coefficient}});
  s.params = {{"p", p}, {"noise", noise}, {"beta0", beta0}, {"beta", linear}, {"interactions", inter}};
  s.claimed_alpha_formula = restriction_holds ? "finite (coefficient signs agree on every interacting coordinate)"
                                              : "unknown (coefficient signs disagree on an interacting coordinate)";
  return RegressionModel(std::move(s));
}

RegressionModel make_logistic_model(std::size_t p, std::vector<double> beta, double noise) {
  if (beta.empty()) throw ValidationError(field("beta"), "beta needs at least one coefficient");
  require_p_at_least(p, beta.size());
  double max_b = 0.0, min_b = INFINITY, sum_b = 0.0;
  for (double b : beta) {
    if (b == 0.0) throw ValidationError(field("beta"), "logistic coefficients must be non-zero");
    max_b = std::max(max_b, std::abs(b));
    min_b = std::min(min_b, std::abs(b));
    sum_b += std::abs(b);
  }
  const double s_count = static_cast<double>(beta.size());
  ModelSpec s;
  s.id = "logistic";
  s.kind = ModelKind::Logistic;
  s.p = p;
  s.noise = noise;
  s.m0 = 1.0;
  s.function = [beta](std::span<const double> x) {
    double z = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) z += beta[j] * x[j];
    return 1.0 / (1.0 + std::exp(-z));
  };
  s.active = first_coordinates(beta.size());
  s.quadrature_nodes = 24;
  s.claimed_alpha = 4.0 * std::pow(s_count * max_b / min_b, 2) * std::exp(2.0 * sum_b);
  s.claimed_alpha_formula = "4 (#S* max|beta| / min|beta|)^2 exp(2 sum|beta|)";
  s.params = {{"p", p}, {"noise", noise}, {"beta", beta}};
  return RegressionModel(std::move(s));
}

RegressionModel make_saddle_model(std::size_t p, double noise) {
  require_p_at_least(p, 2);
  ModelSpec s;
  s.id = "saddle-counterexample";
  s.kind = ModelKind::SaddleCounterexample;
  s.p = p;
  s.noise = noise;
  s.m0 = 0.25;
  s.function = [](std::span<const double> x) { return (x[0] - 0.5) * (x[1] - 0.5); };
  s.active = {0, 1};
  s.quadrature_nodes = 2;
  s.claimed_alpha_formula = "none (violates SID)";
  s.params = {{"p", p}, {"noise", noise}};
  return RegressionModel(std::move(s));
}

namespace {

RegressionModel make_smooth_additive(std::size_t p, std::size_t s_star, double scale, double noise) {
  require_p_at_least(p, s_star);
  ModelSpec s;
  s.id = "smooth-monotone-additive";
  s.kind = ModelKind::SmoothMonotoneAdditive;
  s.p = p;
  s.noise = noise;
  // x + 0.1 sin(2 pi x) is increasing on [0,1] with range [0,1].
  auto comp = [scale](std::size_t, double v) { return scale * (v + 0.1 * std::sin(2.0 * std::numbers::pi * v)); };
  s.m0 = static_cast<double>(s_star) * std::abs(scale) * (1.0 + 1e-9);
  s.function = [comp, s_star](std::span<const double> x) {
    double v = 0.0;
    for (std::size_t j = 0; j < s_star; ++j) v += comp(j, x[j]);
    return v;
  };
  s.additive = true;
  s.component = comp;
  s.active = first_coordinates(s_star);
  s.quadrature_nodes = 24;
  s.claimed_alpha_formula = "c s* (c unspecified)";
  s.params = {{"p", p}, {"noise", noise}, {"s_star", s_star}, {"scale", scale}};
  return RegressionModel(std::move(s));
}

RegressionModel make_additive_oracle(std::size_t p, std::size_t s_star, double scale, double noise) {
  require_p_at_least(p, s_star);
  ModelSpec s;
  s.id = "additive-oracle";
  s.kind = ModelKind::AdditiveOracle;
  s.p = p;
  s.noise = noise;
  auto comp = [scale](std::size_t, double v) { return scale * std::sin(std::numbers::pi * v); };
  s.m0 = static_cast<double>(s_star) * std::abs(scale) * (1.0 + 1e-9);
  s.function = [comp, s_star](std::span<const double> x) {
    double v = 0.0;
    for (std::size_t j = 0; j < s_star; ++j) v += comp(j, x[j]);
    return v;
  };
  s.additive = true;
  s.component = comp;
  s.active = first_coordinates(s_star);
  s.quadrature_nodes = 24;
  s.claimed_alpha_formula = "c s* (c depends on c0, lambda)";
  s.params = {{"p", p}, {"noise", noise}, {"s_star", s_star}, {"scale", scale}};
  return RegressionModel(std::move(s));
}

struct MonomialTerm {
  double coefficient = 0.0;
  std::vector<std::pair<std::size_t, int>> powers;  // (0-based coordinate, exponent)
};

RegressionModel make_polynomial_interaction(std::size_t p, std::vector<MonomialTerm> terms, std::vector<double> linear,
                                            double noise) {
  if (linear.empty()) throw ValidationError(field("beta"), "at least one linear coefficient is required");
  require_p_at_least(p, linear.size());
  double sign = 0.0;
  int max_power = 1;
  double sum_terms = 0.0;
  double max_lin = 0.0, min_lin = INFINITY, sum_lin = 0.0;
  auto check_sign = [&](double c, const std::string& what) {
    if (c == 0.0) throw ValidationError(field(what), "coefficients must be non-zero");
    const double sg = c > 0 ? 1.0 : -1.0;
    if (sign != 0.0 && sg != sign) throw ValidationError(field(what), "all coefficients must share one sign");
    sign = sg;
  };
  for (double b : linear) {
    check_sign(b, "beta");
    max_lin = std::max(max_lin, std::abs(b));
    min_lin = std::min(min_lin, std::abs(b));
    sum_lin += std::abs(b);
  }
  for (const auto& t : terms) {
    check_sign(t.coefficient, "terms");
    sum_terms += std::abs(t.coefficient);
    for (const auto& [j, r] : t.powers) {
      if (j >= linear.size()) {
        throw ValidationError(field("terms"), "interaction coordinates must be among the linear support S*");
      }
      if (r < 1) throw ValidationError(field("terms"), "exponents must be positive integers");
      max_power = std::max(max_power, r);
    }
  }
  const double s_count = static_cast<double>(linear.size());
  ModelSpec s;
  s.id = "polynomial-interaction";
  s.kind = ModelKind::PolynomialInteraction;
  s.p = p;
  s.noise = noise;
  s.m0 = sum_terms + sum_lin;
  s.function = [terms, linear](std::span<const double> x) {
    double v = 0.0;
    for (const auto& t : terms) {
      double prod = t.coefficient;
      for (const auto& [j, r] : t.powers) prod *= std::pow(x[j], r);
      v += prod;
    }
    for (std::size_t j = 0; j < linear.size(); ++j) v += linear[j] * x[j];
    return v;
  };
  s.active = first_coordinates(linear.size());
  // Exponent r in one coordinate gives degree 2r in the squared integrand.
  s.quadrature_nodes = max_power + 1;
  s.claimed_alpha = 4.0 * s_count * s_count * std::pow((max_power * sum_terms + max_lin) / min_lin, 2);
  s.claimed_alpha_formula = "4 (#S*)^2 ((max r) sum|beta_kk| + max|beta_j|)^2 / min|beta_j|^2";
  nlohmann::json jt = nlohmann::json::array();
  for (const auto& t : terms) {
    nlohmann::json pw = nlohmann::json::object();
    for (const auto& [j, r] : t.powers) pw[std::to_string(j + 1)] = r;
    jt.push_back({{"coef", t.coefficient}, {"powers", pw}});
  }
  s.params = {{"p", p}, {"noise", noise}, {"terms", jt}, {"beta", linear}};
  return RegressionModel(std::move(s));
}

RegressionModel make_piecewise_linear(std::size_t p, std::size_t s_star, std::vector<double> knots,
                                      std::vector<double> slopes, double noise) {
  require_p_at_least(p, s_star);
  if (slopes.size() != knots.size() + 1) {
    throw ValidationError(field("slopes"), "need exactly one more slope than interior knots");
  }
  std::vector<double> edges{0.0};
  for (double k : knots) {
    if (!(k > edges.back() && k < 1.0)) throw ValidationError(field("knots"), "knots must increase strictly inside (0,1)");
    edges.push_back(k);
  }
  edges.push_back(1.0);
  double r = INFINITY, big_r = 0.0, b_star = INFINITY;
  for (double sl : slopes) {
    if (sl == 0.0) throw ValidationError(field("slopes"), "slopes must be non-zero");
    r = std::min(r, std::abs(sl));
    big_r = std::max(big_r, std::abs(sl));
  }
  // Knot values of the continuous function starting at m_j(0) = 0.
  std::vector<double> values{0.0};
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    b_star = std::min(b_star, edges[i + 1] - edges[i]);
    values.push_back(values.back() + slopes[i] * (edges[i + 1] - edges[i]));
  }
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  auto comp = [edges, slopes, values](std::size_t, double v) {
    std::size_t i = 0;
    while (i + 2 < edges.size() && v >= edges[i + 1]) ++i;
    return values[i] + slopes[i] * (v - edges[i]);
  };
  ModelSpec s;
  s.id = "piecewise-linear-additive";
  s.kind = ModelKind::PiecewiseLinearAdditive;
  s.p = p;
  s.noise = noise;
  s.m0 = std::max(static_cast<double>(s_star) * peak * (1.0 + 1e-12), 1e-12);
  s.function = [comp, s_star](std::span<const double> x) {
    double v = 0.0;
    for (std::size_t j = 0; j < s_star; ++j) v += comp(j, x[j]);
    return v;
  };
  s.additive = true;
  s.component = comp;
  s.active = first_coordinates(s_star);
  s.breakpoints.assign(p, {});
  for (std::size_t j = 0; j < s_star; ++j) s.breakpoints[j] = knots;
  s.quadrature_nodes = 2;
  s.claimed_alpha = static_cast<double>(s_star) * 1024.0 * std::pow(big_r, 5) / (std::pow(b_star, 3) * std::pow(r, 5));
  s.claimed_alpha_formula = "s* 1024 R^5 / ((b*)^3 r^5)";
  s.params = {{"p", p}, {"noise", noise}, {"s_star", s_star}, {"knots", knots}, {"slopes", slopes}};
  return RegressionModel(std::move(s));
}

RegressionModel make_indicator_combination(std::size_t p, std::size_t s_star, std::vector<double> cuts,
                                           std::vector<double> coefficients, double noise) {
  require_p_at_least(p, s_star);
  std::vector<double> edges{0.0};
  for (double c : cuts) {
    if (!(c > edges.back() && c < 1.0)) throw ValidationError(field("cuts"), "cuts must increase strictly inside (0,1)");
    edges.push_back(c);
  }
  edges.push_back(1.0);
  const std::size_t levels = edges.size() - 1;
  std::size_t cells = 1;
  for (std::size_t j = 0; j < s_star; ++j) cells *= levels;
  if (coefficients.empty()) {
    // beta(i_1..i_s) = i_1 + ... + i_s, increasing by 1 along every axis.
    coefficients.resize(cells);
    for (std::size_t flat = 0; flat < cells; ++flat) {
      std::size_t rest = flat;
      double v = 0.0;
      for (std::size_t j = 0; j < s_star; ++j) {
        v += static_cast<double>(rest % levels + 1);
        rest /= levels;
      }
      coefficients[flat] = v;
    }
  }
  if (coefficients.size() != cells) {
    throw ValidationError(field("coefficients"), "expected " + std::to_string(cells) + " coefficients");
  }
  // Monotone step condition: along each axis the coefficient differences all
  // share a sign and are bounded away from zero by iota.
  double iota = INFINITY;
  std::size_t stride = 1;
  for (std::size_t j = 0; j < s_star; ++j, stride *= levels) {
    double sign = 0.0;
    for (std::size_t flat = 0; flat < cells; ++flat) {
      if ((flat / stride) % levels == 0) continue;
      const double d = coefficients[flat] - coefficients[flat - stride];
      if (d == 0.0 || (sign != 0.0 && (d > 0) != (sign > 0))) {
        throw ValidationError(field("coefficients"), "coefficients must be strictly monotone along every axis");
      }
      sign = d;
      iota = std::min(iota, std::abs(d));
    }
  }
  double m0 = 0.0;
  for (double c : coefficients) m0 = std::max(m0, std::abs(c));
  double c_dagger = 0.25;
  for (std::size_t i = 0; i < levels; ++i) c_dagger = std::min(c_dagger, edges[i + 1] - edges[i]);

  auto bucket = [edges, levels](double v) {
    std::size_t i = 0;
    while (i + 1 < levels && v >= edges[i + 1]) ++i;
    return i;
  };
  ModelSpec s;
  s.id = "indicator-combination";
  s.kind = ModelKind::IndicatorCombination;
  s.p = p;
  s.noise = noise;
  s.m0 = std::max(m0, 1e-12);
  s.function = [coefficients, bucket, s_star, levels](std::span<const double> x) {
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (std::size_t j = 0; j < s_star; ++j, stride *= levels) flat += bucket(x[j]) * stride;
    return coefficients[flat];
  };
  s.active = first_coordinates(s_star);
  s.breakpoints.assign(p, {});
  for (std::size_t j = 0; j < s_star; ++j) s.breakpoints[j] = cuts;
  s.quadrature_nodes = 1;
  if (std::isfinite(iota)) {
    s.claimed_alpha = static_cast<double>(s_star) / (c_dagger * (1.0 - c_dagger)) * std::pow(2.0 * m0 / iota, 2);
  }
  s.claimed_alpha_formula = "s* / (c+(1-c+)) (2 M0 / iota)^2";
  s.params = {{"p", p}, {"noise", noise}, {"s_star", s_star}, {"cuts", cuts}, {"coefficients", coefficients}};
  return RegressionModel(std::move(s));
}

std::vector<QuadraticTerm> parse_interactions(const json& params, const std::vector<QuadraticTerm>& fallback,
                                              std::size_t p) {
  if (!params.contains("interactions")) return fallback;
  const json& arr = params.at("interactions");
  if (!arr.is_array()) throw ValidationError(field("interactions"), "interactions must be an array");
  std::vector<QuadraticTerm> out;
  for (const json& t : arr) {
    if (!t.is_object() || !t.contains("i") || !t.contains("j") || !t.contains("coef") || !t["i"].is_number_integer() ||
        !t["j"].is_number_integer() || !t["coef"].is_number()) {
      throw ValidationError(field("interactions"), "each interaction needs integer i, j and numeric coef");
    }
    const long long i = t["i"].get<long long>();
    const long long j = t["j"].get<long long>();
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > p || static_cast<std::size_t>(j) > p) {
      throw ValidationError(field("interactions"), "interaction indices must lie in [1, p]");
    }
    out.push_back({static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1), t["coef"].get<double>()});
  }
  return out;
}

std::vector<MonomialTerm> parse_terms(const json& params, const std::vector<MonomialTerm>& fallback) {
  if (!params.contains("terms")) return fallback;
  const json& arr = params.at("terms");
  if (!arr.is_array()) throw ValidationError(field("terms"), "terms must be an array");
  std::vector<MonomialTerm> out;
  for (const json& t : arr) {
    if (!t.is_object() || !t.contains("coef") || !t["coef"].is_number() || !t.contains("powers") ||
        !t["powers"].is_object()) {
      throw ValidationError(field("terms"), "each term needs a numeric coef and a powers object");
    }
    MonomialTerm m;
    m.coefficient = t["coef"].get<double>();
    for (auto it = t["powers"].begin(); it != t["powers"].end(); ++it) {
      std::size_t j = 0;
      try {
        j = std::stoul(it.key());
      } catch (const std::exception&) {
        throw ValidationError(field("terms"), "power keys must be 1-based coordinate indices");
      }
      if (j < 1 || !it.value().is_number_integer()) {
        throw ValidationError(field("terms"), "power keys must be 1-based indices with integer exponents");
      }
      m.powers.emplace_back(j - 1, it.value().get<int>());
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

json param(const char* type, json fallback, const char* description) {
  return {{"type", type}, {"default", std::move(fallback)}, {"description", description}};
}

}  // namespace

// ---- registry -------------------------------------------------------------------

const std::vector<RegistryEntry>& model_registry() {
  static const std::vector<RegistryEntry> entries = [] {
    const json p_noise = {{"p", param("integer", 3, "number of features")},
                          {"noise", param("number", 0.0, "noise half-width M_eps (uniform noise)")}};
    auto with = [&](json extra) {
      json out = p_noise;
      out.update(extra);
      return out;
    };
    std::vector<RegistryEntry> e;
    e.push_back({"indicator", ModelKind::Indicator, "threshold indicator", "m(x) = 1{x1 >= b}",
                 with({{"b", param("number", 0.5, "threshold b in [0,1]")}}), "1"});
    e.push_back({"sparse-quadratic", ModelKind::SparseQuadratic, "sparse quadratic",
                 "m(x) = beta0 + sum beta_j x_j + sum beta_lj x_l x_j",
                 with({{"beta0", param("number", 0.0, "intercept")},
                       {"beta", param("array<number>", json::array({1.0, 1.0}), "linear coefficients beta_1..beta_s")},
                       {"interactions", param("array<{i,j,coef}>", json::array({{{"i", 1}, {"j", 2}, {"coef", 1.0}}}),
                                              "quadratic terms coef * x_i * x_j (1-based)")}}),
                 "c s* (c unspecified)"});
    e.push_back({"smooth-monotone-additive", ModelKind::SmoothMonotoneAdditive, "smooth monotone additive",
                 "m(x) = scale * sum_{j<=s*} (x_j + 0.1 sin(2 pi x_j))",
                 with({{"p", param("integer", 5, "number of features")},
                       {"s_star", param("integer", 3, "number of active features")},
                       {"scale", param("number", 1.0, "component scale")}}),
                 "c s* (c unspecified)"});
    e.push_back({"additive-oracle", ModelKind::AdditiveOracle, "additive with oracle",
                 "m(x) = scale * sum_{j<=s*} sin(pi x_j)",
                 with({{"p", param("integer", 5, "number of features")},
                       {"s_star", param("integer", 2, "number of active features")},
                       {"scale", param("number", 1.0, "component scale")}}),
                 "c s* (c depends on c0, lambda)"});
    e.push_back({"binary-linear", ModelKind::BinaryLinear, "binary linear",
                 "m(x) = beta * sum_{j<=s*} 1{x_j = 1}, x_j ~ Bernoulli(1/2)",
                 with({{"p", param("integer", 10, "number of features")},
                       {"s_star", param("integer", 3, "number of active features")},
                       {"beta", param("number", 1.0, "coefficient beta (non-zero)")}}),
                 "s*"});
    e.push_back({"logistic", ModelKind::Logistic, "logistic", "m(x) = 1 / (1 + exp(-sum beta_j x_j))",
                 with({{"beta", param("array<number>", json::array({1.0, 0.5}), "non-zero coefficients on S*")}}),
                 "4 (#S* max|beta| / min|beta|)^2 exp(2 sum|beta|)"});
    e.push_back({"polynomial-interaction", ModelKind::PolynomialInteraction, "polynomial interaction",
                 "m(x) = sum_k beta_kk prod x_j^r_jk + sum beta_j x_j",
                 with({{"terms", param("array<{coef,powers}>",
                                       json::array({{{"coef", 1.0}, {"powers", {{"1", 2}, {"2", 1}}}}}),
                                       "monomials coef * prod x_j^r (1-based keys)")},
                       {"beta", param("array<number>", json::array({1.0, 1.0}), "linear coefficients on S*")}}),
                 "4 (#S*)^2 ((max r) sum|beta_kk| + max|beta_j|)^2 / min|beta_j|^2"});
    e.push_back({"piecewise-linear-additive", ModelKind::PiecewiseLinearAdditive, "piecewise linear additive",
                 "m(x) = sum_{j<=s*} m_j(x_j), m_j continuous piecewise linear",
                 with({{"s_star", param("integer", 2, "number of active features")},
                       {"knots", param("array<number>", json::array({0.3, 0.6}), "interior knots")},
                       {"slopes", param("array<number>", json::array({1.0, -2.0, 1.5}), "slope on each piece")}}),
                 "s* 1024 R^5 / ((b*)^3 r^5)"});
    e.push_back({"indicator-combination", ModelKind::IndicatorCombination, "indicator combination",
                 "m(x) = sum beta(i_1..i_s) prod 1{x_j in [c_{i_j-1}, c_{i_j})}",
                 with({{"s_star", param("integer", 2, "number of active features")},
                       {"cuts", param("array<number>", json::array({0.5}), "interior cut points (shared by axes)")},
                       {"coefficients", param("array<number>", json::array(),
                                              "flattened beta, first axis fastest; empty = sum of indices")}}),
                 "s* / (c+(1-c+)) (2 M0 / iota)^2"});
    e.push_back({"saddle-counterexample", ModelKind::SaddleCounterexample, "saddle counterexample",
                 "m(x) = (x1 - 1/2)(x2 - 1/2); violates SID", with({{"p", param("integer", 2, "number of features")}}),
                 "none (violates SID)"});
    return e;
  }();
  return entries;
}

std::vector<std::string> suggest_model_ids(const std::string& id) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& e : model_registry()) {
    // A substring hit ("binary" in "binary-linear") beats any edit distance.
    const bool contains = !id.empty() && e.id.find(id) != std::string::npos;
    scored.emplace_back(contains ? 0 : 1 + levenshtein(id, e.id), e.id);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < 3; ++i) out.push_back(scored[i].second);
  return out;
}

RegressionModel make_model(const std::string& id, const json& params_in) {
  const json params = params_in.is_null() ? json::object() : params_in;
  auto entry = std::find_if(model_registry().begin(), model_registry().end(),
                            [&](const RegistryEntry& e) { return e.id == id; });
  if (entry == model_registry().end()) {
    const auto s = suggest_model_ids(id);
    std::string msg = "unknown model id '" + id + "'; did you mean:";
    for (const auto& suggestion : s) msg += " " + suggestion;
    throw ValidationError("model.id", msg);
  }
  const json& schema = entry->parameters;
  auto default_count = [&](const char* key) { return schema.at(key).at("default").get<std::size_t>(); };
  const std::size_t p = get_count(params, "p", default_count("p"));
  const double noise = get_noise(params);

  switch (entry->kind) {
    case ModelKind::Indicator:
      check_known_keys(params, {"b"});
      return make_indicator_model(p, get_number(params, "b", 0.5), noise);
    case ModelKind::SparseQuadratic: {
      check_known_keys(params, {"beta0", "beta", "interactions"});
      auto linear = get_vector(params, "beta", {1.0, 1.0});
      auto inter = parse_interactions(params, {{0, 1, 1.0}}, p);
      require_p_at_least(p, linear.size());
      return make_sparse_quadratic_model(p, get_number(params, "beta0", 0.0), linear, inter, noise);
    }
    case ModelKind::SmoothMonotoneAdditive:
      check_known_keys(params, {"s_star", "scale"});
      return make_smooth_additive(p, get_count(params, "s_star", 3), get_number(params, "scale", 1.0), noise);
    case ModelKind::AdditiveOracle:
      check_known_keys(params, {"s_star", "scale"});
      return make_additive_oracle(p, get_count(params, "s_star", 2), get_number(params, "scale", 1.0), noise);
    case ModelKind::BinaryLinear:
      check_known_keys(params, {"s_star", "beta"});
      return make_binary_linear_model(p, get_count(params, "s_star", 3), get_number(params, "beta", 1.0), noise);
    case ModelKind::Logistic:
      check_known_keys(params, {"beta"});
      return make_logistic_model(p, get_vector(params, "beta", {1.0, 0.5}), noise);
    case ModelKind::PolynomialInteraction: {
      check_known_keys(params, {"terms", "beta"});
      MonomialTerm def{1.0, {{0, 2}, {1, 1}}};
      return make_polynomial_interaction(p, parse_terms(params, {def}), get_vector(params, "beta", {1.0, 1.0}), noise);
    }
    case ModelKind::PiecewiseLinearAdditive:
      check_known_keys(params, {"s_star", "knots", "slopes"});
      return make_piecewise_linear(p, get_count(params, "s_star", 2), get_vector(params, "knots", {0.3, 0.6}),
                                   get_vector(params, "slopes", {1.0, -2.0, 1.5}), noise);
    case ModelKind::IndicatorCombination:
      check_known_keys(params, {"s_star", "cuts", "coefficients"});
      return make_indicator_combination(p, get_count(params, "s_star", 2), get_vector(params, "cuts", {0.5}),
                                        get_vector(params, "coefficients", {}), noise);
    case ModelKind::SaddleCounterexample:
      check_known_keys(params, {});
      return make_saddle_model(p, noise);
    case ModelKind::User:
      break;
  }
  throw ValidationError("model.id", "model '" + id + "' cannot be built from the registry");
}

json describe_models() {
  json list = json::array();
  for (const auto& e : model_registry()) {
    const RegressionModel m = make_model(e.id);
    list.push_back({{"id", e.id},
                    {"label", e.label},
                    {"description", e.description},
                    {"feature_law", to_string(m.law())},
                    {"parameters", e.parameters},
                    {"sid_constant", e.sid_constant},
                    {"default_claimed_alpha", m.claimed_alpha() ? json(*m.claimed_alpha()) : json(nullptr)}});
  }
  return {{"models", list}};
}

}  // namespace sidforest
