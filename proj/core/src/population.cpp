#include "sidforest/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sidforest/errors.hpp"
#include "sidforest/parallel.hpp"
#include "sidforest/quadrature.hpp"
#include "sidforest/rng.hpp"
#include "sidforest/serialization.hpp"

namespace sidforest {

namespace {

constexpr std::size_t kTensorGuard = 4'000'000;

/// Nodes and (unconditional) weights of X_j restricted to one range.
/// The weights sum to P(X_j in range).
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  double mass = 0.0;
};

double coordinate_mass(FeatureLaw law, const Interval& iv) {
  if (law == FeatureLaw::Bernoulli) return 0.5 * (iv.contains(0.0) ? 1.0 : 0.0) + 0.5 * (iv.contains(1.0) ? 1.0 : 0.0);
  return iv.length();
}

Rule1D coordinate_rule(const RegressionModel& model, std::size_t j, const Interval& iv) {
  Rule1D r;
  if (model.law() == FeatureLaw::Bernoulli) {
    for (double atom : {0.0, 1.0}) {
      if (iv.contains(atom)) {
        r.nodes.push_back(atom);
        r.weights.push_back(0.5);
      }
    }
  } else if (iv.hi > iv.lo) {
    const GaussLegendreRule& gl = gauss_legendre(model.quadrature_nodes());
    std::vector<double> edges{iv.lo};
    for (double b : model.breakpoints(j)) {
      if (b > iv.lo && b < iv.hi) edges.push_back(b);
    }
    edges.push_back(iv.hi);
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const double half = 0.5 * (edges[e + 1] - edges[e]);
      const double mid = 0.5 * (edges[e + 1] + edges[e]);
      for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
        r.nodes.push_back(mid + half * gl.nodes[q]);
        r.weights.push_back(half * gl.weights[q]);
      }
    }
  }
  r.mass = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
  return r;
}

/// Any point of a non-empty range, used for coordinates m ignores.
double filler(FeatureLaw law, const Interval& iv) {
  if (law == FeatureLaw::Bernoulli) return iv.contains(0.0) ? 0.0 : 1.0;
  return iv.hi > iv.lo ? 0.5 * (iv.lo + iv.hi) : iv.lo;
}

double probability_of(const RegressionModel& model, const Cell& cell) {
  double p = 1.0;
  for (const Interval& iv : cell.intervals()) p *= coordinate_mass(model.law(), iv);
  return p;
}

struct WeightedMoments {
  double mass = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

WeightedMoments one_dimensional(const Rule1D& rule, auto&& f, bool want_variance) {
  WeightedMoments out;
  out.mass = rule.mass;
  if (rule.mass <= 0.0) return out;
  std::vector<double> values(rule.nodes.size());
  double s = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    values[q] = f(rule.nodes[q]);
    s += rule.weights[q] * values[q];
  }
  out.mean = s / rule.mass;
  if (want_variance) {
    double v = 0.0;
    for (std::size_t q = 0; q < values.size(); ++q) v += rule.weights[q] * (values[q] - out.mean) * (values[q] - out.mean);
    out.variance = v / rule.mass;
  }
  return out;
}

/// Mean and variance of m on a cell by a tensor rule over the active coordinates.
WeightedMoments tensor_moments(const RegressionModel& model, const Cell& cell, bool want_variance) {
  const auto active = model.active();
  std::vector<double> x(model.p());
  for (std::size_t j = 0; j < model.p(); ++j) x[j] = filler(model.law(), cell[j]);
  std::vector<Rule1D> rules;
  rules.reserve(active.size());
  std::size_t total = 1;
  for (std::size_t j : active) {
    rules.push_back(coordinate_rule(model, j, cell[j]));
    total *= std::max<std::size_t>(rules.back().nodes.size(), 1);
    if (total > kTensorGuard) {
      throw OracleUnavailableError("quadrature over " + std::to_string(active.size()) +
                                   " active coordinates is too large; supply a conditional-moment callable");
    }
    if (rules.back().nodes.empty()) return {};
  }
  std::vector<double> values(total);
  std::vector<double> weights(total);
  std::vector<std::size_t> idx(active.size(), 0);
  double mass = 0.0;
  double sum = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    double w = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      x[active[a]] = rules[a].nodes[idx[a]];
      w *= rules[a].weights[idx[a]];
    }
    const double v = model.eval_unchecked(x);
    values[flat] = v;
    weights[flat] = w;
    mass += w;
    sum += w * v;
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (++idx[a] < rules[a].nodes.size()) break;
      idx[a] = 0;
    }
  }
  WeightedMoments out;
  out.mass = mass;
  if (mass <= 0.0) return out;
  out.mean = sum / mass;
  if (want_variance) {
    double v = 0.0;
    for (std::size_t f = 0; f < total; ++f) v += weights[f] * (values[f] - out.mean) * (values[f] - out.mean);
    out.variance = v / mass;
  }
  return out;
}

CellMoments moments_impl(const RegressionModel& model, const Cell& cell, bool want_variance) {
  if (cell.dim() != model.p()) {
    throw DimensionError("cell has dimension " + std::to_string(cell.dim()) + ", model has p = " +
                         std::to_string(model.p()));
  }
  if (model.has_user_moments()) {
    const UserMoments u = model.user_moments(cell);
    CellMoments out{u.probability, u.mean, u.variance, !(u.probability > 0.0)};
    if (out.zero_probability) out.mean = out.variance = 0.0;
    return out;
  }
  CellMoments out;
  out.probability = probability_of(model, cell);
  if (!(out.probability > 0.0)) {
    out.zero_probability = true;
    out.probability = 0.0;
    return out;
  }
  if (model.additive()) {
    out.mean = model.intercept();
    for (std::size_t j : model.active()) {
      const Rule1D rule = coordinate_rule(model, j, cell[j]);
      const auto m = one_dimensional(rule, [&](double v) { return model.component(j, v); }, want_variance);
      out.mean += m.mean;
      out.variance += m.variance;
    }
  } else {
    const WeightedMoments m = tensor_moments(model, cell, want_variance);
    out.mean = m.mean;
    out.variance = m.variance;
  }
  return out;
}

void check_split(const Cell& cell, const Split& split) {
  if (split.feature >= cell.dim()) {
    throw InvalidSplitError("split feature " + std::to_string(split.feature + 1) + " out of range");
  }
  const Interval& iv = cell[split.feature];
  if (!(split.threshold >= iv.lo && split.threshold <= iv.hi)) {
    throw InvalidSplitError("threshold outside the cell's range on feature " + std::to_string(split.feature + 1));
  }
}

/// Treats numerically vanishing impurity decreases as exactly zero.
bool negligible(double gain, double variance) { return !(gain > 1e-13 * variance); }

double variance_floor(const RegressionModel& model) { return 1e-24 * model.m0() * model.m0(); }

}  // namespace

double cell_probability(const RegressionModel& model, const Cell& cell) {
  return moments_impl(model, cell, false).probability;
}

CellMoments conditional_moments(const RegressionModel& model, const Cell& cell) {
  return moments_impl(model, cell, true);
}

double conditional_mean(const RegressionModel& model, const Cell& cell) { return moments_impl(model, cell, false).mean; }

double conditional_variance(const RegressionModel& model, const Cell& cell) {
  return moments_impl(model, cell, true).variance;
}

ImpurityReport impurity_decrease_II(const RegressionModel& model, const Cell& cell, const Split& split) {
  check_split(cell, split);
  const auto [left, right] = cell.split(split);
  const CellMoments parent = conditional_moments(model, cell);
  ImpurityReport r;
  r.variance = parent.variance;
  if (parent.zero_probability) {
    r.zero_probability = true;
    return r;
  }
  const CellMoments l = conditional_moments(model, left);
  const CellMoments rr = conditional_moments(model, right);
  r.p_left = l.probability / parent.probability;
  r.p_right = rr.probability / parent.probability;
  r.mean_left = l.mean;
  r.mean_right = rr.mean;
  if (!model.has_user_moments() && !model.depends_on(split.feature)) {
    r.decrease = 0.0;
  } else {
    const double h = l.mean - rr.mean;
    r.decrease = r.p_left * r.p_right * h * h;
  }
  r.remaining_bias = r.p_left * l.variance + r.p_right * rr.variance;
  return r;
}

double impurity_decrease_only(const RegressionModel& model, const Cell& cell, const Split& split) {
  check_split(cell, split);
  if (model.has_user_moments()) return impurity_decrease_II(model, cell, split).decrease;
  if (!model.depends_on(split.feature)) return 0.0;
  const std::size_t j = split.feature;
  const Interval& iv = cell[j];
  const Interval left{iv.lo, split.threshold, false};
  const Interval right{split.threshold, iv.hi, iv.closed_hi};
  if (probability_of(model, cell) <= 0.0) return 0.0;
  double pl = 0.0, pr = 0.0, ml = 0.0, mr = 0.0;
  if (model.additive()) {
    // Only the j-th component differs between the two daughters.
    auto comp = [&](double v) { return model.component(j, v); };
    const auto a = one_dimensional(coordinate_rule(model, j, left), comp, false);
    const auto b = one_dimensional(coordinate_rule(model, j, right), comp, false);
    pl = a.mass;
    pr = b.mass;
    ml = a.mean;
    mr = b.mean;
  } else {
    const auto [lc, rc] = cell.split(split);
    const auto a = tensor_moments(model, lc, false);
    const auto b = tensor_moments(model, rc, false);
    pl = coordinate_mass(model.law(), left);
    pr = coordinate_mass(model.law(), right);
    ml = a.mean;
    mr = b.mean;
  }
  const double total = pl + pr;
  if (!(pl > 0.0) || !(pr > 0.0) || !(total > 0.0)) return 0.0;
  const double h = ml - mr;
  return (pl / total) * (pr / total) * h * h;
}

namespace {

struct CoordinateBest {
  double threshold = 0.0;
  double gain = 0.0;
};

CoordinateBest search_uniform(const RegressionModel& model, const Cell& cell, std::size_t j,
                              const SearchConfig& search) {
  const Interval& iv = cell[j];
  CoordinateBest best;
  if (!(iv.hi > iv.lo)) return best;
  const double lo = iv.lo;
  const double hi = iv.hi;
  const double width = hi - lo;
  auto gain = [&](double c) { return impurity_decrease_only(model, cell, Split{j, c}); };

  std::vector<double> cand;
  cand.reserve(search.grid_points + 8);
  for (std::size_t i = 1; i <= search.grid_points; ++i) {
    cand.push_back(lo + width * static_cast<double>(i) / static_cast<double>(search.grid_points + 1));
  }
  cand.push_back(lo + 0.5 * width);
  cand.push_back(lo + 0.75 * width);
  for (double b : model.breakpoints(j)) {
    if (b > lo && b < hi) cand.push_back(b);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  cand.erase(std::remove_if(cand.begin(), cand.end(), [&](double c) { return !(c > lo && c < hi); }), cand.end());
  if (cand.empty()) return best;

  std::size_t arg = 0;
  best.threshold = cand[0];
  best.gain = -1.0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const double g = gain(cand[i]);
    if (g > best.gain) {
      best = {cand[i], g};
      arg = i;
    }
  }

  // Golden-section refinement on the bracket around the best candidate.
  const CoordinateBest seeded = best;
  double a = arg == 0 ? lo : cand[arg - 1];
  double b = arg + 1 == cand.size() ? hi : cand[arg + 1];
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double g1 = gain(x1);
  double g2 = gain(x2);
  for (std::size_t it = 0; it < search.refine_iterations && b - a > 1e-15 * width; ++it) {
    if (g1 > best.gain) best = {x1, g1};
    if (g2 > best.gain) best = {x2, g2};
    if (g1 >= g2) {
      b = x2;
      x2 = x1;
      g2 = g1;
      x1 = b - inv_phi * (b - a);
      g1 = gain(x1);
    } else {
      a = x1;
      x1 = x2;
      g1 = g2;
      x2 = a + inv_phi * (b - a);
      g2 = gain(x2);
    }
  }
  if (g1 > best.gain && x1 > lo && x1 < hi) best = {x1, g1};
  if (g2 > best.gain && x2 > lo && x2 < hi) best = {x2, g2};
  // A refined point must beat the candidate set by more than rounding noise,
  // so exact analytic optima (midpoints, breakpoints) are kept as found.
  if (best.gain <= seeded.gain + 1e-12 * std::abs(seeded.gain)) best = seeded;
  best.gain = std::max(best.gain, 0.0);
  return best;
}

}  // namespace

TheoreticalSplit theoretical_cart_split(const RegressionModel& model, const Cell& cell,
                                        std::span<const std::size_t> features, const SearchConfig& search) {
  if (features.empty()) throw ValidationError("features", "feature set must be non-empty");
  for (std::size_t j : features) {
    if (j >= model.p()) throw ValidationError("features", "feature " + std::to_string(j + 1) + " out of range");
  }
  if (cell.dim() != model.p()) throw DimensionError("cell dimension does not match the model");

  TheoreticalSplit out;
  double best_gain = 0.0;
  bool found = false;
  for (std::size_t j : features) {
    if (!model.has_user_moments() && !model.depends_on(j)) continue;
    CoordinateBest cb;
    if (model.law() == FeatureLaw::Bernoulli) {
      if (cell[j].contains(0.0) && cell[j].contains(1.0)) cb = {1.0, impurity_decrease_only(model, cell, {j, 1.0})};
    } else {
      cb = search_uniform(model, cell, j, search);
    }
    if (cb.gain > 0.0 && (!found || cb.gain > best_gain * (1.0 + 1e-12))) {
      out.split = Split{j, cb.threshold};
      best_gain = cb.gain;
      found = true;
    }
  }
  if (found && negligible(best_gain, conditional_variance(model, cell))) found = false;
  if (!found) {
    const Interval& iv = cell[features[0]];
    const double c = model.law() == FeatureLaw::Bernoulli ? 1.0 : (iv.hi > iv.lo ? 0.5 * (iv.lo + iv.hi) : iv.lo);
    out.split = Split{features[0], std::clamp(c, iv.lo, iv.hi)};
    out.decrease = 0.0;
    out.degenerate = true;
    return out;
  }
  out.decrease = best_gain;
  return out;
}

// ---- SID constant ---------------------------------------------------------------

nlohmann::json SidCertificate::to_json() const {
  nlohmann::json j;
  j["model_id"] = model_id;
  j["claimed_alpha"] = claimed_alpha ? nlohmann::json(*claimed_alpha) : nlohmann::json(nullptr);
  j["alpha_hat"] = std::isfinite(alpha_hat) ? nlohmann::json(alpha_hat) : nlohmann::json(nullptr);
  j["alpha_hat_infinite"] = std::isinf(alpha_hat);
  j["alpha_hat_is_lower_bound"] = true;
  j["root_ratio"] = std::isfinite(root_ratio) ? nlohmann::json(root_ratio) : nlohmann::json(nullptr);
  j["budget"] = budget;
  j["probed"] = probed;
  j["skipped_constant_cells"] = skipped;
  j["worst_cell"] = cell_to_json(worst_cell);
  j["worst_variance"] = worst_variance;
  j["worst_sup_decrease"] = worst_decrease;
  j["refutes_claim"] = refutes_claim();
  return j;
}

namespace {

Cell random_probe_cell(const RegressionModel& model, std::size_t max_depth, Rng& rng) {
  Cell cell = Cell::unit(model.p());
  const std::size_t depth = rng.below(max_depth + 1);
  for (std::size_t d = 0; d < depth; ++d) {
    const std::size_t j = rng.below(model.p());
    const Interval& iv = cell[j];
    double c = 0.0;
    if (model.law() == FeatureLaw::Bernoulli) {
      if (!(iv.contains(0.0) && iv.contains(1.0))) continue;
      c = 1.0;
    } else {
      if (!(iv.hi > iv.lo)) continue;
      c = rng.uniform_open(iv.lo, iv.hi);
    }
    auto [left, right] = cell.split({j, c});
    cell = rng.coin() ? std::move(left) : std::move(right);
  }
  return cell;
}

}  // namespace

SidCertificate estimate_sid_alpha(const RegressionModel& model, const SidSearchConfig& config) {
  if (config.budget < 1) throw ValidationError("budget", "cell budget must be at least 1");
  struct Probe {
    Cell cell;
    double variance = 0.0;
    double decrease = 0.0;
    double ratio = 0.0;
    bool skipped = true;
  };
  std::vector<Probe> probes(config.budget);
  std::vector<std::size_t> all(model.p());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double floor = variance_floor(model);

  parallel_for(config.budget, config.workers, [&](std::size_t i) {
    Probe& pr = probes[i];
    if (i == 0) {
      pr.cell = Cell::unit(model.p());
    } else {
      Rng rng(derive_seed(config.seed, {0x51D, i}));
      pr.cell = random_probe_cell(model, config.max_depth, rng);
    }
    const CellMoments mom = conditional_moments(model, pr.cell);
    pr.variance = mom.variance;
    if (mom.zero_probability || !(mom.variance > floor)) return;
    pr.skipped = false;
    pr.decrease = theoretical_cart_split(model, pr.cell, all, config.search).decrease;
    pr.ratio = pr.decrease > 0.0 ? pr.variance / pr.decrease : std::numeric_limits<double>::infinity();
  });

  SidCertificate cert;
  cert.model_id = model.id();
  cert.claimed_alpha = model.claimed_alpha();
  cert.budget = config.budget;
  cert.probed = config.budget;
  cert.root_ratio = probes[0].skipped ? std::numeric_limits<double>::quiet_NaN() : probes[0].ratio;
  bool any = false;
  for (const Probe& pr : probes) {
    if (pr.skipped) {
      ++cert.skipped;
      continue;
    }
    if (!any || pr.ratio > cert.alpha_hat) {
      cert.alpha_hat = pr.ratio;
      cert.worst_cell = pr.cell;
      cert.worst_variance = pr.variance;
      cert.worst_decrease = pr.decrease;
      any = true;
    }
  }
  if (!any) throw Error("degenerate", "model constant on all probed cells");
  return cert;
}

// ---- relevance ------------------------------------------------------------------

RelevanceEstimate relevance_iota(const RegressionModel& model, std::size_t j, std::size_t mc_budget,
                                 std::uint64_t seed) {
  if (j >= model.p()) throw ValidationError("feature", "feature " + std::to_string(j + 1) + " out of range");
  RelevanceEstimate out;
  if (!model.depends_on(j)) {
    out.analytic = true;
    return out;
  }
  const Interval full{};
  const Rule1D rule = coordinate_rule(model, j, full);
  if (model.additive()) {
    out.analytic = true;
    out.iota = one_dimensional(rule, [&](double v) { return model.component(j, v); }, true).variance;
    return out;
  }
  if (mc_budget < 2) throw ValidationError("mc_budget", "Monte Carlo budget must be at least 2");
  Rng rng(derive_seed(seed, {0x107A, j}));
  std::vector<double> x(model.p());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < mc_budget; ++i) {
    draw_features(model, rng, x);
    const double v = one_dimensional(rule,
                                     [&](double t) {
                                       x[j] = t;
                                       return model.eval_unchecked(x);
                                     },
                                     true)
                         .variance;
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  out.iota = mean;
  out.standard_error = std::sqrt(m2 / static_cast<double>(mc_budget - 1) / static_cast<double>(mc_budget));
  return out;
}

}  // namespace sidforest
