#include "sidforest/tree.hpp"

#include <algorithm>

#include "sidforest/cart.hpp"
#include "sidforest/errors.hpp"
#include "sidforest/rng.hpp"

namespace sidforest {

std::string to_string(SplitterKind kind) {
  switch (kind) {
    case SplitterKind::SampleCart: return "sample";
    case SplitterKind::BinaryCart: return "binary";
    case SplitterKind::Theoretical: return "theoretical";
  }
  return "unknown";
}

SplitterKind parse_splitter(const std::string& name) {
  if (name == "sample") return SplitterKind::SampleCart;
  if (name == "binary") return SplitterKind::BinaryCart;
  if (name == "theoretical") return SplitterKind::Theoretical;
  throw ValidationError("forest.splitter", "unknown splitter '" + name + "' (expected sample, binary or theoretical)");
}

namespace {

std::size_t depth_of(std::size_t h) {
  std::size_t d = 0;
  while (((std::size_t{2} << d) - 1) <= h) ++d;
  return d;
}

std::size_t internal_count(std::size_t k) { return (std::size_t{1} << k) - 1; }

}  // namespace

Tree::Tree(std::size_t p, ThetaSchedule schedule, std::vector<TreeNode> nodes, TreeProvenance provenance)
    : p_(p), schedule_(std::move(schedule)), nodes_(std::move(nodes)), provenance_(provenance) {
  const std::size_t k = schedule_.k();
  if (schedule_.p() != p && schedule_.size() > 0) throw ValidationError("tree", "schedule dimension does not match");
  if (nodes_.size() != (std::size_t{2} << k) - 1) throw ValidationError("tree", "node count does not match the height");
  for (std::size_t h = 0; h < nodes_.size(); ++h) {
    if (nodes_[h].cell.dim() != p) throw ValidationError("tree", "node cell dimension does not match");
    const bool internal = h < internal_count(k);
    if (internal != nodes_[h].split.has_value()) {
      throw ValidationError("tree", internal ? "internal node without a split" : "leaf with a split");
    }
  }
}

std::size_t Tree::find_leaf(std::span<const double> point) const {
  if (point.size() != p_) {
    throw DimensionError("point has dimension " + std::to_string(point.size()) + ", tree has p = " +
                         std::to_string(p_));
  }
  const std::size_t internal = internal_count(k());
  std::size_t h = 0;
  while (h < internal) {
    const Split& s = *nodes_[h].split;
    h = point[s.feature] < s.threshold ? 2 * h + 1 : 2 * h + 2;
  }
  return h - internal;
}

Tree Tree::truncated(std::size_t height) const {
  if (height > k()) throw ValidationError("k", "cannot truncate to a taller tree");
  std::vector<TreeNode> nodes(nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>((std::size_t{2} << height) - 1));
  for (std::size_t h = internal_count(height); h < nodes.size(); ++h) {
    nodes[h].split.reset();
    nodes[h].degenerate = nodes[h].trivial = false;
    nodes[h].score = 0.0;
  }
  std::vector<std::vector<std::size_t>> subsets(schedule_.subsets().begin(),
                                                schedule_.subsets().begin() +
                                                    static_cast<std::ptrdiff_t>(internal_count(height)));
  return Tree(p_, ThetaSchedule(schedule_.p(), height, std::move(subsets)), std::move(nodes), provenance_);
}

std::uint64_t node_seed(std::uint64_t master, std::uint64_t subsample_id, std::size_t level, std::size_t position) {
  return derive_seed(master, {0x7EEE, subsample_id, level, position});
}

Tree grow_tree(const Dataset& data, std::span<const Index> subsample, const ThetaSchedule& schedule,
               SplitterKind splitter, std::uint64_t seed, std::uint64_t subsample_id) {
  if (splitter == SplitterKind::Theoretical) {
    throw ValidationError("forest.splitter", "theoretical trees are grown from a model, not from data");
  }
  if (subsample.empty()) throw ValidationError("subsample", "subsample must be non-empty");
  if (schedule.size() > 0 && schedule.p() != data.p()) {
    throw DimensionError("schedule has p = " + std::to_string(schedule.p()) + ", data has p = " +
                         std::to_string(data.p()));
  }
  const std::size_t k = schedule.k();
  const std::size_t internal = internal_count(k);
  std::vector<TreeNode> nodes((std::size_t{2} << k) - 1);
  std::vector<std::vector<Index>> members(nodes.size());

  members[0].assign(subsample.begin(), subsample.end());
  std::sort(members[0].begin(), members[0].end());
  if (std::adjacent_find(members[0].begin(), members[0].end()) != members[0].end()) {
    throw ValidationError("subsample", "subsample indices must be distinct");
  }
  if (!members[0].empty() && members[0].back() >= data.n()) {
    throw ValidationError("subsample", "subsample index out of range");
  }
  nodes[0].cell = Cell::unit(data.p());

  for (std::size_t h = 0; h < internal; ++h) {
    const std::size_t d = depth_of(h);
    const std::size_t s = h - internal_count(d);
    const auto theta = schedule.node(h);
    const std::uint64_t ns = node_seed(seed, subsample_id, d + 1, s);
    const SplitDecision dec = splitter == SplitterKind::BinaryCart
                                  ? binary_cart_split_members(data, members[h], nodes[h].cell, theta, ns)
                                  : sample_cart_split_members(data, members[h], nodes[h].cell, theta, ns);
    TreeNode& node = nodes[h];
    node.split = dec.split;
    node.degenerate = dec.degenerate;
    node.trivial = dec.trivial;
    node.score = dec.objective;
    auto [left, right] = node.cell.split(dec.split);
    nodes[2 * h + 1].cell = std::move(left);
    nodes[2 * h + 2].cell = std::move(right);
    auto& lm = members[2 * h + 1];
    auto& rm = members[2 * h + 2];
    for (Index i : members[h]) {
      (data.x(i, dec.split.feature) < dec.split.threshold ? lm : rm).push_back(i);
    }
    std::vector<Index>().swap(members[h]);
  }
  TreeProvenance prov{splitter, seed, subsample_id, 0};
  return Tree(data.p(), schedule, std::move(nodes), prov);
}

Tree grow_theoretical_tree(const RegressionModel& model, const ThetaSchedule& schedule, const SearchConfig& search) {
  if (schedule.size() > 0 && schedule.p() != model.p()) throw DimensionError("schedule dimension does not match the model");
  const std::size_t k = schedule.k();
  std::vector<TreeNode> nodes((std::size_t{2} << k) - 1);
  nodes[0].cell = Cell::unit(model.p());
  for (std::size_t h = 0; h < internal_count(k); ++h) {
    const TheoreticalSplit ts = theoretical_cart_split(model, nodes[h].cell, schedule.node(h), search);
    nodes[h].split = ts.split;
    nodes[h].degenerate = ts.degenerate;
    nodes[h].score = ts.decrease;
    auto [left, right] = nodes[h].cell.split(ts.split);
    nodes[2 * h + 1].cell = std::move(left);
    nodes[2 * h + 2].cell = std::move(right);
  }
  return Tree(model.p(), schedule, std::move(nodes), TreeProvenance{SplitterKind::Theoretical, 0, 0, 0});
}

std::vector<double> leaf_sample_means(const Tree& tree, const Dataset& data, std::span<const Index> subsample) {
  // Offsets from each leaf's first response keep constant leaves exact.
  std::vector<double> first(tree.leaf_count(), 0.0), offset(tree.leaf_count(), 0.0);
  std::vector<std::size_t> count(tree.leaf_count(), 0);
  for (Index i : subsample) {
    if (i >= data.n()) throw ValidationError("subsample", "subsample index out of range");
    const std::size_t leaf = tree.find_leaf(data.row(i));
    if (count[leaf]++ == 0) {
      first[leaf] = data.y(i);
    } else {
      offset[leaf] += data.y(i) - first[leaf];
    }
  }
  for (std::size_t s = 0; s < first.size(); ++s) {
    first[s] = count[s] == 0 ? 0.0 : first[s] + offset[s] / static_cast<double>(count[s]);
  }
  return first;
}

double tree_predict(const Tree& tree, const Dataset& data, std::span<const Index> subsample,
                    std::span<const double> point) {
  const std::size_t leaf = tree.find_leaf(point);
  double first = 0.0, offset = 0.0;
  std::size_t count = 0;
  for (Index i : subsample) {
    if (i >= data.n()) throw ValidationError("subsample", "subsample index out of range");
    if (tree.find_leaf(data.row(i)) == leaf) {
      if (count++ == 0) {
        first = data.y(i);
      } else {
        offset += data.y(i) - first;
      }
    }
  }
  return count == 0 ? 0.0 : first + offset / static_cast<double>(count);
}

std::vector<double> leaf_population_means(const RegressionModel& model, const Tree& tree) {
  std::vector<double> out(tree.leaf_count());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = conditional_mean(model, tree.leaf(s).cell);
  return out;
}

double population_tree_estimate(const RegressionModel& model, const Tree& tree, std::span<const double> point) {
  return conditional_mean(model, tree.leaf(tree.find_leaf(point)).cell);
}

Tree trim_to_semi_sample(const Tree& tree, const RegressionModel& model, const ThetaSchedule& schedule, double zeta,
                         const SearchConfig& search) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw ValidationError("zeta", "zeta must lie in [0, 1]");
  if (schedule.k() != tree.k()) throw ValidationError("schedule", "schedule height does not match the tree");
  const std::size_t internal = internal_count(tree.k());
  std::vector<TreeNode> nodes(tree.nodes().begin(), tree.nodes().end());
  std::vector<bool> regrow(nodes.size(), false);
  for (std::size_t h = 0; h < internal; ++h) {
    if (!regrow[h] && cell_probability(model, nodes[h].cell) < zeta) regrow[h] = true;
    if (!regrow[h]) continue;
    const TheoreticalSplit ts = theoretical_cart_split(model, nodes[h].cell, schedule.node(h), search);
    nodes[h].split = ts.split;
    nodes[h].degenerate = ts.degenerate;
    nodes[h].trivial = false;
    nodes[h].score = ts.decrease;
    nodes[h].regrown = true;
    auto [left, right] = nodes[h].cell.split(ts.split);
    for (std::size_t c : {2 * h + 1, 2 * h + 2}) {
      nodes[c].cell = c == 2 * h + 1 ? left : right;
      nodes[c].regrown = true;
      regrow[c] = true;
    }
  }
  return Tree(tree.p(), schedule, std::move(nodes), tree.provenance());
}

double tree_approximation_error(const RegressionModel& model, const Tree& tree) {
  double total = 0.0;
  for (std::size_t s = 0; s < tree.leaf_count(); ++s) {
    const CellMoments m = conditional_moments(model, tree.leaf(s).cell);
    if (!m.zero_probability) total += m.probability * m.variance;
  }
  return total;
}

Condition5Result verify_condition5(const RegressionModel& model, const Tree& tree, const ThetaSchedule& schedule,
                                   const Condition5Params& params, const SearchConfig& search) {
  if (!(params.epsilon >= 0.0)) throw ValidationError("epsilon", "epsilon must be non-negative");
  if (!(params.alpha2 >= 1.0)) throw ValidationError("alpha2", "alpha2 must be at least 1");
  if (schedule.k() != tree.k()) throw ValidationError("schedule", "schedule height does not match the tree");
  Condition5Result out;
  for (std::size_t h = 0; h < internal_count(tree.k()); ++h) {
    const TreeNode& node = tree.node(h);
    const double ii = impurity_decrease_only(model, node.cell, *node.split);
    // The tree's own split is one of the candidates of the supremum.
    const double sup = std::max(theoretical_cart_split(model, node.cell, schedule.node(h), search).decrease, ii);
    ++out.checks;
    const std::size_t d = depth_of(h);
    Condition5Violation v{d + 1, h - internal_count(d), 0, ii, sup};
    if (ii <= params.epsilon) {
      if (sup > params.alpha2 * params.epsilon) v.item = 1;
    } else if (sup > params.alpha2 * ii) {
      v.item = 2;
    }
    if (v.item != 0) out.violations.push_back(v);
  }
  out.passed = out.violations.empty();
  return out;
}

}  // namespace sidforest
