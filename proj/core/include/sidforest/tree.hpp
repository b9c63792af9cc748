#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sidforest/dataset.hpp"
#include "sidforest/geometry.hpp"
#include "sidforest/models.hpp"
#include "sidforest/population.hpp"
#include "sidforest/schedule.hpp"

namespace sidforest {

enum class SplitterKind { SampleCart, BinaryCart, Theoretical };

std::string to_string(SplitterKind kind);
/// Parses "sample", "binary" or "theoretical".
SplitterKind parse_splitter(const std::string& name);

struct TreeNode {
  Cell cell;
  /// Set on internal nodes.
  std::optional<Split> split;
  bool degenerate = false;
  bool trivial = false;
  /// Regrown by theoretical CART during semi-sample trimming.
  bool regrown = false;
  /// Sample objective for CART splitters, (II) for the theoretical one.
  double score = 0.0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeProvenance {
  SplitterKind splitter = SplitterKind::SampleCart;
  std::uint64_t seed = 0;
  std::uint64_t subsample_id = 0;
  std::uint64_t schedule_id = 0;

  friend bool operator==(const TreeProvenance&, const TreeProvenance&) = default;
};

/// Complete binary tree of height k in heap layout: node h has daughters
/// 2h+1 (x_j < c) and 2h+2 (x_j >= c); the 2^k leaves are nodes
/// 2^k - 1 .. 2^{k+1} - 2.
class Tree {
 public:
  Tree() = default;
  Tree(std::size_t p, ThetaSchedule schedule, std::vector<TreeNode> nodes, TreeProvenance provenance);

  std::size_t p() const noexcept { return p_; }
  std::size_t k() const noexcept { return schedule_.k(); }
  const ThetaSchedule& schedule() const noexcept { return schedule_; }
  const TreeProvenance& provenance() const noexcept { return provenance_; }
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  const TreeNode& node(std::size_t h) const { return nodes_.at(h); }
  std::size_t leaf_count() const noexcept { return std::size_t{1} << k(); }
  const TreeNode& leaf(std::size_t s) const { return nodes_.at(leaf_count() - 1 + s); }

  /// Position (0-based, left to right) of the leaf whose cell holds the point.
  std::size_t find_leaf(std::span<const double> point) const;

  /// The first `height` levels of this tree (a height-k tree grown by any of
  /// the splitters here restricts to the tree it would have grown with k' < k).
  Tree truncated(std::size_t height) const;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::size_t p_ = 0;
  ThetaSchedule schedule_;
  std::vector<TreeNode> nodes_;
  TreeProvenance provenance_;
};

/// Seed used for tie-breaks and random splits at one node. It depends on
/// the master seed, the subsample and the node position only, so identical
/// schedules give identical trees.
std::uint64_t node_seed(std::uint64_t master, std::uint64_t subsample_id, std::size_t level, std::size_t position);

/// Grows a height-k tree (k = schedule.k()) on the subsample with a sample
/// splitter (SampleCart or BinaryCart).
Tree grow_tree(const Dataset& data, std::span<const Index> subsample, const ThetaSchedule& schedule,
               SplitterKind splitter, std::uint64_t seed, std::uint64_t subsample_id = 0);

/// Tree grown by theoretical CART under the schedule.
Tree grow_theoretical_tree(const RegressionModel& model, const ThetaSchedule& schedule,
                           const SearchConfig& search = {});

/// Mean of y over subsample members in each leaf (0 for empty leaves).
std::vector<double> leaf_sample_means(const Tree& tree, const Dataset& data, std::span<const Index> subsample);

double tree_predict(const Tree& tree, const Dataset& data, std::span<const Index> subsample,
                    std::span<const double> point);

/// Conditional means of m on every leaf (0 on zero-probability leaves).
std::vector<double> leaf_population_means(const RegressionModel& model, const Tree& tree);

double population_tree_estimate(const RegressionModel& model, const Tree& tree, std::span<const double> point);

/// Semi-sample rule: on every branch, the shallowest cell above the leaves
/// with probability below zeta keeps its cell but all its descendants are
/// regrown by theoretical CART under the same schedule.
Tree trim_to_semi_sample(const Tree& tree, const RegressionModel& model, const ThetaSchedule& schedule, double zeta,
                         const SearchConfig& search = {});

/// Average approximation error E[(m - m*_T)^2] = sum_leaves P(t) Var(m | t).
double tree_approximation_error(const RegressionModel& model, const Tree& tree);

struct Condition5Params {
  double epsilon = 0.0;
  double alpha2 = 1.0;
};

struct Condition5Violation {
  std::size_t level = 0;     // 1-based level of the split
  std::size_t position = 0;  // 0-based node position within the level
  int item = 0;              // 1 or 2
  double decrease = 0.0;     // (II) of the tree's split
  double supremum = 0.0;     // sup of (II) over Θ and thresholds
};

struct Condition5Result {
  bool passed = true;
  std::size_t checks = 0;
  std::vector<Condition5Violation> violations;
};

Condition5Result verify_condition5(const RegressionModel& model, const Tree& tree, const ThetaSchedule& schedule,
                                   const Condition5Params& params, const SearchConfig& search = {});

}  // namespace sidforest
