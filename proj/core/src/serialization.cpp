#include "sidforest/serialization.hpp"

#include "sidforest/errors.hpp"

namespace sidforest {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(0, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ParseError(0, std::string("field '") + what + "' has the wrong type");
  }
}

}  // namespace

json cell_to_json(const Cell& cell) {
  json lo = json::array(), hi = json::array(), closed = json::array();
  for (const Interval& iv : cell.intervals()) {
    lo.push_back(iv.lo);
    hi.push_back(iv.hi);
    closed.push_back(iv.closed_hi);
  }
  return {{"lo", lo}, {"hi", hi}, {"closed_hi", closed}};
}

Cell cell_from_json(const json& j) {
  const auto lo = get_as<std::vector<double>>(require(j, "lo"), "lo");
  const auto hi = get_as<std::vector<double>>(require(j, "hi"), "hi");
  const auto closed = get_as<std::vector<bool>>(require(j, "closed_hi"), "closed_hi");
  if (lo.size() != hi.size() || lo.size() != closed.size()) throw ParseError(0, "cell arrays differ in length");
  std::vector<Interval> ivs(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) ivs[i] = Interval{lo[i], hi[i], closed[i]};
  try {
    return Cell(std::move(ivs));
  } catch (const ValidationError& e) {
    throw ParseError(0, std::string("invalid cell: ") + e.what());
  }
}

json schedule_to_json(const ThetaSchedule& schedule) {
  json out = json::array();
  for (const auto& s : schedule.subsets()) {
    json one = json::array();
    for (std::size_t j : s) one.push_back(j + 1);
    out.push_back(one);
  }
  return out;
}

ThetaSchedule schedule_from_json(const json& j, std::size_t p, std::size_t k) {
  if (!j.is_array()) throw ParseError(0, "schedule must be an array");
  std::vector<std::vector<std::size_t>> subsets;
  for (const json& s : j) {
    auto one = get_as<std::vector<std::size_t>>(s, "schedule");
    for (auto& f : one) {
      if (f == 0) throw ParseError(0, "schedule features are 1-based");
      --f;
    }
    subsets.push_back(std::move(one));
  }
  try {
    return ThetaSchedule(p, k, std::move(subsets));
  } catch (const ValidationError& e) {
    throw ParseError(0, std::string("invalid schedule: ") + e.what());
  }
}

json tree_to_json(const Tree& tree) {
  json nodes = json::array();
  // Preorder walk of the heap layout.
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t h = stack.back();
    stack.pop_back();
    const TreeNode& n = tree.node(h);
    std::size_t level = 0;
    while (((std::size_t{2} << level) - 1) <= h) ++level;
    json node = {{"level", level},
                 {"index", h - ((std::size_t{1} << level) - 1)},
                 {"cell", cell_to_json(n.cell)},
                 {"split", n.split ? json{{"j", n.split->feature + 1}, {"c", n.split->threshold}} : json(nullptr)},
                 {"degenerate", n.degenerate},
                 {"trivial", n.trivial},
                 {"regrown", n.regrown},
                 {"score", n.score}};
    nodes.push_back(std::move(node));
    if (n.split) {
      stack.push_back(2 * h + 2);
      stack.push_back(2 * h + 1);
    }
  }
  const TreeProvenance& pv = tree.provenance();
  return {{"format", "sidforest-tree"},
          {"version", kTreeFormatVersion},
          {"k", tree.k()},
          {"p", tree.p()},
          {"schedule", schedule_to_json(tree.schedule())},
          {"nodes", nodes},
          {"provenance",
           {{"splitter", to_string(pv.splitter)},
            {"seed", pv.seed},
            {"subsample_id", pv.subsample_id},
            {"schedule_id", pv.schedule_id}}}};
}

Tree tree_from_json(const json& j) {
  if (!j.is_object()) throw ParseError(0, "tree document must be an object");
  const int version = get_as<int>(require(j, "version"), "version");
  if (version != kTreeFormatVersion) {
    throw VersionError("tree format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kTreeFormatVersion) + ")");
  }
  const auto k = get_as<std::size_t>(require(j, "k"), "k");
  const auto p = get_as<std::size_t>(require(j, "p"), "p");
  if (k > 30) throw ParseError(0, "tree height out of range");
  ThetaSchedule schedule = schedule_from_json(require(j, "schedule"), p, k);
  const json& jn = require(j, "nodes");
  if (!jn.is_array()) throw ParseError(0, "nodes must be an array");
  const std::size_t total = (std::size_t{2} << k) - 1;
  if (jn.size() != total) throw ParseError(0, "expected " + std::to_string(total) + " nodes");
  std::vector<TreeNode> nodes(total);
  std::vector<bool> seen(total, false);
  for (const json& e : jn) {
    const auto level = get_as<std::size_t>(require(e, "level"), "level");
    const auto index = get_as<std::size_t>(require(e, "index"), "index");
    if (level > k || index >= (std::size_t{1} << level)) throw ParseError(0, "node position out of range");
    const std::size_t h = (std::size_t{1} << level) - 1 + index;
    if (seen[h]) throw ParseError(0, "duplicate node");
    seen[h] = true;
    TreeNode& n = nodes[h];
    n.cell = cell_from_json(require(e, "cell"));
    const json& s = require(e, "split");
    if (!s.is_null()) {
      const auto f = get_as<std::size_t>(require(s, "j"), "j");
      if (f == 0 || f > p) throw ParseError(0, "split feature out of range");
      n.split = Split{f - 1, get_as<double>(require(s, "c"), "c")};
    }
    n.degenerate = get_as<bool>(require(e, "degenerate"), "degenerate");
    n.trivial = get_as<bool>(require(e, "trivial"), "trivial");
    n.regrown = e.contains("regrown") ? get_as<bool>(e["regrown"], "regrown") : false;
    n.score = get_as<double>(require(e, "score"), "score");
  }
  const json& pj = require(j, "provenance");
  TreeProvenance pv;
  try {
    pv.splitter = parse_splitter(get_as<std::string>(require(pj, "splitter"), "splitter"));
  } catch (const ValidationError& e) {
    throw ParseError(0, e.what());
  }
  pv.seed = get_as<std::uint64_t>(require(pj, "seed"), "seed");
  pv.subsample_id = get_as<std::uint64_t>(require(pj, "subsample_id"), "subsample_id");
  pv.schedule_id = get_as<std::uint64_t>(require(pj, "schedule_id"), "schedule_id");
  try {
    return Tree(p, std::move(schedule), std::move(nodes), pv);
  } catch (const ValidationError& e) {
    throw ParseError(0, std::string("invalid tree: ") + e.what());
  }
}

std::string serialize_tree(const Tree& tree) { return tree_to_json(tree).dump(); }

Tree deserialize_tree(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("malformed tree document: ") + e.what());
  }
  return tree_from_json(j);
}

}  // namespace sidforest
