#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sidforest/geometry.hpp"
#include "sidforest/schedule.hpp"
#include "sidforest/tree.hpp"

namespace sidforest {

inline constexpr int kTreeFormatVersion = 1;

/// {"lo": [...], "hi": [...], "closed_hi": [...]}
nlohmann::json cell_to_json(const Cell& cell);
Cell cell_from_json(const nlohmann::json& j);

/// Array of subsets in heap order, 1-based features.
nlohmann::json schedule_to_json(const ThetaSchedule& schedule);
ThetaSchedule schedule_from_json(const nlohmann::json& j, std::size_t p, std::size_t k);

nlohmann::json tree_to_json(const Tree& tree);
/// Throws ParseError on malformed documents and VersionError on an
/// unsupported format version.
Tree tree_from_json(const nlohmann::json& j);

std::string serialize_tree(const Tree& tree);
Tree deserialize_tree(std::string_view text);

}  // namespace sidforest
