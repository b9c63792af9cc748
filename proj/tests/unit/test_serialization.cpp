#include <gtest/gtest.h>

#include "sidforest/errors.hpp"
#include "sidforest/forest.hpp"
#include "sidforest/models.hpp"
#include "sidforest/serialization.hpp"

using namespace sidforest;

namespace {

Tree sample_tree() {
  const Dataset d = generate_sample(make_model("sparse-quadratic", {{"noise", 0.3}}), 150, 2);
  return grow_tree(d, d.all_indices(), draw_theta_schedule(3, 2.0 / 3.0, 3, 4), SplitterKind::SampleCart, 5, 2);
}

}  // namespace

TEST(Serialization, TreeRoundTripIsExact) {
  const Tree t = sample_tree();
  const std::string text = serialize_tree(t);
  const Tree back = deserialize_tree(text);
  EXPECT_EQ(back, t);
  EXPECT_EQ(serialize_tree(back), text);
}

TEST(Serialization, TheoreticalTreeWithFlagsRoundTrips) {
  const RegressionModel m = make_model("indicator");
  const ThetaSchedule s = draw_theta_schedule(3, 1.0 / 3.0, 3, 1);
  const Tree t = grow_theoretical_tree(m, s);
  EXPECT_EQ(deserialize_tree(serialize_tree(t)), t);
}

TEST(Serialization, CellsKeepClosedEnds) {
  const Cell c({{0.0, 0.25, false}, {0.5, 1.0, true}});
  const auto j = cell_to_json(c);
  EXPECT_EQ(j["closed_hi"], nlohmann::json::array({false, true}));
  EXPECT_EQ(cell_from_json(j), c);
}

TEST(Serialization, SchedulesAreOneBased) {
  const ThetaSchedule s(4, 1, {{0, 3}});
  const auto j = schedule_to_json(s);
  EXPECT_EQ(j, nlohmann::json::parse("[[1, 4]]"));
  EXPECT_EQ(schedule_from_json(j, 4, 1), s);
  EXPECT_THROW(schedule_from_json(nlohmann::json::parse("[[0]]"), 4, 1), ParseError);
}

TEST(Serialization, TruncatedPayloadIsAParseError) {
  const std::string text = serialize_tree(sample_tree());
  EXPECT_THROW(deserialize_tree(text.substr(0, text.size() / 2)), ParseError);
  EXPECT_THROW(deserialize_tree(""), ParseError);
  auto j = nlohmann::json::parse(text);
  j["nodes"].erase(j["nodes"].size() - 1);
  EXPECT_THROW(tree_from_json(j), ParseError);
}

TEST(Serialization, FutureVersionIsAVersionError) {
  auto j = tree_to_json(sample_tree());
  j["version"] = kTreeFormatVersion + 1;
  EXPECT_THROW(tree_from_json(j), VersionError);
}
