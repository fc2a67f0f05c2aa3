#include <gtest/gtest.h>

#include <random>

#include "agentos/domain.hpp"
#include "agentos/error.hpp"

using namespace agentos;

namespace {

// Counts covered unit cells on the integer grid.
Ratio cell_iou(const BoundingBox& a, const BoundingBox& b) {
  std::int64_t inter = 0, uni = 0;
  const int lo_x = std::min(a.left, b.left), hi_x = std::max(a.right, b.right);
  const int lo_y = std::min(a.top, b.top), hi_y = std::max(a.bottom, b.bottom);
  for (int x = lo_x; x < hi_x; ++x) {
    for (int y = lo_y; y < hi_y; ++y) {
      const bool in_a = x >= a.left && x < a.right && y >= a.top && y < a.bottom;
      const bool in_b = x >= b.left && x < b.right && y >= b.top && y < b.bottom;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? Ratio{0, 1} : Ratio{inter, uni};
}

}  // namespace

TEST(Iou, DisjointIsZero) { EXPECT_EQ(iou({0, 0, 10, 10}, {20, 20, 30, 30}), (Ratio{0, 1})); }

TEST(Iou, IdenticalIsOne) { EXPECT_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), (Ratio{1, 1})); }

TEST(Iou, HalfShiftIsOneThird) {
  const BoundingBox a{0, 0, 10, 10}, b{5, 0, 15, 10};
  EXPECT_EQ(iou(a, b), cell_iou(a, b));
  EXPECT_EQ(iou(a, b), (Ratio{1, 3}));
  EXPECT_NEAR(iou(a, b).value(), 1.0 / 3.0, 1e-12);
}

TEST(Iou, ZeroAreaUnionIsZero) { EXPECT_EQ(iou({3, 3, 3, 3}, {3, 3, 3, 3}), (Ratio{0, 1})); }

TEST(Iou, MatchesCellOracleOnRandomBoxes) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(0, 24);
  for (int i = 0; i < 500; ++i) {
    auto box = [&] {
      int l = d(rng), t = d(rng), r = d(rng), b = d(rng);
      if (l > r) std::swap(l, r);
      if (t > b) std::swap(t, b);
      return BoundingBox{l, t, r, b};
    };
    const auto a = box(), b = box();
    ASSERT_EQ(iou(a, b), cell_iou(a, b)) << i;
    ASSERT_EQ(iou(a, b), iou(b, a));
  }
}

TEST(Ratio, GreaterThanIsExact) {
  EXPECT_FALSE((Ratio{1, 10}).greater_than({1, 10}));
  EXPECT_FALSE((Ratio{10, 100}).greater_than({1, 10}));
  EXPECT_TRUE((Ratio{11, 100}).greater_than({1, 10}));
  EXPECT_TRUE((Ratio{1, 3}).greater_than({1, 10}));
}

TEST(BoundingBox, RejectsInvertedJson) {
  EXPECT_THROW(Json::parse("[10,0,0,10]").get<BoundingBox>(), Error);
  EXPECT_EQ(Json::parse("[1,2,3,4]").get<BoundingBox>(), (BoundingBox{1, 2, 3, 4}));
}

TEST(PlannedAction, GuiActionNeedsTarget) {
  EXPECT_THROW(Json::parse(R"({"operation":"Click"})").get<PlannedAction>(), Error);
  EXPECT_THROW(Json::parse(R"({"operation":"ApiCall","payload":{}})").get<PlannedAction>(), Error);
  EXPECT_THROW(Json::parse(R"({"operation":"Drag","target":"x"})").get<PlannedAction>(), Error);
}

TEST(PlannedAction, RoundTripsThroughJson) {
  auto a = PlannedAction::api_call("save_as", Json{{"format", "csv"}}, "one call");
  a.payload["gui_fallback"] = Json::array({PlannedAction::click("file_menu")});
  const auto back = Json(a).get<PlannedAction>();
  EXPECT_EQ(back, a);
  EXPECT_EQ(back.api_name(), "save_as");
  EXPECT_EQ(back.gui_fallback().size(), 1u);
  EXPECT_EQ(back.describe(), "ApiCall save_as(format=csv)");
  EXPECT_EQ(PlannedAction::type_text("note", "hi").describe(), "TypeText note \"hi\"");
}

TEST(SpeculativeBatch, CheckBounds) {
  SpeculativeBatch b;
  EXPECT_THROW(b.check(5), Error);
  b.actions.assign(3, PlannedAction::click("x"));
  EXPECT_NO_THROW(b.check(3));
  EXPECT_THROW(b.check(2), Error);
}

TEST(SubtaskPlan, DependenciesMustPointBackwards) {
  SubtaskPlan plan;
  plan.subtasks = {{"read", "sheetapp", {}}, {"write", "fileman", {0}}};
  EXPECT_NO_THROW(plan.validate());
  plan.subtasks[0].depends_on = {1};
  EXPECT_THROW(plan.validate(), Error);
  plan.subtasks[0].depends_on = {0};
  EXPECT_THROW(plan.validate(), Error);
}

TEST(EnumNames, RoundTrip) {
  for (auto s : {AppState::Continue, AppState::Pending, AppState::Finish, AppState::Fail}) {
    EXPECT_EQ(parse_app_state(to_string(s)), s);
  }
  for (auto s : {HostState::Continue, HostState::Assign, HostState::Pending, HostState::Finish, HostState::Fail}) {
    EXPECT_EQ(parse_host_state(to_string(s)), s);
  }
  EXPECT_EQ(parse_error_code("BudgetExhausted"), ErrorCode::BudgetExhausted);
  EXPECT_THROW(parse_app_state("DONE"), Error);
}
