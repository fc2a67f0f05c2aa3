#include <gtest/gtest.h>

#include "agentos/detection.hpp"
#include "support.hpp"

using namespace agentos;
using namespace agentos::detection;

namespace {

Control acc(std::string id, BoundingBox box, bool visible = true) {
  Control c;
  c.id = std::move(id);
  c.control_type = "Button";
  c.box = box;
  c.visible = visible;
  return c;
}

VisionDetection vis(BoundingBox box, double confidence = 0.9) { return VisionDetection{"Image", confidence, box}; }

}  // namespace

TEST(FilterAccessibility, DropsInvisible) {
  const auto out = filter_accessibility({acc("a", {0, 0, 1, 1}), acc("b", {0, 0, 1, 1}, false)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, "a");
}

TEST(FilterAccessibility, EmptyInEmptyOut) { EXPECT_TRUE(filter_accessibility({}).empty()); }

TEST(FilterAccessibility, StableIdsForRepeatedDumps) {
  std::vector<Control> raw;
  for (int i = 0; i < 10; ++i) raw.push_back(acc(i % 2 ? "" : "c" + std::to_string(i), {i, 0, i + 1, 1}));
  const auto a = filter_accessibility(raw);
  const auto b = filter_accessibility(raw);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[1].id, "acc-1");
}

TEST(Fuse, OverlappingVisionDiscarded) {
  const auto r = fuse({acc("a", {0, 0, 10, 10})}, {vis({5, 0, 15, 10})});
  EXPECT_EQ(r.controls.size(), 1u);
  EXPECT_EQ(r.stats.discarded_count, 1u);
}

TEST(Fuse, DisjointVisionRetained) {
  const auto r = fuse({acc("a", {0, 0, 10, 10})}, {vis({100, 100, 110, 110})});
  ASSERT_EQ(r.controls.size(), 2u);
  EXPECT_EQ(r.controls[1].id, "vis-0");
  EXPECT_EQ(r.controls[1].source, ControlSource::Vision);
  EXPECT_EQ(r.stats.acc_count, 1u);
  EXPECT_EQ(r.stats.vis_count, 1u);
}

TEST(Fuse, NoAccessibilityKeepsAllVision) {
  const auto r = fuse({}, {vis({0, 0, 5, 5}), vis({0, 0, 5, 5}), vis({9, 9, 12, 12})});
  EXPECT_EQ(r.controls.size(), 3u);
}

TEST(Fuse, BoundaryTenPercentRetained) {
  // A 10x1 strip inside a 10x10 box: 10 shared cells over a union of 100.
  const BoundingBox a2{0, 0, 10, 10}, v2{0, 0, 10, 1};
  ASSERT_EQ(iou(a2, v2), (Ratio{1, 10}));
  EXPECT_EQ(fuse({acc("a", a2)}, {vis(v2)}).controls.size(), 2u);
}

TEST(Fuse, MinConfidenceFilters) {
  FusionOptions o;
  o.min_confidence = 0.5;
  const auto r = fuse({}, {vis({0, 0, 1, 1}, 0.4), vis({5, 5, 6, 6}, 0.6)}, o);
  EXPECT_EQ(r.controls.size(), 1u);
  EXPECT_EQ(r.stats.discarded_count, 1u);
}

TEST(AnnotateSom, MarksInOrder) {
  const auto out = annotate_som({acc("a", {}), acc("b", {}), acc("c", {})});
  EXPECT_EQ(out[0].som_mark, 1);
  EXPECT_EQ(out[2].som_mark, 3);
  EXPECT_TRUE(annotate_som({}).empty());
  EXPECT_EQ(annotate_som(out), out);
}

TEST(Perceive, StandardAppIsAccessibilityOnly) {
  simenv::Desktop d(testing_support::catalog());
  d.launch_app("sheetapp");
  FixtureVisionDetector det;
  const auto p = perceive(d, "sheetapp", &det);
  EXPECT_EQ(p.stats.vis_count, 0u);
  for (const auto& c : p.observation.controls) EXPECT_EQ(c.source, ControlSource::Accessibility);
  EXPECT_EQ(p.observation.controls.size(), 5u);
}

TEST(Perceive, CustomRenderedBecomePseudoControls) {
  simenv::Desktop d(testing_support::catalog());
  d.launch_app("slideapp");
  FixtureVisionDetector det;
  const auto p = perceive(d, "slideapp", &det);
  EXPECT_EQ(p.stats.vis_count, 3u);
  ASSERT_NE(p.observation.find("vis-1"), nullptr);
  EXPECT_EQ(p.observation.find("vis-1")->box, (BoundingBox{110, 300, 210, 360}));
}

TEST(Perceive, EchoedStandardControlsAreDeduplicated) {
  simenv::Desktop d(testing_support::catalog());
  d.launch_app("slideapp");
  FixtureVisionOptions o;
  o.echo_accessibility = true;
  o.jitter = 1;
  o.seed = 3;
  FixtureVisionDetector det(o);
  const auto p = perceive(d, "slideapp", &det);
  EXPECT_EQ(p.stats.vis_count, 3u + p.stats.acc_count);
  EXPECT_EQ(p.stats.discarded_count, p.stats.acc_count);
}
