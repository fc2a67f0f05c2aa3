#include "agentos/detection.hpp"

#include <algorithm>
#include <random>

#include "agentos/hash.hpp"

namespace agentos::detection {

void to_json(Json& j, const VisionDetection& v) {
  j = Json{{"control_type", v.control_type}, {"confidence", v.confidence}, {"box", v.box}};
}

void from_json(const Json& j, VisionDetection& v) {
  v.control_type = j.value("control_type", "");
  v.confidence = j.value("confidence", 1.0);
  if (v.confidence < 0.0 || v.confidence > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "vision confidence outside [0,1]");
  }
  v.box = j.at("box").get<BoundingBox>();
}

void to_json(Json& j, const FusionStats& v) {
  j = Json{{"acc_count", v.acc_count}, {"vis_count", v.vis_count}, {"discarded_count", v.discarded_count}};
}

std::vector<Control> filter_accessibility(const std::vector<Control>& raw) {
  std::vector<Control> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!raw[i].visible) continue;
    Control c = raw[i];
    if (c.id.empty()) c.id = "acc-" + std::to_string(i);
    c.source = ControlSource::Accessibility;
    c.som_mark.reset();
    out.push_back(std::move(c));
  }
  return out;
}

FusionResult fuse(const std::vector<Control>& acc, const std::vector<VisionDetection>& vis,
                  const FusionOptions& options) {
  FusionResult result;
  result.stats.acc_count = acc.size();
  result.stats.vis_count = vis.size();
  result.controls = acc;

  std::vector<BoundingBox> retained_vision;
  for (const auto& det : vis) {
    bool discard = det.confidence < options.min_confidence;
    for (std::size_t i = 0; !discard && i < acc.size(); ++i) {
      discard = iou(det.box, acc[i].box).greater_than(kDedupThreshold);
    }
    if (!discard && options.dedup_vision) {
      discard = std::any_of(retained_vision.begin(), retained_vision.end(), [&](const BoundingBox& b) {
        return iou(det.box, b).greater_than(kDedupThreshold);
      });
    }
    if (discard) {
      ++result.stats.discarded_count;
      continue;
    }
    Control pseudo;
    pseudo.id = "vis-" + std::to_string(retained_vision.size());
    pseudo.source = ControlSource::Vision;
    pseudo.control_type = det.control_type;
    pseudo.box = det.box;
    pseudo.visible = true;
    pseudo.enabled = true;
    pseudo.confidence = det.confidence;
    result.controls.push_back(std::move(pseudo));
    retained_vision.push_back(det.box);
  }
  return result;
}

std::vector<Control> annotate_som(std::vector<Control> controls) {
  int mark = 1;
  for (auto& c : controls) c.som_mark = mark++;
  return controls;
}

std::vector<VisionDetection> FixtureVisionDetector::detect(const simenv::Snapshot& snapshot) {
  // Seeded per screenshot so repeated detection of one frame is stable.
  const auto digest = sha256_hex(snapshot.screenshot_ref);
  const std::uint64_t frame = std::stoull(digest.substr(0, 15), nullptr, 16);
  std::seed_seq seq{static_cast<std::uint32_t>(options_.seed), static_cast<std::uint32_t>(options_.seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(frame >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<int> delta(-options_.jitter, options_.jitter);

  auto jittered = [&](BoundingBox b) {
    if (options_.jitter == 0) return b;
    b.left += delta(rng);
    b.top += delta(rng);
    b.right += delta(rng);
    b.bottom += delta(rng);
    if (b.right < b.left) b.right = b.left;
    if (b.bottom < b.top) b.bottom = b.top;
    return b;
  };

  std::vector<VisionDetection> out;
  if (options_.echo_accessibility) {
    for (const auto& c : snapshot.accessibility) {
      if (c.visible) out.push_back({c.control_type, options_.confidence, jittered(c.box)});
    }
  }
  for (const auto& c : snapshot.vision_only) {
    out.push_back({c.control_type, options_.confidence, jittered(c.box)});
  }
  return out;
}

Perception perceive(const simenv::Desktop& desktop, const std::string& app_id, VisionDetector* detector,
                    const FusionOptions& options) {
  const auto snap = desktop.snapshot(app_id);
  const auto acc = filter_accessibility(snap.accessibility);
  std::vector<VisionDetection> vis;
  if (detector) vis = detector->detect(snap);
  auto fused = fuse(acc, vis, options);

  Perception p;
  p.observation.app_id = app_id;
  p.observation.screenshot_ref = snap.screenshot_ref;
  p.observation.timestamp = snap.tick;
  p.observation.controls = annotate_som(std::move(fused.controls));
  p.stats = fused.stats;
  return p;
}

}  // namespace agentos::detection
