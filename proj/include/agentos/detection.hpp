#pragma once

// Hybrid control detection: the accessibility stream is authoritative, vision
// detections only add controls the accessibility tree does not cover.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "agentos/domain.hpp"
#include "agentos/simenv.hpp"

namespace agentos::detection {

/// A vision detection is discarded when its IoU with any accessibility
/// control is strictly greater than this.
inline constexpr Ratio kDedupThreshold{1, 10};

struct VisionDetection {
  std::string control_type;
  double confidence = 1.0;
  BoundingBox box;
};

void to_json(Json& j, const VisionDetection& v);
void from_json(const Json& j, VisionDetection& v);

struct FusionOptions {
  bool dedup_vision = false;    // also drop vision boxes overlapping an earlier retained vision box
  double min_confidence = 0.0;  // detections below this are discarded
};

struct FusionStats {
  std::size_t acc_count = 0;
  std::size_t vis_count = 0;
  std::size_t discarded_count = 0;
};

void to_json(Json& j, const FusionStats& v);

struct FusionResult {
  std::vector<Control> controls;
  FusionStats stats;
};

/// Keeps visible controls in dump order; fills missing ids with "acc-<index>".
std::vector<Control> filter_accessibility(const std::vector<Control>& raw);

/// Accessibility controls first (never discarded), then surviving vision
/// detections as pseudo-controls "vis-<n>" in input order.
FusionResult fuse(const std::vector<Control>& acc, const std::vector<VisionDetection>& vis,
                  const FusionOptions& options = {});

/// Assigns marks 1..n in list order.
std::vector<Control> annotate_som(std::vector<Control> controls);

class VisionDetector {
 public:
  virtual ~VisionDetector() = default;
  virtual std::vector<VisionDetection> detect(const simenv::Snapshot& snapshot) = 0;
};

struct FixtureVisionOptions {
  int jitter = 0;                   // max absolute per-edge perturbation in pixels
  std::uint64_t seed = 0;
  bool echo_accessibility = false;  // also "see" the standard controls, as a real detector would
  double confidence = 0.9;
};

/// Reports the simulated desktop's custom-rendered widgets as detections.
class FixtureVisionDetector : public VisionDetector {
 public:
  explicit FixtureVisionDetector(FixtureVisionOptions options = {}) : options_(options) {}
  std::vector<VisionDetection> detect(const simenv::Snapshot& snapshot) override;

 private:
  FixtureVisionOptions options_;
};

/// Client for an external grounding service:
///   POST <path> {"screenshot": ref, "app_id": id} -> [VisionDetection...]
class HttpVisionDetector : public VisionDetector {
 public:
  HttpVisionDetector(std::string base_url, std::string path = "/detect", int timeout_seconds = 10);
  std::vector<VisionDetection> detect(const simenv::Snapshot& snapshot) override;

 private:
  std::string base_url_;
  std::string path_;
  int timeout_seconds_;
};

/// snapshot -> filter -> vision -> fuse -> annotate.
struct Perception {
  Observation observation;
  FusionStats stats;
};

Perception perceive(const simenv::Desktop& desktop, const std::string& app_id, VisionDetector* detector,
                    const FusionOptions& options = {});

}  // namespace agentos::detection
