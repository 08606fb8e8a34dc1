#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentpatch/core/geometry.hpp"
#include "latentpatch/oracles/oracles.hpp"
#include "latentpatch/scenes/scenes.hpp"
#include "latentpatch/transformer/transformer.hpp"

namespace lp {

struct ScoredBox {
  std::size_t image = 0;  // index into the gt list
  BBox box;
  double confidence = 0.0;
};

// All-point interpolated AP. Predictions are ranked by confidence (ties by
// input order) and matched greedily to the best unmatched gt of the same
// image at IoU >= iou_thr. Throws InvalidArgument when there is no gt.
double average_precision(std::span<const ScoredBox> predictions, std::span<const std::vector<BBox>> gt,
                         double iou_thr);

struct EvalConfig {
  double iou_threshold = 0.5;
  bool randomized = false;  // jittered transforms at eval, seeded
  std::uint64_t seed = 0;
  TransformConfig transform;

  void validate() const;
};

struct SceneCounts {
  std::string id;
  int gt = 0;
  int clean = 0;    // person detections
  int patched = 0;
};

struct EvalReport {
  double ap_person = 0.0;
  double ap_clean = 0.0;
  std::vector<SceneCounts> scenes;
  std::uint64_t detector_queries = 0;
  EvalConfig config;
  bool patched = false;

  std::string to_json() const;
};

// Per scene: detect on the clean image, place the patch on each detected
// person box, detect again. Two detector queries per scene. Without a patch
// the second pass sees the clean image.
EvalReport evaluate_patch(std::span<const Scene> corpus, const std::optional<ImageBuffer>& patch,
                          const Detector& detector, const EvalConfig& cfg);

// Person detections as scored boxes.
std::vector<ScoredBox> person_predictions(std::span<const Detection> dets, std::size_t image, int person_idx);

}  // namespace lp
