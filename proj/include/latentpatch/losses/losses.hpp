#pragma once

#include <span>
#include <vector>

#include "latentpatch/core/geometry.hpp"
#include "latentpatch/core/image.hpp"
#include "latentpatch/oracles/oracles.hpp"
#include "latentpatch/transformer/transformer.hpp"

namespace lp {

enum class DetMode { obj_times_cls, obj_only };

// How the TV term enters the total. sum is the raw tv_loss; mean divides it
// by the number of terms, 3 (H-1)(W-1), so lambda_tv does not depend on the
// patch resolution.
enum class TvNormalization { sum, mean };

struct LossWeights {
  double lambda_tv = 0.1;
  double lambda_cls = 0.1;
  DetMode det_mode = DetMode::obj_times_cls;
  TvNormalization tv_normalization = TvNormalization::mean;

  void validate() const;
};

struct LossBreakdown {
  double det = 0.0;
  double tv = 0.0;   // as weighted, i.e. after normalization
  double cls = 0.0;
  double total = 0.0;

  static LossBreakdown assemble(double det, double tv, double cls, const LossWeights& w) {
    return {det, tv, cls, det + w.lambda_tv * tv + w.lambda_cls * cls};
  }
  bool operator==(const LossBreakdown&) const = default;
};

// Sum over detections whose argmax class is person_idx.
double detection_loss(std::span<const Detection> dets, int person_idx, DetMode mode);

// Sum over the interior (H-1)x(W-1) grid and channels of
// sqrt(dx^2 + dy^2) with forward differences. Throws below 2x2.
double tv_loss(const ImageBuffer& patch);
double tv_term(const ImageBuffer& patch, TvNormalization norm);

// -log(probs[target] + 1e-12).
double classifier_guidance_loss(std::span<const double> probs, int target);

// A training scene with the person boxes the patch is placed on.
struct PlacementScene {
  ImageBuffer image;
  std::vector<BBox> boxes;
};

// Boxes from the detector on the clean image, person class only. One
// detector query per scene.
std::vector<PlacementScene> prepare_scenes(std::span<const ImageBuffer> images, const Detector& detector);

// Patches one scene: the same transform on every box, via overlay_patch.
ImageBuffer patch_scene(const PlacementScene& scene, const ImageBuffer& patch, const TransformParams& params,
                        const TransformConfig& cfg);

struct LossOracles {
  const Detector* detector = nullptr;
  const Classifier* classifier = nullptr;  // null: cls term is 0, no query
};

// det: mean over scenes of detection_loss on the patched scene (one detector
// query each). tv and cls: on the raw patch. params holds one transform per
// scene.
LossBreakdown total_loss(std::span<const PlacementScene> scenes, const ImageBuffer& patch, const LossWeights& weights,
                         const LossOracles& oracles, const TransformConfig& transform,
                         std::span<const TransformParams> params);

}  // namespace lp
