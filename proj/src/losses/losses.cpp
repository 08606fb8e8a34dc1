#include "latentpatch/losses/losses.hpp"

#include <cmath>

#include "latentpatch/core/error.hpp"

namespace lp {

void LossWeights::validate() const {
  if (!(lambda_tv >= 0.0) || !std::isfinite(lambda_tv)) throw InvalidArgument("lambda_tv must be >= 0");
  if (!(lambda_cls >= 0.0) || !std::isfinite(lambda_cls)) throw InvalidArgument("lambda_cls must be >= 0");
}

double detection_loss(std::span<const Detection> dets, int person_idx, DetMode mode) {
  double sum = 0.0;
  for (const auto& d : dets) {
    if (d.argmax_class() != person_idx) continue;
    sum += mode == DetMode::obj_only ? d.objectness : d.objectness * d.class_probs[person_idx];
  }
  return sum;
}

double tv_loss(const ImageBuffer& patch) {
  const int w = patch.width(), h = patch.height();
  if (w < 2 || h < 2) throw InvalidArgument("tv_loss needs a patch of at least 2x2");
  double sum = 0.0;
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double p = patch.at(x, y, c);
        const double dx = patch.at(x + 1, y, c) - p;
        const double dy = patch.at(x, y + 1, c) - p;
        sum += std::sqrt(dx * dx + dy * dy);
      }
    }
  }
  return sum;
}

double tv_term(const ImageBuffer& patch, TvNormalization norm) {
  const double tv = tv_loss(patch);
  if (norm == TvNormalization::sum) return tv;
  return tv / (3.0 * (patch.width() - 1) * (patch.height() - 1));
}

double classifier_guidance_loss(std::span<const double> probs, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= probs.size()) {
    throw InvalidArgument("classifier target " + std::to_string(target) + " out of range");
  }
  return -std::log(probs[target] + 1e-12);
}

std::vector<PlacementScene> prepare_scenes(std::span<const ImageBuffer> images, const Detector& detector) {
  const int person = detector.spec().person_class_index;
  std::vector<PlacementScene> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    PlacementScene s{img, {}};
    for (const auto& d : detect_image(detector, img)) {
      if (d.argmax_class() == person) s.boxes.push_back(d.bbox);
    }
    out.push_back(std::move(s));
  }
  return out;
}

ImageBuffer patch_scene(const PlacementScene& scene, const ImageBuffer& patch, const TransformParams& params,
                        const TransformConfig& cfg) {
  ImageBuffer img = scene.image;
  for (const auto& box : scene.boxes) overlay_patch(img, box, patch, params, cfg);
  return img;
}

LossBreakdown total_loss(std::span<const PlacementScene> scenes, const ImageBuffer& patch, const LossWeights& weights,
                         const LossOracles& oracles, const TransformConfig& transform,
                         std::span<const TransformParams> params) {
  if (scenes.empty()) throw InvalidArgument("total_loss needs a non-empty scene batch");
  if (params.size() != scenes.size()) throw InvalidArgument("total_loss needs one transform per scene");
  if (oracles.detector == nullptr) throw InvalidArgument("total_loss needs a detector");
  const int person = oracles.detector->spec().person_class_index;

  double det = 0.0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto dets = detect_image(*oracles.detector, patch_scene(scenes[i], patch, params[i], transform));
    det += detection_loss(dets, person, weights.det_mode);
  }
  det /= double(scenes.size());

  const double tv = tv_term(patch, weights.tv_normalization);
  double cls = 0.0;
  if (oracles.classifier != nullptr) {
    const auto& cs = oracles.classifier->spec();
    const ImageBuffer input = patch.width() == cs.input_width && patch.height() == cs.input_height
                                  ? patch
                                  : resize_bilinear(patch, cs.input_width, cs.input_height);
    const auto probs = oracles.classifier->classify(input);
    cls = classifier_guidance_loss(probs, cs.target_class);
  }
  return LossBreakdown::assemble(det, tv, cls, weights);
}

}  // namespace lp
