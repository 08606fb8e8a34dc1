#pragma once

#include <vector>

#include "latentpatch/core/geometry.hpp"
#include "latentpatch/core/image.hpp"
#include "latentpatch/core/rng.hpp"

namespace lp {

struct TransformParams {
  double rotation_deg = 0.0;
  double brightness_delta = 0.0;
  double scale_jitter = 1.0;

  bool operator==(const TransformParams&) const = default;
};

struct TransformConfig {
  double rot_range = 20.0;          // rotation uniform in [-rot_range, rot_range] degrees
  double brightness_range = 0.10;   // additive, uniform in [-range, range]
  double scale_min = 0.9;
  double scale_max = 1.1;
  double patch_area_fraction = 0.25;  // of the bbox area, square patch

  void validate() const;
  // Same placement rule, no randomness: every sample is the identity.
  TransformConfig without_jitter() const;
};

TransformParams sample_transform(const TransformConfig& cfg, Rng& rng);

// RGB plus coverage. alpha is row-major [height][width]; 0 marks pixels the
// rotation moved outside the patch's support.
struct TransformedPatch {
  ImageBuffer rgb;
  std::vector<float> alpha;
  double scale_jitter = 1.0;
};

// Rotation about the patch center by bilinear resampling, then brightness
// shift and clamp. The scale jitter is carried along for placement.
TransformedPatch apply_transform(const ImageBuffer& patch, const TransformParams& params);

// Square side used for a box: round(sqrt(fraction * area) * jitter).
int placement_side(const BBox& box, double area_fraction, double scale_jitter);

struct Placement {
  ImageBuffer image;
  bool applied = false;  // false: side < 1 or square entirely outside the image
  int x0 = 0;
  int y0 = 0;
  int side = 0;
};

// Resizes the transformed patch to the placement square centered on the box
// and composites it with its alpha. Only pixels inside the square that also
// lie in the image change; they are clamped to [0,1].
Placement place_patch(const ImageBuffer& scene, const BBox& box, const TransformedPatch& patch,
                      const TransformConfig& cfg);

// place_patch writing into img. The returned Placement has no image.
Placement composite_patch(ImageBuffer& img, const BBox& box, const TransformedPatch& patch,
                          const TransformConfig& cfg);

// Resize to the box's placement side, then transform and composite. Same
// geometry as apply_transform followed by place_patch, with the rotation
// resampled once at the final resolution.
Placement overlay_patch(ImageBuffer& img, const BBox& box, const ImageBuffer& patch, const TransformParams& params,
                        const TransformConfig& cfg);

}  // namespace lp
