#include "latentpatch/transformer/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "latentpatch/core/error.hpp"

namespace lp {

void TransformConfig::validate() const {
  if (!(rot_range >= 0.0) || !std::isfinite(rot_range)) throw InvalidArgument("rot_range must be >= 0");
  if (!(brightness_range >= 0.0) || !std::isfinite(brightness_range)) {
    throw InvalidArgument("brightness_range must be >= 0");
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max) || !std::isfinite(scale_max)) {
    throw InvalidArgument("scale range must satisfy 0 < scale_min <= scale_max");
  }
  if (!(patch_area_fraction > 0.0 && patch_area_fraction < 1.0)) {
    throw InvalidArgument("patch_area_fraction must lie in (0, 1)");
  }
}

TransformConfig TransformConfig::without_jitter() const {
  TransformConfig c = *this;
  c.rot_range = 0.0;
  c.brightness_range = 0.0;
  c.scale_min = 1.0;
  c.scale_max = 1.0;
  return c;
}

TransformParams sample_transform(const TransformConfig& cfg, Rng& rng) {
  TransformParams p;
  p.rotation_deg = rng.uniform(-cfg.rot_range, cfg.rot_range);
  p.brightness_delta = rng.uniform(-cfg.brightness_range, cfg.brightness_range);
  p.scale_jitter = rng.uniform(cfg.scale_min, cfg.scale_max);
  return p;
}

TransformedPatch apply_transform(const ImageBuffer& patch, const TransformParams& params) {
  if (patch.empty()) throw InvalidArgument("apply_transform: empty patch");
  const int w = patch.width();
  const int h = patch.height();
  TransformedPatch out{ImageBuffer(w, h), std::vector<float>(std::size_t(w) * h, 1.0f),
                       params.scale_jitter};

  if (params.rotation_deg == 0.0) {
    out.rgb = patch;
  } else {
    const double theta = params.rotation_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double cx = 0.5 * w, cy = 0.5 * h;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Inverse rotation of the output pixel center into the source.
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const double sx = cs * dx + sn * dy + cx - 0.5;
        const double sy = -sn * dx + cs * dy + cy - 0.5;
        if (sx < -0.5 || sy < -0.5 || sx > w - 0.5 || sy > h - 0.5) {
          out.alpha[std::size_t(y) * w + x] = 0.0f;
          continue;
        }
        const double fx = std::clamp(sx, 0.0, double(w - 1));
        const double fy = std::clamp(sy, 0.0, double(h - 1));
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        const double ax = fx - x0, ay = fy - y0;
        for (int c = 0; c < 3; ++c) {
          const double top = patch.at(x0, y0, c) * (1 - ax) + patch.at(x1, y0, c) * ax;
          const double bot = patch.at(x0, y1, c) * (1 - ax) + patch.at(x1, y1, c) * ax;
          out.rgb.at(x, y, c) = static_cast<float>(top * (1 - ay) + bot * ay);
        }
      }
    }
  }
  if (params.brightness_delta != 0.0) {
    const float d = static_cast<float>(params.brightness_delta);
    for (float& v : out.rgb.data()) v = std::clamp(v + d, 0.0f, 1.0f);
  }
  return out;
}

int placement_side(const BBox& box, double area_fraction, double scale_jitter) {
  return static_cast<int>(std::lround(std::sqrt(area_fraction * box.area()) * scale_jitter));
}

namespace {

float sample_alpha(const std::vector<float>& alpha, int w, int h, double fx, double fy) {
  fx = std::clamp(fx, 0.0, double(w - 1));
  fy = std::clamp(fy, 0.0, double(h - 1));
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double ax = fx - x0, ay = fy - y0;
  auto a = [&](int x, int y) { return double(alpha[std::size_t(y) * w + x]); };
  const double top = a(x0, y0) * (1 - ax) + a(x1, y0) * ax;
  const double bot = a(x0, y1) * (1 - ax) + a(x1, y1) * ax;
  return static_cast<float>(top * (1 - ay) + bot * ay);
}

}  // namespace

Placement place_patch(const ImageBuffer& scene, const BBox& box, const TransformedPatch& patch,
                      const TransformConfig& cfg) {
  Placement out{scene};
  Placement meta = composite_patch(out.image, box, patch, cfg);
  meta.image = std::move(out.image);
  return meta;
}

Placement composite_patch(ImageBuffer& img, const BBox& box, const TransformedPatch& patch,
                          const TransformConfig& cfg) {
  Placement out;
  const int side = placement_side(box, cfg.patch_area_fraction, patch.scale_jitter);
  out.side = side;
  if (side < 1) return out;
  out.x0 = static_cast<int>(std::lround(box.center_x() - 0.5 * side));
  out.y0 = static_cast<int>(std::lround(box.center_y() - 0.5 * side));
  const int xa = std::max(out.x0, 0), ya = std::max(out.y0, 0);
  const int xb = std::min(out.x0 + side, img.width()), yb = std::min(out.y0 + side, img.height());
  if (xa >= xb || ya >= yb) return out;
  out.applied = true;

  const ImageBuffer rgb = resize_bilinear(patch.rgb, side, side);
  const int pw = patch.rgb.width(), ph = patch.rgb.height();
  const bool same = pw == side && ph == side;
  const double sx = double(pw) / side, sy = double(ph) / side;
  const bool opaque = std::all_of(patch.alpha.begin(), patch.alpha.end(), [](float a) { return a == 1.0f; });
  for (int y = ya; y < yb; ++y) {
    const int py = y - out.y0;
    for (int x = xa; x < xb; ++x) {
      const int px = x - out.x0;
      float a = 1.0f;
      if (!opaque) {
        a = same ? patch.alpha[std::size_t(py) * pw + px]
                 : sample_alpha(patch.alpha, pw, ph, (px + 0.5) * sx - 0.5, (py + 0.5) * sy - 0.5);
      }
      if (a <= 0.0f) continue;
      for (int c = 0; c < 3; ++c) {
        float& dst = img.at(x, y, c);
        dst = std::clamp(a * rgb.at(px, py, c) + (1.0f - a) * dst, 0.0f, 1.0f);
      }
    }
  }
  return out;
}

Placement overlay_patch(ImageBuffer& img, const BBox& box, const ImageBuffer& patch, const TransformParams& params,
                        const TransformConfig& cfg) {
  const int side = placement_side(box, cfg.patch_area_fraction, params.scale_jitter);
  if (side < 1) return Placement{{}, false, 0, 0, side};
  return composite_patch(img, box, apply_transform(resize_bilinear(patch, side, side), params), cfg);
}

}  // namespace lp
