#include "latentpatch/oracles/person_template.hpp"

#include "latentpatch/core/error.hpp"

namespace lp {

namespace {

constexpr std::array<float, 3> kHair{0.18f, 0.11f, 0.07f};
constexpr std::array<float, 3> kSkin{0.93f, 0.74f, 0.60f};
constexpr std::array<float, 3> kShirt{0.55f, 0.38f, 0.36f};
constexpr std::array<float, 3> kSleeve{0.10f, 0.42f, 0.20f};
constexpr std::array<float, 3> kBelt{0.10f, 0.08f, 0.06f};
constexpr std::array<float, 3> kPants{0.12f, 0.18f, 0.45f};
constexpr std::array<float, 3> kShoes{0.05f, 0.05f, 0.05f};

bool in_rect(double u, double v, double u0, double u1, double v0, double v1) {
  return u >= u0 && u < u1 && v >= v0 && v < v1;
}

TemplateSample solid(const std::array<float, 3>& c) { return {c, 1.0f}; }

}  // namespace

TemplateSample person_template(double u, double v) {
  // head
  double du = (u - 0.5) / 0.26;
  double dv = (v - 0.11) / 0.11;
  if (du * du + dv * dv <= 1.0) return solid(v < 0.06 ? kHair : kSkin);
  if (in_rect(u, v, 0.40, 0.60, 0.20, 0.23)) return solid(kSkin);
  // torso
  if (in_rect(u, v, 0.10, 0.90, 0.22, 0.56)) {
    return solid(kShirt);
  }
  // sleeves and hands
  if (in_rect(u, v, 0.0, 0.10, 0.22, 0.48) || in_rect(u, v, 0.90, 1.0, 0.22, 0.48)) return solid(kSleeve);
  if (in_rect(u, v, 0.0, 0.10, 0.48, 0.56) || in_rect(u, v, 0.90, 1.0, 0.48, 0.56)) return solid(kSkin);
  if (in_rect(u, v, 0.10, 0.90, 0.56, 0.60)) return solid(kBelt);
  // legs and shoes
  if (in_rect(u, v, 0.12, 0.48, 0.60, 0.93) || in_rect(u, v, 0.52, 0.88, 0.60, 0.93)) return solid(kPants);
  if (in_rect(u, v, 0.10, 0.48, 0.93, 1.0) || in_rect(u, v, 0.52, 0.90, 0.93, 1.0)) return solid(kShoes);
  return {};
}

RasterPerson rasterize_person(int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("rasterize_person: empty box");
  constexpr int kSub = 4;
  RasterPerson out{ImageBuffer(width, height), std::vector<float>(std::size_t(width) * height, 0.0f)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::array<double, 3> acc{};
      int covered = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          double u = (x + (sx + 0.5) / kSub) / width;
          double v = (y + (sy + 0.5) / kSub) / height;
          TemplateSample s = person_template(u, v);
          if (s.coverage > 0.0f) {
            ++covered;
            for (int c = 0; c < 3; ++c) acc[c] += s.rgb[c];
          }
        }
      }
      out.alpha[std::size_t(y) * width + x] = float(covered) / (kSub * kSub);
      if (covered > 0) {
        for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = static_cast<float>(acc[c] / covered);
      }
    }
  }
  return out;
}

}  // namespace lp
