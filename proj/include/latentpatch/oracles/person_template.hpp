#pragma once

#include <array>
#include <vector>

#include "latentpatch/core/image.hpp"

namespace lp {

// The fixed figure the corpus renderer draws and the toy detector matches.
// Defined on normalized box coordinates (u right, v down, both in [0,1]).
struct TemplateSample {
  std::array<float, 3> rgb{};
  float coverage = 0.0f;  // 0 where the background shows through
};

TemplateSample person_template(double u, double v);

// Base person box at scale 1, in pixels.
inline constexpr int kPersonBaseWidth = 32;
inline constexpr int kPersonBaseHeight = 64;

// Scales and pixel grid the toy detector searches; the corpus renderer can
// place persons on them.
inline constexpr std::array<double, 3> kPersonScales{0.75, 1.0, 1.25};
inline constexpr int kPersonGrid = 4;

// Rasterizes the figure into a width x height box with 4x4 supersampling.
// rgb holds the coverage-weighted mean color of covered samples.
struct RasterPerson {
  ImageBuffer rgb;
  std::vector<float> alpha;
};
RasterPerson rasterize_person(int width, int height);

}  // namespace lp
