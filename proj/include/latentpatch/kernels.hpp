#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version used by the
// library and a serial reference kept for tests and benchmarks.

#include <memory>
#include <span>
#include <vector>

namespace lp::kernels {

// Planar feature map [channels][height][width].
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w) : channels(c), height(h), width(w), data(std::size_t(c) * h * w, 0.0f) {}
  float* plane(int c) { return data.data() + std::size_t(c) * height * width; }
  const float* plane(int c) const { return data.data() + std::size_t(c) * height * width; }
};

// Bilinear resize of every plane (pixel-center aligned, edge clamped).
FeatureMap resize_bilinear(const FeatureMap& in, int height, int width);

// 3x3 convolution with replicate padding. weights: [out][in][3][3].
// Bit-identical to the reference: only the scheduling differs.
FeatureMap conv3x3(const FeatureMap& in, std::span<const float> weights,
                   std::span<const float> bias, int out_channels);
FeatureMap conv3x3_reference(const FeatureMap& in, std::span<const float> weights,
                             std::span<const float> bias, int out_channels);

// Detrended template on the cell grid, planar [3][height][width]: each
// channel is zero on masked-out cells and, over the kept cells, orthogonal to
// the constant and to both centered linear ramps. Correlating with it
// therefore ignores brightness offsets and smooth illumination ramps.
struct CellTemplate {
  int height = 0;
  int width = 0;
  std::vector<float> weights;
  double norm = 0.0;  // L2 norm of weights
};

// Least-squares projection of the constant and linear-ramp components out of
// a raw planar template. keep is row-major [height][width] (nonzero = cell
// takes part in the match); empty keeps every cell.
CellTemplate make_cell_template(int height, int width, std::span<const double> raw,
                                std::span<const unsigned char> keep = {});

// Matched-filter score <t, window> / |t|^2 at every fully-contained offset,
// row-major [(H - th + 1) x (W - tw + 1)]. A window equal to the raw template
// plus any plane scores 1.
// The parallel version accumulates rows in float; it matches the
// double-precision reference to ~1e-5.
std::vector<float> match_score_map(const FeatureMap& cells, const CellTemplate& tpl);
std::vector<std::vector<float>> match_score_maps(const FeatureMap& cells,
                                                 std::span<const CellTemplate> templates);
std::vector<float> match_score_map_reference(const FeatureMap& cells, const CellTemplate& tpl);

// The same scores through real FFTs in double precision, for a fixed cell
// grid. Template spectra are computed once; a call costs three forward
// transforms plus one inverse per template. Agrees with the reference to
// ~1e-12. score_maps() is thread-safe.
class FftMatcher {
 public:
  FftMatcher(int height, int width, std::span<const CellTemplate> templates);
  ~FftMatcher();
  FftMatcher(const FftMatcher&) = delete;
  FftMatcher& operator=(const FftMatcher&) = delete;

  std::vector<std::vector<float>> score_maps(const FeatureMap& cells) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lp::kernels
