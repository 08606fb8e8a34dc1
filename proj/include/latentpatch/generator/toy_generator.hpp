#pragma once

#include <vector>

#include "latentpatch/generator/generator.hpp"

namespace lp {

// Frozen random network: affine z -> 8x8x16 grid, two rounds of 2x bilinear
// upsampling followed by a 3x3 convolution and tanh, then resize to the
// output size, a 1x1 convolution to RGB and a sigmoid. Weights come from
// GeneratorSpec::seed and are never trained.
class ToyGenerator final : public Generator {
 public:
  static constexpr int kGrid = 8;
  static constexpr int kFeatures = 16;

  explicit ToyGenerator(GeneratorSpec spec);

 protected:
  ImageBuffer run(std::span<const double> z) const override;

 private:
  std::vector<float> affine_w_;  // [kGrid*kGrid*kFeatures][d]
  std::vector<float> affine_b_;
  std::vector<float> conv1_w_, conv1_b_;
  std::vector<float> conv2_w_, conv2_b_;
  std::vector<float> head_w_, head_b_;  // [3][kFeatures]
};

class IdentityGenerator final : public Generator {
 public:
  explicit IdentityGenerator(GeneratorSpec spec);

 protected:
  ImageBuffer run(std::span<const double> z) const override;
};

class HttpGenerator final : public Generator {
 public:
  explicit HttpGenerator(GeneratorSpec spec);

 protected:
  ImageBuffer run(std::span<const double> z) const override;

 private:
  HttpEndpoint endpoint_;
};

}  // namespace lp
