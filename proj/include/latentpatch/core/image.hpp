#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lp {

// Dense RGB raster, row-major with interleaved channels. Scalars are 32-bit
// floats in [0,1]; conversion to 8 bits happens only at file and wire I/O.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int width, int height, float fill = 0.0f);
  ImageBuffer(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  float& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const ImageBuffer&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Clips every element to [0,1]. Throws InvalidData on NaN or infinity.
ImageBuffer clamp_image(const ImageBuffer& img);

// Bilinear resampling with pixel-center alignment and edge clamping.
ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height);

// Rounds every element to the nearest multiple of 1/255 (the PNG grid).
ImageBuffer quantize_u8(const ImageBuffer& img);

std::vector<std::uint8_t> to_rgb8(const ImageBuffer& img);
ImageBuffer from_rgb8(int width, int height, std::span<const std::uint8_t> rgb);

double mean_abs_difference(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace lp
