#include "latentpatch/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latentpatch/core/error.hpp"

namespace lp {

ImageBuffer::ImageBuffer(int width, int height, float fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidArgument("negative image dimensions");
  data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0) throw InvalidArgument("negative image dimensions");
  if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw InvalidArgument("image data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(width) + "x" +
                          std::to_string(height) + "x3");
  }
}

ImageBuffer clamp_image(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (float& v : out.data()) {
    if (!std::isfinite(v)) throw InvalidData("non-finite pixel value");
    v = std::clamp(v, 0.0f, 1.0f);
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("resize target must be positive");
  if (img.empty()) throw InvalidArgument("cannot resize an empty image");
  if (width == img.width() && height == img.height()) return img;

  ImageBuffer out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  const int max_x = img.width() - 1;
  const int max_y = img.height() - 1;
  for (int y = 0; y < height; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_y));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, max_y);
    double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_x));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, max_x);
      double wx = fx - x0;
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
        double bot = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = static_cast<float>(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> to_rgb8(const ImageBuffer& img) {
  std::vector<std::uint8_t> out(img.size());
  auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    float v = std::isfinite(src[i]) ? std::clamp(src[i], 0.0f, 1.0f) : 0.0f;
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

ImageBuffer from_rgb8(int width, int height, std::span<const std::uint8_t> rgb) {
  std::vector<float> data(rgb.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) data[i] = rgb[i] / 255.0f;
  return ImageBuffer(width, height, std::move(data));
}

ImageBuffer quantize_u8(const ImageBuffer& img) {
  return from_rgb8(img.width(), img.height(), to_rgb8(img));
}

double mean_abs_difference(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("mean_abs_difference: size mismatch");
  }
  if (a.empty()) return 0.0;
  double acc = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) acc += std::abs(double(da[i]) - db[i]);
  return acc / static_cast<double>(da.size());
}

}  // namespace lp
