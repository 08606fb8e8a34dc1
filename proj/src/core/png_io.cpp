#include "latentpatch/core/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "latentpatch/core/error.hpp"

namespace lp {

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  if (img.empty()) throw InvalidArgument("cannot encode an empty image");
  std::vector<std::uint8_t> rgb = to_rgb8(img);

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw InvalidData(std::string("png encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw InvalidData(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw InvalidData(std::string("png decode failed: ") + image.message);
  }
  // Alpha is discarded: compositing against black is not wanted, so read RGBA
  // and drop the fourth channel.
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InvalidData(std::string("png decode failed: ") + image.message);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0, n = static_cast<std::size_t>(w) * h; i < n; ++i) {
    rgb[3 * i + 0] = rgba[4 * i + 0];
    rgb[3 * i + 1] = rgba[4 * i + 1];
    rgb[3 * i + 2] = rgba[4 * i + 2];
  }
  return from_rgb8(w, h, rgb);
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

ImageBuffer read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes);
  } catch (const InvalidData& e) {
    throw InvalidData(path.string() + ": " + e.what());
  }
}

}  // namespace lp
