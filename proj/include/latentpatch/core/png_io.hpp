#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "latentpatch/core/image.hpp"

namespace lp {

// RGB8 PNG. Alpha channels are dropped on read.
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const ImageBuffer& img);
ImageBuffer read_png(const std::filesystem::path& path);

}  // namespace lp
