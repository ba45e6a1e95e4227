#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nutrisight/image.h"

namespace nutrisight {

// Decodes PNG (any bit depth / colour type, converted to 8-bit RGB) or binary
// PPM (P6). Throws Error{kFormat} on anything else.
RgbImage decode_image(std::span<const std::uint8_t> bytes);
RgbImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

// 8-bit greyscale PGM for single-channel debug dumps (confidence maps, masks).
void write_pgm(const std::filesystem::path& path, int width, int height,
               std::span<const std::uint8_t> values);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace nutrisight

namespace nutrisight {

// Hex SHA-256 over the dimensions and decoded pixel bytes, so re-encoding a
// raster does not change its identity.
std::string image_digest(const RgbImage& image);

}  // namespace nutrisight
