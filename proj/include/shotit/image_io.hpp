#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "shotit/raster.hpp"

namespace shotit {

// Binary PPM, P6 with maxval 255.
RasterImage decode_ppm(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_ppm(const RasterImage& img);

// 8-bit PNG; alpha is composited over black, palette/gray inputs are
// expanded to RGB. Encoding is deterministic for a given libpng build.
RasterImage decode_png(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_png(const RasterImage& img);

// Sniffs PPM vs PNG by signature.
RasterImage decode_image(std::span<const uint8_t> bytes);

RasterImage load_image(const std::filesystem::path& p);
void save_image(const std::filesystem::path& p, const RasterImage& img);

std::vector<uint8_t> read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::span<const uint8_t> bytes);

} // namespace shotit
