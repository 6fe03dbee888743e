#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "shotit/raster.hpp"

namespace shotit {

using Mat8 = std::array<std::array<double, 8>, 8>;

// 8x8 dominant-color reduction of an image, one matrix per YCbCr plane.
struct BlockGrid {
    Mat8 y{};
    Mat8 cb{};
    Mat8 cr{};
};

inline constexpr size_t kHashWords = 100;
inline constexpr size_t kHashYCoeffs = 64;
inline constexpr size_t kHashCbCoeffs = 18;
inline constexpr size_t kHashCrCoeffs = 18;
inline constexpr uint16_t kHashMaxCode = 4095; // 3 hex digits
inline constexpr uint16_t kAcZeroCode = 2048;  // quantized value of a zero AC term

// 100 quantized DCT coefficients: 64 Y + 18 Cb + 18 Cr in zigzag order.
struct ColorLayoutHash {
    std::array<uint16_t, kHashWords> coeffs{};
    bool operator==(const ColorLayoutHash&) const = default;
};

struct CropRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    bool operator==(const CropRect&) const = default;
};

// Mean-RGB 8x8 grid converted to YCbCr (BT.601, chroma offset +128).
// Sub-image (i,j) covers columns floor(j*W/8)..floor((j+1)*W/8)-1 and the
// analogous rows. Images smaller than 8x8 are rejected.
BlockGrid to_block_grid(const RasterImage& img);

// Orthonormal 2D DCT-II (a(0)=1/sqrt(8), a(k>0)=1/2).
Mat8 dct2d_8x8(const Mat8& block);

// JPEG zigzag ordering of an 8x8 matrix.
std::array<double, 64> zigzag_scan(const Mat8& m);

// Flat zigzag index table, (row, col) destination of each output position.
const std::array<uint8_t, 64>& zigzag_order();

// Full descriptor: block grid -> per-plane DCT -> zigzag -> quantize.
// DC terms map [0, 2040] onto [0, 4095]; AC terms are halved and offset
// by 2048. Everything clamps into the 12-bit code range.
ColorLayoutHash compute_descriptor(const RasterImage& img);

// 100 lowercase hex words, space separated, no zero padding.
std::string encode_hash(const ColorLayoutHash& h);

// Inverse of encode_hash; errors carry the offending word index.
ColorLayoutHash decode_hash(std::string_view s);

// Crop away edge rows/columns whose mean luminance is below threshold.
// A side whose qualifying run exceeds 45% of the dimension is left alone,
// so a fully dark image comes back unchanged.
std::pair<RasterImage, CropRect> cut_borders(const RasterImage& img,
                                             double threshold = 8.0);

// Sum of BT.601 luma over every pixel.
double luminance_sum(const RasterImage& img);

} // namespace shotit
