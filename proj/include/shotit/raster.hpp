#pragma once

#include <cstdint>
#include <vector>

namespace shotit {

// Row-major 8-bit RGB raster.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // width * height * 3

    static RasterImage filled(int w, int h, uint8_t r, uint8_t g, uint8_t b);

    bool valid() const {
        return width >= 1 && height >= 1 &&
               pixels.size() == static_cast<size_t>(width) * height * 3;
    }
    const uint8_t* px(int x, int y) const {
        return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
    uint8_t* px(int x, int y) {
        return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
    bool operator==(const RasterImage&) const = default;
};

// BT.601 luma of one RGB pixel, full range.
inline double luma601(uint8_t r, uint8_t g, uint8_t b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

} // namespace shotit
