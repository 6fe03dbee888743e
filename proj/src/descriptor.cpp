#include "shotit/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shotit/errors.hpp"

namespace shotit {

namespace {

// Standard JPEG zigzag scan pattern, flat row*8+col indices.
constexpr std::array<uint8_t, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

struct DctTables {
    // basis[u][x] = a(u) * cos((2x+1) u pi / 16)
    double basis[8][8];
    DctTables() {
        for (int u = 0; u < 8; ++u) {
            double a = u == 0 ? 1.0 / std::sqrt(8.0) : 0.5;
            for (int x = 0; x < 8; ++x)
                basis[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        }
    }
};

const DctTables& dct_tables() {
    static const DctTables t;
    return t;
}

uint16_t quant_dc(double coef) {
    long q = std::lround(coef * 4095.0 / 2040.0);
    return static_cast<uint16_t>(std::clamp(q, 0l, 4095l));
}

uint16_t quant_ac(double coef) {
    long q = std::lround(coef / 2.0) + 2048;
    return static_cast<uint16_t>(std::clamp(q, 0l, 4095l));
}

} // namespace

RasterImage RasterImage::filled(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    }
    return img;
}

BlockGrid to_block_grid(const RasterImage& img) {
    if (!img.valid()) throw InvalidInput("invalid raster image");
    if (img.width < 8 || img.height < 8)
        throw InvalidInput("image smaller than 8x8: " + std::to_string(img.width) +
                           "x" + std::to_string(img.height));

    BlockGrid grid;
    const int w = img.width;
    const int h = img.height;
    for (int bi = 0; bi < 8; ++bi) {
        int y0 = bi * h / 8;
        int y1 = (bi + 1) * h / 8;
        for (int bj = 0; bj < 8; ++bj) {
            int x0 = bj * w / 8;
            int x1 = (bj + 1) * w / 8;
            uint64_t sr = 0, sg = 0, sb = 0;
            for (int y = y0; y < y1; ++y) {
                const uint8_t* p = img.px(x0, y);
                for (int x = x0; x < x1; ++x) {
                    sr += p[0];
                    sg += p[1];
                    sb += p[2];
                    p += 3;
                }
            }
            double n = static_cast<double>(y1 - y0) * (x1 - x0);
            double r = sr / n, g = sg / n, b = sb / n;
            grid.y[bi][bj] = 0.299 * r + 0.587 * g + 0.114 * b;
            grid.cb[bi][bj] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
            grid.cr[bi][bj] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
        }
    }
    return grid;
}

Mat8 dct2d_8x8(const Mat8& block) {
    const auto& t = dct_tables();
    // Separable transform: rows, then columns.
    double tmp[8][8];
    for (int x = 0; x < 8; ++x) {
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) s += block[x][y] * t.basis[v][y];
            tmp[x][v] = s;
        }
    }
    Mat8 out{};
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) s += tmp[x][v] * t.basis[u][x];
            out[u][v] = s;
        }
    }
    return out;
}

std::array<double, 64> zigzag_scan(const Mat8& m) {
    std::array<double, 64> out{};
    for (int i = 0; i < 64; ++i) out[i] = m[kZigzag[i] / 8][kZigzag[i] % 8];
    return out;
}

const std::array<uint8_t, 64>& zigzag_order() { return kZigzag; }

ColorLayoutHash compute_descriptor(const RasterImage& img) {
    BlockGrid grid = to_block_grid(img);
    auto zy = zigzag_scan(dct2d_8x8(grid.y));
    auto zcb = zigzag_scan(dct2d_8x8(grid.cb));
    auto zcr = zigzag_scan(dct2d_8x8(grid.cr));

    ColorLayoutHash h;
    size_t k = 0;
    for (size_t i = 0; i < kHashYCoeffs; ++i)
        h.coeffs[k++] = i == 0 ? quant_dc(zy[i]) : quant_ac(zy[i]);
    for (size_t i = 0; i < kHashCbCoeffs; ++i)
        h.coeffs[k++] = i == 0 ? quant_dc(zcb[i]) : quant_ac(zcb[i]);
    for (size_t i = 0; i < kHashCrCoeffs; ++i)
        h.coeffs[k++] = i == 0 ? quant_dc(zcr[i]) : quant_ac(zcr[i]);
    return h;
}

std::string encode_hash(const ColorLayoutHash& h) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(kHashWords * 4);
    for (size_t i = 0; i < kHashWords; ++i) {
        if (i) out.push_back(' ');
        uint16_t v = h.coeffs[i];
        char buf[3];
        int n = 0;
        do {
            buf[n++] = digits[v & 0xf];
            v >>= 4;
        } while (v);
        while (n) out.push_back(buf[--n]);
    }
    return out;
}

ColorLayoutHash decode_hash(std::string_view s) {
    ColorLayoutHash h;
    size_t word = 0;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= s.size()) break;
        size_t start = i;
        uint32_t v = 0;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (word >= kHashWords)
            throw ParseError("hash has more than 100 words");
        for (size_t j = start; j < i; ++j) {
            char c = s[j];
            uint32_t d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else
                throw ParseError("invalid hex at word " + std::to_string(word));
            v = v * 16 + d;
            if (v > kHashMaxCode)
                throw ParseError("value out of range at word " + std::to_string(word));
        }
        h.coeffs[word++] = static_cast<uint16_t>(v);
    }
    if (word != kHashWords)
        throw ParseError("expected 100 words, got " + std::to_string(word));
    return h;
}

std::pair<RasterImage, CropRect> cut_borders(const RasterImage& img, double threshold) {
    if (!img.valid()) throw InvalidInput("invalid raster image");
    const int w = img.width;
    const int h = img.height;

    std::vector<double> row_mean(h, 0.0), col_sum(w, 0.0);
    for (int y = 0; y < h; ++y) {
        double rs = 0.0;
        const uint8_t* p = img.px(0, y);
        for (int x = 0; x < w; ++x, p += 3) {
            double l = luma601(p[0], p[1], p[2]);
            rs += l;
            col_sum[x] += l;
        }
        row_mean[y] = rs / w;
    }

    auto run_from = [&](auto mean_at, int count, int cap) {
        int run = 0;
        while (run < count && mean_at(run) < threshold) ++run;
        return run > cap ? 0 : run;
    };

    int cap_h = static_cast<int>(0.45 * h);
    int cap_w = static_cast<int>(0.45 * w);
    int top = run_from([&](int i) { return row_mean[i]; }, h, cap_h);
    int bottom = run_from([&](int i) { return row_mean[h - 1 - i]; }, h, cap_h);
    int left = run_from([&](int i) { return col_sum[i] / h; }, w, cap_w);
    int right = run_from([&](int i) { return col_sum[w - 1 - i] / h; }, w, cap_w);

    CropRect rect{left, top, w - left - right, h - top - bottom};
    RasterImage out;
    out.width = rect.width;
    out.height = rect.height;
    out.pixels.resize(static_cast<size_t>(rect.width) * rect.height * 3);
    for (int y = 0; y < rect.height; ++y) {
        const uint8_t* src = img.px(rect.x, rect.y + y);
        std::copy(src, src + static_cast<size_t>(rect.width) * 3,
                  out.pixels.begin() + static_cast<size_t>(y) * rect.width * 3);
    }
    return {std::move(out), rect};
}

double luminance_sum(const RasterImage& img) {
    if (!img.valid()) throw InvalidInput("invalid raster image");
    double sum = 0.0;
    for (size_t i = 0; i < img.pixels.size(); i += 3)
        sum += luma601(img.pixels[i], img.pixels[i + 1], img.pixels[i + 2]);
    return sum;
}

} // namespace shotit
