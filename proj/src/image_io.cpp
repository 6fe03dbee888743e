#include "shotit/image_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>

#include "shotit/errors.hpp"

namespace shotit {

namespace {

struct PpmScanner {
    std::span<const uint8_t> bytes;
    size_t pos = 0;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            uint8_t c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }
    int next_int() {
        skip_space_and_comments();
        if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
            throw ParseError("ppm: expected integer at offset " + std::to_string(pos));
        long v = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30) throw ParseError("ppm: header value too large");
            ++pos;
        }
        return static_cast<int>(v);
    }
};

void png_error_fn(png_structp png, png_const_charp msg) {
    (void)png;
    throw ParseError(std::string("png: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

struct PngReadSource {
    std::span<const uint8_t> bytes;
    size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->pos + len > src->bytes.size())
        png_error(png, "truncated stream");
    std::memcpy(out, src->bytes.data() + src->pos, len);
    src->pos += len;
}

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_cb(png_structp) {}

} // namespace

RasterImage decode_ppm(std::span<const uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw ParseError("ppm: missing P6 magic");
    PpmScanner sc{bytes, 2};
    int w = sc.next_int();
    int h = sc.next_int();
    int maxval = sc.next_int();
    if (w < 1 || h < 1) throw ParseError("ppm: bad dimensions");
    if (maxval != 255) throw ParseError("ppm: only maxval 255 supported");
    ++sc.pos; // single whitespace byte after maxval
    size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - sc.pos < need) throw ParseError("ppm: truncated pixel data");

    RasterImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(bytes.begin() + sc.pos, bytes.begin() + sc.pos + need);
    return img;
}

std::vector<uint8_t> encode_ppm(const RasterImage& img) {
    if (!img.valid()) throw InvalidInput("invalid raster image");
    std::string header = "P6\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

RasterImage decode_png(std::span<const uint8_t> bytes) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    if (!png) throw IoError("png: read struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: info struct allocation failed");
    }

    RasterImage img;
    try {
        PngReadSource src{bytes, 0};
        png_set_read_fn(png, &src, png_read_cb);
        png_read_info(png, info);

        png_uint_32 w = png_get_image_width(png, info);
        png_uint_32 h = png_get_image_height(png, info);
        int color = png_get_color_type(png, info);
        int depth = png_get_bit_depth(png, info);

        if (depth == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
        png_read_update_info(png, info);

        bool has_alpha = (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) != 0;
        size_t channels = has_alpha ? 4 : 3;
        std::vector<uint8_t> row(static_cast<size_t>(w) * channels);

        img.width = static_cast<int>(w);
        img.height = static_cast<int>(h);
        img.pixels.resize(static_cast<size_t>(w) * h * 3);
        for (png_uint_32 y = 0; y < h; ++y) {
            png_read_row(png, row.data(), nullptr);
            uint8_t* dst = img.px(0, static_cast<int>(y));
            for (png_uint_32 x = 0; x < w; ++x) {
                const uint8_t* s = row.data() + x * channels;
                if (has_alpha) {
                    // composite over black
                    unsigned a = s[3];
                    dst[0] = static_cast<uint8_t>((s[0] * a + 127) / 255);
                    dst[1] = static_cast<uint8_t>((s[1] * a + 127) / 255);
                    dst[2] = static_cast<uint8_t>((s[2] * a + 127) / 255);
                } else {
                    dst[0] = s[0];
                    dst[1] = s[1];
                    dst[2] = s[2];
                }
                dst += 3;
            }
        }
        png_read_end(png, nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

std::vector<uint8_t> encode_png(const RasterImage& img) {
    if (!img.valid()) throw InvalidInput("invalid raster image");
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    if (!png) throw IoError("png: write struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: info struct allocation failed");
    }

    std::vector<uint8_t> out;
    try {
        png_set_write_fn(png, &out, png_write_cb, png_flush_cb);
        png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_set_compression_level(png, 6);
        png_write_info(png, info);
        for (int y = 0; y < img.height; ++y)
            png_write_row(png, const_cast<png_bytep>(img.px(0, y)));
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

RasterImage decode_image(std::span<const uint8_t> bytes) {
    static const uint8_t png_sig[4] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), png_sig, 4) == 0)
        return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        return decode_ppm(bytes);
    throw ParseError("unrecognized image format (expected PNG or binary PPM)");
}

RasterImage load_image(const std::filesystem::path& p) {
    return decode_image(read_file(p));
}

void save_image(const std::filesystem::path& p, const RasterImage& img) {
    if (p.extension() == ".png")
        write_file(p, encode_png(img));
    else
        write_file(p, encode_ppm(img));
}

std::vector<uint8_t> read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + p.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failed: " + p.string());
    return bytes;
}

void write_file(const std::filesystem::path& p, std::span<const uint8_t> bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + p.string());
}

} // namespace shotit
