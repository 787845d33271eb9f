#include "pgm/image_io.hpp"

#include "pgm/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

namespace pgm {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void require_writable_channels(const RasterImage& img) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw InvalidInput("only 1- or 3-channel images can be written");
    }
}

RasterImage read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng initialisation failed");
    }
    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int channels = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": corrupt PNG");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    channels = png_get_channels(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    pixels.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    RasterImage img(static_cast<int>(width), static_cast<int>(height), channels);
    for (png_uint_32 y = 0; y < height; ++y) {
        for (png_uint_32 x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                img.at(static_cast<int>(x), static_cast<int>(y), c) = rows[y][x * channels + c];
            }
        }
    }
    return img;
}

RasterImage read_pnm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
    std::size_t pos = 2;
    auto next_int = [&]() -> long {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        long v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
            if (v > (1L << 24)) throw FormatError(path.string() + ": PNM header value too large");
        }
        if (!any) throw FormatError(path.string() + ": malformed PNM header");
        return v;
    };
    const int channels = bytes[1] == '6' ? 3 : 1;
    const long w = next_int();
    const long h = next_int();
    const long maxval = next_int();
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
        throw FormatError(path.string() + ": unsupported PNM header (8-bit only)");
    }
    ++pos;  // single whitespace before raster
    const std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (bytes.size() < pos + need) throw FormatError(path.string() + ": truncated PNM raster");
    RasterImage img(static_cast<int>(w), static_cast<int>(h), channels);
    auto data = img.data();
    const double scale = 255.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < need; ++i) data[i] = static_cast<float>(bytes[pos + i] * scale);
    return img;
}

}  // namespace

RasterImage read_image(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> head(8, 0);
    is.read(reinterpret_cast<char*>(head.data()), 8);
    if (is.gcount() >= 8 && png_sig_cmp(head.data(), 0, 8) == 0) {
        is.close();
        return read_png(path);
    }
    if (is.gcount() >= 2 && head[0] == 'P' && (head[1] == '5' || head[1] == '6')) {
        is.clear();
        is.seekg(0);
        const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        return read_pnm(bytes, path);
    }
    throw FormatError(path.string() + ": unsupported image format (expected PNG, P5 or P6)");
}

void write_png(const RasterImage& img, const std::filesystem::path& path) {
    require_writable_channels(img);
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng initialisation failed");
    }
    const int ch = img.channels();
    std::vector<png_byte> pixels(static_cast<std::size_t>(img.width()) * img.height() * ch);
    const auto data = img.data();
    std::transform(data.begin(), data.end(), pixels.begin(), to_byte);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    for (int y = 0; y < img.height(); ++y) {
        rows[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * img.width() * ch;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_pnm(const RasterImage& img, const std::filesystem::path& path) {
    require_writable_channels(img);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << (img.channels() == 3 ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
    for (float v : img.data()) os.put(static_cast<char>(to_byte(v)));
    if (!os) throw IoError("failed writing " + path.string());
}

void write_image(const RasterImage& img, const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") {
        write_png(img, path);
    } else {
        write_pnm(img, path);
    }
}

}  // namespace pgm
