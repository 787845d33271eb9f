#include "pgm/image.hpp"

#include "pgm/errors.hpp"

#include <algorithm>
#include <cctype>

namespace pgm {

RasterImage::RasterImage(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1 || channels < 1) {
        throw InvalidInput("image dimensions must be positive");
    }
    data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 1 || height < 1 || channels < 1) {
        throw InvalidInput("image dimensions must be positive");
    }
    if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
        throw InvalidInput("image data length does not match width x height x channels");
    }
}

std::string_view to_string(ColorSpace space) {
    switch (space) {
        case ColorSpace::RGB: return "RGB";
        case ColorSpace::GRAY: return "GRAY";
        case ColorSpace::CIELAB: return "CIELAB";
        case ColorSpace::YCRCB: return "YCRCB";
    }
    return "?";
}

std::string_view to_string(GradientVariant variant) {
    switch (variant) {
        case GradientVariant::C: return "C";
        case GradientVariant::G: return "G";
        case GradientVariant::CD: return "CD";
        case GradientVariant::GD: return "GD";
    }
    return "?";
}

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

}  // namespace

ColorSpace parse_color_space(std::string_view name) {
    const std::string u = upper(name);
    if (u == "RGB") return ColorSpace::RGB;
    if (u == "GRAY" || u == "GREY") return ColorSpace::GRAY;
    if (u == "CIELAB" || u == "LAB") return ColorSpace::CIELAB;
    if (u == "YCRCB") return ColorSpace::YCRCB;
    throw InvalidParameter("unknown color space: " + std::string(name));
}

GradientVariant parse_variant(std::string_view name) {
    const std::string u = upper(name);
    if (u == "C") return GradientVariant::C;
    if (u == "G") return GradientVariant::G;
    if (u == "CD") return GradientVariant::CD;
    if (u == "GD") return GradientVariant::GD;
    throw InvalidParameter("unknown gradient variant: " + std::string(name));
}

int channel_count(ColorSpace space) { return space == ColorSpace::GRAY ? 1 : 3; }

bool is_gray(GradientVariant variant) {
    return variant == GradientVariant::G || variant == GradientVariant::GD;
}

bool is_direction_only(GradientVariant variant) {
    return variant == GradientVariant::CD || variant == GradientVariant::GD;
}

GradientImage::GradientImage(RasterImage stacked, GradientVariant variant)
    : image_(std::move(stacked)), variant_(variant) {
    if (image_.channels() != 2 && image_.channels() != 6) {
        throw InvalidInput("gradient image must have 2 or 6 channels");
    }
}

}  // namespace pgm
