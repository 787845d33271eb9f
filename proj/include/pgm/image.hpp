#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pgm {

/// Row-major, channel-interleaved floating-point image. Channel count is 1 or 3 for
/// source images; gradient images reuse the storage with 2 or 6 channels.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int channels, float fill = 0.0f);
    RasterImage(int width, int height, int channels, std::vector<float> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    float& at(int x, int y, int c) noexcept { return data_[index(x, y) + c]; }
    float at(int x, int y, int c) const noexcept { return data_[index(x, y) + c]; }

    float* pixel(int x, int y) noexcept { return data_.data() + index(x, y); }
    const float* pixel(int x, int y) const noexcept { return data_.data() + index(x, y); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

enum class ColorSpace { RGB, GRAY, CIELAB, YCRCB };

/// C: full colour gradients, G: gray gradients, CD/GD: direction-only (elementwise sign).
enum class GradientVariant { C, G, CD, GD };

std::string_view to_string(ColorSpace space);
std::string_view to_string(GradientVariant variant);
ColorSpace parse_color_space(std::string_view name);
GradientVariant parse_variant(std::string_view name);

int channel_count(ColorSpace space);
bool is_gray(GradientVariant variant);
bool is_direction_only(GradientVariant variant);

/// Per-pixel [Gx(p), Gy(p)] with 2C channels; Gx channels first.
class GradientImage {
public:
    GradientImage() = default;
    GradientImage(RasterImage stacked, GradientVariant variant);

    int width() const noexcept { return image_.width(); }
    int height() const noexcept { return image_.height(); }
    int channels() const noexcept { return image_.channels(); }
    GradientVariant variant() const noexcept { return variant_; }

    bool contains(int x, int y) const noexcept { return image_.contains(x, y); }
    float at(int x, int y, int c) const noexcept { return image_.at(x, y, c); }
    const float* pixel(int x, int y) const noexcept { return image_.pixel(x, y); }

    const RasterImage& image() const noexcept { return image_; }

private:
    RasterImage image_;
    GradientVariant variant_ = GradientVariant::C;
};

}  // namespace pgm
