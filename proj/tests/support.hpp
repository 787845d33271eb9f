#pragma once

#include "pgm/image.hpp"
#include "pgm/imgproc.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace pgm::test {

inline RasterImage random_image(int w, int h, int c, std::uint64_t seed, float lo = 0.0f, float hi = 255.0f) {
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    RasterImage img(w, h, c);
    for (float& v : img.data()) v = dist(engine);
    return img;
}

/// img2(x, y) = img1(x - tx, y - ty) with fresh noise where the source leaves the frame.
inline RasterImage shifted(const RasterImage& img, int tx, int ty, std::uint64_t seed) {
    RasterImage out = random_image(img.width(), img.height(), img.channels(), seed);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (!img.contains(x - tx, y - ty)) continue;
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(x - tx, y - ty, c);
        }
    }
    return out;
}

inline GradientImage gradients(const RasterImage& img, int sobel = 5,
                               GradientVariant variant = GradientVariant::C) {
    auto [gx, gy] = sobel_gradients(img, sobel);
    return apply_variant(build_gradient_image(gx, gy), variant);
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("pgm-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace pgm::test
