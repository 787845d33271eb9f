#include "pgm/imgproc.hpp"

#include "pgm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace pgm {

namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;
constexpr double kCrScale = 1.402;  // 2 * (1 - Kr)
constexpr double kCbScale = 1.772;  // 2 * (1 - Kb)
constexpr double kChromaOffset = 128.0;

using Mat3 = std::array<std::array<double, 3>, 3>;

// sRGB primaries, D65 white.
constexpr Mat3 kRgbToXyz = {{{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}}};

Mat3 invert(const Mat3& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    Mat3 r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
}

std::array<double, 3> apply(const Mat3& m, const std::array<double, 3>& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

std::array<double, 3> white_point() {
    return apply(kRgbToXyz, {1.0, 1.0, 1.0});
}

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
    return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

constexpr double kLabDelta = 6.0 / 29.0;

double lab_f(double t) {
    return t > kLabDelta * kLabDelta * kLabDelta ? std::cbrt(t)
                                                 : t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    return t > kLabDelta ? t * t * t : 3.0 * kLabDelta * kLabDelta * (t - 4.0 / 29.0);
}

std::array<double, 3> rgb_to_lab(double r, double g, double b) {
    static const std::array<double, 3> white = white_point();
    const auto xyz = apply(kRgbToXyz, {srgb_to_linear(r / 255.0), srgb_to_linear(g / 255.0),
                                       srgb_to_linear(b / 255.0)});
    const double fx = lab_f(xyz[0] / white[0]);
    const double fy = lab_f(xyz[1] / white[1]);
    const double fz = lab_f(xyz[2] / white[2]);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_rgb(double l, double a, double b) {
    static const std::array<double, 3> white = white_point();
    static const Mat3 xyz_to_rgb = invert(kRgbToXyz);
    const double fy = (l + 16.0) / 116.0;
    const double fx = fy + a / 500.0;
    const double fz = fy - b / 200.0;
    const auto rgb = apply(xyz_to_rgb, {lab_f_inv(fx) * white[0], lab_f_inv(fy) * white[1],
                                        lab_f_inv(fz) * white[2]});
    return {255.0 * linear_to_srgb(rgb[0]), 255.0 * linear_to_srgb(rgb[1]),
            255.0 * linear_to_srgb(rgb[2])};
}

void require_rgb(const RasterImage& img) {
    if (img.channels() != 3) {
        throw InvalidInput("expected a 3-channel image, got " + std::to_string(img.channels()) +
                           " channels");
    }
}

// Replicate-edge 1-D correlation along x (horizontal=true) or y.
// Taps are paired around the centre, so antisymmetric kernels give exact zeros on flat input.
RasterImage correlate_1d(const RasterImage& img, const std::vector<float>& kernel, bool horizontal) {
    const int w = img.width();
    const int h = img.height();
    const int ch = img.channels();
    const int half = static_cast<int>(kernel.size()) / 2;
    const auto tap = [&](int k) { return kernel[static_cast<std::size_t>(k + half)]; };
    bool antisymmetric = true;
    for (int k = 0; k <= half; ++k) antisymmetric = antisymmetric && tap(k) == -tap(-k);
    RasterImage out(w, h, ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto at = [&](int k) {
                return horizontal ? img.pixel(std::clamp(x + k, 0, w - 1), y)
                                  : img.pixel(x, std::clamp(y + k, 0, h - 1));
            };
            float* dst = out.pixel(x, y);
            const float* centre = at(0);
            for (int c = 0; c < ch; ++c) dst[c] = tap(0) * centre[c];
            for (int k = 1; k <= half; ++k) {
                const float* plus = at(k);
                const float* minus = at(-k);
                const float coeff = tap(k);
                for (int c = 0; c < ch; ++c) {
                    dst[c] += antisymmetric ? coeff * (plus[c] - minus[c])
                                            : coeff * plus[c] + tap(-k) * minus[c];
                }
            }
        }
    }
    return out;
}

std::vector<float> convolve(const std::vector<float>& a, const std::vector<float>& b) {
    std::vector<float> out(a.size() + b.size() - 1, 0.0f);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

std::vector<float> binomial(int length) {
    std::vector<float> row{1.0f};
    for (int i = 1; i < length; ++i) row = convolve(row, {1.0f, 1.0f});
    return row;
}

// Source span [begin, end) of output cell `i` and the overlap weight of each source index.
struct AxisWeights {
    std::vector<int> begin;
    std::vector<std::vector<double>> weights;
};

AxisWeights area_weights(int src, int dst, double factor) {
    AxisWeights aw;
    aw.begin.resize(static_cast<std::size_t>(dst));
    aw.weights.resize(static_cast<std::size_t>(dst));
    const double step = 1.0 / factor;
    for (int i = 0; i < dst; ++i) {
        const double lo = i * step;
        const double hi = std::min((i + 1) * step, static_cast<double>(src));
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
        aw.begin[static_cast<std::size_t>(i)] = first;
        auto& wts = aw.weights[static_cast<std::size_t>(i)];
        for (int s = first; s <= last; ++s) {
            const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
            wts.push_back(std::max(0.0, overlap));
        }
    }
    return aw;
}

}  // namespace

RasterImage convert_color_space(const RasterImage& img, ColorSpace target) {
    if (target == ColorSpace::GRAY && img.channels() == 1) return img;
    require_rgb(img);
    const int w = img.width();
    const int h = img.height();
    RasterImage out(w, h, channel_count(target));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float* p = img.pixel(x, y);
            float* q = out.pixel(x, y);
            const double r = p[0], g = p[1], b = p[2];
            switch (target) {
                case ColorSpace::RGB:
                    q[0] = p[0];
                    q[1] = p[1];
                    q[2] = p[2];
                    break;
                case ColorSpace::GRAY:
                    q[0] = static_cast<float>(kLumaR * r + kLumaG * g + kLumaB * b);
                    break;
                case ColorSpace::YCRCB: {
                    const double luma = kLumaR * r + kLumaG * g + kLumaB * b;
                    q[0] = static_cast<float>(luma);
                    q[1] = static_cast<float>((r - luma) / kCrScale + kChromaOffset);
                    q[2] = static_cast<float>((b - luma) / kCbScale + kChromaOffset);
                    break;
                }
                case ColorSpace::CIELAB: {
                    const auto lab = rgb_to_lab(r, g, b);
                    q[0] = static_cast<float>(lab[0]);
                    q[1] = static_cast<float>(lab[1]);
                    q[2] = static_cast<float>(lab[2]);
                    break;
                }
            }
        }
    }
    return out;
}

RasterImage convert_to_rgb(const RasterImage& img, ColorSpace source) {
    if (source == ColorSpace::GRAY) return to_three_channels(img);
    require_rgb(img);
    if (source == ColorSpace::RGB) return img;
    RasterImage out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const float* p = img.pixel(x, y);
            float* q = out.pixel(x, y);
            if (source == ColorSpace::YCRCB) {
                const double luma = p[0];
                const double r = luma + kCrScale * (p[1] - kChromaOffset);
                const double b = luma + kCbScale * (p[2] - kChromaOffset);
                const double g = (luma - kLumaR * r - kLumaB * b) / kLumaG;
                q[0] = static_cast<float>(r);
                q[1] = static_cast<float>(g);
                q[2] = static_cast<float>(b);
            } else {
                const auto rgb = lab_to_rgb(p[0], p[1], p[2]);
                for (int c = 0; c < 3; ++c) q[c] = static_cast<float>(rgb[static_cast<std::size_t>(c)]);
            }
        }
    }
    return out;
}

RasterImage to_three_channels(const RasterImage& img) {
    if (img.channels() == 3) return img;
    if (img.channels() != 1) throw InvalidInput("expected a 1- or 3-channel image");
    RasterImage out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const float v = img.at(x, y, 0);
            float* q = out.pixel(x, y);
            q[0] = q[1] = q[2] = v;
        }
    }
    return out;
}

SobelKernels sobel_kernels(int size) {
    if (size < 3 || size % 2 == 0) {
        throw InvalidParameter("Sobel kernel size must be odd and >= 3, got " + std::to_string(size));
    }
    return {binomial(size), convolve({-1.0f, 0.0f, 1.0f}, binomial(size - 2))};
}

std::pair<RasterImage, RasterImage> sobel_gradients(const RasterImage& img, int size) {
    const SobelKernels k = sobel_kernels(size);
    if (img.empty()) throw InvalidInput("empty image");
    RasterImage gx = correlate_1d(correlate_1d(img, k.deriv, true), k.smooth, false);
    RasterImage gy = correlate_1d(correlate_1d(img, k.smooth, true), k.deriv, false);
    return {std::move(gx), std::move(gy)};
}

GradientImage build_gradient_image(const RasterImage& gx, const RasterImage& gy,
                                   GradientVariant variant) {
    if (gx.width() != gy.width() || gx.height() != gy.height() || gx.channels() != gy.channels()) {
        throw InvalidInput("Gx and Gy must have identical dimensions and channel counts");
    }
    const int ch = gx.channels();
    RasterImage stacked(gx.width(), gx.height(), 2 * ch);
    for (int y = 0; y < gx.height(); ++y) {
        for (int x = 0; x < gx.width(); ++x) {
            float* q = stacked.pixel(x, y);
            std::copy_n(gx.pixel(x, y), ch, q);
            std::copy_n(gy.pixel(x, y), ch, q + ch);
        }
    }
    return GradientImage(std::move(stacked), variant);
}

GradientImage apply_variant(const GradientImage& g, GradientVariant variant) {
    if (!is_direction_only(variant)) return GradientImage(g.image(), variant);
    RasterImage out = g.image();
    for (float& v : out.data()) v = v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f);
    return GradientImage(std::move(out), variant);
}

int scaled_dimension(int dim, double factor) {
    return std::max(1, static_cast<int>(std::ceil(dim * factor - 1e-9)));
}

RasterImage downsample(const RasterImage& img, double factor) {
    if (!(factor > 0.0 && factor < 1.0)) {
        throw InvalidParameter("downsample factor must lie in (0, 1)");
    }
    const int w = scaled_dimension(img.width(), factor);
    const int h = scaled_dimension(img.height(), factor);
    const int ch = img.channels();
    const AxisWeights wx = area_weights(img.width(), w, factor);
    const AxisWeights wy = area_weights(img.height(), h, factor);
    RasterImage out(w, h, ch);
    std::vector<double> acc(static_cast<std::size_t>(ch));
    for (int y = 0; y < h; ++y) {
        const auto& ywts = wy.weights[static_cast<std::size_t>(y)];
        for (int x = 0; x < w; ++x) {
            const auto& xwts = wx.weights[static_cast<std::size_t>(x)];
            std::fill(acc.begin(), acc.end(), 0.0);
            double total = 0.0;
            for (std::size_t j = 0; j < ywts.size(); ++j) {
                const int sy = wy.begin[static_cast<std::size_t>(y)] + static_cast<int>(j);
                for (std::size_t i = 0; i < xwts.size(); ++i) {
                    const int sx = wx.begin[static_cast<std::size_t>(x)] + static_cast<int>(i);
                    const double wgt = xwts[i] * ywts[j];
                    const float* p = img.pixel(sx, sy);
                    for (int c = 0; c < ch; ++c) acc[static_cast<std::size_t>(c)] += wgt * p[c];
                    total += wgt;
                }
            }
            float* q = out.pixel(x, y);
            for (int c = 0; c < ch; ++c) q[c] = static_cast<float>(acc[static_cast<std::size_t>(c)] / total);
        }
    }
    return out;
}

std::vector<RasterImage> build_image_pyramid(const RasterImage& img, int levels, double factor) {
    if (levels < 1) throw InvalidParameter("pyramid needs at least one level");
    std::vector<RasterImage> pyramid;
    pyramid.reserve(static_cast<std::size_t>(levels));
    pyramid.push_back(img);
    for (int l = 1; l < levels; ++l) {
        const RasterImage& prev = pyramid.back();
        if (scaled_dimension(prev.width(), factor) >= prev.width() ||
            scaled_dimension(prev.height(), factor) >= prev.height()) {
            throw InvalidParameter("image too small for " + std::to_string(levels) + " pyramid levels");
        }
        pyramid.push_back(downsample(prev, factor));
    }
    return pyramid;
}

GradientImage compute_gradient_image(const RasterImage& img, ColorSpace space,
                                     GradientVariant variant, int sobel_size) {
    if (is_gray(variant) && space != ColorSpace::GRAY) {
        throw InvalidParameter("gray gradient variants require the GRAY color space");
    }
    if (!is_gray(variant) && space == ColorSpace::GRAY) {
        throw InvalidParameter("colour gradient variants require a 3-channel color space");
    }
    const RasterImage converted = convert_color_space(img, space);
    const auto [gx, gy] = sobel_gradients(converted, sobel_size);
    return apply_variant(build_gradient_image(gx, gy), variant);
}

std::vector<GradientImage> build_gradient_pyramid(const RasterImage& img,
                                                  std::span<const ColorSpace> spaces,
                                                  GradientVariant variant, int sobel_size,
                                                  int levels, double factor) {
    if (static_cast<int>(spaces.size()) != levels) {
        throw InvalidParameter("need one color space per pyramid level");
    }
    const std::vector<RasterImage> images = build_image_pyramid(img, levels, factor);
    std::vector<GradientImage> out;
    out.reserve(images.size());
    for (std::size_t l = 0; l < images.size(); ++l) {
        out.push_back(compute_gradient_image(images[l], spaces[l], variant, sobel_size));
    }
    return out;
}

}  // namespace pgm
