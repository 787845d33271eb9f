#pragma once

#include "pgm/image.hpp"

#include <span>
#include <utility>
#include <vector>

namespace pgm {

// Colour conversions take RGB values in [0, 255].
//   GRAY:   BT.601 luma, [0, 255].
//   YCRCB:  BT.601 full range, Y in [0, 255], Cr/Cb centred on 128.
//   CIELAB: sRGB (D65) -> L in [0, 100], a/b roughly [-128, 127]. White maps to (100, 0, 0).
RasterImage convert_color_space(const RasterImage& img, ColorSpace target);

/// Inverse of convert_color_space for RGB, YCRCB and CIELAB. Returns a 3-channel RGB image.
RasterImage convert_to_rgb(const RasterImage& img, ColorSpace source);

/// Replicates a 1-channel image into 3 channels; 3-channel input is returned unchanged.
RasterImage to_three_channels(const RasterImage& img);

struct SobelKernels {
    std::vector<float> smooth;  // binomial row of length S
    std::vector<float> deriv;   // [-1, 0, 1] convolved with binomial of length S - 2
};

/// Separable Sobel factors for odd S >= 3.
SobelKernels sobel_kernels(int size);

/// Per-channel Sobel responses with replicate-edge borders.
std::pair<RasterImage, RasterImage> sobel_gradients(const RasterImage& img, int size);

GradientImage build_gradient_image(const RasterImage& gx, const RasterImage& gy,
                                   GradientVariant variant = GradientVariant::C);

/// Identity for C/G, elementwise sign for CD/GD.
GradientImage apply_variant(const GradientImage& g, GradientVariant variant);

/// Area-average resampling by factor s in (0, 1); output is ceil(dims * s).
RasterImage downsample(const RasterImage& img, double factor);

int scaled_dimension(int dim, double factor);

/// Full-resolution image first; each level is `downsample` of the previous one.
std::vector<RasterImage> build_image_pyramid(const RasterImage& img, int levels, double factor);

/// Colour conversion, Sobel and variant applied per pyramid level. `spaces.size()` must equal `levels`.
std::vector<GradientImage> build_gradient_pyramid(const RasterImage& img,
                                                  std::span<const ColorSpace> spaces,
                                                  GradientVariant variant, int sobel_size,
                                                  int levels, double factor);

/// Single-level convenience: convert, differentiate, apply variant.
GradientImage compute_gradient_image(const RasterImage& img, ColorSpace space,
                                     GradientVariant variant, int sobel_size);

}  // namespace pgm
