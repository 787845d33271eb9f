#pragma once

#include "pgm/field.hpp"
#include "pgm/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace pgm {

// Middlebury .flo: float 202021.25 ("PIEH"), int32 width, int32 height, then (u, v) float32
// pairs in row-major order, all little-endian.
inline constexpr float kFloTag = 202021.25f;

void write_flo(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

struct Metrics {
    double aee = 0.0;        // NaN when valid_count == 0
    double bad_ratio = 0.0;  // fraction with endpoint error > tau; NaN when valid_count == 0
    std::size_t valid_count = 0;
};

Metrics endpoint_metrics(const FlowField& flow, const FlowField& gt, const ValidityMask* mask = nullptr,
                         double tau = 3.0);

/// Colour-wheel rendering: hue from atan2(v, u) (angle 0 = red), saturation from
/// magnitude / max_magnitude, zero flow white. Without max_magnitude the 99th percentile is used.
RasterImage flow_to_color(const FlowField& flow, std::optional<double> max_magnitude = std::nullopt);

/// RGB of the colour wheel at `angle` radians, full saturation.
std::array<float, 3> wheel_color(double angle);

struct Translation {
    double tx = 0.0, ty = 0.0;
};

/// q = A * [x, y, 1]^T, row-major 2x3.
struct AffineMotion {
    std::array<double, 6> a{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    static AffineMotion rotation_about(double degrees, double cx, double cy);
};

/// Background translates; a noise rectangle is pasted into img1 only, hiding what img2 shows.
struct PastedOccluder {
    Translation background;
    int x = 0, y = 0, width = 0, height = 0;
};

using Motion = std::variant<Translation, AffineMotion, PastedOccluder>;

struct SyntheticPair {
    RasterImage img1, img2;
    FlowField gt;
    ValidityMask mask;       // target in bounds and not occluded
    ValidityMask occluded;   // pasted-occluder pixels
};

/// img2 = warp of img1 (bilinear); img2 pixels whose source leaves img1 are filled with seeded noise.
SyntheticPair synth_pair(const RasterImage& base, const Motion& motion, std::uint64_t seed);

/// Uniform noise in [0, 255].
RasterImage noise_image(int width, int height, int channels, std::uint64_t seed);

/// Smooth multi-scale texture (bilinear value noise over several octaves) in [0, 255].
RasterImage texture_image(int width, int height, int channels, std::uint64_t seed);

enum class SyntheticSuite {
    Translation,  // 128x96 noise, integer shift in [-8, 8]^2
    Occlusion,    // 128x96 noise, shift in [-6, 6]^2, 20x20 occluder pasted into img1
    Affine,       // 160x120 texture, rotation within 4 degrees, scale within 4%, shift within 5 px
};

std::string_view to_string(SyntheticSuite suite);
SyntheticSuite parse_suite(std::string_view name);

struct SyntheticCase {
    std::string name;  // e.g. "translation-03"
    Motion motion;
    SyntheticPair pair;
};

/// Case `index` of a suite; fully determined by (suite, index, seed).
SyntheticCase make_synthetic_case(SyntheticSuite suite, int index, std::uint64_t seed = 0);

/// Initialized entries that are occluded or whose endpoint error exceeds `tau`.
std::size_t count_wrong_inliers(const CorrespondenceField& field, const SyntheticPair& pair,
                                double tau = 3.0);

}  // namespace pgm
