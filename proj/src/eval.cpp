#include "pgm/eval.hpp"

#include "pgm/errors.hpp"
#include "pgm/matcher.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace pgm {

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<char>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

double unit(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * (1.0 / 9007199254740992.0);
}

float bilinear(const RasterImage& img, double x, double y, int c) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

std::array<std::array<float, 3>, 55> build_wheel() {
    constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
    std::array<std::array<float, 3>, 55> wheel{};
    std::size_t k = 0;
    auto ramp = [](int i, int n) { return std::floor(255.0f * static_cast<float>(i) / static_cast<float>(n)); };
    for (int i = 0; i < kRY; ++i) wheel[k++] = {255.f, ramp(i, kRY), 0.f};
    for (int i = 0; i < kYG; ++i) wheel[k++] = {255.f - ramp(i, kYG), 255.f, 0.f};
    for (int i = 0; i < kGC; ++i) wheel[k++] = {0.f, 255.f, ramp(i, kGC)};
    for (int i = 0; i < kCB; ++i) wheel[k++] = {0.f, 255.f - ramp(i, kCB), 255.f};
    for (int i = 0; i < kBM; ++i) wheel[k++] = {ramp(i, kBM), 0.f, 255.f};
    for (int i = 0; i < kMR; ++i) wheel[k++] = {255.f, 0.f, 255.f - ramp(i, kMR)};
    return wheel;
}

const std::array<std::array<float, 3>, 55>& color_wheel() {
    static const auto wheel = build_wheel();
    return wheel;
}

}  // namespace

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
    std::vector<char> bytes;
    bytes.reserve(12 + flow.data().size() * 8);
    put_f32(bytes, kFloTag);
    put_u32(bytes, static_cast<std::uint32_t>(flow.width()));
    put_u32(bytes, static_cast<std::uint32_t>(flow.height()));
    for (const FlowVector& f : flow.data()) {
        put_f32(bytes, f.u);
        put_f32(bytes, f.v);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw FormatError(path.string() + ": truncated .flo header");
    if (get_f32(bytes.data()) != kFloTag) throw FormatError(path.string() + ": bad .flo magic tag");
    const auto w = static_cast<std::int32_t>(get_u32(bytes.data() + 4));
    const auto h = static_cast<std::int32_t>(get_u32(bytes.data() + 8));
    constexpr std::int64_t kMaxSide = 1 << 20;
    if (w < 1 || h < 1 || w > kMaxSide || h > kMaxSide) {
        throw FormatError(path.string() + ": implausible .flo dimensions");
    }
    const std::uint64_t payload = static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h) * 8u;
    if (bytes.size() - 12 < payload) throw FormatError(path.string() + ": truncated .flo payload");
    FlowField flow(w, h);
    const unsigned char* p = bytes.data() + 12;
    for (FlowVector& f : flow.data()) {
        f.u = get_f32(p);
        f.v = get_f32(p + 4);
        p += 8;
    }
    return flow;
}

Metrics endpoint_metrics(const FlowField& flow, const FlowField& gt, const ValidityMask* mask, double tau) {
    if (flow.width() != gt.width() || flow.height() != gt.height()) {
        throw InvalidInput("flow and ground truth dimensions differ");
    }
    if (mask && (mask->width != flow.width() || mask->height != flow.height())) {
        throw InvalidInput("mask dimensions differ from the flow");
    }
    double sum = 0.0;
    std::size_t bad = 0;
    std::size_t n = 0;
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            if (mask && !mask->at(x, y)) continue;
            const double du = static_cast<double>(flow.at(x, y).u) - gt.at(x, y).u;
            const double dv = static_cast<double>(flow.at(x, y).v) - gt.at(x, y).v;
            const double ee = std::sqrt(du * du + dv * dv);
            sum += ee;
            if (ee > tau) ++bad;
            ++n;
        }
    }
    Metrics m;
    m.valid_count = n;
    if (n == 0) {
        m.aee = std::numeric_limits<double>::quiet_NaN();
        m.bad_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
        m.aee = sum / static_cast<double>(n);
        m.bad_ratio = static_cast<double>(bad) / static_cast<double>(n);
    }
    return m;
}

std::array<float, 3> wheel_color(double angle) {
    const auto& wheel = color_wheel();
    const double ncols = static_cast<double>(wheel.size());
    double turn = std::fmod(angle / (2.0 * std::numbers::pi), 1.0);
    if (turn < 0.0) turn += 1.0;
    const double fk = turn * ncols;
    const std::size_t k0 = static_cast<std::size_t>(fk) % wheel.size();
    const std::size_t k1 = (k0 + 1) % wheel.size();
    const double f = fk - std::floor(fk);
    std::array<float, 3> out{};
    for (std::size_t c = 0; c < 3; ++c) {
        out[c] = static_cast<float>((1.0 - f) * wheel[k0][c] + f * wheel[k1][c]);
    }
    return out;
}

RasterImage flow_to_color(const FlowField& flow, std::optional<double> max_magnitude) {
    double max_mag = 0.0;
    if (max_magnitude) {
        max_mag = *max_magnitude;
    } else {
        std::vector<double> mags;
        mags.reserve(flow.data().size());
        for (const FlowVector& f : flow.data()) mags.push_back(std::hypot(f.u, f.v));
        const std::size_t rank = std::min(mags.size() - 1, static_cast<std::size_t>(std::ceil(0.99 * mags.size())) - 1);
        std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(rank), mags.end());
        max_mag = mags[rank];
    }
    if (!(max_mag > 0.0)) max_mag = 1.0;

    RasterImage out(flow.width(), flow.height(), 3);
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            const FlowVector f = flow.at(x, y);
            const double rad = std::hypot(f.u, f.v) / max_mag;
            const auto base = wheel_color(std::atan2(f.v, f.u));
            float* q = out.pixel(x, y);
            for (std::size_t c = 0; c < 3; ++c) {
                const double col = base[c] / 255.0;
                const double shaded = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : col * 0.75;
                q[c] = static_cast<float>(255.0 * shaded);
            }
        }
    }
    return out;
}

AffineMotion AffineMotion::rotation_about(double degrees, double cx, double cy) {
    const double t = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(t);
    const double s = std::sin(t);
    AffineMotion m;
    m.a = {c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy};
    return m;
}

RasterImage noise_image(int width, int height, int channels, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    RasterImage img(width, height, channels);
    for (float& v : img.data()) v = static_cast<float>(255.0 * unit(engine));
    return img;
}

RasterImage texture_image(int width, int height, int channels, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::vector<double> acc(static_cast<std::size_t>(width) * height * channels, 0.0);
    double amplitude = 1.0;
    for (int cell = 32; cell >= 2; cell /= 2) {
        const int gw = width / cell + 2;
        const int gh = height / cell + 2;
        std::vector<double> lattice(static_cast<std::size_t>(gw) * gh * channels);
        for (double& v : lattice) v = unit(engine);
        for (int y = 0; y < height; ++y) {
            const double gy = static_cast<double>(y) / cell;
            const int y0 = static_cast<int>(gy);
            const double fy = gy - y0;
            for (int x = 0; x < width; ++x) {
                const double gx = static_cast<double>(x) / cell;
                const int x0 = static_cast<int>(gx);
                const double fx = gx - x0;
                for (int c = 0; c < channels; ++c) {
                    auto at = [&](int ix, int iy) {
                        return lattice[(static_cast<std::size_t>(iy) * gw + ix) * channels + c];
                    };
                    const double v = (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0)) +
                                     fy * ((1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1));
                    acc[(static_cast<std::size_t>(y) * width + x) * channels + c] += amplitude * v;
                }
            }
        }
        amplitude *= 0.7;
    }
    const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
    const double span = std::max(1e-12, *hi - *lo);
    RasterImage img(width, height, channels);
    auto data = img.data();
    for (std::size_t i = 0; i < acc.size(); ++i) data[i] = static_cast<float>(255.0 * (acc[i] - *lo) / span);
    return img;
}

SyntheticPair synth_pair(const RasterImage& base, const Motion& motion, std::uint64_t seed) {
    AffineMotion affine;
    const PastedOccluder* occluder = nullptr;
    if (const auto* t = std::get_if<Translation>(&motion)) {
        affine.a = {1.0, 0.0, t->tx, 0.0, 1.0, t->ty};
    } else if (const auto* a = std::get_if<AffineMotion>(&motion)) {
        affine = *a;
    } else {
        occluder = &std::get<PastedOccluder>(motion);
        affine.a = {1.0, 0.0, occluder->background.tx, 0.0, 1.0, occluder->background.ty};
    }
    const auto& A = affine.a;
    const double det = A[0] * A[4] - A[1] * A[3];
    if (std::abs(det) < 1e-9) throw InvalidInput("degenerate affine motion (not invertible)");
    // inverse: p = M (q - t)
    const double i00 = A[4] / det, i01 = -A[1] / det, i10 = -A[3] / det, i11 = A[0] / det;

    const int w = base.width();
    const int h = base.height();
    const int ch = base.channels();
    std::mt19937_64 engine(seed);

    SyntheticPair pair;
    pair.img1 = base;
    pair.img2 = RasterImage(w, h, ch);
    pair.gt = FlowField(w, h);
    pair.mask = ValidityMask(w, h, false);
    pair.occluded = ValidityMask(w, h, false);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double qx = x - A[2];
            const double qy = y - A[5];
            const double sx = i00 * qx + i01 * qy;
            const double sy = i10 * qx + i11 * qy;
            float* dst = pair.img2.pixel(x, y);
            const bool inside = sx >= 0.0 && sy >= 0.0 && sx <= w - 1.0 && sy <= h - 1.0;
            for (int c = 0; c < ch; ++c) {
                dst[c] = inside ? bilinear(base, sx, sy, c) : static_cast<float>(255.0 * unit(engine));
            }
        }
    }

    std::size_t in_bounds = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double tx = A[0] * x + A[1] * y + A[2];
            const double ty = A[3] * x + A[4] * y + A[5];
            pair.gt.at(x, y) = {static_cast<float>(tx - x), static_cast<float>(ty - y)};
            const bool inside = tx >= 0.0 && ty >= 0.0 && tx <= w - 1.0 && ty <= h - 1.0;
            pair.mask.set(x, y, inside);
            if (inside) ++in_bounds;
        }
    }
    if (2 * in_bounds < static_cast<std::size_t>(w) * h) {
        throw InvalidParameter("motion moves more than half of the pixels out of frame");
    }

    if (occluder) {
        if (occluder->width < 1 || occluder->height < 1) {
            throw InvalidParameter("occluder must have positive size");
        }
        for (int y = std::max(0, occluder->y); y < std::min(h, occluder->y + occluder->height); ++y) {
            for (int x = std::max(0, occluder->x); x < std::min(w, occluder->x + occluder->width); ++x) {
                float* p = pair.img1.pixel(x, y);
                for (int c = 0; c < ch; ++c) p[c] = static_cast<float>(255.0 * unit(engine));
                pair.occluded.set(x, y, true);
                pair.mask.set(x, y, false);
            }
        }
    }
    return pair;
}

std::string_view to_string(SyntheticSuite suite) {
    switch (suite) {
        case SyntheticSuite::Translation: return "translation";
        case SyntheticSuite::Occlusion: return "occlusion";
        case SyntheticSuite::Affine: return "affine";
    }
    return "?";
}

SyntheticSuite parse_suite(std::string_view name) {
    for (auto suite : {SyntheticSuite::Translation, SyntheticSuite::Occlusion, SyntheticSuite::Affine}) {
        if (name == to_string(suite)) return suite;
    }
    throw InvalidParameter("unknown synthetic suite '" + std::string(name) + "'");
}

SyntheticCase make_synthetic_case(SyntheticSuite suite, int index, std::uint64_t seed) {
    if (index < 0) throw InvalidParameter("case index must be >= 0");
    const auto tag = static_cast<std::uint64_t>(suite);
    std::mt19937_64 engine(derive_seed(seed, tag, static_cast<std::uint64_t>(index)));
    const auto pick = [&](int lo, int hi) {
        return lo + static_cast<int>(engine() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    const auto symmetric = [&](double bound) { return bound * (2.0 * unit(engine) - 1.0); };

    SyntheticCase out;
    char name[32];
    std::snprintf(name, sizeof name, "%s-%02d", std::string(to_string(suite)).c_str(), index);
    out.name = name;
    RasterImage base;
    switch (suite) {
        case SyntheticSuite::Translation: {
            base = noise_image(128, 96, 3, engine());
            out.motion = Translation{static_cast<double>(pick(-8, 8)), static_cast<double>(pick(-8, 8))};
            break;
        }
        case SyntheticSuite::Occlusion: {
            base = noise_image(128, 96, 3, engine());
            PastedOccluder occ;
            occ.background = {static_cast<double>(pick(-6, 6)), static_cast<double>(pick(-6, 6))};
            occ.width = occ.height = 20;
            occ.x = pick(20, 128 - 40);
            occ.y = pick(20, 96 - 40);
            out.motion = occ;
            break;
        }
        case SyntheticSuite::Affine: {
            base = texture_image(160, 120, 3, engine());
            const double angle = symmetric(4.0) * std::numbers::pi / 180.0;
            const double scale = 1.0 + symmetric(0.04);
            const double ca = scale * std::cos(angle), sa = scale * std::sin(angle);
            const double cx = 80.0, cy = 60.0;
            const double tx = symmetric(5.0), ty = symmetric(5.0);
            AffineMotion a;
            a.a = {ca, -sa, cx - ca * cx + sa * cy + tx, sa, ca, cy - sa * cx - ca * cy + ty};
            out.motion = a;
            break;
        }
    }
    out.pair = synth_pair(base, out.motion, engine());
    return out;
}

std::size_t count_wrong_inliers(const CorrespondenceField& field, const SyntheticPair& pair, double tau) {
    if (field.width() != pair.gt.width() || field.height() != pair.gt.height()) {
        throw InvalidInput("field and ground truth differ in size");
    }
    std::size_t wrong = 0;
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            if (!field.initialized(x, y)) continue;
            const Offset o = field.offset(x, y);
            const FlowVector g = pair.gt.at(x, y);
            const double ee = std::hypot(o.dx - static_cast<double>(g.u), o.dy - static_cast<double>(g.v));
            if (pair.occluded.at(x, y) || ee > tau) ++wrong;
        }
    }
    return wrong;
}

}  // namespace pgm
