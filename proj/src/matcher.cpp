#include "pgm/matcher.hpp"

#include "pgm/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace pgm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed summation order; every cost path funnels through here so results agree bitwise.
float row_ssd(const float* a, const float* b, int n) {
    float acc[8] = {0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f};
    int k = 0;
    for (; k + 8 <= n; k += 8) {
        for (int j = 0; j < 8; ++j) {
            const float d = a[k + j] - b[k + j];
            acc[j] += d * d;
        }
    }
    float tail = 0.f;
    for (; k < n; ++k) {
        const float d = a[k] - b[k];
        tail += d * d;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void require_same_channels(const GradientImage& g1, const GradientImage& g2) {
    if (g1.channels() != g2.channels()) {
        throw InvalidInput("gradient images have different channel counts (" +
                           std::to_string(g1.channels()) + " vs " + std::to_string(g2.channels()) + ")");
    }
}

}  // namespace

void validate(const MatchParams& params) {
    if (params.radius < 1) throw InvalidParameter("patch radius must be >= 1");
    if (params.search_bound < 1) throw InvalidParameter("search bound W must be >= 1");
    if (params.iterations < 1) throw InvalidParameter("iteration count must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

int search_scale_count(int search_bound) {
    return std::bit_width(static_cast<unsigned>(search_bound));
}

Offset search_displacement(double rx, double ry, int search_bound, int scale) {
    const double reach = static_cast<double>(search_bound) / static_cast<double>(1u << scale);
    return {static_cast<int>(std::floor(rx * reach)), static_cast<int>(std::floor(ry * reach))};
}

double patch_distance(const GradientImage& g1, const GradientImage& g2, int xa, int ya, int xb,
                      int yb, int radius) {
    require_same_channels(g1, g2);
    if (!g1.contains(xa, ya) || !g2.contains(xb, yb)) {
        throw InvalidInput("patch centre outside image bounds");
    }
    if (radius < 0) throw InvalidParameter("patch radius must be >= 0");
    const GradientMatcher matcher(g1, g2, radius, GradientMatcher::Acceleration::None);
    return matcher.cost(xa, ya, {xb - xa, yb - ya});
}

GradientMatcher::GradientMatcher(const GradientImage& source, const GradientImage& target,
                                 int radius, Acceleration accel)
    : source_(&source), target_(&target), radius_(radius) {
    require_same_channels(source, target);
    if (accel == Acceleration::Auto && is_direction_only(source.variant()) &&
        is_direction_only(target.variant())) {
        const int bits = (2 * radius + 1) * source.channels();
        words_ = (bits + 63) / 64;
        pack(source, src_bits_);
        pack(target, dst_bits_);
    } else {
        pad(source, src_pad_);
        pad(target, dst_pad_);
    }
}

void GradientMatcher::pad(const GradientImage& img, std::vector<float>& out) const {
    const int r = radius_;
    const int ch = img.channels();
    const int pw = img.width() + 2 * r;
    const int ph = img.height() + 2 * r;
    out.resize(static_cast<std::size_t>(pw) * ph * ch);
    float* dst = out.data();
    for (int y = 0; y < ph; ++y) {
        const int sy = std::clamp(y - r, 0, img.height() - 1);
        for (int x = 0; x < pw; ++x) {
            dst = std::copy_n(img.pixel(std::clamp(x - r, 0, img.width() - 1), sy), ch, dst);
        }
    }
}

const float* GradientMatcher::padded_row(const std::vector<float>& buf, int width, int x,
                                         int y) const noexcept {
    // (x, y) in image coordinates, may lie up to radius outside
    const int pw = width + 2 * radius_;
    return buf.data() +
           (static_cast<std::size_t>(y + radius_) * pw + (x + radius_)) * source_->channels();
}

void GradientMatcher::pack(const GradientImage& img, std::vector<std::uint64_t>& bits) const {
    // Per pixel: `words_` positive-sign words then `words_` negative-sign words. Window bit
    // j * ch + c holds channel c of pixel x - r + j; rows and columns are clamped, and the
    // layout carries `radius_` replicated rows above and below the image.
    const int w = img.width();
    const int h = img.height();
    const int ch = img.channels();
    const int r = radius_;
    const std::size_t stride = 2 * static_cast<std::size_t>(words_);
    bits.assign(static_cast<std::size_t>(w) * (h + 2 * r) * stride, 0);
    std::vector<std::uint64_t> row_pos(static_cast<std::size_t>(w)), row_neg(row_pos.size());
    const auto put = [ch](std::uint64_t* dst, int bit, std::uint64_t chunk) {
        dst[bit / 64] |= chunk << (bit % 64);
        if (bit % 64 + ch > 64) dst[bit / 64 + 1] |= chunk >> (64 - bit % 64);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float* p = img.pixel(x, y);
            std::uint64_t pm = 0, nm = 0;
            for (int c = 0; c < ch; ++c) {
                if (p[c] > 0.0f) pm |= std::uint64_t{1} << c;
                else if (p[c] < 0.0f) nm |= std::uint64_t{1} << c;
            }
            row_pos[static_cast<std::size_t>(x)] = pm;
            row_neg[static_cast<std::size_t>(x)] = nm;
        }
        for (int x = 0; x < w; ++x) {
            std::uint64_t* dst = bits.data() + (static_cast<std::size_t>(y + r) * w + x) * stride;
            for (int j = 0; j <= 2 * r; ++j) {
                const auto sx = static_cast<std::size_t>(std::clamp(x - r + j, 0, w - 1));
                put(dst, j * ch, row_pos[sx]);
                put(dst + words_, j * ch, row_neg[sx]);
            }
        }
    }
    const std::size_t row = static_cast<std::size_t>(w) * stride;
    for (int k = 0; k < r; ++k) {
        std::copy_n(bits.begin() + static_cast<std::ptrdiff_t>(r * row), row,
                    bits.begin() + static_cast<std::ptrdiff_t>(k * row));
        std::copy_n(bits.begin() + static_cast<std::ptrdiff_t>((h + r - 1) * row), row,
                    bits.begin() + static_cast<std::ptrdiff_t>((h + r + k) * row));
    }
}

double GradientMatcher::cost(int x, int y, Offset o, double bound) const {
    const int xb = x + o.dx;
    const int yb = y + o.dy;
    return packed() ? packed_cost(x, y, xb, yb, bound) : float_cost(x, y, xb, yb, bound);
}

double GradientMatcher::float_cost(int xa, int ya, int xb, int yb, double bound) const {
    const int r = radius_;
    const int len = (2 * r + 1) * source_->channels();
    const int wa = source_->width();
    const int wb = target_->width();
    double total = 0.0;
    for (int oy = -r; oy <= r; ++oy) {
        const float* pa = padded_row(src_pad_, wa, xa - r, ya + oy);
        const float* pb = padded_row(dst_pad_, wb, xb - r, yb + oy);
        total += static_cast<double>(row_ssd(pa, pb, len));
        if (total > bound) return total;
    }
    return total;
}

double GradientMatcher::packed_cost(int xa, int ya, int xb, int yb, double bound) const {
    // Per channel value pairs in {-1, 0, 1}: equal -> 0, one zero -> 1, opposite signs -> 4.
    const int r = radius_;
    const std::size_t words = static_cast<std::size_t>(words_);
    const std::size_t row_a = static_cast<std::size_t>(source_->width()) * 2 * words;
    const std::size_t row_b = static_cast<std::size_t>(target_->width()) * 2 * words;
    // first patch row, i.e. image row y - r, sits at padded row y
    const std::uint64_t* a = src_bits_.data() + static_cast<std::size_t>(ya) * row_a +
                             static_cast<std::size_t>(xa) * 2 * words;
    const std::uint64_t* b = dst_bits_.data() + static_cast<std::size_t>(yb) * row_b +
                             static_cast<std::size_t>(xb) * 2 * words;
    std::uint64_t total = 0;
    for (int oy = -r; oy <= r; ++oy, a += row_a, b += row_b) {
        for (std::size_t k = 0; k < words; ++k) {
            const std::uint64_t pa = a[k], na = a[words + k];
            const std::uint64_t pb = b[k], nb = b[words + k];
            const std::uint64_t differ = (pa ^ pb) | (na ^ nb);
            const std::uint64_t opposite = (pa & nb) | (na & pb);
            total += static_cast<std::uint64_t>(std::popcount(differ)) +
                     3u * static_cast<std::uint64_t>(std::popcount(opposite));
        }
        if (static_cast<double>(total) > bound) break;
    }
    return static_cast<double>(total);
}

MatchingState::MatchingState(const GradientMatcher& matcher, CorrespondenceField init)
    : matcher_(&matcher), field_(std::move(init)) {
    const GradientImage& src = matcher.source();
    if (field_.width() != src.width() || field_.height() != src.height()) {
        throw InvalidInput("initial field dimensions differ from the source gradient image");
    }
    costs_.assign(static_cast<std::size_t>(field_.width()) * field_.height(), kInf);
    for (int y = 0; y < field_.height(); ++y) {
        for (int x = 0; x < field_.width(); ++x) {
            if (!field_.initialized(x, y)) continue;
            const Offset o = field_.offset(x, y);
            if (!matcher.target_in_bounds(x, y, o)) {
                throw InvalidInput("initial field entry points outside the target image");
            }
            cost_ref(x, y) = matcher.cost(x, y, o);
        }
    }
}

double MatchingState::total_cost() const noexcept {
    double sum = 0.0;
    for (double c : costs_) {
        if (c != kInf) sum += c;
    }
    return sum;
}

bool MatchingState::try_candidate(int x, int y, Offset candidate) {
    if (!matcher_->target_in_bounds(x, y, candidate)) return false;
    double& current = cost_ref(x, y);
    const double c = matcher_->cost(x, y, candidate, current);
    if (c < current) {
        current = c;
        field_.set(x, y, candidate);
        return true;
    }
    return false;
}

bool MatchingState::propagate(int x, int y, Offset step_x, Offset step_y) {
    bool changed = false;
    for (const Offset step : {step_x, step_y}) {
        const int nx = x - step.dx;
        const int ny = y - step.dy;
        if (!field_.contains(nx, ny) || !field_.initialized(nx, ny)) continue;
        const Offset candidate = field_.offset(nx, ny);
        if (field_.initialized(x, y) && field_.offset(x, y) == candidate) continue;
        changed |= try_candidate(x, y, candidate);
    }
    return changed;
}

bool MatchingState::random_search(int x, int y, int search_bound, SearchRng& rng) {
    if (!field_.initialized(x, y)) return false;
    const Offset centre = field_.offset(x, y);
    const int scales = search_scale_count(search_bound);
    bool changed = false;
    for (int i = 0; i < scales; ++i) {
        const double rx = rng.uniform_signed();
        const double ry = rng.uniform_signed();
        const Offset d = search_displacement(rx, ry, search_bound, i);
        if (d.dx == 0 && d.dy == 0) continue;
        changed |= try_candidate(x, y, {centre.dx + d.dx, centre.dy + d.dy});
    }
    return changed;
}

void MatchingState::sweep(const PropagationPhase& phase, int search_bound, SearchRng& rng) {
    const int w = field_.width();
    const int h = field_.height();
    const bool x_forward = phase.step_x.dx > 0;
    const bool y_forward = phase.step_y.dy > 0;
    for (int j = 0; j < h; ++j) {
        const int y = y_forward ? j : h - 1 - j;
        for (int i = 0; i < w; ++i) {
            const int x = x_forward ? i : w - 1 - i;
            propagate(x, y, phase.step_x, phase.step_y);
            random_search(x, y, search_bound, rng);
        }
    }
}

bool propagate_pixel(CorrespondenceField& field, const GradientImage& g1, const GradientImage& g2,
                     int x, int y, Offset step_x, Offset step_y, int radius) {
    const GradientMatcher matcher(g1, g2, radius, GradientMatcher::Acceleration::None);
    double best = field.initialized(x, y) ? matcher.cost(x, y, field.offset(x, y)) : kInf;
    bool changed = false;
    for (const Offset step : {step_x, step_y}) {
        const int nx = x - step.dx;
        const int ny = y - step.dy;
        if (!field.contains(nx, ny) || !field.initialized(nx, ny)) continue;
        const Offset candidate = field.offset(nx, ny);
        if (!matcher.target_in_bounds(x, y, candidate)) continue;
        const double c = matcher.cost(x, y, candidate, best);
        if (c < best) {
            best = c;
            field.set(x, y, candidate);
            changed = true;
        }
    }
    return changed;
}

bool random_search_pixel(CorrespondenceField& field, const GradientImage& g1,
                         const GradientImage& g2, int x, int y, int search_bound, int radius,
                         SearchRng& rng) {
    if (!field.initialized(x, y)) return false;
    const GradientMatcher matcher(g1, g2, radius, GradientMatcher::Acceleration::None);
    const Offset centre = field.offset(x, y);
    double best = matcher.cost(x, y, centre);
    bool changed = false;
    for (int i = 0; i < search_scale_count(search_bound); ++i) {
        const double rx = rng.uniform_signed();
        const double ry = rng.uniform_signed();
        const Offset d = search_displacement(rx, ry, search_bound, i);
        if (d.dx == 0 && d.dy == 0) continue;
        const Offset candidate{centre.dx + d.dx, centre.dy + d.dy};
        if (!matcher.target_in_bounds(x, y, candidate)) continue;
        const double c = matcher.cost(x, y, candidate, best);
        if (c < best) {
            best = c;
            field.set(x, y, candidate);
            changed = true;
        }
    }
    return changed;
}

CorrespondenceField basic_gradient_matching(const GradientImage& g1, const GradientImage& g2,
                                            const CorrespondenceField& init,
                                            const MatchParams& params) {
    validate(params);
    if (init.width() != g1.width() || init.height() != g1.height()) {
        throw InvalidInput("initial field dimensions differ from the source gradient image");
    }
    const GradientMatcher matcher(g1, g2, params.radius);
    return basic_gradient_matching(matcher, init, params);
}

CorrespondenceField basic_gradient_matching(const GradientMatcher& matcher,
                                            const CorrespondenceField& init,
                                            const MatchParams& params) {
    validate(params);
    if (params.radius != matcher.radius()) {
        throw InvalidParameter("match radius differs from the matcher's radius");
    }
    MatchingState state(matcher, init);
    SearchRng rng(params.seed);
    for (int k = 0; k < params.iterations; ++k) {
        const auto& phase = kPropagationPhases[static_cast<std::size_t>((params.first_phase + k) % 4)];
        state.sweep(phase, params.search_bound, rng);
    }
    return std::move(state).release();
}

CorrespondenceField exhaustive_match_oracle(const GradientImage& g1, const GradientImage& g2,
                                            int radius, TieBreak tie) {
    const GradientMatcher matcher(g1, g2, radius, GradientMatcher::Acceleration::None);
    CorrespondenceField out(g1.width(), g1.height());
    for (int y = 0; y < g1.height(); ++y) {
        for (int x = 0; x < g1.width(); ++x) {
            double best = kInf;
            long best_mag = 0;
            Offset best_offset{};
            for (int yb = 0; yb < g2.height(); ++yb) {
                for (int xb = 0; xb < g2.width(); ++xb) {
                    const Offset o{xb - x, yb - y};
                    const long mag = static_cast<long>(o.dx) * o.dx + static_cast<long>(o.dy) * o.dy;
                    const double bound = tie == TieBreak::RowMajor ? best : std::nextafter(best, kInf);
                    const double c = matcher.cost(x, y, o, bound);
                    const bool better = c < best || (tie == TieBreak::SmallestOffset && c == best && mag < best_mag);
                    if (better) {
                        best = c;
                        best_mag = mag;
                        best_offset = o;
                    }
                }
            }
            out.set(x, y, best_offset);
        }
    }
    return out;
}

std::vector<double> field_costs(const GradientImage& g1, const GradientImage& g2,
                                const CorrespondenceField& field, int radius) {
    const GradientMatcher matcher(g1, g2, radius, GradientMatcher::Acceleration::None);
    std::vector<double> out(static_cast<std::size_t>(field.width()) * field.height(), kInf);
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            if (field.initialized(x, y)) {
                out[static_cast<std::size_t>(y) * field.width() + x] = matcher.cost(x, y, field.offset(x, y));
            }
        }
    }
    return out;
}

CorrespondenceField random_field(int width, int height, int target_width, int target_height,
                                 std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    CorrespondenceField out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int tx = static_cast<int>(engine() % static_cast<std::uint64_t>(target_width));
            const int ty = static_cast<int>(engine() % static_cast<std::uint64_t>(target_height));
            out.set(x, y, {tx - x, ty - y});
        }
    }
    return out;
}

}  // namespace pgm
