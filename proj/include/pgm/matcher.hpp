#pragma once

#include "pgm/field.hpp"
#include "pgm/image.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace pgm {

struct MatchParams {
    int radius = 7;        // patch is (2r+1)^2
    int search_bound = 2;  // W: random-search distance bound
    int iterations = 4;    // propagation + search sweeps
    std::uint64_t seed = 0;
    int first_phase = 0;   // index into kPropagationPhases for the first sweep
};

void validate(const MatchParams& params);

/// Random source for the search step: std::mt19937_64 with a 53-bit mantissa mapping onto
/// the closed interval [-1, 1]. Both are fully specified, so streams reproduce across platforms.
class SearchRng {
public:
    explicit SearchRng(std::uint64_t seed) : engine_(seed) {}

    double uniform_signed() {
        constexpr double kScale = 1.0 / 9007199254740991.0;  // 1 / (2^53 - 1)
        return 2.0 * static_cast<double>(engine_() >> 11) * kScale - 1.0;
    }

private:
    std::mt19937_64 engine_;
};

/// Mixes several integers into an independent seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Neighbour steps (dx-step, dy-step) of one propagation sweep.
struct PropagationPhase {
    Offset step_x;
    Offset step_y;
};

/// Four-phase propagation cycle, advanced by one phase per sweep.
inline constexpr std::array<PropagationPhase, 4> kPropagationPhases = {{
    {{1, 0}, {0, 1}},
    {{-1, 0}, {0, -1}},
    {{-1, 0}, {0, 1}},
    {{1, 0}, {0, -1}},
}};

/// floor(log2 W) + 1 search scales.
int search_scale_count(int search_bound);

/// Componentwise floor(R * W / 2^scale) for R = (rx, ry) in [-1, 1]^2.
Offset search_displacement(double rx, double ry, int search_bound, int scale);

/// Sum of squared channel differences over the (2r+1)^2 patch, borders clamped.
double patch_distance(const GradientImage& g1, const GradientImage& g2, int xa, int ya, int xb,
                      int yb, int radius);

/// Patch cost evaluation for one source/target pair at a fixed radius. Direction-only pairs
/// are evaluated on bit-packed sign windows; the result equals `patch_distance` exactly.
class GradientMatcher {
public:
    enum class Acceleration { Auto, None };

    GradientMatcher(const GradientImage& source, const GradientImage& target, int radius,
                    Acceleration accel = Acceleration::Auto);

    int radius() const noexcept { return radius_; }
    const GradientImage& source() const noexcept { return *source_; }
    const GradientImage& target() const noexcept { return *target_; }
    bool packed() const noexcept { return !src_bits_.empty(); }

    bool target_in_bounds(int x, int y, Offset o) const noexcept {
        return target_->contains(x + o.dx, y + o.dy);
    }

    /// Cost of matching source (x, y) to target (x, y) + o. Evaluation may stop early once the
    /// partial sum exceeds `bound`; the returned value is then only guaranteed to be > bound.
    double cost(int x, int y, Offset o,
                double bound = std::numeric_limits<double>::infinity()) const;

private:
    double float_cost(int xa, int ya, int xb, int yb, double bound) const;
    double packed_cost(int xa, int ya, int xb, int yb, double bound) const;
    void pack(const GradientImage& img, std::vector<std::uint64_t>& bits) const;
    void pad(const GradientImage& img, std::vector<float>& out) const;
    const float* padded_row(const std::vector<float>& buf, int width, int x, int y) const noexcept;

    const GradientImage* source_;
    const GradientImage* target_;
    int radius_;
    int words_ = 0;
    std::vector<std::uint64_t> src_bits_, dst_bits_;
    std::vector<float> src_pad_, dst_pad_;  // replicate-padded by radius on every side
};

/// A correspondence field together with the cached patch cost of every entry.
class MatchingState {
public:
    MatchingState(const GradientMatcher& matcher, CorrespondenceField init);

    const CorrespondenceField& field() const noexcept { return field_; }
    CorrespondenceField release() && { return std::move(field_); }

    /// +inf for uninitialized entries.
    double cost(int x, int y) const noexcept {
        return costs_[static_cast<std::size_t>(y) * field_.width() + x];
    }
    double total_cost() const noexcept;

    /// argmin over {F(p), F(p - step_x), F(p - step_y)} in offset form; returns true on change.
    bool propagate(int x, int y, Offset step_x, Offset step_y);

    /// Limited random search around F(p); no-op for uninitialized entries.
    bool random_search(int x, int y, int search_bound, SearchRng& rng);

    /// One scan of all pixels in the order implied by `phase`.
    void sweep(const PropagationPhase& phase, int search_bound, SearchRng& rng);

private:
    bool try_candidate(int x, int y, Offset candidate);
    double& cost_ref(int x, int y) noexcept {
        return costs_[static_cast<std::size_t>(y) * field_.width() + x];
    }

    const GradientMatcher* matcher_;
    CorrespondenceField field_;
    std::vector<double> costs_;
};

// Single-pixel updates on a bare field (no cost cache); both return true on change.
bool propagate_pixel(CorrespondenceField& field, const GradientImage& g1, const GradientImage& g2,
                     int x, int y, Offset step_x, Offset step_y, int radius);
bool random_search_pixel(CorrespondenceField& field, const GradientImage& g1,
                         const GradientImage& g2, int x, int y, int search_bound, int radius,
                         SearchRng& rng);

/// Limited PatchMatch over one level: `params.iterations` sweeps of propagation + random search.
CorrespondenceField basic_gradient_matching(const GradientImage& g1, const GradientImage& g2,
                                            const CorrespondenceField& init,
                                            const MatchParams& params);

/// Same, reusing a matcher built for the pair; `params.radius` must equal the matcher's radius.
CorrespondenceField basic_gradient_matching(const GradientMatcher& matcher,
                                            const CorrespondenceField& init,
                                            const MatchParams& params);

enum class TieBreak { RowMajor, SmallestOffset };

/// Global argmin of patch cost over every target position (brute force).
CorrespondenceField exhaustive_match_oracle(const GradientImage& g1, const GradientImage& g2,
                                            int radius, TieBreak tie = TieBreak::RowMajor);

/// Patch cost of each entry; +inf where uninitialized.
std::vector<double> field_costs(const GradientImage& g1, const GradientImage& g2,
                                const CorrespondenceField& field, int radius);

/// Uniformly random in-bounds offsets for every pixel.
CorrespondenceField random_field(int width, int height, int target_width, int target_height,
                                 std::uint64_t seed);

}  // namespace pgm
