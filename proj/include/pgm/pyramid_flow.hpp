#pragma once

#include "pgm/field.hpp"
#include "pgm/image.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pgm {

/// Pipeline variants that each disable exactly one mechanism of the full schedule.
enum class Ablation {
    Full,
    NoRefinement,  // skip the round trips between levels m and m-1
    PropagateAll,  // field propagation ignores the outlier record
    NoRecord,      // outlier records are never carried between levels
};

std::string_view to_string(Ablation ablation);
Ablation parse_ablation(std::string_view name);

struct PipelineConfig {
    int search_bound = 2;  // W
    int sobel_size = 5;    // S
    int levels = 3;        // L
    double factor = 0.5;   // s
    int refinements = 2;   // N
    int start_level = 2;   // m
    int radius_fwd = 7;
    int radius_bwd = 5;
    int iters_full = 6;
    int iters_other = 4;
    double eps_check = 1.5;
    int min_region = 9;
    int seg_tol = 1;
    std::vector<ColorSpace> spaces_fwd{ColorSpace::RGB, ColorSpace::CIELAB, ColorSpace::YCRCB};
    std::vector<ColorSpace> spaces_bwd{ColorSpace::CIELAB, ColorSpace::YCRCB, ColorSpace::RGB};
    GradientVariant variant = GradientVariant::C;
    Ablation ablation = Ablation::Full;
    std::uint64_t seed = 0;

    /// Defaults for `variant`: gray variants get GRAY at every level.
    static PipelineConfig defaults(GradientVariant variant = GradientVariant::C);
};

void validate(const PipelineConfig& cfg);

/// Changes L, extending both colour-space schedules cyclically and clamping m to L-1.
void set_levels(PipelineConfig& cfg, int levels);

enum class PropagationDirection { ToCoarser, ToFiner };

/// Dense start field at one level: exhaustive matching on a 4x reduced copy, offsets scaled back up.
CorrespondenceField seed_initial_field(const GradientImage& g1, const GradientImage& g2, int radius);

/// Pass iff F_fwd(p) is set, F_bwd(p + F_fwd(p)) is set and |F_fwd(p) + F_bwd(q)| <= eps.
ConsistencyMap consistency_check(const CorrespondenceField& fwd, const CorrespondenceField& bwd,
                                 double eps);

/// An entry stays an outlier once it is one; unset entries take the check result.
OutlierRecord update_outlier_record(const OutlierRecord& record, const ConsistencyMap& check);

/// Moves a field one pyramid level. Only entries that are inliers in `record` contribute; a
/// target entry with no contributing source is uninitialized. `out_width`/`out_height` are the
/// dimensions of the destination level (also the bounds for target positions).
CorrespondenceField propagate_field(const CorrespondenceField& field, const OutlierRecord& record,
                                    PropagationDirection direction, double factor, int out_width,
                                    int out_height);

/// Destination entry is outlier iff its source set holds no inlier.
OutlierRecord propagate_outlier_record(const OutlierRecord& record, PropagationDirection direction,
                                       double factor, int out_width, int out_height);

/// 4-connected segmentation joining neighbours whose offsets differ by <= seg_tol per axis;
/// segments smaller than min_region become uninitialized.
CorrespondenceField remove_small_regions(const CorrespondenceField& field, int min_region, int seg_tol);

struct LevelVisit {
    int level = 0;
    std::string stage;  // "refine", "descend" or "final"
    std::size_t forward_inliers = 0;
    std::size_t backward_inliers = 0;
    ConsistencyMap check;  // forward check at this visit
};

struct PipelineResult {
    CorrespondenceField field;     // filtered full-resolution forward field
    CorrespondenceField raw_field; // full-resolution forward field before filtering
    OutlierRecord record;          // forward outlier record at full resolution
    std::vector<LevelVisit> visits;
};

PipelineResult pyramidal_matching(const RasterImage& img1, const RasterImage& img2,
                                  const PipelineConfig& cfg);

}  // namespace pgm
