#pragma once

#include "pgm/field.hpp"

#include <filesystem>
#include <string_view>
#include <vector>

namespace pgm {

struct Match {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    bool operator==(const Match&) const = default;
};

using MatchSet = std::vector<Match>;

/// One match per initialized entry on the lattice x % spacing == 0, y % spacing == 0.
MatchSet sparsify_to_grid(const CorrespondenceField& field, int spacing);

enum class InterpolatorMode { NW, LA };

std::string_view to_string(InterpolatorMode mode);

inline constexpr double kDefaultDensityThreshold = 0.022;

/// LA when match_count > threshold * width * height, NW otherwise.
InterpolatorMode select_interpolator(std::size_t match_count, int width, int height,
                                     double threshold = kDefaultDensityThreshold);

inline constexpr int kDefaultNeighbours = 25;

/// Sparse-to-dense baseline over the k nearest matches (Euclidean). NW: Gaussian-weighted mean
/// with bandwidth = median neighbour distance. LA: weighted affine least squares, falling back
/// to NW when the fit is rank deficient.
FlowField densify(const MatchSet& matches, int width, int height, InterpolatorMode mode,
                  int k = kDefaultNeighbours);

/// `x1 y1 x2 y2` per line.
void export_matches(const MatchSet& matches, const std::filesystem::path& path);
MatchSet import_matches(const std::filesystem::path& path);
MatchSet parse_matches(std::string_view text);

}  // namespace pgm
