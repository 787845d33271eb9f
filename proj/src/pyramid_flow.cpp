#include "pgm/pyramid_flow.hpp"

#include "pgm/errors.hpp"
#include "pgm/imgproc.hpp"
#include "pgm/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <thread>

namespace pgm {

namespace {

constexpr double kSeedReduction = 0.25;

int coarse_index(int fine, double factor) {
    return static_cast<int>(std::floor(fine * factor + 1e-9));
}

int to_int(double v) { return static_cast<int>(std::lround(v)); }

void require_same_dims(int w1, int h1, int w2, int h2, const char* what) {
    if (w1 != w2 || h1 != h2) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

GradientVariant full_counterpart(GradientVariant v) {
    return is_gray(v) ? GradientVariant::G : GradientVariant::C;
}

}  // namespace

std::string_view to_string(Ablation ablation) {
    switch (ablation) {
        case Ablation::Full: return "full";
        case Ablation::NoRefinement: return "no_refinement";
        case Ablation::PropagateAll: return "propagate_all";
        case Ablation::NoRecord: return "no_record";
    }
    return "?";
}

Ablation parse_ablation(std::string_view name) {
    if (name == "full") return Ablation::Full;
    if (name == "no_refinement") return Ablation::NoRefinement;
    if (name == "propagate_all") return Ablation::PropagateAll;
    if (name == "no_record") return Ablation::NoRecord;
    throw InvalidParameter("unknown ablation mode: " + std::string(name));
}

PipelineConfig PipelineConfig::defaults(GradientVariant variant) {
    PipelineConfig cfg;
    cfg.variant = variant;
    if (is_gray(variant)) {
        cfg.spaces_fwd.assign(static_cast<std::size_t>(cfg.levels), ColorSpace::GRAY);
        cfg.spaces_bwd.assign(static_cast<std::size_t>(cfg.levels), ColorSpace::GRAY);
    }
    return cfg;
}

void validate(const PipelineConfig& cfg) {
    if (cfg.levels < 2) throw InvalidParameter("pyramid needs L >= 2 levels");
    if (!(cfg.factor > 0.0 && cfg.factor < 1.0)) throw InvalidParameter("factor s must lie in (0, 1)");
    if (cfg.start_level < 1 || cfg.start_level > cfg.levels - 1) {
        throw InvalidParameter("start level m must satisfy 1 <= m <= L-1");
    }
    if (cfg.refinements < 0) throw InvalidParameter("refinement count N must be >= 0");
    if (cfg.search_bound < 1) throw InvalidParameter("search bound W must be >= 1");
    if (cfg.radius_fwd < 1 || cfg.radius_bwd < 1) throw InvalidParameter("patch radii must be >= 1");
    if (cfg.iters_full < 1 || cfg.iters_other < 1) throw InvalidParameter("iteration counts must be >= 1");
    if (cfg.eps_check < 0.0) throw InvalidParameter("consistency threshold must be >= 0");
    if (cfg.min_region < 0 || cfg.seg_tol < 0) throw InvalidParameter("region parameters must be >= 0");
    if (static_cast<int>(cfg.spaces_fwd.size()) != cfg.levels ||
        static_cast<int>(cfg.spaces_bwd.size()) != cfg.levels) {
        throw InvalidParameter("need one color space per level for both pyramids");
    }
    const bool gray = is_gray(cfg.variant);
    for (const auto* spaces : {&cfg.spaces_fwd, &cfg.spaces_bwd}) {
        for (ColorSpace cs : *spaces) {
            if (gray != (cs == ColorSpace::GRAY)) {
                throw InvalidParameter(gray ? "gray variants require GRAY at every level"
                                            : "colour variants cannot use GRAY levels");
            }
        }
    }
    sobel_kernels(cfg.sobel_size);
}

void set_levels(PipelineConfig& cfg, int levels) {
    if (levels < 2) throw InvalidParameter("pyramid needs L >= 2 levels");
    const PipelineConfig base = PipelineConfig::defaults(cfg.variant);
    auto extend = [levels](const std::vector<ColorSpace>& pattern) {
        std::vector<ColorSpace> out;
        for (int l = 0; l < levels; ++l) out.push_back(pattern[static_cast<std::size_t>(l) % pattern.size()]);
        return out;
    };
    cfg.spaces_fwd = extend(base.spaces_fwd);
    cfg.spaces_bwd = extend(base.spaces_bwd);
    cfg.levels = levels;
    cfg.start_level = std::min(cfg.start_level, levels - 1);
}

CorrespondenceField seed_initial_field(const GradientImage& g1, const GradientImage& g2, int radius) {
    const GradientVariant plain = full_counterpart(g1.variant());
    const GradientImage small1(downsample(g1.image(), kSeedReduction), plain);
    const GradientImage small2(downsample(g2.image(), kSeedReduction), plain);
    const int small_radius = std::max(1, (radius + 2) / 4);
    const CorrespondenceField coarse =
        exhaustive_match_oracle(small1, small2, small_radius, TieBreak::SmallestOffset);

    // Reduced offsets are quantised to `scale` pixels; pick the best of the cells they cover.
    const int scale = static_cast<int>(std::lround(1.0 / kSeedReduction));
    const int reach = scale / 2;
    const GradientMatcher matcher(g1, g2, radius);
    CorrespondenceField out(g1.width(), g1.height());
    for (int y = 0; y < g1.height(); ++y) {
        for (int x = 0; x < g1.width(); ++x) {
            const int cx = std::min(coarse_index(x, kSeedReduction), coarse.width() - 1);
            const int cy = std::min(coarse_index(y, kSeedReduction), coarse.height() - 1);
            const Offset o = coarse.offset(cx, cy);
            const int tx = std::clamp(x + o.dx * scale, 0, g2.width() - 1);
            const int ty = std::clamp(y + o.dy * scale, 0, g2.height() - 1);
            Offset best{tx - x, ty - y};
            double best_cost = matcher.cost(x, y, best);
            for (int dy = -reach; dy <= reach; ++dy) {
                for (int dx = -reach; dx <= reach; ++dx) {
                    const Offset cand{tx - x + dx, ty - y + dy};
                    if ((dx == 0 && dy == 0) || !matcher.target_in_bounds(x, y, cand)) continue;
                    const double c = matcher.cost(x, y, cand, best_cost);
                    if (c < best_cost) {
                        best_cost = c;
                        best = cand;
                    }
                }
            }
            out.set(x, y, best);
        }
    }
    return out;
}

ConsistencyMap consistency_check(const CorrespondenceField& fwd, const CorrespondenceField& bwd,
                                 double eps) {
    ConsistencyMap out(fwd.width(), fwd.height(), false);
    for (int y = 0; y < fwd.height(); ++y) {
        for (int x = 0; x < fwd.width(); ++x) {
            if (!fwd.initialized(x, y)) continue;
            const Offset f = fwd.offset(x, y);
            const int qx = x + f.dx;
            const int qy = y + f.dy;
            if (!bwd.contains(qx, qy) || !bwd.initialized(qx, qy)) continue;
            const Offset b = bwd.offset(qx, qy);
            const double rx = f.dx + b.dx;
            const double ry = f.dy + b.dy;
            out.set(x, y, std::sqrt(rx * rx + ry * ry) <= eps);
        }
    }
    return out;
}

OutlierRecord update_outlier_record(const OutlierRecord& record, const ConsistencyMap& check) {
    require_same_dims(record.width(), record.height(), check.width(), check.height(),
                      "update_outlier_record");
    OutlierRecord out(record.width(), record.height());
    for (int y = 0; y < record.height(); ++y) {
        for (int x = 0; x < record.width(); ++x) {
            const OutlierState prev = record.at(x, y);
            const bool inlier = (prev == OutlierState::Unset || prev == OutlierState::Inlier) &&
                                check.passed(x, y);
            out.set(x, y, inlier ? OutlierState::Inlier : OutlierState::Outlier);
        }
    }
    return out;
}

CorrespondenceField propagate_field(const CorrespondenceField& field, const OutlierRecord& record,
                                    PropagationDirection direction, double factor, int out_width,
                                    int out_height) {
    require_same_dims(field.width(), field.height(), record.width(), record.height(), "propagate_field");
    if (!(factor > 0.0 && factor < 1.0)) throw InvalidParameter("factor s must lie in (0, 1)");
    CorrespondenceField out(out_width, out_height);

    if (direction == PropagationDirection::ToCoarser) {
        const std::size_t n = static_cast<std::size_t>(out_width) * out_height;
        std::vector<double> sum_x(n, 0.0), sum_y(n, 0.0);
        std::vector<int> count(n, 0);
        for (int y = 0; y < field.height(); ++y) {
            for (int x = 0; x < field.width(); ++x) {
                if (!field.initialized(x, y) || !record.is_inlier(x, y)) continue;
                const int cx = coarse_index(x, factor);
                const int cy = coarse_index(y, factor);
                if (cx >= out_width || cy >= out_height) continue;
                const std::size_t i = static_cast<std::size_t>(cy) * out_width + cx;
                sum_x[i] += field.offset(x, y).dx;
                sum_y[i] += field.offset(x, y).dy;
                ++count[i];
            }
        }
        for (int y = 0; y < out_height; ++y) {
            for (int x = 0; x < out_width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * out_width + x;
                if (count[i] == 0) continue;
                const Offset o{to_int(sum_x[i] / count[i] * factor), to_int(sum_y[i] / count[i] * factor)};
                if (out.contains(x + o.dx, y + o.dy)) out.set(x, y, o);
            }
        }
    } else {
        for (int y = 0; y < out_height; ++y) {
            for (int x = 0; x < out_width; ++x) {
                const int sx = coarse_index(x, factor);
                const int sy = coarse_index(y, factor);
                if (!field.contains(sx, sy) || !field.initialized(sx, sy) || !record.is_inlier(sx, sy)) continue;
                const Offset src = field.offset(sx, sy);
                const Offset o{to_int(src.dx / factor), to_int(src.dy / factor)};
                if (out.contains(x + o.dx, y + o.dy)) out.set(x, y, o);
            }
        }
    }
    return out;
}

OutlierRecord propagate_outlier_record(const OutlierRecord& record, PropagationDirection direction,
                                       double factor, int out_width, int out_height) {
    if (!(factor > 0.0 && factor < 1.0)) throw InvalidParameter("factor s must lie in (0, 1)");
    OutlierRecord out(out_width, out_height, OutlierState::Outlier);
    if (direction == PropagationDirection::ToCoarser) {
        for (int y = 0; y < record.height(); ++y) {
            for (int x = 0; x < record.width(); ++x) {
                if (!record.is_inlier(x, y)) continue;
                const int cx = coarse_index(x, factor);
                const int cy = coarse_index(y, factor);
                if (cx < out_width && cy < out_height) out.set(cx, cy, OutlierState::Inlier);
            }
        }
    } else {
        for (int y = 0; y < out_height; ++y) {
            for (int x = 0; x < out_width; ++x) {
                const int sx = std::min(coarse_index(x, factor), record.width() - 1);
                const int sy = std::min(coarse_index(y, factor), record.height() - 1);
                if (record.is_inlier(sx, sy)) out.set(x, y, OutlierState::Inlier);
            }
        }
    }
    return out;
}

CorrespondenceField remove_small_regions(const CorrespondenceField& field, int min_region, int seg_tol) {
    const int w = field.width();
    const int h = field.height();
    CorrespondenceField out = field;
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::pair<int, int>> queue;
    std::vector<std::pair<int, int>> members;
    int next_label = 0;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (!field.initialized(x0, y0) || label[i0] >= 0) continue;
            members.clear();
            queue.assign(1, {x0, y0});
            label[i0] = next_label;
            while (!queue.empty()) {
                const auto [x, y] = queue.back();
                queue.pop_back();
                members.emplace_back(x, y);
                const Offset o = field.offset(x, y);
                constexpr int kDx[4] = {1, -1, 0, 0};
                constexpr int kDy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = x + kDx[k];
                    const int ny = y + kDy[k];
                    if (!field.contains(nx, ny) || !field.initialized(nx, ny)) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (label[ni] >= 0) continue;
                    const Offset n = field.offset(nx, ny);
                    if (std::abs(n.dx - o.dx) > seg_tol || std::abs(n.dy - o.dy) > seg_tol) continue;
                    label[ni] = next_label;
                    queue.emplace_back(nx, ny);
                }
            }
            if (static_cast<int>(members.size()) < min_region) {
                for (const auto& [x, y] : members) out.clear(x, y);
            }
            ++next_label;
        }
    }
    return out;
}

namespace {

/// Forward/backward state for the level currently being processed.
class PyramidRun {
public:
    PyramidRun(const RasterImage& img1, const RasterImage& img2, const PipelineConfig& cfg)
        : cfg_(cfg) {
        const bool gray = is_gray(cfg.variant);
        const RasterImage a = gray ? img1 : to_three_channels(img1);
        const RasterImage b = gray ? img2 : to_three_channels(img2);
        fwd1_ = build_gradient_pyramid(a, cfg.spaces_fwd, cfg.variant, cfg.sobel_size, cfg.levels, cfg.factor);
        fwd2_ = build_gradient_pyramid(b, cfg.spaces_fwd, cfg.variant, cfg.sobel_size, cfg.levels, cfg.factor);
        bwd1_ = build_gradient_pyramid(a, cfg.spaces_bwd, cfg.variant, cfg.sobel_size, cfg.levels, cfg.factor);
        bwd2_ = build_gradient_pyramid(b, cfg.spaces_bwd, cfg.variant, cfg.sobel_size, cfg.levels, cfg.factor);
        matchers_fwd_.resize(fwd1_.size());
        matchers_bwd_.resize(fwd1_.size());
    }

    void seed(int level) {
        level_ = level;
        const auto& [w, h] = dims(level);
        auto fwd = std::async(policy(), [&] {
            return seed_initial_field(fwd1_[idx(level)], fwd2_[idx(level)], cfg_.radius_fwd);
        });
        field_bwd_ = seed_initial_field(bwd2_[idx(level)], bwd1_[idx(level)], cfg_.radius_bwd);
        field_fwd_ = fwd.get();
        record_fwd_ = OutlierRecord(w, h);
        record_bwd_ = OutlierRecord(w, h);
    }

    /// Match both directions, check, update the records.
    void visit(const char* stage, int iterations) {
        const std::size_t l = idx(level_);
        const std::uint64_t n = visits_.size();
        const MatchParams pf{cfg_.radius_fwd, cfg_.search_bound, iterations, derive_seed(cfg_.seed, n, 0), 0};
        const MatchParams pb{cfg_.radius_bwd, cfg_.search_bound, iterations, derive_seed(cfg_.seed, n, 1), 0};
        auto fwd = std::async(policy(), [&] {
            return basic_gradient_matching(matcher(matchers_fwd_, fwd1_[l], fwd2_[l], cfg_.radius_fwd, l),
                                           field_fwd_, pf);
        });
        field_bwd_ = basic_gradient_matching(matcher(matchers_bwd_, bwd2_[l], bwd1_[l], cfg_.radius_bwd, l),
                                             field_bwd_, pb);
        field_fwd_ = fwd.get();

        ConsistencyMap check_fwd = consistency_check(field_fwd_, field_bwd_, cfg_.eps_check);
        const ConsistencyMap check_bwd = consistency_check(field_bwd_, field_fwd_, cfg_.eps_check);
        record_fwd_ = update_outlier_record(record_fwd_, check_fwd);
        record_bwd_ = update_outlier_record(record_bwd_, check_bwd);

        LevelVisit v;
        v.level = level_;
        v.stage = stage;
        v.forward_inliers = record_fwd_.count(OutlierState::Inlier);
        v.backward_inliers = record_bwd_.count(OutlierState::Inlier);
        v.check = std::move(check_fwd);
        visits_.push_back(std::move(v));
    }

    /// Move field (and record, if requested) to `to`.
    void move_to(int to, bool with_record) {
        const auto direction = to > level_ ? PropagationDirection::ToCoarser : PropagationDirection::ToFiner;
        const auto& [w, h] = dims(to);
        const bool all = cfg_.ablation == Ablation::PropagateAll;
        const OutlierRecord everyone(record_fwd_.width(), record_fwd_.height(), OutlierState::Inlier);
        field_fwd_ = propagate_field(field_fwd_, all ? everyone : record_fwd_, direction, cfg_.factor, w, h);
        field_bwd_ = propagate_field(field_bwd_, all ? everyone : record_bwd_, direction, cfg_.factor, w, h);
        if (with_record && cfg_.ablation != Ablation::NoRecord) {
            record_fwd_ = propagate_outlier_record(record_fwd_, direction, cfg_.factor, w, h);
            record_bwd_ = propagate_outlier_record(record_bwd_, direction, cfg_.factor, w, h);
        } else {
            record_fwd_ = OutlierRecord(w, h);
            record_bwd_ = OutlierRecord(w, h);
        }
        level_ = to;
    }

    PipelineResult finish() {
        PipelineResult result;
        result.raw_field = field_fwd_;
        CorrespondenceField filtered = field_fwd_;
        for (int y = 0; y < filtered.height(); ++y) {
            for (int x = 0; x < filtered.width(); ++x) {
                if (!record_fwd_.is_inlier(x, y)) filtered.clear(x, y);
            }
        }
        result.field = remove_small_regions(filtered, cfg_.min_region, cfg_.seg_tol);
        result.record = record_fwd_;
        result.visits = std::move(visits_);
        return result;
    }

private:
    static std::size_t idx(int level) { return static_cast<std::size_t>(level); }

    std::pair<int, int> dims(int level) const {
        const GradientImage& g = fwd1_[idx(level)];
        return {g.width(), g.height()};
    }

    static const GradientMatcher& matcher(std::vector<std::optional<GradientMatcher>>& cache,
                                          const GradientImage& src, const GradientImage& dst,
                                          int radius, std::size_t l) {
        if (!cache[l]) cache[l].emplace(src, dst, radius);
        return *cache[l];
    }

    static std::launch policy() {
        return std::thread::hardware_concurrency() > 1 ? std::launch::async : std::launch::deferred;
    }

    const PipelineConfig& cfg_;
    std::vector<GradientImage> fwd1_, fwd2_, bwd1_, bwd2_;
    std::vector<std::optional<GradientMatcher>> matchers_fwd_, matchers_bwd_;
    int level_ = 0;
    CorrespondenceField field_fwd_, field_bwd_;
    OutlierRecord record_fwd_, record_bwd_;
    std::vector<LevelVisit> visits_;
};

}  // namespace

PipelineResult pyramidal_matching(const RasterImage& img1, const RasterImage& img2,
                                  const PipelineConfig& cfg) {
    validate(cfg);
    require_same_dims(img1.width(), img1.height(), img2.width(), img2.height(), "pyramidal_matching");
    PyramidRun run(img1, img2, cfg);
    const int m = cfg.start_level;
    run.seed(m);

    const int rounds = cfg.ablation == Ablation::NoRefinement ? 0 : cfg.refinements;
    for (int n = 0; n < rounds; ++n) {
        run.visit("refine", cfg.iters_other);
        run.move_to(m - 1, true);
        run.visit("refine", cfg.iters_other);
        run.move_to(m, true);
    }
    run.visit("refine", cfg.iters_other);
    run.move_to(m - 1, false);

    for (int l = m - 1; l > 0; --l) {
        run.visit("descend", cfg.iters_other);
        run.move_to(l - 1, true);
    }
    run.visit("final", cfg.iters_full);
    return run.finish();
}

}  // namespace pgm
