// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "pgm/errors.hpp"
#include "pgm/eval.hpp"
#include "pgm/imgproc.hpp"
#include "pgm/interp.hpp"
#include "pgm/matcher.hpp"
#include "pgm/pyramid_flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace pgm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string strf(const char* fmt, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
    return buf;
}

GradientImage gradients_of(const RasterImage& img, GradientVariant v = GradientVariant::C) {
    auto [gx, gy] = sobel_gradients(img, 5);
    return apply_variant(build_gradient_image(gx, gy), v);
}

// ---- 1: oracle equivalence ----
Outcome oracle_equivalence() {
    Outcome o;
    double worst_ratio = 0.0, elapsed = 0.0;
    for (int i = 0; i < 10; ++i) {
        const GradientImage g1 = gradients_of(noise_image(32, 24, 3, derive_seed(1, i, 1)));
        const GradientImage g2 = gradients_of(noise_image(32, 24, 3, derive_seed(1, i, 2)));
        const auto t0 = Clock::now();
        const CorrespondenceField pm =
            basic_gradient_matching(g1, g2, random_field(32, 24, 32, 24, static_cast<std::uint64_t>(i)),
                                    MatchParams{2, 32, 20, static_cast<std::uint64_t>(i), 0});
        const CorrespondenceField oracle = exhaustive_match_oracle(g1, g2, 2);
        elapsed += seconds_since(t0);
        const auto pm_cost = field_costs(g1, g2, pm, 2);
        const auto or_cost = field_costs(g1, g2, oracle, 2);
        double pm_total = 0.0, or_total = 0.0;
        bool below = false;
        for (std::size_t k = 0; k < pm_cost.size(); ++k) {
            pm_total += pm_cost[k];
            or_total += or_cost[k];
            below |= pm_cost[k] < or_cost[k];
        }
        o.require(!below, "a pixel beat the oracle in pair " + std::to_string(i));
        worst_ratio = std::max(worst_ratio, pm_total / or_total);
    }
    o.require(worst_ratio <= 1.05, "cost ratio above 1.05");
    o.require(elapsed < 5.0, "runtime over 5 s");
    o.detail = strf("worst cost ratio %.4f, %.2f s", worst_ratio, elapsed) + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- 2: translation recovery ----
Outcome translation_recovery() {
    Outcome o;
    constexpr int kMargin = 8;  // beyond the r = 7 forward patch
    double worst = 1.0, slowest = 0.0;
    for (int i = 0; i < 10; ++i) {
        const SyntheticCase c = make_synthetic_case(SyntheticSuite::Translation, i);
        const auto t = std::get<Translation>(c.motion);
        const Offset truth{static_cast<int>(t.tx), static_cast<int>(t.ty)};
        PipelineConfig cfg = PipelineConfig::defaults();
        cfg.seed = static_cast<std::uint64_t>(i);
        const auto t0 = Clock::now();
        const PipelineResult r = pyramidal_matching(c.pair.img1, c.pair.img2, cfg);
        slowest = std::max(slowest, seconds_since(t0));
        const PipelineResult again = pyramidal_matching(c.pair.img1, c.pair.img2, cfg);
        o.require(again.field == r.field, c.name + " not deterministic");
        const int w = r.field.width(), h = r.field.height();
        int total = 0, hit = 0;
        for (int y = kMargin; y < h - kMargin; ++y)
            for (int x = kMargin; x < w - kMargin; ++x) {
                const int qx = x + truth.dx, qy = y + truth.dy;
                if (qx < kMargin || qy < kMargin || qx >= w - kMargin || qy >= h - kMargin) continue;
                ++total;
                hit += r.field.get(x, y) == truth;
            }
        worst = std::min(worst, static_cast<double>(hit) / total);
    }
    o.require(worst >= 0.95, "a pair fell below 95%");
    o.require(slowest < 10.0, "a pair took 10 s or more");
    o.detail = strf("worst exact ratio %.4f, slowest pair %.2f s", worst, slowest) + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- 3 and 4 share the occlusion runs ----
struct OcclusionRuns {
    std::size_t occluded = 0, occluded_rejected = 0, visible = 0, visible_rejected = 0;
    double wrong[4] = {0, 0, 0, 0};  // mean wrong inliers per ablation
};

const OcclusionRuns& occlusion_runs() {
    static const OcclusionRuns runs = [] {
        OcclusionRuns r;
        const Ablation modes[4] = {Ablation::Full, Ablation::NoRefinement, Ablation::PropagateAll, Ablation::NoRecord};
        for (int i = 0; i < 10; ++i) {
            const SyntheticCase c = make_synthetic_case(SyntheticSuite::Occlusion, i);
            for (int a = 0; a < 4; ++a) {
                PipelineConfig cfg = PipelineConfig::defaults();
                cfg.eps_check = 1.0;
                cfg.seed = static_cast<std::uint64_t>(i);
                cfg.ablation = modes[a];
                const PipelineResult res = pyramidal_matching(c.pair.img1, c.pair.img2, cfg);
                r.wrong[a] += static_cast<double>(count_wrong_inliers(res.field, c.pair)) / 10.0;
                if (a != 0) continue;
                for (int y = 0; y < res.field.height(); ++y)
                    for (int x = 0; x < res.field.width(); ++x) {
                        const bool dropped = !res.field.initialized(x, y);
                        if (c.pair.occluded.at(x, y)) {
                            ++r.occluded;
                            r.occluded_rejected += dropped;
                        } else if (c.pair.mask.at(x, y)) {
                            ++r.visible;
                            r.visible_rejected += dropped;
                        }
                    }
            }
        }
        return r;
    }();
    return runs;
}

Outcome occlusion_rejection() {
    Outcome o;
    const OcclusionRuns& r = occlusion_runs();
    const double rejected = static_cast<double>(r.occluded_rejected) / static_cast<double>(r.occluded);
    const double false_rej = static_cast<double>(r.visible_rejected) / static_cast<double>(r.visible);
    o.require(rejected >= 0.90, "occluder rejection below 90%");
    o.require(false_rej <= 0.10, "visible false rejection above 10%");
    o.detail = strf("occluder rejected %.1f%%, visible rejected %.1f%%", 100.0 * rejected, 100.0 * false_rej) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

Outcome ablation_ordering() {
    Outcome o;
    const OcclusionRuns& r = occlusion_runs();
    o.require(r.wrong[1] >= r.wrong[0], "no_refinement below full");
    o.require(r.wrong[2] >= r.wrong[0], "propagate_all below full");
    o.require(r.wrong[3] >= r.wrong[0], "no_record below full");
    o.detail = strf("mean wrong inliers full %.1f, no_refinement %.1f, propagate_all %.1f, no_record %.1f", r.wrong[0],
                    r.wrong[1], r.wrong[2], r.wrong[3]) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- 5: variant scalability ----
Outcome variant_scalability() {
    Outcome o;
    const GradientVariant variants[4] = {GradientVariant::C, GradientVariant::G, GradientVariant::CD, GradientVariant::GD};
    double aee[4] = {0, 0, 0, 0};
    int decreasing = 0;
    for (int i = 0; i < 10; ++i) {
        const SyntheticCase c = make_synthetic_case(SyntheticSuite::Affine, i);
        const int w = c.pair.img1.width(), h = c.pair.img1.height();
        double t[4];
        for (int v = 0; v < 4; ++v) {
            PipelineConfig cfg = PipelineConfig::defaults(variants[v]);
            cfg.seed = static_cast<std::uint64_t>(i);
            std::vector<double> times;
            PipelineResult res;
            for (int rep = 0; rep < 3; ++rep) {
                const auto t0 = Clock::now();
                res = pyramidal_matching(c.pair.img1, c.pair.img2, cfg);
                times.push_back(seconds_since(t0));
            }
            std::sort(times.begin(), times.end());
            t[v] = times[1];
            const MatchSet m = sparsify_to_grid(res.field, 3);
            const FlowField flow = densify(m, w, h, select_interpolator(m.size(), w, h));
            aee[v] += endpoint_metrics(flow, c.pair.gt, &c.pair.mask).aee / 10.0;
        }
        decreasing += t[0] > t[1] && t[1] > t[2] && t[2] > t[3];
    }
    o.require(aee[1] <= 2.0 * aee[0], "AEE(G) above 2x AEE(C)");
    o.require(aee[3] <= 3.0 * aee[0], "AEE(GD) above 3x AEE(C)");
    o.require(decreasing >= 8, "runtime order C > G > CD > GD held on fewer than 8 cases");
    o.detail = strf("AEE C %.3f G %.3f CD %.3f GD %.3f", aee[0], aee[1], aee[2], aee[3]) +
               ", time order held on " + std::to_string(decreasing) + "/10" + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- 6: unit-level properties ----
Outcome unit_properties() {
    Outcome o;
    for (auto v : {GradientVariant::C, GradientVariant::G, GradientVariant::CD, GradientVariant::GD}) {
        const RasterImage flat(9, 7, 3, 117.0f);
        RasterImage src = is_gray(v) ? convert_color_space(flat, ColorSpace::GRAY) : flat;
        for (int s : {3, 5}) {
            auto [gx, gy] = sobel_gradients(src, s);
            const GradientImage g = apply_variant(build_gradient_image(gx, gy), v);
            o.require(std::all_of(g.image().data().begin(), g.image().data().end(), [](float x) { return x == 0.0f; }),
                      "constant image gave nonzero gradients");
        }
    }

    RasterImage ramp(7, 5, 1);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) ramp.at(x, y, 0) = static_cast<float>(x);
    const auto [rx, ry] = sobel_gradients(ramp, 3);
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 6; ++x) o.require(rx.at(x, y, 0) == 8.0f && ry.at(x, y, 0) == 0.0f, "ramp interior not 8");

    const GradientImage a(RasterImage(1, 1, 2, std::vector<float>{1, 2}), GradientVariant::G);
    const GradientImage b(RasterImage(1, 1, 2, std::vector<float>{4, 6}), GradientVariant::G);
    o.require(patch_distance(a, b, 0, 0, 0, 0, 0) == 25.0, "patch distance hand case not 25");

    for (Offset off : {Offset{0, 0}, Offset{4, -2}, Offset{-6, 8}}) {
        CorrespondenceField f(40, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 40; ++x)
                if (f.contains(x + off.dx, y + off.dy)) f.set(x, y, off);
        const CorrespondenceField c =
            propagate_field(f, OutlierRecord(40, 32, OutlierState::Inlier), PropagationDirection::ToCoarser, 0.5, 20, 16);
        const CorrespondenceField back =
            propagate_field(c, OutlierRecord(20, 16, OutlierState::Inlier), PropagationDirection::ToFiner, 0.5, 40, 32);
        bool exact = true;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 20; ++x)
                if (c.initialized(x, y)) exact &= c.offset(x, y) == Offset{off.dx / 2, off.dy / 2};
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 40; ++x)
                if (back.initialized(x, y)) exact &= back.offset(x, y) == off;
        o.require(exact && back.initialized_count() > 0, "coarsen/refine round trip changed offsets");
    }

    ConsistencyMap check(4, 1);
    OutlierRecord prev(4, 1);
    const OutlierState before[4] = {OutlierState::Inlier, OutlierState::Inlier, OutlierState::Outlier, OutlierState::Outlier};
    const bool passes[4] = {true, false, true, false};
    const OutlierState expect[4] = {OutlierState::Inlier, OutlierState::Outlier, OutlierState::Outlier, OutlierState::Outlier};
    for (int x = 0; x < 4; ++x) {
        prev.set(x, 0, before[x]);
        check.set(x, 0, passes[x]);
    }
    const OutlierRecord next = update_outlier_record(prev, check);
    for (int x = 0; x < 4; ++x) o.require(next.at(x, 0) == expect[x], "outlier record truth table row " + std::to_string(x));

    for (int w : {1, 2, 4}) {
        for (int i = 0; i < search_scale_count(w); ++i) {
            std::set<int> got, want;
            for (int k = -2000; k <= 2000; ++k) got.insert(search_displacement(k / 2000.0, 0.0, w, i).dx);
            const double reach = static_cast<double>(w) / (1 << i);
            for (int v = static_cast<int>(std::floor(-reach)); v <= static_cast<int>(std::floor(reach)); ++v) want.insert(v);
            o.require(got == want, "candidate set mismatch at W=" + std::to_string(w));
        }
    }
    o.detail = o.pass ? "gradients, Sobel ramp, patch cost, propagation round trip, record table, search sets" : o.detail;
    return o;
}

// ---- 7: format fidelity ----
std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

template <class E>
bool throws(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const E&) {
        return true;
    } catch (...) {
        return false;
    }
    return false;
}

Outcome format_fidelity() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / ("pgm-acceptance-" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_real_distribution<float> val(-1e3f, 1e3f);
    int identical = 0;
    for (int i = 0; i < 100; ++i) {
        FlowField f(dim(rng), dim(rng));
        for (FlowVector& v : f.data()) v = {val(rng), val(rng)};
        write_flo(f, dir / "a.flo");
        const FlowField back = read_flo(dir / "a.flo");
        write_flo(back, dir / "b.flo");
        identical += back == f && file_bytes(dir / "a.flo") == file_bytes(dir / "b.flo");
    }
    o.require(identical == 100, "flo round trip differed");

    MatchSet m;
    for (int i = 0; i < 500; ++i) m.push_back({dim(rng), dim(rng), dim(rng), dim(rng)});
    export_matches(m, dir / "m.txt");
    o.require(import_matches(dir / "m.txt") == m, "match round trip differed");

    {
        std::ofstream os(dir / "bad.flo", std::ios::binary);
        os << "ABCDxxxxxxxx";
    }
    o.require(throws<FormatError>([&] { read_flo(dir / "bad.flo"); }), "bad .flo tag accepted");
    {
        auto bytes = file_bytes(dir / "a.flo");
        std::ofstream os(dir / "short.flo", std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 4));
    }
    o.require(throws<FormatError>([&] { read_flo(dir / "short.flo"); }), "truncated .flo accepted");
    bool named = false;
    try {
        parse_matches("1 2 4\n");
    } catch (const ParseError& e) {
        named = std::string(e.what()).find("line 1") != std::string::npos;
    } catch (...) {
    }
    o.require(named, "short match line not rejected with its line number");
    o.require(throws<IoError>([&] { read_flo(dir / "missing.flo"); }), "missing file not reported");
    fs::remove_all(dir);
    o.detail = o.pass ? "100 .flo fields bitwise identical, 500 matches round trip, malformed inputs rejected" : o.detail;
    return o;
}

// ---- 8: densifier exactness ----
Outcome densifier_exactness() {
    Outcome o;
    // u = 1 + (2x - y) / 3, v = -2 + (x + y) / 3: integer on the 3-lattice
    const int w = 30, h = 24;  // keeps |flow| small enough for float32 output to resolve 1e-6
    MatchSet m;
    for (int y = 0; y < h; y += 3)
        for (int x = 0; x < w; x += 3) m.push_back({x, y, x + 1 + (2 * x - y) / 3, y - 2 + (x + y) / 3});
    FlowField gt(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            gt.at(x, y) = {static_cast<float>(1.0 + (2.0 * x - y) / 3.0), static_cast<float>(-2.0 + (x + y) / 3.0)};
    const double la_aee = endpoint_metrics(densify(m, w, h, InterpolatorMode::LA), gt).aee;
    o.require(la_aee <= 1e-6, "LA affine AEE above 1e-6");

    MatchSet flat;
    for (const Match& x : m) flat.push_back({x.x1, x.y1, x.x1 - 4, x.y1 + 7});
    const FlowField nw = densify(flat, w, h, InterpolatorMode::NW);
    o.require(std::all_of(nw.data().begin(), nw.data().end(), [](const FlowVector& v) { return v == FlowVector{-4.0f, 7.0f}; }),
              "NW constant not exact");

    o.require(select_interpolator(220, 100, 100) == InterpolatorMode::NW, "220 of 10000 chose LA");
    o.require(select_interpolator(221, 100, 100) == InterpolatorMode::LA, "221 of 10000 chose NW");
    o.detail = strf("LA affine AEE %.2e", la_aee) + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"oracle equivalence", oracle_equivalence},
        {"translation recovery", translation_recovery},
        {"occlusion rejection", occlusion_rejection},
        {"ablation ordering", ablation_ordering},
        {"variant scalability", variant_scalability},
        {"unit-level properties", unit_properties},
        {"format fidelity", format_fidelity},
        {"densifier exactness", densifier_exactness},
    };
    int failed = 0;
    int index = 1;
    for (const Criterion& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index++, c.name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
