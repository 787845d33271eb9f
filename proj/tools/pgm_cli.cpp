#include "pgm_cli.hpp"

#include "pgm/errors.hpp"
#include "pgm/eval.hpp"
#include "pgm/image_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace pgm::cli {

namespace {

std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

// Raw flag values; optional ones only override the variant defaults when given.
struct Flags {
    std::string variant = "C";
    std::string ablation = "full";
    std::optional<std::uint64_t> seed;
    std::optional<double> eps, factor;
    std::optional<int> min_region, levels, radius_fwd, radius_bwd, iters_full, iters_other;
    int spacing = 3;
    std::string interp = "auto";
    double threshold = kDefaultDensityThreshold;
};

void add_pipeline_flags(CLI::App* app, Flags& f) {
    app->add_option("--variant", f.variant, "Gradient variant: C, G, CD or GD")->capture_default_str();
    app->add_option("--ablation", f.ablation, "full, no_refinement, propagate_all or no_record")->capture_default_str();
    app->add_option("--seed", f.seed, "Random seed (falls back to PGM_SEED, then 0)");
    app->add_option("--eps", f.eps, "Forward-backward consistency threshold in pixels");
    app->add_option("--min-region", f.min_region, "Smallest surviving region area");
    app->add_option("--levels", f.levels, "Pyramid levels L");
    app->add_option("--factor", f.factor, "Downsample factor s");
    app->add_option("--radius-fwd", f.radius_fwd, "Forward patch radius");
    app->add_option("--radius-bwd", f.radius_bwd, "Backward patch radius");
    app->add_option("--iters-full", f.iters_full, "Sweeps at full resolution");
    app->add_option("--iters-other", f.iters_other, "Sweeps at coarser levels");
}

void add_interp_flags(CLI::App* app, Flags& f) {
    app->add_option("--spacing", f.spacing, "Grid spacing of exported matches")->capture_default_str();
    app->add_option("--interp", f.interp, "Interpolator: auto, nw or la")
        ->check(CLI::IsMember({"auto", "nw", "la"}))
        ->capture_default_str();
    app->add_option("--threshold", f.threshold, "Match density above which LA is used")->capture_default_str();
}

std::uint64_t resolve_seed(const Flags& f) {
    if (f.seed) return *f.seed;
    const char* env = std::getenv("PGM_SEED");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw InvalidParameter(std::string("PGM_SEED is not an unsigned integer: ") + env);
    return v;
}

RunConfig build_config(const Flags& f, GradientVariant variant) {
    RunConfig cfg;
    PipelineConfig& p = cfg.pipeline;
    p = PipelineConfig::defaults(variant);
    p.ablation = parse_ablation(f.ablation);
    if (f.levels) set_levels(p, *f.levels);
    if (f.eps) p.eps_check = *f.eps;
    if (f.factor) p.factor = *f.factor;
    if (f.min_region) p.min_region = *f.min_region;
    if (f.radius_fwd) p.radius_fwd = *f.radius_fwd;
    if (f.radius_bwd) p.radius_bwd = *f.radius_bwd;
    if (f.iters_full) p.iters_full = *f.iters_full;
    if (f.iters_other) p.iters_other = *f.iters_other;
    p.seed = resolve_seed(f);
    validate(p);
    if (f.spacing < 1) throw InvalidParameter("--spacing must be >= 1");
    if (!(f.threshold >= 0.0)) throw InvalidParameter("--threshold must be >= 0");
    cfg.spacing = f.spacing;
    cfg.threshold = f.threshold;
    cfg.interp = f.interp == "nw" ? InterpChoice::NW : f.interp == "la" ? InterpChoice::LA : InterpChoice::Auto;
    return cfg;
}

RunConfig build_config(const Flags& f) { return build_config(f, parse_variant(f.variant)); }

std::pair<RasterImage, RasterImage> read_pair(const fs::path& a, const fs::path& b) {
    RasterImage img1 = read_image(a);
    RasterImage img2 = read_image(b);
    if (img1.width() != img2.width() || img1.height() != img2.height()) {
        throw InvalidInput(strf("image sizes differ: %dx%d vs %dx%d", img1.width(), img1.height(), img2.width(),
                                img2.height()));
    }
    return {std::move(img1), std::move(img2)};
}

struct MatchRun {
    PipelineResult result;
    MatchSet matches;
    double seconds = 0.0;
};

MatchRun run_matching(const RasterImage& img1, const RasterImage& img2, const RunConfig& cfg) {
    MatchRun run;
    const auto t0 = std::chrono::steady_clock::now();
    run.result = pyramidal_matching(img1, img2, cfg.pipeline);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.matches = sparsify_to_grid(run.result.field, cfg.spacing);
    return run;
}

double inlier_ratio(const CorrespondenceField& f) {
    return static_cast<double>(f.initialized_count()) / (static_cast<double>(f.width()) * f.height());
}

int cmd_match(const fs::path& in1, const fs::path& in2, const fs::path& out_path, const RunConfig& cfg,
              std::ostream& out) {
    const auto [img1, img2] = read_pair(in1, in2);
    const MatchRun run = run_matching(img1, img2, cfg);
    export_matches(run.matches, out_path);
    out << strf("%zu matches, inlier ratio %.2f%%\n", run.matches.size(), 100.0 * inlier_ratio(run.result.field));
    return kOk;
}

int cmd_flow(const fs::path& in1, const fs::path& in2, const fs::path& out_path, const fs::path& matches_path,
             const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto [img1, img2] = read_pair(in1, in2);
    const MatchRun run = run_matching(img1, img2, cfg);
    if (!matches_path.empty()) export_matches(run.matches, matches_path);
    if (run.matches.empty()) {
        err << "error: no matches survived filtering; nothing to interpolate\n";
        return kData;
    }
    const InterpolatorMode mode = choose_interpolator(cfg, run.matches.size(), img1.width(), img1.height());
    write_flo(densify(run.matches, img1.width(), img1.height(), mode), out_path);
    out << strf("%zu matches, %s interpolation\n", run.matches.size(), std::string(to_string(mode)).c_str());
    return kOk;
}

ValidityMask read_mask(const fs::path& path, int width, int height) {
    const RasterImage m = read_image(path);
    if (m.width() != width || m.height() != height) throw InvalidInput("mask size differs from the flow");
    ValidityMask mask(width, height, false);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) mask.set(x, y, m.at(x, y, 0) > 0.0f);
    return mask;
}

int cmd_eval(const fs::path& flo, const fs::path& gt_path, const fs::path& mask_path, std::ostream& out,
             std::ostream& err) {
    const FlowField flow = read_flo(flo);
    const FlowField gt = read_flo(gt_path);
    std::optional<ValidityMask> mask;
    if (!mask_path.empty()) mask = read_mask(mask_path, gt.width(), gt.height());
    const Metrics m = endpoint_metrics(flow, gt, mask ? &*mask : nullptr);
    if (m.valid_count == 0) {
        err << "error: mask leaves no valid pixels\n";
        return kData;
    }
    out << strf("AEE %.3f, bad(3px) %.2f%%\n", m.aee, 100.0 * m.bad_ratio);
    return kOk;
}

int cmd_viz(const fs::path& flo, const fs::path& out_path, std::optional<double> max_mag, std::ostream& out) {
    if (max_mag && !(*max_mag > 0.0)) throw InvalidParameter("--max-magnitude must be > 0");
    const FlowField flow = read_flo(flo);
    write_image(flow_to_color(flow, max_mag), out_path);
    out << strf("wrote %dx%d visualization\n", flow.width(), flow.height());
    return kOk;
}

// ---- bench ----

struct BenchCase {
    std::string name;
    RasterImage img1, img2;
    FlowField gt;
    std::optional<ValidityMask> mask;
    std::optional<SyntheticPair> synthetic;  // enables the wrong-inlier column
};

struct BenchRow {
    std::string case_name, variant, ablation;
    double aee = 0.0, bad3 = 0.0, seconds = 0.0;
    std::size_t match_count = 0;
    std::optional<std::size_t> wrong_inliers;
};

fs::path find_with_stem(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".png", ".ppm", ".pgm"}) {
        const fs::path p = dir / (stem + ext);
        if (fs::exists(p)) return p;
    }
    throw IoError("missing " + (dir / (stem + ".png")).string());
}

std::vector<fs::path> suite_dirs(const fs::path& root) {
    if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

BenchCase load_dir_case(const fs::path& dir) {
    BenchCase c;
    c.name = dir.filename().string();
    std::tie(c.img1, c.img2) = read_pair(find_with_stem(dir, "img1"), find_with_stem(dir, "img2"));
    c.gt = read_flo(dir / "gt.flo");
    if (c.gt.width() != c.img1.width() || c.gt.height() != c.img1.height()) {
        throw InvalidInput("ground truth size differs from the images");
    }
    if (fs::exists(dir / "mask.png")) c.mask = read_mask(dir / "mask.png", c.gt.width(), c.gt.height());
    return c;
}

BenchCase load_synthetic_case(SyntheticSuite suite, int index, std::uint64_t seed) {
    SyntheticCase s = make_synthetic_case(suite, index, seed);
    BenchCase c;
    c.name = s.name;
    c.img1 = s.pair.img1;
    c.img2 = s.pair.img2;
    c.gt = s.pair.gt;
    c.mask = s.pair.mask;
    c.synthetic = std::move(s.pair);
    return c;
}

BenchRow bench_one(const BenchCase& c, const RunConfig& cfg) {
    BenchRow row;
    row.case_name = c.name;
    row.variant = std::string(to_string(cfg.pipeline.variant));
    row.ablation = std::string(to_string(cfg.pipeline.ablation));
    const MatchRun run = run_matching(c.img1, c.img2, cfg);
    row.seconds = run.seconds;
    row.match_count = run.matches.size();
    if (c.synthetic) row.wrong_inliers = count_wrong_inliers(run.result.field, *c.synthetic);
    if (run.matches.empty()) {
        row.aee = row.bad3 = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    const InterpolatorMode mode = choose_interpolator(cfg, run.matches.size(), c.img1.width(), c.img1.height());
    const FlowField flow = densify(run.matches, c.img1.width(), c.img1.height(), mode);
    const Metrics m = endpoint_metrics(flow, c.gt, c.mask ? &*c.mask : nullptr);
    row.aee = m.aee;
    row.bad3 = m.bad_ratio;
    return row;
}

struct BenchOptions {
    std::string dir;
    std::string synthetic;
    int cases = 10;
    std::vector<std::string> variants;
    bool all_ablations = false;
    std::string csv;
};

void write_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
    os << "case,variant,ablation,aee,bad3,match_count,seconds\n";
    for (const BenchRow& r : rows) {
        os << strf("%s,%s,%s,%.6f,%.6f,%zu,%.6f\n", r.case_name.c_str(), r.variant.c_str(), r.ablation.c_str(), r.aee,
                   r.bad3, r.match_count, r.seconds);
    }
}

void write_table(std::ostream& os, const std::vector<BenchRow>& rows) {
    os << strf("%-18s %-3s %-14s %8s %8s %8s %7s %8s\n", "case", "var", "ablation", "aee", "bad3", "matches",
               "wrong", "seconds");
    for (const BenchRow& r : rows) {
        const std::string wrong = r.wrong_inliers ? std::to_string(*r.wrong_inliers) : "-";
        os << strf("%-18s %-3s %-14s %8.3f %7.2f%% %8zu %7s %8.3f\n", r.case_name.c_str(), r.variant.c_str(),
                   r.ablation.c_str(), r.aee, 100.0 * r.bad3, r.match_count, wrong.c_str(), r.seconds);
    }
}

int cmd_bench(const BenchOptions& opt, const Flags& flags, std::ostream& out, std::ostream& err) {
    if (opt.dir.empty() == opt.synthetic.empty()) throw InvalidParameter("give either a suite directory or --synthetic");
    if (opt.cases < 1) throw InvalidParameter("--cases must be >= 1");

    std::vector<std::string> variants = opt.variants;
    if (variants.empty()) variants.push_back(flags.variant);
    std::vector<std::string> ablations{flags.ablation};
    if (opt.all_ablations) ablations = {"full", "no_refinement", "propagate_all", "no_record"};

    std::vector<RunConfig> configs;
    for (const std::string& v : variants) {
        for (const std::string& a : ablations) {
            Flags f = flags;
            f.ablation = a;
            configs.push_back(build_config(f, parse_variant(v)));
        }
    }

    // Lazily loaded so a broken case is reported without stopping the suite.
    std::vector<std::string> names;
    std::vector<fs::path> dirs;
    std::optional<SyntheticSuite> suite;
    if (!opt.synthetic.empty()) {
        suite = parse_suite(opt.synthetic);
        for (int i = 0; i < opt.cases; ++i) names.push_back(strf("%s-%02d", std::string(to_string(*suite)).c_str(), i));
    } else {
        dirs = suite_dirs(opt.dir);
        for (const fs::path& d : dirs) names.push_back(d.filename().string());
    }
    if (names.empty()) {
        err << "error: no cases found in " << opt.dir << "\n";
        return kData;
    }

    const std::uint64_t seed = configs.front().pipeline.seed;
    std::vector<BenchRow> rows;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        try {
            const BenchCase c = suite ? load_synthetic_case(*suite, static_cast<int>(i), seed) : load_dir_case(dirs[i]);
            for (const RunConfig& cfg : configs) rows.push_back(bench_one(c, cfg));
        } catch (const std::exception& e) {
            err << "case " << names[i] << ": " << e.what() << "\n";
            ++failures;
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) { return a.case_name < b.case_name; });

    write_table(out, rows);
    if (!opt.csv.empty()) {
        if (opt.csv == "-") {
            write_csv(out, rows);
        } else {
            std::ofstream os(opt.csv);
            if (!os) throw IoError("cannot open " + opt.csv + " for writing");
            write_csv(os, rows);
            if (!os) throw IoError("failed writing " + opt.csv);
        }
    }
    if (failures > 0) {
        err << failures << " of " << names.size() << " cases failed\n";
        return kData;
    }
    return kOk;
}

}  // namespace

InterpolatorMode choose_interpolator(const RunConfig& cfg, std::size_t matches, int width, int height) {
    switch (cfg.interp) {
        case InterpChoice::NW: return InterpolatorMode::NW;
        case InterpChoice::LA: return InterpolatorMode::LA;
        case InterpChoice::Auto: break;
    }
    return select_interpolator(matches, width, height, cfg.threshold);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pyramidal gradient matching for optical flow"};
    app.name("pgm");
    app.require_subcommand(1);
    Flags flags;

    std::string in1, in2, output, matches_out, mask;
    CLI::App* match = app.add_subcommand("match", "Match two images and export grid matches");
    match->add_option("img1", in1, "First image")->required();
    match->add_option("img2", in2, "Second image")->required();
    match->add_option("-o,--output", output, "Match file (x1 y1 x2 y2 per line)")->required();
    add_pipeline_flags(match, flags);
    add_interp_flags(match, flags);

    CLI::App* flow = app.add_subcommand("flow", "Match and interpolate a dense .flo field");
    flow->add_option("img1", in1, "First image")->required();
    flow->add_option("img2", in2, "Second image")->required();
    flow->add_option("-o,--output", output, "Output .flo")->required();
    flow->add_option("--matches", matches_out, "Also write the sparse matches here");
    add_pipeline_flags(flow, flags);
    add_interp_flags(flow, flags);

    std::string flo, gt;
    CLI::App* eval = app.add_subcommand("eval", "Endpoint error of a .flo against ground truth");
    eval->add_option("flow", flo, "Estimated .flo")->required();
    eval->add_option("gt", gt, "Ground-truth .flo")->required();
    eval->add_option("--mask", mask, "Image whose nonzero pixels are evaluated");

    std::optional<double> max_mag;
    CLI::App* viz = app.add_subcommand("viz", "Render a .flo with the colour wheel");
    viz->add_option("flow", flo, "Input .flo")->required();
    viz->add_option("-o,--output", output, "Output image (.png, .ppm)")->required();
    viz->add_option("--max-magnitude", max_mag, "Magnitude mapped to full saturation (default: 99th percentile)");

    BenchOptions bopt;
    CLI::App* bench = app.add_subcommand("bench", "Run variants and ablations over a suite");
    bench->add_option("suite_dir", bopt.dir, "Directory of cases (img1.*, img2.*, gt.flo, optional mask.png)");
    bench->add_option("--synthetic", bopt.synthetic, "Generated suite: translation, occlusion or affine");
    bench->add_option("--cases", bopt.cases, "Number of generated cases")->capture_default_str();
    bench->add_option("--variants", bopt.variants, "Comma-separated variants, e.g. C,G,CD,GD")->delimiter(',');
    bench->add_flag("--ablations", bopt.all_ablations, "Run all four ablation modes");
    bench->add_option("--csv", bopt.csv, "CSV output path ('-' for stdout)");
    add_pipeline_flags(bench, flags);
    add_interp_flags(bench, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        if (match->parsed()) return cmd_match(in1, in2, output, build_config(flags), out);
        if (flow->parsed()) return cmd_flow(in1, in2, output, matches_out, build_config(flags), out, err);
        if (eval->parsed()) return cmd_eval(flo, gt, mask, out, err);
        if (viz->parsed()) return cmd_viz(flo, output, max_mag, out);
        if (bench->parsed()) return cmd_bench(bopt, flags, out, err);
    } catch (const InvalidParameter& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

}  // namespace pgm::cli
