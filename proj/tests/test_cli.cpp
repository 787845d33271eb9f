#include "pgm/eval.hpp"
#include "pgm/image_io.hpp"
#include "pgm/interp.hpp"
#include "pgm_cli.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

using namespace pgm;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run pgm_run(std::vector<std::string> args) {
    args.insert(args.begin(), "pgm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct Fixture {
    test::TempDir dir{"cli"};
    SyntheticPair pair;

    Fixture() {
        RasterImage base = noise_image(96, 72, 3, 11);
        for (float& v : base.data()) v = std::round(v);  // survives the 8-bit round trip unchanged
        pair = synth_pair(base, Translation{3, 2}, 12);
        write_png(pair.img1, dir / "a.png");
        write_png(pair.img2, dir / "b.png");
        write_flo(pair.gt, dir / "gt.flo");
    }
    std::string p(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 1") {
    CHECK(pgm_run({}).code == cli::kUsage);
    CHECK(pgm_run({"frobnicate"}).code == cli::kUsage);
    CHECK(pgm_run({"match", "a.png"}).code == cli::kUsage);
    CHECK(pgm_run({"--help"}).code == cli::kOk);
    Fixture fx;
    CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m.txt"), "--variant", "X"}).code == cli::kUsage);
    CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m.txt"), "--ablation", "none"}).code == cli::kUsage);
    CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m.txt"), "--levels", "1"}).code == cli::kUsage);
    CHECK(pgm_run({"flow", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("f.flo"), "--interp", "cubic"}).code == cli::kUsage);
}

TEST_CASE("match on an identical pair") {
    Fixture fx;
    const Run r = pgm_run({"match", fx.p("a.png"), fx.p("a.png"), "-o", fx.p("m.txt")});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("matches, inlier ratio") != std::string::npos);
    const MatchSet m = import_matches(fx.dir / "m.txt");
    CHECK(m.size() >= 32 * 24 * 95 / 100);
    CHECK(m.size() <= 32 * 24);
    std::size_t zero = 0;
    for (const Match& x : m) zero += (x.x1 == x.x2 && x.y1 == x.y2);
    CHECK(zero >= m.size() * 99 / 100);
}

TEST_CASE("match is deterministic, honours the seed and leaves inputs alone") {
    Fixture fx;
    const std::string before = slurp(fx.dir / "a.png");
    for (const char* v : {"C", "GD"}) {
        CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m1.txt"), "--variant", v, "--seed", "7"}).code == 0);
        CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m2.txt"), "--variant", v, "--seed", "7"}).code == 0);
        CHECK(slurp(fx.dir / "m1.txt") == slurp(fx.dir / "m2.txt"));
    }
    CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m3.txt"), "--ablation", "no_record"}).code == 0);
    CHECK(slurp(fx.dir / "a.png") == before);

    ::setenv("PGM_SEED", "7", 1);
    CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m4.txt"), "--variant", "GD"}).code == 0);
    CHECK(slurp(fx.dir / "m4.txt") == slurp(fx.dir / "m1.txt"));
    ::setenv("PGM_SEED", "seven", 1);
    CHECK(pgm_run({"match", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("m5.txt")}).code == cli::kUsage);
    ::unsetenv("PGM_SEED");
}

TEST_CASE("flow on a translated pair") {
    Fixture fx;
    const Run r = pgm_run({"flow", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("f.flo"), "--matches", fx.p("m.txt")});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("LA interpolation") != std::string::npos);
    const FlowField f = read_flo(fx.dir / "f.flo");
    CHECK(f.width() == 96);
    CHECK(f.height() == 72);
    CHECK(endpoint_metrics(f, fx.pair.gt, &fx.pair.mask).aee < 0.5);
    CHECK(std::filesystem::exists(fx.dir / "m.txt"));

    const Run nw = pgm_run({"flow", fx.p("a.png"), fx.p("b.png"), "-o", fx.p("g.flo"), "--interp", "nw"});
    CHECK(nw.code == cli::kOk);
    CHECK(nw.out.find("NW interpolation") != std::string::npos);
}

TEST_CASE("flow reports missing inputs and size mismatches") {
    Fixture fx;
    write_png(test::random_image(10, 10, 3, 1), fx.dir / "small.png");
    const Run miss = pgm_run({"flow", fx.p("nope.png"), fx.p("b.png"), "-o", fx.p("f.flo")});
    CHECK(miss.code == cli::kIo);
    CHECK(miss.err.find("nope.png") != std::string::npos);
    CHECK(pgm_run({"flow", fx.p("a.png"), fx.p("small.png"), "-o", fx.p("f.flo")}).code == cli::kData);
    CHECK_FALSE(std::filesystem::exists(fx.dir / "f.flo"));
}

TEST_CASE("eval formatting") {
    Fixture fx;
    CHECK(pgm_run({"eval", fx.p("gt.flo"), fx.p("gt.flo")}).out == "AEE 0.000, bad(3px) 0.00%\n");

    write_flo(FlowField(4, 2, FlowVector{3.0f, 4.0f}), fx.dir / "e.flo");
    write_flo(FlowField(4, 2), fx.dir / "z.flo");
    CHECK(pgm_run({"eval", fx.p("e.flo"), fx.p("z.flo")}).out == "AEE 5.000, bad(3px) 100.00%\n");

    RasterImage mask(4, 2, 1);
    mask.at(0, 0, 0) = 255.0f;
    write_png(mask, fx.dir / "mask.png");
    FlowField half(4, 2);
    half.at(1, 0) = {30.0f, 40.0f};
    write_flo(half, fx.dir / "h.flo");
    CHECK(pgm_run({"eval", fx.p("h.flo"), fx.p("z.flo"), "--mask", fx.p("mask.png")}).out == "AEE 0.000, bad(3px) 0.00%\n");
    CHECK(pgm_run({"eval", fx.p("h.flo"), fx.p("z.flo")}).out == "AEE 6.250, bad(3px) 12.50%\n");
}

TEST_CASE("eval errors") {
    Fixture fx;
    const Run miss = pgm_run({"eval", fx.p("gt.flo"), fx.p("missing.flo")});
    CHECK(miss.code == cli::kIo);
    CHECK(miss.err.find("missing.flo") != std::string::npos);
    write_flo(FlowField(4, 2), fx.dir / "z.flo");
    CHECK(pgm_run({"eval", fx.p("gt.flo"), fx.p("z.flo")}).code == cli::kData);
    write_png(RasterImage(4, 2, 1), fx.dir / "black.png");
    CHECK(pgm_run({"eval", fx.p("z.flo"), fx.p("z.flo"), "--mask", fx.p("black.png")}).code == cli::kData);
}

TEST_CASE("viz writes a colour image") {
    Fixture fx;
    CHECK(pgm_run({"viz", fx.p("gt.flo"), "-o", fx.p("v.png")}).code == cli::kOk);
    const RasterImage v = read_image(fx.dir / "v.png");
    CHECK(v.width() == 96);
    CHECK(v.height() == 72);
    CHECK(v.channels() == 3);
    CHECK(pgm_run({"viz", fx.p("gt.flo"), "-o", fx.p("v.png"), "--max-magnitude", "0"}).code == cli::kUsage);
}

TEST_CASE("bench over a directory continues past broken cases") {
    Fixture fx;
    const auto root = fx.dir / "suite";
    std::filesystem::create_directories(root / "good");
    std::filesystem::create_directories(root / "broken");
    std::filesystem::copy_file(fx.dir / "a.png", root / "good" / "img1.png");
    std::filesystem::copy_file(fx.dir / "b.png", root / "good" / "img2.png");
    std::filesystem::copy_file(fx.dir / "gt.flo", root / "good" / "gt.flo");
    std::filesystem::copy_file(fx.dir / "a.png", root / "broken" / "img1.png");

    const Run r = pgm_run({"bench", root.string(), "--csv", fx.p("out.csv")});
    CHECK(r.code == cli::kData);
    CHECK(r.err.find("case broken") != std::string::npos);
    CHECK(r.out.find("good") != std::string::npos);
    const std::string csv = slurp(fx.dir / "out.csv");
    CHECK(csv.rfind("case,variant,ablation,aee,bad3,match_count,seconds\ngood,C,full,", 0) == 0);

    std::filesystem::create_directories(fx.dir / "empty");
    CHECK(pgm_run({"bench", fx.p("empty")}).code != cli::kOk);
    CHECK(pgm_run({"bench"}).code == cli::kUsage);
}

TEST_CASE("bench over a synthetic suite") {
    const Run r = pgm_run({"bench", "--synthetic", "translation", "--cases", "2", "--variants", "C,GD", "--ablations",
                           "--csv", "-"});
    REQUIRE(r.code == cli::kOk);
    const std::size_t at = r.out.find("case,variant,ablation,aee,bad3,match_count,seconds\n");
    REQUIRE(at != std::string::npos);
    std::istringstream csv(r.out.substr(at));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(csv, line)) lines.push_back(line);
    REQUIRE(lines.size() == 1 + 2 * 2 * 4);
    CHECK(lines[1].rfind("translation-00,C,full,", 0) == 0);
    CHECK(lines[8].rfind("translation-00,GD,no_record,", 0) == 0);
    CHECK(lines.back().rfind("translation-01,GD,no_record,", 0) == 0);
    CHECK(pgm_run({"bench", "--synthetic", "sintel"}).code == cli::kUsage);
}

}
