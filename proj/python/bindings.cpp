#include "pgm/errors.hpp"
#include "pgm/eval.hpp"
#include "pgm/interp.hpp"
#include "pgm/pyramid_flow.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace pgm;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

RasterImage to_raster(const FloatArray& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw InvalidInput("image must be HxW or HxWxC");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    std::vector<float> data(a.data(), a.data() + a.size());
    return RasterImage(w, h, c, std::move(data));
}

py::array_t<float> from_raster(const RasterImage& img) {
    py::array_t<float> out({img.height(), img.width(), img.channels()});
    std::memcpy(out.mutable_data(), img.data().data(), img.data().size() * sizeof(float));
    return out;
}

FlowField to_flow(const FloatArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 2) throw InvalidInput("flow must be HxWx2");
    FlowField f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(f.data().data(), a.data(), static_cast<std::size_t>(a.size()) * sizeof(float));
    return f;
}

py::array_t<float> from_flow(const FlowField& f) {
    py::array_t<float> out({f.height(), f.width(), 2});
    std::memcpy(out.mutable_data(), f.data().data(), f.data().size() * sizeof(FlowVector));
    return out;
}

py::array_t<bool> from_mask(const ValidityMask& m) {
    py::array_t<bool> out({m.height, m.width});
    bool* p = out.mutable_data();
    for (std::size_t i = 0; i < m.valid.size(); ++i) p[i] = m.valid[i] != 0;
    return out;
}

ValidityMask to_mask(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw InvalidInput("mask must be HxW");
    ValidityMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), false);
    for (py::ssize_t i = 0; i < a.size(); ++i) m.valid[static_cast<std::size_t>(i)] = a.data()[i] ? 1 : 0;
    return m;
}

// (offsets HxWx2 int32, valid HxW bool)
py::tuple from_field(const CorrespondenceField& f) {
    py::array_t<int> off({f.height(), f.width(), 2});
    py::array_t<bool> valid({f.height(), f.width()});
    int* o = off.mutable_data();
    bool* v = valid.mutable_data();
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * f.width() + x;
            o[2 * i] = f.offset(x, y).dx;
            o[2 * i + 1] = f.offset(x, y).dy;
            v[i] = f.initialized(x, y);
        }
    return py::make_tuple(off, valid);
}

py::array_t<int> from_matches(const MatchSet& m) {
    py::array_t<int> out({static_cast<py::ssize_t>(m.size()), py::ssize_t{4}});
    int* p = out.mutable_data();
    for (const Match& x : m) {
        *p++ = x.x1;
        *p++ = x.y1;
        *p++ = x.x2;
        *p++ = x.y2;
    }
    return out;
}

MatchSet to_matches(const IntArray& a) {
    if (a.ndim() != 2 || a.shape(1) != 4) throw InvalidInput("matches must be Nx4");
    MatchSet m(static_cast<std::size_t>(a.shape(0)));
    const int* p = a.data();
    for (Match& x : m) {
        x = {p[0], p[1], p[2], p[3]};
        p += 4;
    }
    return m;
}

InterpolatorMode parse_mode(const std::string& s, std::size_t count, int w, int h) {
    if (s == "nw") return InterpolatorMode::NW;
    if (s == "la") return InterpolatorMode::LA;
    if (s == "auto") return select_interpolator(count, w, h);
    throw InvalidParameter("interp must be auto, nw or la");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pyramidal gradient matching for optical flow";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::enum_<GradientVariant>(m, "Variant")
        .value("C", GradientVariant::C)
        .value("G", GradientVariant::G)
        .value("CD", GradientVariant::CD)
        .value("GD", GradientVariant::GD);

    py::enum_<Ablation>(m, "Ablation")
        .value("FULL", Ablation::Full)
        .value("NO_REFINEMENT", Ablation::NoRefinement)
        .value("PROPAGATE_ALL", Ablation::PropagateAll)
        .value("NO_RECORD", Ablation::NoRecord);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init([](GradientVariant v) { return PipelineConfig::defaults(v); }), py::arg("variant") = GradientVariant::C)
        .def_readwrite("search_bound", &PipelineConfig::search_bound)
        .def_readwrite("sobel_size", &PipelineConfig::sobel_size)
        .def_readonly("levels", &PipelineConfig::levels)
        .def_readwrite("factor", &PipelineConfig::factor)
        .def_readwrite("refinements", &PipelineConfig::refinements)
        .def_readwrite("start_level", &PipelineConfig::start_level)
        .def_readwrite("radius_fwd", &PipelineConfig::radius_fwd)
        .def_readwrite("radius_bwd", &PipelineConfig::radius_bwd)
        .def_readwrite("iters_full", &PipelineConfig::iters_full)
        .def_readwrite("iters_other", &PipelineConfig::iters_other)
        .def_readwrite("eps_check", &PipelineConfig::eps_check)
        .def_readwrite("min_region", &PipelineConfig::min_region)
        .def_readwrite("seg_tol", &PipelineConfig::seg_tol)
        .def_readonly("variant", &PipelineConfig::variant)
        .def_readwrite("ablation", &PipelineConfig::ablation)
        .def_readwrite("seed", &PipelineConfig::seed)
        .def("set_levels", [](PipelineConfig& c, int l) { set_levels(c, l); })
        .def("validate", [](const PipelineConfig& c) { validate(c); });

    m.def(
        "match",
        [](const FloatArray& img1, const FloatArray& img2, const PipelineConfig& cfg) {
            const RasterImage a = to_raster(img1), b = to_raster(img2);
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = pyramidal_matching(a, b, cfg);
            }
            return from_field(r.field);
        },
        py::arg("img1"), py::arg("img2"), py::arg("config") = PipelineConfig::defaults(),
        "Filtered forward field as (offsets HxWx2, valid HxW).");

    m.def(
        "sparse_matches",
        [](const FloatArray& img1, const FloatArray& img2, const PipelineConfig& cfg, int spacing) {
            const RasterImage a = to_raster(img1), b = to_raster(img2);
            MatchSet ms;
            {
                py::gil_scoped_release release;
                ms = sparsify_to_grid(pyramidal_matching(a, b, cfg).field, spacing);
            }
            return from_matches(ms);
        },
        py::arg("img1"), py::arg("img2"), py::arg("config") = PipelineConfig::defaults(), py::arg("spacing") = 3,
        "Grid matches as an Nx4 array of x1, y1, x2, y2.");

    m.def(
        "densify",
        [](const IntArray& matches, int width, int height, const std::string& interp, int k) {
            const MatchSet ms = to_matches(matches);
            const InterpolatorMode mode = parse_mode(interp, ms.size(), width, height);
            FlowField f;
            {
                py::gil_scoped_release release;
                f = densify(ms, width, height, mode, k);
            }
            return from_flow(f);
        },
        py::arg("matches"), py::arg("width"), py::arg("height"), py::arg("interp") = "auto",
        py::arg("k") = kDefaultNeighbours);

    m.def("select_interpolator",
          [](std::size_t count, int w, int h, double threshold) {
              return std::string(to_string(select_interpolator(count, w, h, threshold)));
          },
          py::arg("match_count"), py::arg("width"), py::arg("height"), py::arg("threshold") = kDefaultDensityThreshold);

    m.def(
        "endpoint_metrics",
        [](const FloatArray& flow, const FloatArray& gt, std::optional<py::array_t<bool, py::array::c_style | py::array::forcecast>> mask,
           double tau) {
            std::optional<ValidityMask> vm;
            if (mask) vm = to_mask(*mask);
            const Metrics r = endpoint_metrics(to_flow(flow), to_flow(gt), vm ? &*vm : nullptr, tau);
            return py::make_tuple(r.aee, r.bad_ratio, r.valid_count);
        },
        py::arg("flow"), py::arg("gt"), py::arg("mask") = py::none(), py::arg("tau") = 3.0,
        "(aee, bad_ratio, valid_count); NaN metrics when nothing is valid.");

    m.def("read_flo", [](const std::filesystem::path& p) { return from_flow(read_flo(p)); }, py::arg("path"));
    m.def("write_flo", [](const FloatArray& f, const std::filesystem::path& p) { write_flo(to_flow(f), p); },
          py::arg("flow"), py::arg("path"));

    m.def(
        "flow_to_color",
        [](const FloatArray& f, std::optional<double> max_magnitude) {
            return from_raster(flow_to_color(to_flow(f), max_magnitude));
        },
        py::arg("flow"), py::arg("max_magnitude") = py::none(), "HxWx3 float image in [0, 255].");

    m.def(
        "synthetic_case",
        [](const std::string& suite, int index, std::uint64_t seed) {
            const SyntheticCase c = make_synthetic_case(parse_suite(suite), index, seed);
            py::dict d;
            d["name"] = c.name;
            d["img1"] = from_raster(c.pair.img1);
            d["img2"] = from_raster(c.pair.img2);
            d["gt"] = from_flow(c.pair.gt);
            d["mask"] = from_mask(c.pair.mask);
            d["occluded"] = from_mask(c.pair.occluded);
            return d;
        },
        py::arg("suite"), py::arg("index"), py::arg("seed") = 0);
}
