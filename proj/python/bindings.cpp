#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <sstream>

#include "resurf/pipeline.hpp"

namespace py = pybind11;
using namespace resurf;

namespace {

VoxelGrid grid_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> values,
                          std::array<double, 3> origin, double spacing) {
    if (values.ndim() != 3) throw ConfigError("values must be a 3-D array indexed [z, y, x]");
    const GridIndex res{static_cast<int>(values.shape(2)), static_cast<int>(values.shape(1)), static_cast<int>(values.shape(0))};
    std::vector<float> v(values.data(), values.data() + values.size());
    return VoxelGrid(res, {origin[0], origin[1], origin[2]}, spacing, std::move(v));
}

py::array_t<float> grid_values(const VoxelGrid& g) {
    const auto& r = g.resolution();
    py::array_t<float> out({r[2], r[1], r[0]});
    std::copy(g.values().begin(), g.values().end(), out.mutable_data());
    return out;
}

TriangleMesh mesh_from_arrays(py::array_t<double, py::array::c_style | py::array::forcecast> v,
                              py::array_t<uint32_t, py::array::c_style | py::array::forcecast> f) {
    if (v.ndim() != 2 || v.shape(1) != 3 || f.ndim() != 2 || f.shape(1) != 3)
        throw ConfigError("vertices and faces must be (n, 3) arrays");
    TriangleMesh m;
    for (py::ssize_t i = 0; i < v.shape(0); ++i) m.vertices.push_back({v.at(i, 0), v.at(i, 1), v.at(i, 2)});
    for (py::ssize_t i = 0; i < f.shape(0); ++i) {
        const std::array<uint32_t, 3> t{f.at(i, 0), f.at(i, 1), f.at(i, 2)};
        for (uint32_t idx : t)
            if (idx >= m.vertices.size()) throw ConfigError("face index out of range");
        m.triangles.push_back(t);
    }
    return m;
}

py::tuple mesh_to_arrays(const TriangleMesh& m) {
    py::array_t<double> v({static_cast<py::ssize_t>(m.vertices.size()), py::ssize_t{3}});
    py::array_t<uint32_t> f({static_cast<py::ssize_t>(m.triangles.size()), py::ssize_t{3}});
    auto vv = v.mutable_unchecked<2>();
    auto ff = f.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        for (int a = 0; a < 3; ++a) vv(static_cast<py::ssize_t>(i), a) = m.vertices[i][a];
    for (std::size_t i = 0; i < m.triangles.size(); ++i)
        for (int a = 0; a < 3; ++a) ff(static_cast<py::ssize_t>(i), a) = m.triangles[i][static_cast<size_t>(a)];
    return py::make_tuple(v, f);
}

Vec3 vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

Area area_from_int(int a) {
    if (a < 1 || a > 3) throw ConfigError("area must be 1, 2 or 3");
    return static_cast<Area>(a);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Residual SDF surface reconstruction core";

    static py::exception<Error> base_error(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
    py::register_exception<EmptySurface>(m, "EmptySurface", base_error.ptr());
    py::register_exception<DivergenceError>(m, "DivergenceError", base_error.ptr());
    py::register_exception<ContractViolation>(m, "ContractViolation", base_error.ptr());
    py::register_exception<FormatError>(m, "FormatError", base_error.ptr());

    py::class_<RunConfig>(m, "Config")
        .def(py::init<>())
        .def_static("from_json", &parse_config)
        .def_static("load", [](const std::string& path) { return load_config(path); })
        .def("to_json", &serialize_config)
        .def("save", [](const RunConfig& c, const std::string& path) { save_config(path, c); })
        .def("validate", &RunConfig::validate)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def_property(
            "iterations", [](const RunConfig& c) { return c.train.iterations; },
            [](RunConfig& c, int n) { c.train.iterations = n; })
        .def_property(
            "fusion_resolution", [](const RunConfig& c) { return c.fusion.resolution; },
            [](RunConfig& c, int n) { c.fusion.resolution = n; })
        .def_property(
            "fusion_mode", [](const RunConfig& c) { return std::string(to_string(c.fusion.mode)); },
            [](RunConfig& c, const std::string& s) { c.fusion.mode = fusion_mode_from_string(s); })
        .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; });

    py::class_<VoxelGrid>(m, "VoxelGrid")
        .def(py::init(&grid_from_array), py::arg("values"), py::arg("origin"), py::arg("spacing"))
        .def_property_readonly("resolution", &VoxelGrid::resolution)
        .def_property_readonly("origin", [](const VoxelGrid& g) { return std::array<double, 3>{g.origin().x, g.origin().y, g.origin().z}; })
        .def_property_readonly("spacing", &VoxelGrid::spacing)
        .def_property_readonly("values", &grid_values)
        .def("write", [](const VoxelGrid& g, const std::string& path) { write_sdfg(path, g); })
        .def_static("read", [](const std::string& path) { return read_sdfg(path); });

    m.def("interpolate", [](const VoxelGrid& g, std::array<double, 3> p) { return interpolate(g, vec(p)); });
    m.def("grid_gradient", [](const VoxelGrid& g, std::array<double, 3> p) {
        const Vec3 v = grid_gradient(g, vec(p));
        return std::array<double, 3>{v.x, v.y, v.z};
    });
    m.def("gaussian_smooth", &gaussian_smooth, py::arg("grid"), py::arg("sigma_voxels"));
    m.def(
        "fuse_values",
        [](const std::vector<double>& values, const std::string& mode) {
            std::vector<PriorSample> c;
            for (double v : values) c.push_back({v, true, 0.0});
            return fuse_candidates(c, fusion_mode_from_string(mode));
        },
        py::arg("values"), py::arg("mode") = "min_abs");
    m.def(
        "reserve_probability",
        [](int area, std::array<std::size_t, 3> counts, std::array<double, 3> betas) {
            SamplingConfig cfg;
            cfg.betas = betas;
            cfg.validate();
            return reserve_probability(area_from_int(area), counts, cfg);
        },
        py::arg("area"), py::arg("counts"), py::arg("betas") = std::array<double, 3>{4.0, 1.0, 0.5});
    m.def("alpha_from_sdf", &alpha_from_sdf, py::arg("d0"), py::arg("d1"), py::arg("s"));
    m.def(
        "composite",
        [](const std::vector<double>& alpha, const std::vector<std::array<double, 3>>& colors, std::array<double, 3> bg) {
            if (alpha.size() != colors.size()) throw ConfigError("alpha and colors differ in length");
            const RayRender r = composite(alpha, colors, {}, bg);
            return py::make_tuple(r.color, r.t_final);
        },
        py::arg("alpha"), py::arg("colors"), py::arg("background") = std::array<double, 3>{1.0, 1.0, 1.0});
    m.def(
        "marching_cubes", [](const VoxelGrid& g, double iso) { return mesh_to_arrays(marching_cubes(g, iso)); },
        py::arg("grid"), py::arg("iso") = 0.0);
    m.def(
        "sample_surface",
        [](py::array_t<double> v, py::array_t<uint32_t> f, std::size_t n, uint64_t seed) {
            const auto pts = sample_surface(mesh_from_arrays(v, f), n, seed);
            py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
            auto o = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < pts.size(); ++i)
                for (int a = 0; a < 3; ++a) o(static_cast<py::ssize_t>(i), a) = pts[i][a];
            return out;
        },
        py::arg("vertices"), py::arg("faces"), py::arg("n"), py::arg("seed") = 0);
    m.def(
        "chamfer",
        [](py::array_t<double> va, py::array_t<uint32_t> fa, py::array_t<double> vb, py::array_t<uint32_t> fb,
           std::size_t n, uint64_t seed) { return chamfer(mesh_from_arrays(va, fa), mesh_from_arrays(vb, fb), n, seed); },
        py::arg("vertices_a"), py::arg("faces_a"), py::arg("vertices_b"), py::arg("faces_b"), py::arg("n_samples") = 20000,
        py::arg("seed") = 0);
    m.def("build_basis", [](const RunConfig& cfg) {
        const BasisStage st = build_basis(cfg);
        py::dict d;
        d["basis"] = *st.basis;
        const py::tuple mesh = mesh_to_arrays(st.mesh);
        d["vertices"] = mesh[0];
        d["faces"] = mesh[1];
        d["boundary_edges"] = st.topology.boundary_edges;
        d["components"] = st.topology.components;
        d["area_counts"] = st.areas.counts();
        d["uncovered"] = st.fusion.uncovered_count;
        d["warnings"] = st.fusion.warnings;
        return d;
    });
    m.def(
        "run_command",
        [](const std::string& name, const RunConfig& cfg, int resolution) {
            std::ostringstream log;
            const int code = guarded(
                [&]() -> int {
                    if (name == "gen-scene") cmd_gen_scene(cfg, log);
                    else if (name == "fuse") cmd_fuse(cfg, log);
                    else if (name == "train") return cmd_train(cfg, log);
                    else if (name == "extract") cmd_extract(cfg, {}, resolution, log);
                    else if (name == "eval") cmd_eval(cfg, {}, log);
                    else if (name == "run") return cmd_run(cfg, log);
                    else throw ConfigError("unknown command '" + name + "'");
                    return kExitOk;
                },
                log);
            return py::make_tuple(code, log.str());
        },
        py::arg("name"), py::arg("config"), py::arg("resolution") = 0,
        "Runs one pipeline command; returns (exit_code, log text).");
}
