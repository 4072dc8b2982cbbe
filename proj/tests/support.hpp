#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "resurf/config.hpp"
#include "resurf/field_grid.hpp"
#include "resurf/rng.hpp"

namespace resurf::test {

inline VoxelGrid random_grid(GridIndex res, Vec3 origin, double spacing, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<float> v(static_cast<std::size_t>(res[0]) * static_cast<std::size_t>(res[1]) * static_cast<std::size_t>(res[2]));
    for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
    return VoxelGrid(res, origin, spacing, std::move(v));
}

/// Lattice covering `box` with values f(vertex position).
inline VoxelGrid grid_from(const Box& box, int res, const std::function<double(const Vec3&)>& f) {
    VoxelGrid g = VoxelGrid::covering(box, res);
    std::vector<float> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const GridIndex c = g.unravel(i);
        v[i] = static_cast<float>(f(g.vertex_position(c[0], c[1], c[2])));
    }
    return g.with_values(std::move(v));
}

inline Mat3 random_rotation(Rng& rng) {
    const Vec3 axis = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
    return Mat3::rotation(axis, rng.uniform(-3.1, 3.1));
}

/// Hash field small enough for exhaustive finite differences.
inline FieldConfig tiny_field_config() {
    FieldConfig f;
    f.sdf_encoding = {.levels = 2, .features_per_level = 2, .table_size_log2 = 6, .base_resolution = 4, .growth_factor = 2.0};
    f.color_encoding = f.sdf_encoding;
    f.sdf_decoder = {.hidden_layers = 1, .width = 8};
    f.color_decoder = {.hidden_layers = 1, .width = 8};
    return f;
}

/// A run that finishes every stage in a few seconds.
inline RunConfig small_run_config(const std::filesystem::path& out, ShapeKind shape = ShapeKind::sphere) {
    RunConfig c;
    c.scene.shape = shape;
    c.scene.num_cameras = 6;
    c.scene.image_size = 32;
    c.scene.focal = 50.0;
    c.priors.corruption.resolution = 32;
    c.fusion.resolution = 32;
    c.sampling.coarse_samples_per_ray = 48;
    c.sampling.dilation_voxels = 2;
    c.field.sdf_encoding = {.levels = 4, .features_per_level = 2, .table_size_log2 = 10, .base_resolution = 8, .growth_factor = 1.5};
    c.field.color_encoding = c.field.sdf_encoding;
    c.field.sdf_decoder = {.hidden_layers = 1, .width = 16};
    c.field.color_decoder = {.hidden_layers = 1, .width = 16};
    c.train.iterations = 5;
    c.train.rays_per_batch = 32;
    c.train.eikonal_points = 32;
    c.train.eval_samples = 2000;
    c.gt_mesh_resolution = 32;
    c.output_dir = out.string();
    return c;
}

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("resurf_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace resurf::test
