#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "resurf/field_grid.hpp"

namespace resurf {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<uint32_t, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    double area() const;
    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    double signed_volume() const;
};

/// Triangle list for each of the 256 corner-sign configurations, as cube-edge indices.
/// Corner k sits at (k&1, k>>1&1, k>>2&1); a corner bit is set when its value is below the iso level.
struct MarchingCubesTable {
    std::array<std::array<int8_t, 16>, 256> triangles;  // -1 terminated
    std::array<std::array<int, 2>, 12> edge_corners;
};
const MarchingCubesTable& marching_cubes_table();

/// Lattice isosurface extraction with linear edge interpolation. Cells touching a vertex with mask == 0
/// are skipped. Throws EmptySurface if no cell straddles the iso level.
TriangleMesh marching_cubes(const VoxelGrid& field, double iso = 0.0, std::span<const uint8_t> mask = {});

struct MeshTopology {
    std::size_t boundary_edges = 0;
    std::size_t nonmanifold_edges = 0;
    std::size_t components = 0;
    long euler_characteristic = 0;
};
MeshTopology analyze_topology(const TriangleMesh& mesh);

/// Area-weighted uniform surface samples, deterministic given seed.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, uint64_t seed);

/// Mean distance from each point in `from` to its nearest neighbor in `to`.
double mean_nearest_distance(std::span<const Vec3> from, std::span<const Vec3> to);

/// Symmetric Chamfer distance: average of the two directed mean nearest-neighbor distances between
/// n_samples area-weighted samples drawn on each mesh.
double chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_samples, uint64_t seed);

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_ply(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace resurf
