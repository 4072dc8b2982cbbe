#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "resurf/core.hpp"

namespace resurf {

using GridIndex = std::array<int, 3>;

/// Dense scalar field on a regular lattice. Values are indexed x-fastest.
/// Immutable once constructed; copies are cheap to reason about and safe to share for reads.
class VoxelGrid {
public:
    VoxelGrid(GridIndex resolution, Vec3 origin, double spacing, std::vector<float> values);
    /// Constant-filled grid.
    VoxelGrid(GridIndex resolution, Vec3 origin, double spacing, float fill = 0.0f);

    /// Grid whose vertices span `box` with `res` vertices along the longest axis.
    static VoxelGrid covering(const Box& box, int res, float fill = 0.0f);

    const GridIndex& resolution() const { return resolution_; }
    const Vec3& origin() const { return origin_; }
    double spacing() const { return spacing_; }
    std::span<const float> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(resolution_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(resolution_[1]) * static_cast<std::size_t>(k));
    }
    GridIndex unravel(std::size_t flat) const;
    float at(int i, int j, int k) const { return values_[index(i, j, k)]; }
    Vec3 vertex_position(int i, int j, int k) const {
        return origin_ + Vec3{double(i), double(j), double(k)} * spacing_;
    }
    Box bounds() const;
    /// Number of cells per axis is resolution - 1.
    std::size_t cell_count() const {
        return static_cast<std::size_t>(resolution_[0] - 1) * static_cast<std::size_t>(resolution_[1] - 1) *
               static_cast<std::size_t>(resolution_[2] - 1);
    }

    /// Same lattice, new values.
    VoxelGrid with_values(std::vector<float> values) const {
        return VoxelGrid(resolution_, origin_, spacing_, std::move(values));
    }

private:
    GridIndex resolution_;
    Vec3 origin_;
    double spacing_;
    std::vector<float> values_;
};

/// Cell containing p: floor((p - origin)/spacing) clamped to [0, res-2]; face points go to the lower cell
/// unless that would leave the lattice. `frac` receives the local coordinates in [0,1]^3.
GridIndex locate_cell(const VoxelGrid& grid, const Vec3& p, Vec3& frac);

/// Trilinear interpolation. Points outside the lattice box are clamped to it and the Euclidean distance
/// to the box is added, so the field stays SDF-like beyond the boundary.
double interpolate(const VoxelGrid& grid, const Vec3& p);

/// Analytic gradient of the trilinear interpolant (world units^-1).
Vec3 grid_gradient(const VoxelGrid& grid, const Vec3& p);

/// Separable Gaussian filter, radius ceil(3 sigma), edge replication, normalized kernel.
/// sigma_voxels == 0 returns an identical copy.
VoxelGrid gaussian_smooth(const VoxelGrid& grid, double sigma_voxels);

/// Normalized 1-D Gaussian kernel of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma_voxels);

/// Rigid world->local transform followed by a similarity scale to normalized coordinates.
struct LocalFieldTransform {
    Mat3 rotation = Mat3::identity();
    Vec3 translation{};
    double scale = 1.0;

    /// Throws ConfigError if the rotation is not proper orthonormal or scale <= 0.
    void validate() const;
};

/// scale * (rotation * p + translation)
Vec3 to_local(const Vec3& p, const LocalFieldTransform& t);
/// Inverse of to_local.
Vec3 from_local(const Vec3& q, const LocalFieldTransform& t);

// SDFG binary format: "SDFG", u32 version, 3 x u32 resolution, 3 x f64 origin, f64 spacing,
// then little-endian f32 values in x-fastest order.
inline constexpr uint32_t kSdfgVersion = 1;
std::vector<uint8_t> encode_sdfg(const VoxelGrid& grid);
VoxelGrid decode_sdfg(std::span<const uint8_t> bytes);
void write_sdfg(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid read_sdfg(const std::filesystem::path& path);

}  // namespace resurf
