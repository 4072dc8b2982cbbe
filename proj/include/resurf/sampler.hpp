#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "resurf/field_grid.hpp"

namespace resurf {

/// Sampling priority areas: near-surface shell, surface-occupied voxels, empty space.
enum class Area : uint8_t { near_surface = 1, surface = 2, empty = 3 };

inline int area_slot(Area a) { return static_cast<int>(a) - 1; }

/// Per-voxel (lattice cell) area labels derived from a basis field.
class AreaGrid {
public:
    AreaGrid(const VoxelGrid& lattice, std::vector<Area> labels);

    /// Cells per axis (vertex resolution - 1).
    const GridIndex& cells() const { return cells_; }
    const Vec3& origin() const { return origin_; }
    double spacing() const { return spacing_; }
    Box bounds() const { return bounds_; }
    std::span<const Area> labels() const { return labels_; }
    /// N(A1), N(A2), N(A3).
    const std::array<std::size_t, 3>& counts() const { return counts_; }
    std::size_t count(Area a) const { return counts_[static_cast<size_t>(area_slot(a))]; }

    std::size_t cell_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(cells_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(cells_[1]) * static_cast<std::size_t>(k));
    }
    Area label(int i, int j, int k) const { return labels_[cell_index(i, j, k)]; }
    /// Label of the cell containing p (lower-cell convention, clamped to the lattice).
    Area label_at(const Vec3& p) const;
    Vec3 cell_center(std::size_t flat) const;

private:
    GridIndex cells_;
    Vec3 origin_;
    double spacing_;
    Box bounds_;
    std::vector<Area> labels_;
    std::array<std::size_t, 3> counts_{};
};

/// A2 = cells whose corner values change sign; A1 = cells within `dilation_voxels` (Chebyshev) of A2,
/// excluding A2; A3 = the rest. Throws EmptySurface when the basis has no sign change.
AreaGrid classify_areas(const VoxelGrid& basis, int dilation_voxels);

enum class SamplingStrategy { prior_guided, uniform };
const char* to_string(SamplingStrategy s);
SamplingStrategy sampling_strategy_from_string(const std::string& s);

struct SamplingConfig {
    std::array<double, 3> betas{4.0, 1.0, 0.5};
    int coarse_samples_per_ray = 256;
    int dilation_voxels = 3;
    SamplingStrategy strategy = SamplingStrategy::prior_guided;

    void validate() const;
    bool operator==(const SamplingConfig&) const = default;
};

/// min(1, beta_t * N(A2) / N(A_t)); zero when the area is empty.
double reserve_probability(Area tag, const AreaGrid& areas, const SamplingConfig& cfg);
/// Same rule from explicit counts N(A1), N(A2), N(A3).
double reserve_probability(Area tag, const std::array<std::size_t, 3>& counts, const SamplingConfig& cfg);

struct SamplingStats {
    std::array<std::size_t, 3> candidates{};
    std::array<std::size_t, 3> survivors{};

    SamplingStats& operator+=(const SamplingStats& o);
    /// Survivors / candidates for one area (0 when no candidates landed there).
    double survival_rate(Area a) const;
};

/// Surviving samples for a set of rays. Samples of ray r live in [ray_begin[r], ray_begin[r+1]).
struct RaySampleBatch {
    std::vector<Ray> rays;
    std::vector<uint32_t> ray_begin{0};
    std::vector<double> t;
    std::vector<Vec3> points;
    std::vector<Area> tags;
    SamplingStats stats;

    std::size_t ray_count() const { return rays.size(); }
    std::size_t sample_count() const { return t.size(); }
    std::size_t begin(std::size_t r) const { return ray_begin[r]; }
    std::size_t end(std::size_t r) const { return ray_begin[r + 1]; }
};

/// Equidistant candidates over each ray's overlap with the area box; each candidate is kept iff
/// u < P(tag) (kept on equality too), with u drawn from a counter-based stream keyed by
/// (seed, ray_key_offset + ray index, sample index). Uniform strategy keeps every candidate.
RaySampleBatch sample_rays(std::span<const Ray> rays, const AreaGrid& areas, const SamplingConfig& cfg, uint64_t seed,
                           uint64_t ray_key_offset = 0);

void write_sampling_csv(const std::filesystem::path& path, const SamplingStats& stats, const AreaGrid& areas,
                        const SamplingConfig& cfg);

}  // namespace resurf
