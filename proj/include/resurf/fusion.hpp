#pragma once

#include <span>
#include <string>
#include <vector>

#include "resurf/field_grid.hpp"

namespace resurf {

/// A local SDF field in its own normalized frame, plus the transform that maps world points into it.
struct LocalPrior {
    std::string id;
    VoxelGrid grid;
    LocalFieldTransform transform;
};

enum class FusionMode { min_abs, average };

const char* to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& s);

struct FusionConfig {
    int resolution = 128;
    double sigma_voxels = 2.0;
    FusionMode mode = FusionMode::min_abs;

    void validate() const;
    bool operator==(const FusionConfig&) const = default;
};

struct PriorSample {
    double value = 0.0;
    bool in_bounds = false;
    double box_distance = 0.0;  // distance of the local point to the local grid box, normalized units
};

/// interp(S R p, V_local); out-of-bounds points follow the clamp-plus-distance policy of interpolate().
double query_local(const LocalPrior& prior, const Vec3& p);
PriorSample sample_prior(const LocalPrior& prior, const Vec3& p);

struct FusionResult {
    VoxelGrid raw;                  // per-vertex fused values before smoothing (V_global)
    VoxelGrid basis;                // smoothed result (V_basis)
    std::vector<uint8_t> covered;   // 1 where at least one prior was in bounds
    std::size_t uncovered_count = 0;
    std::vector<std::string> warnings;
};

/// Per-vertex fusion of one candidate list, exposed for testing and for the oracle comparison.
/// Candidates that are in bounds compete; if none is, the one nearest to its prior box wins.
double fuse_candidates(std::span<const PriorSample> candidates, FusionMode mode);

/// Queries every prior at every vertex of a grid spanning `domain`, fuses, then smooths once.
/// Priors are ordered by id before fusion so argmin ties resolve to the lowest id.
FusionResult fuse(std::span<const LocalPrior> priors, const FusionConfig& cfg, const Box& domain);

}  // namespace resurf
