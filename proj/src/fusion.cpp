#include "resurf/fusion.hpp"

#include <numeric>

namespace resurf {

const char* to_string(FusionMode mode) { return mode == FusionMode::min_abs ? "min_abs" : "average"; }

FusionMode fusion_mode_from_string(const std::string& s) {
    if (s == "min_abs") return FusionMode::min_abs;
    if (s == "average") return FusionMode::average;
    throw ConfigError("unknown fusion mode '" + s + "' (expected min_abs|average)");
}

void FusionConfig::validate() const {
    if (resolution < 16) throw ConfigError("fusion.resolution must be >= 16");
    if (sigma_voxels < 0.0) throw ConfigError("fusion.sigma_voxels must be >= 0");
}

double query_local(const LocalPrior& prior, const Vec3& p) {
    return interpolate(prior.grid, to_local(p, prior.transform));
}

PriorSample sample_prior(const LocalPrior& prior, const Vec3& p) {
    const Vec3 q = to_local(p, prior.transform);
    const Box b = prior.grid.bounds();
    const Vec3 c = b.clamp(q);
    PriorSample s;
    s.value = interpolate(prior.grid, q);
    s.box_distance = norm(q - c);
    s.in_bounds = s.box_distance == 0.0;
    return s;
}

double fuse_candidates(std::span<const PriorSample> candidates, FusionMode mode) {
    if (candidates.empty()) throw ConfigError("fusion needs at least one prior");
    const bool any_in = std::any_of(candidates.begin(), candidates.end(), [](const auto& c) { return c.in_bounds; });
    if (!any_in) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < candidates.size(); ++i)
            if (candidates[i].box_distance < candidates[best].box_distance) best = i;
        return candidates[best].value;
    }
    if (mode == FusionMode::average) {
        double sum = 0.0;
        int n = 0;
        for (const auto& c : candidates) {
            if (!c.in_bounds) continue;
            sum += c.value;
            ++n;
        }
        return sum / n;
    }
    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].in_bounds) continue;
        if (best == candidates.size() || std::abs(candidates[i].value) < std::abs(candidates[best].value)) best = i;
    }
    return candidates[best].value;
}

FusionResult fuse(std::span<const LocalPrior> priors, const FusionConfig& cfg, const Box& domain) {
    cfg.validate();
    if (priors.empty()) throw ConfigError("fusion needs at least one prior");
    for (const auto& p : priors) p.transform.validate();

    std::vector<const LocalPrior*> ordered;
    for (const auto& p : priors) ordered.push_back(&p);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

    VoxelGrid lattice = VoxelGrid::covering(domain, cfg.resolution);
    const GridIndex res = lattice.resolution();
    std::vector<float> fused(lattice.size());
    std::vector<uint8_t> covered(lattice.size(), 0);
    std::vector<std::size_t> in_bounds_per_prior(ordered.size(), 0);
    std::vector<PriorSample> candidates(ordered.size());
    std::size_t uncovered = 0;

    for (int k = 0; k < res[2]; ++k) {
        for (int j = 0; j < res[1]; ++j) {
            for (int i = 0; i < res[0]; ++i) {
                const Vec3 p = lattice.vertex_position(i, j, k);
                bool any = false;
                for (std::size_t m = 0; m < ordered.size(); ++m) {
                    candidates[m] = sample_prior(*ordered[m], p);
                    if (candidates[m].in_bounds) {
                        any = true;
                        ++in_bounds_per_prior[m];
                    }
                }
                const std::size_t idx = lattice.index(i, j, k);
                fused[idx] = static_cast<float>(fuse_candidates(candidates, cfg.mode));
                covered[idx] = any ? 1 : 0;
                if (!any) ++uncovered;
            }
        }
    }

    FusionResult result{lattice.with_values(fused), lattice, std::move(covered), uncovered, {}};
    result.basis = gaussian_smooth(result.raw, cfg.sigma_voxels);
    for (std::size_t m = 0; m < ordered.size(); ++m) {
        if (2 * in_bounds_per_prior[m] < lattice.size())
            result.warnings.push_back("prior '" + ordered[m]->id + "' covers fewer than 50% of basis vertices");
    }
    if (uncovered > 0)
        result.warnings.push_back(std::to_string(uncovered) + " basis vertices are outside every prior");
    return result;
}

}  // namespace resurf
