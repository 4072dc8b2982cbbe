#include "resurf/sampler.hpp"

#include <sstream>

#include "resurf/binary_io.hpp"
#include "resurf/rng.hpp"

namespace resurf {

AreaGrid::AreaGrid(const VoxelGrid& lattice, std::vector<Area> labels)
    : cells_{lattice.resolution()[0] - 1, lattice.resolution()[1] - 1, lattice.resolution()[2] - 1},
      origin_(lattice.origin()),
      spacing_(lattice.spacing()),
      bounds_(lattice.bounds()),
      labels_(std::move(labels)) {
    if (labels_.size() != lattice.cell_count()) throw ConfigError("AreaGrid: label count does not match lattice cells");
    for (Area a : labels_) ++counts_[static_cast<size_t>(area_slot(a))];
}

Area AreaGrid::label_at(const Vec3& p) const {
    GridIndex c{};
    for (int a = 0; a < 3; ++a) {
        const double u = (p[a] - origin_[a]) / spacing_;
        c[a] = std::clamp(static_cast<int>(std::floor(u)), 0, cells_[a] - 1);
    }
    return label(c[0], c[1], c[2]);
}

Vec3 AreaGrid::cell_center(std::size_t flat) const {
    const auto cx = static_cast<std::size_t>(cells_[0]);
    const auto cy = static_cast<std::size_t>(cells_[1]);
    const Vec3 ijk{double(flat % cx), double((flat / cx) % cy), double(flat / (cx * cy))};
    return origin_ + (ijk + Vec3{0.5, 0.5, 0.5}) * spacing_;
}

AreaGrid classify_areas(const VoxelGrid& basis, int dilation_voxels) {
    if (dilation_voxels < 0) throw ConfigError("dilation_voxels must be >= 0");
    const GridIndex res = basis.resolution();
    const GridIndex cells{res[0] - 1, res[1] - 1, res[2] - 1};
    const std::size_t n = basis.cell_count();
    auto cidx = [&](int i, int j, int k) {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(cells[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(cells[1]) * static_cast<std::size_t>(k));
    };

    std::vector<uint8_t> surface(n, 0);
    std::size_t n_surface = 0;
    for (int k = 0; k < cells[2]; ++k) {
        for (int j = 0; j < cells[1]; ++j) {
            for (int i = 0; i < cells[0]; ++i) {
                bool neg = false, pos = false;
                for (int c = 0; c < 8; ++c) {
                    const float v = basis.at(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                    (v < 0.0f ? neg : pos) = true;
                }
                if (neg && pos) {
                    surface[cidx(i, j, k)] = 1;
                    ++n_surface;
                }
            }
        }
    }
    if (n_surface == 0) throw EmptySurface("classify_areas: basis field has no sign change");

    // Chebyshev dilation as three separable running-max passes.
    std::vector<uint8_t> dil = surface;
    std::vector<uint8_t> tmp(n);
    for (int axis = 0; axis < 3; ++axis) {
        for (int k = 0; k < cells[2]; ++k) {
            for (int j = 0; j < cells[1]; ++j) {
                for (int i = 0; i < cells[0]; ++i) {
                    GridIndex c{i, j, k};
                    const int centre = c[axis];
                    uint8_t m = 0;
                    for (int d = -dilation_voxels; d <= dilation_voxels && !m; ++d) {
                        const int q = centre + d;
                        if (q < 0 || q >= cells[axis]) continue;
                        c[axis] = q;
                        m = dil[cidx(c[0], c[1], c[2])];
                    }
                    tmp[cidx(i, j, k)] = m;
                }
            }
        }
        std::swap(dil, tmp);
    }

    std::vector<Area> labels(n, Area::empty);
    for (std::size_t i = 0; i < n; ++i) {
        if (surface[i]) labels[i] = Area::surface;
        else if (dil[i]) labels[i] = Area::near_surface;
    }
    return AreaGrid(basis, std::move(labels));
}

const char* to_string(SamplingStrategy s) { return s == SamplingStrategy::prior_guided ? "prior_guided" : "uniform"; }

SamplingStrategy sampling_strategy_from_string(const std::string& s) {
    if (s == "prior_guided") return SamplingStrategy::prior_guided;
    if (s == "uniform") return SamplingStrategy::uniform;
    throw ConfigError("unknown sampling strategy '" + s + "' (expected prior_guided|uniform)");
}

void SamplingConfig::validate() const {
    // Equal weights are accepted so the uniform-dropout ablation can be expressed.
    if (!(betas[0] >= betas[1] && betas[1] >= betas[2] && betas[2] > 0.0))
        throw ConfigError("sampling.betas must satisfy beta1 >= beta2 >= beta3 > 0");
    if (coarse_samples_per_ray < 1) throw ConfigError("sampling.coarse_samples_per_ray must be >= 1");
    if (dilation_voxels < 0) throw ConfigError("sampling.dilation_voxels must be >= 0");
}

double reserve_probability(Area tag, const AreaGrid& areas, const SamplingConfig& cfg) {
    return reserve_probability(tag, areas.counts(), cfg);
}

double reserve_probability(Area tag, const std::array<std::size_t, 3>& counts, const SamplingConfig& cfg) {
    const std::size_t n_tag = counts[static_cast<size_t>(area_slot(tag))];
    if (n_tag == 0) return 0.0;
    const double n_ref = static_cast<double>(counts[static_cast<size_t>(area_slot(Area::surface))]);
    return std::min(1.0, cfg.betas[static_cast<size_t>(area_slot(tag))] * n_ref / static_cast<double>(n_tag));
}

SamplingStats& SamplingStats::operator+=(const SamplingStats& o) {
    for (int i = 0; i < 3; ++i) {
        candidates[static_cast<size_t>(i)] += o.candidates[static_cast<size_t>(i)];
        survivors[static_cast<size_t>(i)] += o.survivors[static_cast<size_t>(i)];
    }
    return *this;
}

double SamplingStats::survival_rate(Area a) const {
    const auto s = static_cast<size_t>(area_slot(a));
    return candidates[s] == 0 ? 0.0 : static_cast<double>(survivors[s]) / static_cast<double>(candidates[s]);
}

RaySampleBatch sample_rays(std::span<const Ray> rays, const AreaGrid& areas, const SamplingConfig& cfg, uint64_t seed,
                           uint64_t ray_key_offset) {
    cfg.validate();
    const std::array<double, 3> keep{reserve_probability(Area::near_surface, areas, cfg),
                                     reserve_probability(Area::surface, areas, cfg),
                                     reserve_probability(Area::empty, areas, cfg)};
    const bool dropout = cfg.strategy == SamplingStrategy::prior_guided;
    const Box box = areas.bounds();
    const int k = cfg.coarse_samples_per_ray;

    RaySampleBatch batch;
    batch.rays.assign(rays.begin(), rays.end());
    batch.ray_begin.reserve(rays.size() + 1);
    for (std::size_t r = 0; r < rays.size(); ++r) {
        const Ray& ray = rays[r];
        RaySpan span = intersect_box(ray.origin, ray.dir, box);
        span.t_near = std::max(span.t_near, ray.t_min);
        span.t_far = std::min(span.t_far, ray.t_max);
        if (span.hit && span.t_far > span.t_near) {
            const double step = (span.t_far - span.t_near) / k;
            for (int i = 0; i < k; ++i) {
                const double t = span.t_near + (i + 0.5) * step;
                const Vec3 p = ray.at(t);
                const Area tag = areas.label_at(p);
                const auto slot = static_cast<size_t>(area_slot(tag));
                ++batch.stats.candidates[slot];
                if (dropout) {
                    const double u = counter_uniform(seed, ray_key_offset + r, static_cast<uint64_t>(i));
                    if (u > keep[slot]) continue;
                }
                ++batch.stats.survivors[slot];
                batch.t.push_back(t);
                batch.points.push_back(p);
                batch.tags.push_back(tag);
            }
        }
        batch.ray_begin.push_back(static_cast<uint32_t>(batch.t.size()));
    }
    return batch;
}

void write_sampling_csv(const std::filesystem::path& path, const SamplingStats& stats, const AreaGrid& areas,
                        const SamplingConfig& cfg) {
    std::ostringstream out;
    out.precision(10);
    out << "area,voxels,beta,reserve_probability,candidates,survivors,survival_rate\n";
    for (Area a : {Area::near_surface, Area::surface, Area::empty}) {
        const auto s = static_cast<size_t>(area_slot(a));
        out << 'A' << static_cast<int>(a) << ',' << areas.count(a) << ',' << cfg.betas[s] << ','
            << reserve_probability(a, areas, cfg) << ',' << stats.candidates[s] << ',' << stats.survivors[s] << ','
            << stats.survival_rate(a) << '\n';
    }
    write_text(path, out.str());
}

}  // namespace resurf
