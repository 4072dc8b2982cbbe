#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <queue>

#include "resurf/sampler.hpp"
#include "support.hpp"

using namespace resurf;

namespace {

VoxelGrid sphere_grid(int res, double r) {
    return test::grid_from(Box{{-1, -1, -1}, {1, 1, 1}}, res, [r](const Vec3& p) { return norm(p) - r; });
}

std::vector<Ray> random_rays(std::size_t n, Rng& rng) {
    std::vector<Ray> rays;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 o = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()}) * 3.0;
        const Vec3 target{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};
        rays.push_back({o, normalized(target - o)});
    }
    return rays;
}

// Number of 26-connected components among cells with the given label.
std::size_t components(const AreaGrid& g, Area label) {
    const GridIndex c = g.cells();
    std::vector<uint8_t> seen(g.labels().size(), 0);
    std::size_t count = 0;
    for (int k = 0; k < c[2]; ++k)
        for (int j = 0; j < c[1]; ++j)
            for (int i = 0; i < c[0]; ++i) {
                if (g.label(i, j, k) != label || seen[g.cell_index(i, j, k)]) continue;
                ++count;
                std::queue<GridIndex> q;
                q.push({i, j, k});
                seen[g.cell_index(i, j, k)] = 1;
                while (!q.empty()) {
                    const GridIndex x = q.front();
                    q.pop();
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int a = x[0] + dx, b = x[1] + dy, e = x[2] + dz;
                                if (a < 0 || b < 0 || e < 0 || a >= c[0] || b >= c[1] || e >= c[2]) continue;
                                const std::size_t id = g.cell_index(a, b, e);
                                if (seen[id] || g.label(a, b, e) != label) continue;
                                seen[id] = 1;
                                q.push({a, b, e});
                            }
                }
            }
    return count;
}

}  // namespace

TEST_CASE("sphere classification: a connected closed shell") {
    const VoxelGrid g = sphere_grid(33, 0.55);
    const AreaGrid areas = classify_areas(g, 2);
    const auto& n = areas.counts();
    CHECK(n[0] + n[1] + n[2] == g.cell_count());
    CHECK(components(areas, Area::surface) == 1);
    // The shell separates inside from outside: the empty region splits into the core and the exterior.
    CHECK(components(areas, Area::empty) == 2);
    CHECK(areas.label_at({0, 0, 0}) == Area::empty);
    CHECK(areas.label_at({0.55, 0.01, 0.01}) == Area::surface);
}

TEST_CASE("surface cells are exactly the sign-change cells and A1 is the Chebyshev shell") {
    Rng rng(1);
    const VoxelGrid g = test::random_grid({9, 8, 7}, {0, 0, 0}, 1.0, rng, -0.3, 1.0);
    const int dil = 1;
    const AreaGrid areas = classify_areas(g, dil);
    const GridIndex c = areas.cells();
    std::vector<uint8_t> crossing(areas.labels().size(), 0);
    for (int k = 0; k < c[2]; ++k)
        for (int j = 0; j < c[1]; ++j)
            for (int i = 0; i < c[0]; ++i) {
                bool neg = false, pos = false;
                for (int q = 0; q < 8; ++q) {
                    const float v = g.at(i + (q & 1), j + ((q >> 1) & 1), k + ((q >> 2) & 1));
                    (v < 0 ? neg : pos) = true;
                }
                crossing[areas.cell_index(i, j, k)] = neg && pos;
            }
    for (int k = 0; k < c[2]; ++k)
        for (int j = 0; j < c[1]; ++j)
            for (int i = 0; i < c[0]; ++i) {
                const std::size_t id = areas.cell_index(i, j, k);
                bool near = false;
                for (int dz = -dil; dz <= dil; ++dz)
                    for (int dy = -dil; dy <= dil; ++dy)
                        for (int dx = -dil; dx <= dil; ++dx) {
                            const int a = i + dx, b = j + dy, e = k + dz;
                            if (a < 0 || b < 0 || e < 0 || a >= c[0] || b >= c[1] || e >= c[2]) continue;
                            near |= crossing[areas.cell_index(a, b, e)] != 0;
                        }
                const Area expect = crossing[id] ? Area::surface : (near ? Area::near_surface : Area::empty);
                CHECK(areas.labels()[id] == expect);
            }
}

TEST_CASE("dilation zero leaves A1 empty") {
    const AreaGrid areas = classify_areas(sphere_grid(21, 0.5), 0);
    CHECK(areas.count(Area::near_surface) == 0);
    CHECK(areas.count(Area::surface) > 0);
}

TEST_CASE("a plane through mid-cell gives one layer of surface cells") {
    const double z0 = 0.05;  // spacing 0.1 from -1: cell boundaries at multiples of 0.1, so z0 is mid-cell
    const VoxelGrid g = test::grid_from(Box{{-1, -1, -1}, {1, 1, 1}}, 21, [z0](const Vec3& p) { return p.z - z0; });
    const AreaGrid areas = classify_areas(g, 1);
    CHECK(areas.count(Area::surface) == static_cast<std::size_t>(areas.cells()[0] * areas.cells()[1]));
    CHECK(areas.count(Area::near_surface) == static_cast<std::size_t>(2 * areas.cells()[0] * areas.cells()[1]));
}

TEST_CASE("a field without a sign change has no surface") {
    const VoxelGrid g({5, 5, 5}, {0, 0, 0}, 1.0, 0.5f);
    CHECK_THROWS_AS(classify_areas(g, 2), EmptySurface);
    const VoxelGrid n({5, 5, 5}, {0, 0, 0}, 1.0, -0.5f);
    CHECK_THROWS_AS(classify_areas(n, 2), EmptySurface);
}

TEST_CASE("reserve probability examples") {
    SamplingConfig cfg;
    CHECK(reserve_probability(Area::surface, {123, 77, 9999}, cfg) == 1.0);
    CHECK(reserve_probability(Area::empty, {3000, 1000, 8000}, cfg) == 0.0625);
    CHECK(reserve_probability(Area::near_surface, {4000, 1000, 8000}, cfg) == 1.0);
    CHECK(reserve_probability(Area::near_surface, {8000, 1000, 8000}, cfg) == 0.5);
    CHECK(reserve_probability(Area::near_surface, {0, 1000, 8000}, cfg) == 0.0);
}

TEST_CASE("betas must be ordered and positive") {
    SamplingConfig cfg;
    cfg.betas = {1.0, 2.0, 0.5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.betas = {4.0, 1.0, 0.0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.betas = {1.0, 1.0, 1.0};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("survivors are an ordered subset of the equidistant candidates") {
    const AreaGrid areas = classify_areas(sphere_grid(33, 0.5), 3);
    Rng rng(2);
    const auto rays = random_rays(200, rng);
    SamplingConfig cfg;
    cfg.coarse_samples_per_ray = 64;
    const RaySampleBatch b = sample_rays(rays, areas, cfg, 7);
    REQUIRE(b.ray_count() == rays.size());
    for (std::size_t r = 0; r < b.ray_count(); ++r) {
        const RaySpan span = intersect_box(rays[r].origin, rays[r].dir, areas.bounds());
        const double step = (span.t_far - span.t_near) / cfg.coarse_samples_per_ray;
        for (std::size_t s = b.begin(r); s < b.end(r); ++s) {
            if (s + 1 < b.end(r)) CHECK(b.t[s] < b.t[s + 1]);
            const double idx = (b.t[s] - span.t_near) / step - 0.5;
            CHECK(std::abs(idx - std::round(idx)) < 1e-6);
            CHECK(b.tags[s] == areas.label_at(b.points[s]));
            CHECK(norm(b.points[s] - rays[r].at(b.t[s])) < 1e-12);
        }
    }
    std::size_t total = 0;
    for (int a = 0; a < 3; ++a) total += b.stats.survivors[static_cast<size_t>(a)];
    CHECK(total == b.sample_count());
}

TEST_CASE("sampling is deterministic and order independent") {
    const AreaGrid areas = classify_areas(sphere_grid(25, 0.5), 2);
    Rng rng(3);
    const auto rays = random_rays(100, rng);
    SamplingConfig cfg;
    cfg.coarse_samples_per_ray = 50;
    const RaySampleBatch a = sample_rays(rays, areas, cfg, 11);
    const RaySampleBatch b = sample_rays(rays, areas, cfg, 11);
    CHECK(a.t == b.t);
    CHECK(a.ray_begin == b.ray_begin);
    // The second half sampled on its own, keyed by its offset, reproduces the same survivors.
    const RaySampleBatch tail = sample_rays(std::span<const Ray>(rays).subspan(50), areas, cfg, 11, 50);
    CHECK(std::vector<double>(a.t.begin() + a.begin(50), a.t.end()) == tail.t);
    const RaySampleBatch other = sample_rays(rays, areas, cfg, 12);
    CHECK(other.t != a.t);
}

TEST_CASE("uniform strategy keeps every candidate; rays that miss get nothing") {
    const AreaGrid areas = classify_areas(sphere_grid(25, 0.5), 2);
    SamplingConfig cfg;
    cfg.coarse_samples_per_ray = 40;
    cfg.strategy = SamplingStrategy::uniform;
    const std::vector<Ray> rays{{{0, 0, 3}, {0, 0, -1}}, {{5, 5, 5}, {1, 0, 0}}};
    const RaySampleBatch b = sample_rays(rays, areas, cfg, 0);
    CHECK(b.end(0) - b.begin(0) == 40);
    CHECK(b.end(1) == b.begin(1));
}

TEST_CASE("equal betas and equal counts give equal survival rates") {
    // Every area holds the same number of cells, so all probabilities are 1 / 1 / 1 and clamp to one.
    SamplingConfig cfg;
    cfg.betas = {1.0, 1.0, 1.0};
    for (Area a : {Area::near_surface, Area::surface, Area::empty}) CHECK(reserve_probability(a, {500, 500, 500}, cfg) == 1.0);
}

TEST_CASE("survival ratios follow the betas when nothing saturates") {
    const AreaGrid areas = classify_areas(sphere_grid(41, 0.45), 6);
    SamplingConfig cfg;
    cfg.coarse_samples_per_ray = 128;
    for (Area a : {Area::near_surface, Area::empty}) REQUIRE(reserve_probability(a, areas, cfg) < 1.0);
    Rng rng(4);
    const RaySampleBatch b = sample_rays(random_rays(2000, rng), areas, cfg, 5);
    for (int s = 0; s < 3; ++s) CHECK(b.stats.candidates[static_cast<size_t>(s)] > 10000);
    const double r2 = b.stats.survival_rate(Area::surface);
    const double r1 = b.stats.survival_rate(Area::near_surface) / r2;
    const double r3 = b.stats.survival_rate(Area::empty) / r2;
    const double n2 = static_cast<double>(areas.count(Area::surface));
    CHECK(r1 == doctest::Approx(4.0 * n2 / static_cast<double>(areas.count(Area::near_surface)) / 1.0).epsilon(0.05));
    CHECK(r3 == doctest::Approx(0.5 * n2 / static_cast<double>(areas.count(Area::empty))).epsilon(0.05));
}

TEST_CASE("raising beta1 never removes near-surface survivors") {
    const AreaGrid areas = classify_areas(sphere_grid(33, 0.5), 5);
    Rng rng(6);
    const auto rays = random_rays(300, rng);
    SamplingConfig lo, hi;
    lo.betas = {2.0, 1.0, 0.5};
    hi.betas = {4.0, 1.0, 0.5};
    const auto a = sample_rays(rays, areas, lo, 9).stats;
    const auto b = sample_rays(rays, areas, hi, 9).stats;
    CHECK(b.survivors[0] >= a.survivors[0]);
    CHECK(b.survivors[1] == a.survivors[1]);
    CHECK(b.survivors[2] == a.survivors[2]);
}

TEST_CASE("strategy names round trip") {
    CHECK(sampling_strategy_from_string(to_string(SamplingStrategy::uniform)) == SamplingStrategy::uniform);
    CHECK_THROWS_AS(sampling_strategy_from_string("random"), ConfigError);
}
