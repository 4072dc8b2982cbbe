#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "resurf/pipeline.hpp"
#include "resurf/trainer.hpp"
#include "support.hpp"

using namespace resurf;

namespace {

// Basis, areas and scene data for a small sphere run, built once.
struct Fixture {
    RunConfig cfg;
    BasisStage stage;
    TrainingData data;

    Fixture()
        : cfg(test::small_run_config(std::filesystem::temp_directory_path() / "resurf_trainer")),
          stage(build_basis(cfg)),
          data(make_training_data(cfg.scene, cfg.gt_mesh_resolution)) {}

    Trainer make(uint64_t seed = 5) const {
        return Trainer(data, stage.basis, stage.areas, cfg.field, cfg.sampling, make_render_config(cfg, *stage.basis),
                       cfg.train, seed, stage.fusion.covered);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

bool same_params(const FieldParams<float>& a, const FieldParams<float>& b) {
    const auto ga = a.groups(), gb = b.groups();
    for (std::size_t g = 0; g < 4; ++g) {
        if (ga[g].size() != gb[g].size()) return false;
        if (std::memcmp(ga[g].data(), gb[g].data(), ga[g].size_bytes()) != 0) return false;
    }
    return true;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("training configuration checks") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.rays_per_batch = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.iterations = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.lambdas = {1, -0.1, 0.1};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero iterations leave the field equal to the basis") {
    const Fixture& f = fixture();
    RunConfig cfg = f.cfg;
    cfg.train.iterations = 0;
    Trainer t(f.data, f.stage.basis, f.stage.areas, cfg.field, cfg.sampling, make_render_config(cfg, *f.stage.basis),
              cfg.train, 5);
    const FieldParams<float> init = t.field().params();
    const TrainResult r = t.run();
    CHECK(r.trace.empty());
    CHECK(r.iterations_done == 0);
    CHECK(same_params(init, t.field().params()));
    Rng rng(1);
    for (int n = 0; n < 1000; ++n) {
        const Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CHECK(t.field().sdf(p) == interpolate(*f.stage.basis, p));
    }
}

TEST_CASE("first-iteration photometric loss equals the pure basis render loss") {
    const Fixture& f = fixture();
    const uint64_t seed = 5;
    const Trainer t = f.make(seed);
    FieldParams<float> g = t.field().params().zeros_like();
    double gls = 0;
    const IterationMetrics m = t.loss_and_gradient(0, g, gls);
    REQUIRE(m.samples > 0);

    const PixelBatch pb = t.make_batch(0);
    const RaySampleBatch batch = sample_rays(pb.rays, f.stage.areas, t.sampling(), derive_seed(seed, 2), 0);
    const SampleEvaluator basis_only = basis_evaluator(t.field());
    std::vector<Rgb> rendered, target;
    for (std::size_t r = 0; r < batch.ray_count(); ++r) {
        rendered.push_back(trace_ray(batch, r, t.render_config(), basis_only).render.color);
        target.push_back(f.data.views[pb.view[r]].color_at(pb.flat_pixel[r]));
    }
    CHECK(m.rgb == loss_rgb(rendered, target));
}

TEST_CASE("first-iteration renders equal basis renders bit for bit") {
    const Fixture& f = fixture();
    const Trainer t = f.make();
    const Camera& cam = f.data.cameras[1];
    const auto full = render_view(t.field(), cam, f.stage.areas, t.sampling(), t.render_config(), false, 9);
    const auto basis = render_view(t.field(), cam, f.stage.areas, t.sampling(), t.render_config(), true, 9);
    REQUIRE(full.size() == static_cast<std::size_t>(cam.width * cam.height));
    CHECK(std::memcmp(full.data(), basis.data(), full.size() * sizeof(Rgb)) == 0);
}

TEST_CASE("training is deterministic and the trace stays finite") {
    const Fixture& f = fixture();
    Trainer a = f.make(), b = f.make();
    const TrainResult ra = a.run(), rb = b.run();
    REQUIRE(ra.trace.size() == static_cast<std::size_t>(f.cfg.train.iterations));
    CHECK_FALSE(ra.diverged);
    for (std::size_t i = 0; i < ra.trace.size(); ++i) {
        CHECK(ra.trace[i].total == rb.trace[i].total);
        CHECK(std::isfinite(ra.trace[i].total));
        CHECK(std::isfinite(ra.trace[i].eikonal));
    }
    CHECK(same_params(a.field().params(), b.field().params()));
    CHECK(a.log_s() == b.log_s());
    CHECK(std::isfinite(ra.trace.back().chamfer));
    // Parameters actually moved.
    CHECK_FALSE(same_params(a.field().params(), f.make().field().params()));
}

TEST_CASE("a non-finite state aborts training as divergence") {
    const Fixture& f = fixture();
    Trainer t = f.make();
    FieldParams<float> bad = t.field().params();
    std::fill(bad.sdf_mlp.begin(), bad.sdf_mlp.end(), std::numeric_limits<float>::quiet_NaN());
    t.set_state(bad, t.log_s());
    CHECK_THROWS_AS(t.step(), DivergenceError);
    const TrainResult r = t.run();
    CHECK(r.diverged);
    CHECK_FALSE(r.message.empty());
}

TEST_CASE("rays that never reach the basis are a configuration error") {
    const Fixture& f = fixture();
    // Same lattice shape, moved far away from every camera.
    const VoxelGrid& b = *f.stage.basis;
    const auto far = std::make_shared<const VoxelGrid>(b.resolution(), b.origin() + Vec3{50, 50, 50}, b.spacing(),
                                                       std::vector<float>(b.values().begin(), b.values().end()));
    const AreaGrid areas = classify_areas(*far, 2);
    TrainConfig tc = f.cfg.train;
    tc.max_empty_batches = 3;
    Trainer t(f.data, far, areas, f.cfg.field, f.cfg.sampling, make_render_config(f.cfg, *far), tc, 1);
    for (int i = 0; i < 3; ++i) CHECK(t.step().samples == 0);
    CHECK_THROWS_AS(t.step(), ConfigError);
}

TEST_CASE("checkpoints restore the forward pass") {
    const Fixture& f = fixture();
    Trainer a = f.make();
    for (int i = 0; i < 2; ++i) a.step();
    const Checkpoint ck = decode_checkpoint(encode_checkpoint(a.checkpoint()));
    Trainer b = f.make();
    b.load(ck);
    CHECK(b.iteration() == 2);
    CHECK(b.log_s() == a.log_s());
    FieldParams<float> ga = a.field().params().zeros_like(), gb = ga;
    double la = 0, lb = 0;
    CHECK(a.loss_and_gradient(7, ga, la).total == b.loss_and_gradient(7, gb, lb).total);
    Rng rng(2);
    for (int n = 0; n < 1000; ++n) {
        const Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CHECK(a.field().sdf(p) == b.field().sdf(p));
    }
}

TEST_CASE("zero-offset extraction reproduces the basis mesh") {
    const Fixture& f = fixture();
    const Trainer t = f.make();
    const TriangleMesh basis_mesh = marching_cubes(*f.stage.basis, 0.0, f.stage.fusion.covered);
    const TriangleMesh mesh = extract_mesh(t.field(), 0, f.stage.fusion.covered);
    REQUIRE(mesh.vertices.size() == basis_mesh.vertices.size());
    REQUIRE(mesh.triangles == basis_mesh.triangles);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) CHECK(norm(mesh.vertices[i] - basis_mesh.vertices[i]) <= 1e-9);
    // A different lattice only changes the sampling resolution.
    const VoxelGrid fine = sample_field(t.field(), 48);
    CHECK(fine.resolution()[0] == 48);
    CHECK(fine.bounds().lo == f.stage.basis->bounds().lo);
}

TEST_CASE("metrics CSV layout") {
    const auto dir = test::scratch_dir("metrics");
    IterationMetrics m;
    m.iteration = 3;
    m.total = 0.5;
    const std::vector<IterationMetrics> trace{m};
    write_metrics_csv(dir / "m.csv", trace);
    const std::string s = slurp(dir / "m.csv");
    CHECK(s.rfind("iteration,loss_total,loss_rgb,loss_patch,loss_eikonal,loss_normal,s,samples,patch_rays,chamfer\n", 0) == 0);
    CHECK(s.find("\n3,0.5,") != std::string::npos);
}
