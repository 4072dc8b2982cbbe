#include "resurf/pipeline.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include "resurf/binary_io.hpp"
#include "resurf/image_io.hpp"
#include "resurf/rng.hpp"

namespace resurf {

uint64_t stage_seed(const RunConfig& cfg, SeedStream stream) {
    return derive_seed(cfg.seed, static_cast<uint64_t>(stream));
}

std::vector<LocalPrior> make_priors(const RunConfig& cfg) {
    std::vector<LocalPrior> priors;
    const uint64_t base = stage_seed(cfg, SeedStream::priors);
    for (int g = 0; g < cfg.priors.groups; ++g)
        priors.push_back(make_local_prior(cfg.scene, g, cfg.priors.groups, cfg.priors.corruption,
                                          derive_seed(base, static_cast<uint64_t>(g))));
    return priors;
}

FusionResult run_fusion(const RunConfig& cfg, std::span<const LocalPrior> priors) {
    return fuse(priors, cfg.fusion, cfg.basis_domain());
}

RenderConfig make_render_config(const RunConfig& cfg, const VoxelGrid& basis) {
    RenderConfig r;
    r.log_s = initial_log_s(basis.spacing(), cfg.render.initial_width_voxels);
    r.patch_half_width = cfg.render.patch_half_width;
    r.background = cfg.scene.background;
    r.transmittance_cutoff = cfg.render.transmittance_cutoff;
    return r;
}

BasisStage build_basis(const RunConfig& cfg) {
    cfg.validate();
    auto priors = make_priors(cfg);
    FusionResult fusion = run_fusion(cfg, priors);
    auto basis = std::make_shared<const VoxelGrid>(fusion.basis);
    AreaGrid areas = classify_areas(*basis, cfg.sampling.dilation_voxels);
    TriangleMesh mesh = marching_cubes(*basis, 0.0, fusion.covered);
    MeshTopology topo = analyze_topology(mesh);
    return {std::move(priors), std::move(fusion), std::move(basis), std::move(areas), std::move(mesh), topo};
}

std::filesystem::path ArtifactPaths::basis() const { return dir / ("basis" + suffix + ".sdfg"); }
std::filesystem::path ArtifactPaths::coverage() const { return dir / ("coverage" + suffix + ".sdfg"); }
std::filesystem::path ArtifactPaths::basis_mesh() const { return dir / ("basis" + suffix + ".ply"); }
std::filesystem::path ArtifactPaths::areas_csv() const { return dir / ("areas" + suffix + ".csv"); }

ArtifactPaths artifact_paths(const RunConfig& cfg) {
    ArtifactPaths p;
    p.dir = cfg.output_dir;
    p.suffix = cfg.fusion.mode == FusionMode::min_abs ? "" : std::string("_") + to_string(cfg.fusion.mode);
    return p;
}

SamplingReport sampling_report(const RunConfig& cfg, const AreaGrid& areas) {
    SamplingReport rep;
    const auto cams = make_cameras(cfg.scene);
    const uint64_t seed = stage_seed(cfg, SeedStream::sampling_report);
    uint64_t offset = 0;
    for (const auto& cam : cams) {
        std::vector<PixelCoord> px;
        for (int j = 0; j < cam.height; j += 2)
            for (int i = 0; i < cam.width; i += 2) px.push_back({i + 0.5, j + 0.5});
        const auto rays = generate_rays(cam, px);
        rep.stats += sample_rays(rays, areas, cfg.sampling, seed, offset).stats;
        offset += rays.size();
    }
    for (Area a : {Area::near_surface, Area::surface, Area::empty}) {
        const auto s = static_cast<size_t>(area_slot(a));
        rep.survival[s] = rep.stats.survival_rate(a);
        rep.reserve[s] = reserve_probability(a, areas, cfg.sampling);
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------

void cmd_gen_scene(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const std::filesystem::path dir = cfg.output_dir;
    const auto cams = make_cameras(cfg.scene);
    char name[64];
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const RenderedView view = render_ground_truth(cfg.scene, cams[i]);
        std::snprintf(name, sizeof(name), "view_%02zu", i);
        write_png_rgb(dir / "images" / (std::string(name) + ".png"), view.width, view.height, view.rgb);
        write_png_normals(dir / "normals" / (std::string(name) + ".png"), view.width, view.height, view.normal);
        write_camera(dir / "cameras" / (std::string(name) + ".txt"), cams[i]);
    }
    save_config(dir / "config.json", cfg);
    log << "wrote " << cams.size() << " views of '" << to_string(cfg.scene.shape) << "' to " << dir.string() << "\n";
}

void cmd_fuse(const RunConfig& cfg, std::ostream& log) {
    const ArtifactPaths paths = artifact_paths(cfg);
    const BasisStage st = build_basis(cfg);
    for (const auto& w : st.fusion.warnings) log << "warning: " << w << "\n";
    for (const auto& p : st.priors) write_sdfg(paths.dir / "priors" / (p.id + ".sdfg"), p.grid);
    write_sdfg(paths.basis(), *st.basis);
    std::vector<float> cov(st.fusion.covered.begin(), st.fusion.covered.end());
    write_sdfg(paths.coverage(), st.basis->with_values(std::move(cov)));
    write_ply(paths.basis_mesh(), st.mesh);

    std::ostringstream csv;
    csv.precision(10);
    csv << "area,voxels,beta,reserve_probability\n";
    for (Area a : {Area::near_surface, Area::surface, Area::empty}) {
        const auto s = static_cast<size_t>(area_slot(a));
        csv << 'A' << static_cast<int>(a) << ',' << st.areas.count(a) << ',' << cfg.sampling.betas[s] << ','
            << reserve_probability(a, st.areas, cfg.sampling) << '\n';
    }
    write_text(paths.areas_csv(), csv.str());

    log << "basis " << paths.basis().string() << ": " << st.mesh.vertices.size() << " vertices, "
        << st.mesh.triangles.size() << " triangles, " << st.topology.boundary_edges << " boundary edges\n";
    if (st.topology.boundary_edges > 0) log << "warning: basis mesh is open (incomplete prior coverage)\n";
}

namespace {

struct LoadedBasis {
    std::shared_ptr<const VoxelGrid> basis;
    std::vector<uint8_t> mask;
};

LoadedBasis load_basis(const RunConfig& cfg) {
    const ArtifactPaths paths = artifact_paths(cfg);
    if (!std::filesystem::exists(paths.basis()))
        throw ConfigError("basis field " + paths.basis().string() + " not found; run the fuse command first");
    LoadedBasis lb;
    lb.basis = std::make_shared<const VoxelGrid>(read_sdfg(paths.basis()));
    if (std::filesystem::exists(paths.coverage())) {
        const VoxelGrid cov = read_sdfg(paths.coverage());
        if (cov.resolution() != lb.basis->resolution()) throw FormatError("coverage grid does not match the basis");
        for (float v : cov.values()) lb.mask.push_back(v > 0.5f ? 1 : 0);
    }
    return lb;
}

}  // namespace

int cmd_train(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const ArtifactPaths paths = artifact_paths(cfg);
    const LoadedBasis lb = load_basis(cfg);
    const AreaGrid areas = classify_areas(*lb.basis, cfg.sampling.dilation_voxels);
    const TrainingData data = make_training_data(cfg.scene, cfg.gt_mesh_resolution);
    Trainer trainer(data, lb.basis, areas, cfg.field, cfg.sampling, make_render_config(cfg, *lb.basis), cfg.train,
                    stage_seed(cfg, SeedStream::training), lb.mask);
    const TrainResult result = trainer.run([&](const IterationMetrics& m) {
        if (!std::isnan(m.chamfer)) log << "iteration " << m.iteration + 1 << ": loss " << m.total << ", chamfer " << m.chamfer << "\n";
    });
    write_checkpoint(paths.checkpoint(), trainer.checkpoint());
    write_metrics_csv(paths.metrics(), result.trace);
    if (result.diverged) {
        log << "error: training diverged: " << result.message << "; last good checkpoint kept at "
            << paths.checkpoint().string() << "\n";
        return kExitDivergence;
    }
    log << "trained " << result.iterations_done << " iterations; checkpoint " << paths.checkpoint().string() << "\n";
    return kExitOk;
}

void cmd_extract(const RunConfig& cfg, const std::filesystem::path& checkpoint, int resolution, std::ostream& log) {
    cfg.validate();
    if (resolution != 0 && resolution < 8) throw ConfigError("--resolution must be >= 8");
    const ArtifactPaths paths = artifact_paths(cfg);
    const LoadedBasis lb = load_basis(cfg);
    const Checkpoint ck = read_checkpoint(checkpoint.empty() ? paths.checkpoint() : checkpoint);
    const ResidualField<float> field(ck.config, lb.basis, ck.params);
    const TriangleMesh mesh = extract_mesh(field, resolution, lb.mask);
    write_ply(paths.mesh(), mesh);
    log << "mesh " << paths.mesh().string() << ": " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
        << " triangles\n";
}

double cmd_eval(const RunConfig& cfg, const std::filesystem::path& mesh_path, std::ostream& log) {
    cfg.validate();
    const ArtifactPaths paths = artifact_paths(cfg);
    const TriangleMesh mesh = read_ply(mesh_path.empty() ? paths.mesh() : mesh_path);
    if (mesh.empty()) throw EmptySurface("mesh to evaluate has no triangles");
    const TriangleMesh gt = ground_truth_mesh(cfg.scene, cfg.gt_mesh_resolution);
    const double cd = chamfer(mesh, gt, static_cast<std::size_t>(cfg.train.eval_samples), stage_seed(cfg, SeedStream::evaluation));

    const LoadedBasis lb = load_basis(cfg);
    const AreaGrid areas = classify_areas(*lb.basis, cfg.sampling.dilation_voxels);
    const SamplingReport rep = sampling_report(cfg, areas);
    write_sampling_csv(paths.sampling_csv(), rep.stats, areas, cfg.sampling);

    std::ostringstream csv;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "metric,value\nchamfer,%.9g\n", cd);
    csv << buf;
    const double ref = rep.survival[1];
    for (int s = 0; s < 3; ++s) {
        std::snprintf(buf, sizeof(buf), "survival_ratio_A%d,%.9g\n", s + 1, ref > 0 ? rep.survival[static_cast<size_t>(s)] / ref : 0.0);
        csv << buf;
    }
    write_text(paths.eval_csv(), csv.str());

    log << "chamfer distance: " << cd << "\n";
    log << "survival rates A1:A2:A3 = " << rep.survival[0] / ref << " : 1 : " << rep.survival[2] / ref << " (betas "
        << cfg.sampling.betas[0] << ":" << cfg.sampling.betas[1] << ":" << cfg.sampling.betas[2] << ")\n";
    return cd;
}

int cmd_run(const RunConfig& cfg, std::ostream& log) {
    cmd_gen_scene(cfg, log);
    cmd_fuse(cfg, log);
    const int code = cmd_train(cfg, log);
    if (code != kExitOk) return code;
    cmd_extract(cfg, {}, 0, log);
    cmd_eval(cfg, {}, log);
    return kExitOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const EmptySurface& e) {
        err << "empty surface: " << e.what() << "\n";
        return kExitEmptySurface;
    } catch (const DivergenceError& e) {
        err << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace resurf
