// Command-line driver: scene generation, fusion, training, extraction and evaluation.
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "resurf/pipeline.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> resolution;
    std::optional<std::string> mode;
    std::optional<int> iterations;
    std::string checkpoint;
    std::string mesh;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON run configuration (defaults apply when omitted)");
    cmd->add_option("--seed", o.seed, "Global seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--resolution", o.resolution, "Basis lattice resolution (fuse/train) or extraction lattice (extract)");
    cmd->add_option("--mode", o.mode, "Fusion mode")->check(CLI::IsMember({"min_abs", "average"}));
    cmd->add_option("--iterations", o.iterations, "Training iterations");
}

resurf::RunConfig resolve(const Options& o, bool resolution_is_fusion) {
    resurf::RunConfig cfg = o.config.empty() ? resurf::RunConfig{} : resurf::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output_dir = *o.out;
    if (o.resolution && resolution_is_fusion) cfg.fusion.resolution = *o.resolution;
    if (o.mode) cfg.fusion.mode = resurf::fusion_mode_from_string(*o.mode);
    if (o.iterations) cfg.train.iterations = *o.iterations;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Residual surface reconstruction on synthetic scenes"};
    app.require_subcommand(1);
    Options o;
    auto* gen = app.add_subcommand("gen-scene", "Render ground-truth images, normal maps and cameras");
    auto* fuse = app.add_subcommand("fuse", "Build the basis SDF from local priors");
    auto* train = app.add_subcommand("train", "Learn the offset SDF");
    auto* extract = app.add_subcommand("extract", "Extract the final mesh");
    auto* eval = app.add_subcommand("eval", "Chamfer distance and sampling report");
    auto* run = app.add_subcommand("run", "All stages in order");
    for (auto* c : {gen, fuse, train, extract, eval, run}) add_common(c, o);
    extract->add_option("--checkpoint", o.checkpoint, "Checkpoint file (defaults to the run's checkpoint)");
    eval->add_option("--mesh", o.mesh, "Mesh to evaluate (defaults to the run's extracted mesh)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : resurf::kExitConfig;
    }

    return resurf::guarded(
        [&]() -> int {
            if (gen->parsed()) {
                resurf::cmd_gen_scene(resolve(o, true), std::cout);
            } else if (fuse->parsed()) {
                resurf::cmd_fuse(resolve(o, true), std::cout);
            } else if (train->parsed()) {
                return resurf::cmd_train(resolve(o, true), std::cout);
            } else if (extract->parsed()) {
                resurf::cmd_extract(resolve(o, false), o.checkpoint, o.resolution.value_or(0), std::cout);
            } else if (eval->parsed()) {
                resurf::cmd_eval(resolve(o, true), o.mesh, std::cout);
            } else if (run->parsed()) {
                return resurf::cmd_run(resolve(o, true), std::cout);
            }
            return resurf::kExitOk;
        },
        std::cerr);
}
