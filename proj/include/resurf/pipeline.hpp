#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "resurf/config.hpp"

namespace resurf {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitEmptySurface = 3, kExitDivergence = 4 };

/// Stage seeds derived from the global seed.
enum class SeedStream : uint64_t { priors = 1, training = 2, evaluation = 3, sampling_report = 4 };
uint64_t stage_seed(const RunConfig& cfg, SeedStream stream);

std::vector<LocalPrior> make_priors(const RunConfig& cfg);
FusionResult run_fusion(const RunConfig& cfg, std::span<const LocalPrior> priors);
RenderConfig make_render_config(const RunConfig& cfg, const VoxelGrid& basis);

/// Stage-1 result shared by the commands and tests.
struct BasisStage {
    std::vector<LocalPrior> priors;
    FusionResult fusion;
    std::shared_ptr<const VoxelGrid> basis;
    AreaGrid areas;
    TriangleMesh mesh;
    MeshTopology topology;
};
BasisStage build_basis(const RunConfig& cfg);

/// Output file names inside the output directory.
struct ArtifactPaths {
    std::filesystem::path dir;
    std::filesystem::path basis() const;     // suffix depends on fusion mode
    std::filesystem::path coverage() const;
    std::filesystem::path basis_mesh() const;
    std::filesystem::path areas_csv() const;
    std::filesystem::path checkpoint() const { return dir / "checkpoint.bin"; }
    std::filesystem::path metrics() const { return dir / "metrics.csv"; }
    std::filesystem::path mesh() const { return dir / "mesh.ply"; }
    std::filesystem::path eval_csv() const { return dir / "eval.csv"; }
    std::filesystem::path sampling_csv() const { return dir / "sampling.csv"; }
    std::string suffix;
};
ArtifactPaths artifact_paths(const RunConfig& cfg);

struct SamplingReport {
    SamplingStats stats;
    std::array<double, 3> survival{};
    std::array<double, 3> reserve{};
};
/// Prior-guided sampling statistics over every other pixel of every camera.
SamplingReport sampling_report(const RunConfig& cfg, const AreaGrid& areas);

void cmd_gen_scene(const RunConfig& cfg, std::ostream& log);
void cmd_fuse(const RunConfig& cfg, std::ostream& log);
/// Returns kExitDivergence when training aborted (the last good checkpoint is written).
int cmd_train(const RunConfig& cfg, std::ostream& log);
/// Empty checkpoint path means the run's own checkpoint; resolution 0 means the basis lattice.
void cmd_extract(const RunConfig& cfg, const std::filesystem::path& checkpoint, int resolution, std::ostream& log);
/// Empty mesh path means the run's extracted mesh. Returns the Chamfer distance.
double cmd_eval(const RunConfig& cfg, const std::filesystem::path& mesh, std::ostream& log);
/// All stages in order.
int cmd_run(const RunConfig& cfg, std::ostream& log);

/// Runs `body`, mapping library errors onto exit codes and printing them to `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace resurf
