#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "resurf/renderer.hpp"

namespace resurf {

struct TrainConfig {
    int iterations = 3000;
    int rays_per_batch = 1024;
    int eikonal_points = 4096;
    double lr_tables = 1e-2;
    double lr_decoders = 1e-3;
    double lr_log_s = 1e-2;
    /// Cosine decay ends at this fraction of each base learning rate.
    double final_lr_factor = 0.05;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.99;
    double adam_eps = 1e-15;
    std::array<double, 3> lambdas{1.0, 0.1, 0.1};
    /// Chamfer evaluation period in iterations; 0 evaluates only after the last iteration.
    int eval_every = 0;
    int eval_samples = 20000;
    /// Samples whose compositing weight is below this do not get a warped patch.
    double patch_min_weight = 1e-3;
    int max_empty_batches = 100;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Everything the optimizer needs from the synthetic scene.
struct TrainingData {
    SceneSpec spec;
    std::vector<Camera> cameras;
    std::vector<RenderedView> views;
    std::vector<GrayImage> gray;
    std::vector<std::size_t> neighbors;
    TriangleMesh gt_mesh;
};
TrainingData make_training_data(const SceneSpec& spec, int gt_mesh_resolution = 128);

struct IterationMetrics {
    int iteration = 0;
    double total = 0.0;
    double rgb = 0.0;
    double patch = 0.0;
    double eikonal = 0.0;
    double normal = 0.0;
    double s = 0.0;
    std::size_t samples = 0;
    std::size_t patch_rays = 0;
    double chamfer = std::numeric_limits<double>::quiet_NaN();
};

void write_metrics_csv(const std::filesystem::path& path, std::span<const IterationMetrics> trace);

/// Pixel-ray batch for one iteration.
struct PixelBatch {
    std::vector<std::size_t> view;
    std::vector<PixelCoord> pixel;
    std::vector<std::size_t> flat_pixel;
    std::vector<Ray> rays;
};

/// Samples d = d_basis + d_offset on a lattice covering the basis domain; `resolution` equal to the basis
/// resolution (or 0) reuses the basis lattice exactly.
VoxelGrid sample_field(const ResidualField<float>& field, int resolution = 0);
/// Marching cubes of sample_field(); `mask` applies only when the basis lattice is reused.
TriangleMesh extract_mesh(const ResidualField<float>& field, int resolution = 0, std::span<const uint8_t> mask = {});

/// Renders every pixel of `cam` with prior-guided samples. basis_only drops the offset network.
std::vector<Rgb> render_view(const ResidualField<float>& field, const Camera& cam, const AreaGrid& areas,
                             const SamplingConfig& sampling, const RenderConfig& render, bool basis_only, uint64_t seed);

struct TrainResult {
    std::vector<IterationMetrics> trace;
    int iterations_done = 0;
    bool diverged = false;
    std::string message;
};

class Trainer {
public:
    Trainer(const TrainingData& data, std::shared_ptr<const VoxelGrid> basis, const AreaGrid& areas, FieldConfig field_cfg,
            SamplingConfig sampling, RenderConfig render, TrainConfig cfg, uint64_t seed, std::vector<uint8_t> mask = {});

    /// Resumes from stored parameters.
    void load(const Checkpoint& ck);
    Checkpoint checkpoint() const;

    PixelBatch make_batch(int iteration) const;
    /// One optimizer step. Throws DivergenceError on a non-finite loss, leaving parameters untouched.
    IterationMetrics step();
    /// Batch loss of `iteration` at the current parameters; gradients are added to `grads` (shaped like the
    /// parameters). Nothing is updated.
    IterationMetrics loss_and_gradient(int iteration, FieldParams<float>& grads, double& d_log_s) const;
    /// Replaces parameters and log s without touching the optimizer state.
    void set_state(const FieldParams<float>& params, double log_s);
    /// Runs the remaining iterations. Divergence restores the last good parameters and is reported in the
    /// result instead of being thrown. `on_iteration` sees every accepted iteration.
    TrainResult run(const std::function<void(const IterationMetrics&)>& on_iteration = {});

    double evaluate_chamfer() const;

    const ResidualField<float>& field() const { return *field_; }
    const RenderConfig& render_config() const { return render_; }
    const TrainConfig& config() const { return cfg_; }
    const SamplingConfig& sampling() const { return sampling_; }
    double log_s() const { return render_.log_s; }
    int iteration() const { return iteration_; }

private:
    struct Adam {
        std::vector<float> m, v;
    };
    double learning_rate(double base) const;
    void apply_update(const FieldParams<float>& grads, double d_log_s);

    const TrainingData& data_;
    std::shared_ptr<const VoxelGrid> basis_;
    const AreaGrid& areas_;
    SamplingConfig sampling_;
    RenderConfig render_;
    TrainConfig cfg_;
    uint64_t seed_;
    std::vector<uint8_t> mask_;
    std::unique_ptr<ResidualField<float>> field_;
    std::array<Adam, 4> adam_;
    double log_s_m_ = 0.0, log_s_v_ = 0.0;
    int iteration_ = 0;
    int empty_streak_ = 0;
    std::vector<std::size_t> near_cells_;
};

}  // namespace resurf
