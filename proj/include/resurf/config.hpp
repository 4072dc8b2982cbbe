#pragma once

#include <filesystem>
#include <string>

#include "resurf/fusion.hpp"
#include "resurf/renderer.hpp"
#include "resurf/residual_field.hpp"
#include "resurf/sampler.hpp"
#include "resurf/scene.hpp"
#include "resurf/trainer.hpp"

namespace resurf {

struct PriorConfig {
    int groups = 2;
    /// Default corruption: a shrinking bias, a low-frequency ripple and per-vertex noise.
    PriorCorruption corruption{.resolution = 64,
                               .depth_crop = 1.0,
                               .bias = 0.03,
                               .ripple_amplitude = 0.015,
                               .ripple_frequency = 8.0,
                               .erosion = 0.0,
                               .noise_sigma = 0.005};

    void validate() const;
    bool operator==(const PriorConfig&) const = default;
};

struct RenderSettings {
    int patch_half_width = 2;
    /// Initial logistic width, in basis voxels.
    double initial_width_voxels = 4.0;
    double transmittance_cutoff = 1e-5;

    void validate() const;
    bool operator==(const RenderSettings&) const = default;
};

/// Full run description. Every key is optional in the JSON form; unknown keys are rejected.
struct RunConfig {
    SceneSpec scene{};
    PriorConfig priors{};
    FusionConfig fusion{};
    /// Basis domain padding as a fraction of the scene bounds.
    double domain_padding = 0.05;
    SamplingConfig sampling{};
    FieldConfig field{};
    RenderSettings render{};
    TrainConfig train{};
    int gt_mesh_resolution = 128;
    std::string output_dir = "out";
    uint64_t seed = 0;

    void validate() const;
    Box basis_domain() const { return scene.bounds.padded(domain_padding); }
    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& json_text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace resurf
