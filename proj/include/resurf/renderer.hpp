#pragma once

#include <functional>
#include <span>
#include <vector>

#include "resurf/residual_field.hpp"
#include "resurf/sampler.hpp"
#include "resurf/scene.hpp"

namespace resurf {

struct RenderConfig {
    double log_s = 3.0;
    int patch_half_width = 2;
    Background background = Background::white;
    /// Samples past the point where transmittance drops below this are not evaluated.
    double transmittance_cutoff = 1e-5;

    double s() const { return std::exp(log_s); }
    void validate() const;
};

/// log_s for a logistic whose 4/s width spans `voxels` cells of spacing `spacing`.
double initial_log_s(double spacing, double voxels = 4.0);

double logistic_cdf(double x, double s);

/// Discrete NeuS opacity max((Phi(d0) - Phi(d1)) / Phi(d0), 0), evaluated in log space.
double alpha_from_sdf(double d0, double d1, double s);

struct AlphaGrad {
    double alpha = 0.0;
    double d_d0 = 0.0;
    double d_d1 = 0.0;
    double d_s = 0.0;
};
AlphaGrad alpha_with_grad(double d0, double d1, double s);

/// Alpha compositing result for one ray.
struct RayRender {
    Rgb color{0, 0, 0};
    Vec3 normal;
    double t_final = 1.0;
    std::vector<double> alpha;
    std::vector<double> trans;  // T_i, transmittance before sample i
};

/// C = sum T_i a_i c_i + T_final * background, N = sum T_i a_i n_i.
RayRender composite(std::span<const double> alpha, std::span<const Rgb> colors, std::span<const Vec3> normals,
                    const Rgb& background);

/// Reverse pass of compositing. `g[i]` is dL/dw_i for the weight w_i = T_i a_i and `g_final` is dL/dT_final.
/// Returns dL/da_i = T_i (g_i - Q_{i+1}) with the suffix sum Q_i = g_i a_i + (1 - a_i) Q_{i+1}, Q_K = g_final.
std::vector<double> composite_backward(std::span<const double> alpha, std::span<const double> trans,
                                       std::span<const double> g, double g_final);

/// One traced ray: every evaluated sample plus its compositing state. Samples beyond the transmittance
/// cutoff are dropped; interval i uses sample i's color and normal and alpha(d_i, d_{i+1}).
struct TracedRay {
    RayRender render;
    std::vector<FieldEval> evals;
    std::vector<std::size_t> tape_index;
    std::vector<Vec3> points;
};

using SampleEvaluator = std::function<FieldEval(const Vec3& p, const Vec3& view_dir, std::size_t& tape_index)>;

TracedRay trace_ray(const RaySampleBatch& batch, std::size_t ray, const RenderConfig& cfg, const SampleEvaluator& eval);

/// Evaluator that runs the full field.
template <typename Real>
SampleEvaluator field_evaluator(const ResidualField<Real>& field);
/// Evaluator that uses d = d_basis, n = n_basis and the color decoder.
template <typename Real>
SampleEvaluator basis_evaluator(const ResidualField<Real>& field);

// Losses. All reductions are means in fixed order.

/// Mean over rays of the L1 color error.
double loss_rgb(std::span<const Rgb> rendered, std::span<const Rgb> target);
/// Mean over masked rays of the L1 normal error. Rays with mask == 0 are skipped.
double loss_normal(std::span<const Vec3> rendered, std::span<const Vec3> target, std::span<const uint8_t> mask);
/// Mean of (|n| - 1)^2.
double loss_eikonal(std::span<const Vec3> normals);
double loss_total(double rgb, double patch, double eikonal, double normal, const std::array<double, 3>& lambdas);

/// Normalized cross-correlation; returns false when either patch has (near) zero variance.
bool ncc(std::span<const double> a, std::span<const double> b, double& value, std::vector<double>* d_a = nullptr);

/// Grayscale image with bilinear lookup at continuous pixel coordinates (pixel centers at +0.5).
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    /// False when the 2x2 footprint leaves the image.
    bool sample(double u, double v, double& out) const;
};

/// Planes seen at a shallower angle than this (cosine) from either camera give no patch; it rejects
/// grazing and self-occluded samples.
inline constexpr double kPatchMinCos = 0.4;

/// Warps the (2h+1)^2 patch centered at reference pixel (u, v) onto `neighbor` through the plane
/// (point, normal). Returns false when any warped pixel falls outside the neighbor image, or when the plane
/// faces either camera at a cosine below `min_cos`.
bool warp_patch(const Camera& reference, const Camera& neighbor, const GrayImage& neighbor_image, double u, double v,
                int half_width, const Vec3& point, const Vec3& normal, std::vector<double>& out,
                double min_cos = kPatchMinCos);

/// The reference patch itself, read with the same lookup.
bool reference_patch(const GrayImage& image, double u, double v, int half_width, std::vector<double>& out);

/// Index of the camera whose optical axis is closest in angle to camera `ref`'s.
std::size_t nearest_view(std::span<const Camera> cameras, std::size_t ref);

}  // namespace resurf
