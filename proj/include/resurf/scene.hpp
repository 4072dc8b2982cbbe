#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "resurf/fusion.hpp"
#include "resurf/meshing.hpp"

namespace resurf {

using Rgb = std::array<double, 3>;

enum class ShapeKind { sphere, torus, box_sphere_union, thin_plate };
const char* to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& s);

enum class Background { white, black };
const char* to_string(Background bg);
Background background_from_string(const std::string& s);
Rgb background_color(Background bg);

struct SceneSpec {
    ShapeKind shape = ShapeKind::sphere;
    Box bounds{{-1, -1, -1}, {1, 1, 1}};
    int num_cameras = 16;
    int image_size = 96;
    double focal = 200.0;
    double camera_distance = 2.6;
    Background background = Background::white;

    void validate() const;
    bool operator==(const SceneSpec&) const = default;
};

struct SdfSample {
    double value = 0.0;
    Vec3 gradient;
};

/// Analytic SDF of the scene shape. Primitives are exact; composites are min-unions.
SdfSample scene_sdf(ShapeKind shape, const Vec3& p);
inline double scene_distance(ShapeKind shape, const Vec3& p) { return scene_sdf(shape, p).value; }

/// Procedural surface albedo.
Rgb scene_albedo(const Vec3& p);
/// Albedo times a Lambertian term under a fixed directional light plus ambient.
Rgb shade(const Vec3& p, const Vec3& normal);

/// Pinhole camera; x_cam = rotation * x_world + translation, looking down +z, image y down.
struct Camera {
    int width = 0;
    int height = 0;
    double focal = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat3 rotation = Mat3::identity();
    Vec3 translation{};

    void validate() const;
    Vec3 center() const;
    /// Unit viewing direction of the optical axis in world space.
    Vec3 forward() const { return rotation.row(2); }
    /// Continuous pixel coordinates and camera-space depth.
    std::array<double, 3> project(const Vec3& world) const;
    /// Ray through continuous pixel coordinates (u, v). Pixel (i, j) has its center at (i + 0.5, j + 0.5).
    Ray ray(double u, double v) const;
};

Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height, double focal);
/// Cameras on a Fibonacci spiral around the scene center.
std::vector<Camera> make_cameras(const SceneSpec& spec);

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};
std::vector<Ray> generate_rays(const Camera& cam, std::span<const PixelCoord> pixels);

/// Ground truth for one camera. Arrays are row-major, one entry (or RGB triple) per pixel.
struct RenderedView {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;
    std::vector<float> normal;
    std::vector<float> depth;  // camera-space z; 0 for background
    std::vector<uint8_t> hit;

    std::size_t pixel(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(width) + static_cast<std::size_t>(i); }
    Rgb color_at(std::size_t px) const { return {rgb[3 * px], rgb[3 * px + 1], rgb[3 * px + 2]}; }
    Vec3 normal_at(std::size_t px) const { return {normal[3 * px], normal[3 * px + 1], normal[3 * px + 2]}; }
    /// Luminance image used for patch comparisons.
    std::vector<float> gray() const;
};

/// Sphere-traces the analytic SDF through every pixel center.
RenderedView render_ground_truth(const SceneSpec& spec, const Camera& cam);

/// Corruption model for a synthetic local prior.
struct PriorCorruption {
    int resolution = 64;        // vertices along the local x/y axes
    double depth_crop = 1.0;    // local z extent is [-1, depth_crop]; 1 keeps everything
    double bias = 0.0;          // constant SDF offset, world units
    double ripple_amplitude = 0.0;
    double ripple_frequency = 0.0;
    double erosion = 0.0;       // extra offset on surfaces facing away from the group's viewpoint
    double noise_sigma = 0.0;   // per-vertex Gaussian noise, world units

    void validate() const;
    bool operator==(const PriorCorruption&) const = default;
};

/// Viewing direction (unit, pointing from the viewpoint toward the scene center) of group g out of m.
Vec3 group_view_direction(int group, int group_count);

/// World-to-local transform of a group: camera-aligned rotation, similarity scale so the rotated scene box fits.
LocalFieldTransform group_transform(const SceneSpec& spec, int group, int group_count);

/// Samples the analytic SDF on a camera-aligned local lattice cropped in depth, then corrupts it.
LocalPrior make_local_prior(const SceneSpec& spec, int group, int group_count, const PriorCorruption& corruption,
                            uint64_t seed);

/// Marching cubes of the analytic SDF over the scene bounds.
TriangleMesh ground_truth_mesh(const SceneSpec& spec, int resolution = 128);

}  // namespace resurf
