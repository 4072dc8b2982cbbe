#include "resurf/scene.hpp"

#include <numbers>

#include "resurf/rng.hpp"

namespace resurf {

const char* to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::torus: return "torus";
        case ShapeKind::box_sphere_union: return "box_sphere_union";
        case ShapeKind::thin_plate: return "thin_plate";
    }
    return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
    for (ShapeKind k : {ShapeKind::sphere, ShapeKind::torus, ShapeKind::box_sphere_union, ShapeKind::thin_plate})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown scene shape '" + s + "' (expected sphere|torus|box_sphere_union|thin_plate)");
}

const char* to_string(Background bg) { return bg == Background::white ? "white" : "black"; }

Background background_from_string(const std::string& s) {
    if (s == "white") return Background::white;
    if (s == "black") return Background::black;
    throw ConfigError("unknown background '" + s + "' (expected white|black)");
}

Rgb background_color(Background bg) { return bg == Background::white ? Rgb{1, 1, 1} : Rgb{0, 0, 0}; }

void SceneSpec::validate() const {
    if (!(bounds.hi.x > bounds.lo.x && bounds.hi.y > bounds.lo.y && bounds.hi.z > bounds.lo.z))
        throw ConfigError("scene.bounds must have positive extent");
    if (num_cameras < 2) throw ConfigError("scene.cameras must be >= 2");
    if (image_size < 8) throw ConfigError("scene.image_size must be >= 8");
    if (!(focal > 0.0)) throw ConfigError("scene.focal must be > 0");
    const double radius = 0.5 * norm(bounds.extent());
    if (!(camera_distance > radius)) throw ConfigError("scene.camera_distance must place cameras outside the bounds");
}

// ---------------------------------------------------------------------------------------------
// Analytic shapes

namespace {

SdfSample sphere_sdf(const Vec3& p, const Vec3& c, double r) {
    const Vec3 q = p - c;
    const double n = norm(q);
    return {n - r, n > 0.0 ? q / n : Vec3{0, 0, 1}};
}

// Exact rounded-box distance; `half` includes the rounding radius.
SdfSample box_sdf(const Vec3& p, const Vec3& half, double round) {
    const Vec3 b = half - Vec3{round, round, round};
    const Vec3 q = cwise_abs(p) - b;
    const Vec3 qp = cwise_max(q, Vec3{0, 0, 0});
    const double outside = norm(qp);
    SdfSample s;
    if (outside > 0.0) {
        s.value = outside - round;
        for (int a = 0; a < 3; ++a) s.gradient[a] = (p[a] < 0 ? -1.0 : 1.0) * qp[a] / outside;
    } else {
        int axis = 0;
        for (int a = 1; a < 3; ++a)
            if (q[a] > q[axis]) axis = a;
        s.value = q[axis] - round;
        s.gradient[axis] = p[axis] < 0 ? -1.0 : 1.0;
    }
    return s;
}

SdfSample torus_sdf(const Vec3& p, double major, double minor) {
    const double rho = std::hypot(p.x, p.y);
    const double qx = rho - major, qz = p.z;
    const double qn = std::hypot(qx, qz);
    SdfSample s;
    s.value = qn - minor;
    if (qn == 0.0) return s;
    const Vec3 radial = rho > 0.0 ? Vec3{p.x / rho, p.y / rho, 0} : Vec3{1, 0, 0};
    s.gradient = radial * (qx / qn) + Vec3{0, 0, qz / qn};
    return s;
}

// Evaluates `f` in a rotated frame: local = R (p - c), gradient mapped back with R^T.
template <typename F>
SdfSample in_frame(const Vec3& p, const Mat3& r, const Vec3& c, F&& f) {
    SdfSample s = f(r * (p - c));
    s.gradient = r.transposed() * s.gradient;
    return s;
}

SdfSample union_of(const SdfSample& a, const SdfSample& b) { return a.value <= b.value ? a : b; }

const Mat3& torus_frame() {
    static const Mat3 r = Mat3::rotation({1, 0, 0}, 0.5);
    return r;
}
const Mat3& plate_frame() {
    static const Mat3 r = Mat3::rotation(normalized({0.3, 0.0, 1.0}), 0.45);
    return r;
}

}  // namespace

SdfSample scene_sdf(ShapeKind shape, const Vec3& p) {
    switch (shape) {
        case ShapeKind::sphere: return sphere_sdf(p, {0, 0, 0}, 0.6);
        case ShapeKind::torus:
            return in_frame(p, torus_frame(), {0, 0, 0}, [](const Vec3& q) { return torus_sdf(q, 0.5, 0.22); });
        case ShapeKind::box_sphere_union:
            return union_of(box_sdf(p - Vec3{-0.22, -0.05, 0.0}, {0.34, 0.34, 0.34}, 0.06),
                            sphere_sdf(p, {0.3, 0.12, 0.08}, 0.38));
        case ShapeKind::thin_plate:
            return union_of(
                in_frame(p, plate_frame(), {0, 0, -0.05}, [](const Vec3& q) { return box_sdf(q, {0.62, 0.62, 0.07}, 0.02); }),
                sphere_sdf(p, {0.15, -0.1, 0.25}, 0.3));
    }
    throw ConfigError("unknown shape");
}

Rgb scene_albedo(const Vec3& p) {
    return {0.55 + 0.3 * std::sin(19.0 * p.x + 5.0 * std::sin(13.0 * p.y)),
            0.5 + 0.3 * std::sin(17.0 * p.y + 0.7) * std::cos(11.0 * p.z),
            0.45 + 0.3 * std::cos(21.0 * p.z + 7.0 * p.x)};
}

Rgb shade(const Vec3& p, const Vec3& normal) {
    static const Vec3 light = normalized({0.4, -0.5, 0.75});
    const double lambert = 0.4 + 0.6 * std::max(0.0, dot(normalized(normal), light));
    Rgb c = scene_albedo(p);
    for (double& v : c) v = std::clamp(v * lambert, 0.0, 1.0);
    return c;
}

// ---------------------------------------------------------------------------------------------
// Cameras

void Camera::validate() const {
    if (width < 1 || height < 1) throw ConfigError("camera: image size must be positive");
    if (!(focal > 0.0)) throw ConfigError("camera: focal must be > 0");
    const Mat3 rrt = rotation * rotation.transposed();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if (std::abs(rrt(r, c) - (r == c ? 1.0 : 0.0)) > 1e-9) throw ConfigError("camera: rotation not orthonormal");
    if (rotation.determinant() < 0.0) throw ConfigError("camera: rotation is a reflection");
}

Vec3 Camera::center() const { return -(rotation.transposed() * translation); }

std::array<double, 3> Camera::project(const Vec3& world) const {
    const Vec3 c = rotation * world + translation;
    return {focal * c.x / c.z + cx, focal * c.y / c.z + cy, c.z};
}

Ray Camera::ray(double u, double v) const {
    const Vec3 d_cam = normalized({(u - cx) / focal, (v - cy) / focal, 1.0});
    return {center(), normalized(rotation.transposed() * d_cam)};
}

Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height, double focal) {
    const Vec3 fwd = normalized(target - eye);
    Vec3 right = cross(fwd, up);
    if (norm(right) < 1e-9) right = cross(fwd, Vec3{1, 0, 0});
    right = normalized(right);
    const Vec3 down = cross(fwd, right);
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.focal = focal;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.rotation = Mat3::from_rows(right, down, fwd);
    cam.translation = -(cam.rotation * eye);
    return cam;
}

std::vector<Camera> make_cameras(const SceneSpec& spec) {
    spec.validate();
    const Vec3 center = spec.bounds.center();
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Camera> cams;
    for (int k = 0; k < spec.num_cameras; ++k) {
        const double z = 0.8 - 1.6 * (k + 0.5) / spec.num_cameras;
        const double r = std::sqrt(1.0 - z * z);
        const double phi = golden * k;
        const Vec3 dir{r * std::cos(phi), r * std::sin(phi), z};
        cams.push_back(look_at_camera(center + dir * spec.camera_distance, center, {0, 0, 1}, spec.image_size,
                                      spec.image_size, spec.focal));
    }
    return cams;
}

std::vector<Ray> generate_rays(const Camera& cam, std::span<const PixelCoord> pixels) {
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    for (const auto& px : pixels) rays.push_back(cam.ray(px.u, px.v));
    return rays;
}

// ---------------------------------------------------------------------------------------------
// Ground truth

std::vector<float> RenderedView::gray() const {
    std::vector<float> g(hit.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = 0.299f * rgb[3 * i] + 0.587f * rgb[3 * i + 1] + 0.114f * rgb[3 * i + 2];
    return g;
}

RenderedView render_ground_truth(const SceneSpec& spec, const Camera& cam) {
    cam.validate();
    RenderedView view;
    view.width = cam.width;
    view.height = cam.height;
    const std::size_t n = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
    view.rgb.assign(3 * n, 0.0f);
    view.normal.assign(3 * n, 0.0f);
    view.depth.assign(n, 0.0f);
    view.hit.assign(n, 0);
    const Rgb bg = background_color(spec.background);

    for (int j = 0; j < cam.height; ++j) {
        for (int i = 0; i < cam.width; ++i) {
            const std::size_t px = view.pixel(i, j);
            const Ray ray = cam.ray(i + 0.5, j + 0.5);
            const RaySpan span = intersect_box(ray.origin, ray.dir, spec.bounds);
            bool hit = false;
            Vec3 p;
            if (span.hit) {
                double t = std::max(span.t_near, 0.0);
                for (int step = 0; step < 512 && t <= span.t_far; ++step) {
                    p = ray.at(t);
                    const double d = scene_distance(spec.shape, p);
                    if (d < 1e-7) {
                        hit = true;
                        break;
                    }
                    t += d;
                }
            }
            Rgb c = bg;
            if (hit) {
                const Vec3 nrm = normalized(scene_sdf(spec.shape, p).gradient);
                c = shade(p, nrm);
                for (int a = 0; a < 3; ++a) view.normal[3 * px + static_cast<size_t>(a)] = static_cast<float>(nrm[a]);
                view.depth[px] = static_cast<float>((cam.rotation * p + cam.translation).z);
                view.hit[px] = 1;
            }
            for (int a = 0; a < 3; ++a) view.rgb[3 * px + static_cast<size_t>(a)] = static_cast<float>(c[static_cast<size_t>(a)]);
        }
    }
    return view;
}

TriangleMesh ground_truth_mesh(const SceneSpec& spec, int resolution) {
    const VoxelGrid lattice = VoxelGrid::covering(spec.bounds, resolution);
    std::vector<float> values(lattice.size());
    const GridIndex res = lattice.resolution();
    for (int k = 0; k < res[2]; ++k)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i < res[0]; ++i)
                values[lattice.index(i, j, k)] =
                    static_cast<float>(scene_distance(spec.shape, lattice.vertex_position(i, j, k)));
    return marching_cubes(lattice.with_values(std::move(values)));
}

// ---------------------------------------------------------------------------------------------
// Local priors

void PriorCorruption::validate() const {
    if (resolution < 4) throw ConfigError("priors.resolution must be >= 4");
    if (!(depth_crop > -1.0 && depth_crop <= 1.0)) throw ConfigError("priors.depth_crop must lie in (-1, 1]");
    if (bias < 0.0 || ripple_amplitude < 0.0 || ripple_frequency < 0.0 || erosion < 0.0 || noise_sigma < 0.0)
        throw ConfigError("prior corruption magnitudes must be >= 0");
}

Vec3 group_view_direction(int group, int group_count) {
    if (group_count < 1 || group < 0 || group >= group_count) throw ConfigError("invalid prior group index");
    const double theta = 2.0 * std::numbers::pi * group / group_count;
    return normalized({std::cos(theta), std::sin(theta), 0.3 * std::cos(theta)});
}

LocalFieldTransform group_transform(const SceneSpec& spec, int group, int group_count) {
    const Vec3 fwd = group_view_direction(group, group_count);
    const Vec3 right = normalized(cross(fwd, Vec3{0, 0, 1}));
    const Vec3 down = cross(fwd, right);
    LocalFieldTransform t;
    t.rotation = Mat3::from_rows(right, down, fwd);
    t.translation = -(t.rotation * spec.bounds.center());
    t.scale = 1.0 / (0.5 * norm(spec.bounds.extent()) * 1.05);
    return t;
}

LocalPrior make_local_prior(const SceneSpec& spec, int group, int group_count, const PriorCorruption& corruption,
                            uint64_t seed) {
    spec.validate();
    corruption.validate();
    const Vec3 view = group_view_direction(group, group_count);
    const LocalFieldTransform xf = group_transform(spec, group, group_count);

    const int r = corruption.resolution;
    const double h = 2.0 / (r - 1);
    const int rz = std::max(2, static_cast<int>(std::floor((corruption.depth_crop + 1.0) / h + 1e-9)) + 1);

    Rng rng(seed);
    const Vec3 ripple_dir = normalized({rng.normal(), rng.normal(), rng.normal()});
    const double ripple_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    VoxelGrid shape({r, r, rz}, {-1, -1, -1}, h);
    std::vector<float> values(shape.size());
    for (int k = 0; k < rz; ++k) {
        for (int j = 0; j < r; ++j) {
            for (int i = 0; i < r; ++i) {
                const Vec3 p = from_local(shape.vertex_position(i, j, k), xf);
                const SdfSample s = scene_sdf(spec.shape, p);
                double v = s.value + corruption.bias;
                v += corruption.ripple_amplitude * std::sin(corruption.ripple_frequency * dot(ripple_dir, p) + ripple_phase);
                if (corruption.erosion > 0.0) {
                    const double facing = std::clamp(dot(normalized(s.gradient), view) / 0.5, 0.0, 1.0);
                    v += corruption.erosion * facing * facing * (3.0 - 2.0 * facing);
                }
                if (corruption.noise_sigma > 0.0) v += corruption.noise_sigma * rng.normal();
                values[shape.index(i, j, k)] = static_cast<float>(v);
            }
        }
    }
    char id[32];
    std::snprintf(id, sizeof(id), "group_%02d", group);
    return {id, shape.with_values(std::move(values)), xf};
}

}  // namespace resurf
