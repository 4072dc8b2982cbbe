#include "resurf/field_grid.hpp"

#include <numeric>

#include "resurf/binary_io.hpp"

namespace resurf {

VoxelGrid::VoxelGrid(GridIndex resolution, Vec3 origin, double spacing, std::vector<float> values)
    : resolution_(resolution), origin_(origin), spacing_(spacing), values_(std::move(values)) {
    for (int r : resolution_)
        if (r < 2) throw ConfigError("VoxelGrid: every resolution component must be >= 2");
    if (!(spacing_ > 0.0)) throw ConfigError("VoxelGrid: spacing must be positive");
    const std::size_t expected = static_cast<std::size_t>(resolution_[0]) * static_cast<std::size_t>(resolution_[1]) *
                                 static_cast<std::size_t>(resolution_[2]);
    if (values_.size() != expected) throw ConfigError("VoxelGrid: values length does not match resolution");
}

VoxelGrid::VoxelGrid(GridIndex resolution, Vec3 origin, double spacing, float fill)
    : VoxelGrid(resolution, origin, spacing,
                std::vector<float>(static_cast<std::size_t>(std::max(resolution[0], 0)) *
                                       static_cast<std::size_t>(std::max(resolution[1], 0)) *
                                       static_cast<std::size_t>(std::max(resolution[2], 0)),
                                   fill)) {}

VoxelGrid VoxelGrid::covering(const Box& box, int res, float fill) {
    const Vec3 ext = box.extent();
    const double longest = std::max({ext.x, ext.y, ext.z});
    const double spacing = longest / static_cast<double>(res - 1);
    GridIndex r{};
    for (int a = 0; a < 3; ++a) r[a] = std::max(2, static_cast<int>(std::ceil(ext[a] / spacing - 1e-9)) + 1);
    return VoxelGrid(r, box.lo, spacing, fill);
}

GridIndex VoxelGrid::unravel(std::size_t flat) const {
    const auto rx = static_cast<std::size_t>(resolution_[0]);
    const auto ry = static_cast<std::size_t>(resolution_[1]);
    return {static_cast<int>(flat % rx), static_cast<int>((flat / rx) % ry), static_cast<int>(flat / (rx * ry))};
}

Box VoxelGrid::bounds() const {
    const Vec3 hi = origin_ + Vec3{double(resolution_[0] - 1), double(resolution_[1] - 1),
                                   double(resolution_[2] - 1)} * spacing_;
    return {origin_, hi};
}

GridIndex locate_cell(const VoxelGrid& grid, const Vec3& p, Vec3& frac) {
    GridIndex cell{};
    for (int a = 0; a < 3; ++a) {
        const double u = (p[a] - grid.origin()[a]) / grid.spacing();
        const int i = std::clamp(static_cast<int>(std::floor(u)), 0, grid.resolution()[a] - 2);
        cell[a] = i;
        frac[a] = u - static_cast<double>(i);
    }
    return cell;
}

namespace {

struct Corners {
    std::array<double, 8> v;  // bit0 = x, bit1 = y, bit2 = z
};

Corners gather(const VoxelGrid& g, const GridIndex& c) {
    Corners out{};
    for (int k = 0; k < 8; ++k)
        out.v[static_cast<size_t>(k)] = g.at(c[0] + (k & 1), c[1] + ((k >> 1) & 1), c[2] + ((k >> 2) & 1));
    return out;
}

double trilerp(const Corners& c, const Vec3& f) {
    const double x00 = c.v[0] + (c.v[1] - c.v[0]) * f.x;
    const double x10 = c.v[2] + (c.v[3] - c.v[2]) * f.x;
    const double x01 = c.v[4] + (c.v[5] - c.v[4]) * f.x;
    const double x11 = c.v[6] + (c.v[7] - c.v[6]) * f.x;
    const double y0 = x00 + (x10 - x00) * f.y;
    const double y1 = x01 + (x11 - x01) * f.y;
    return y0 + (y1 - y0) * f.z;
}

Vec3 trilerp_gradient(const Corners& c, const Vec3& f, double spacing) {
    Vec3 g{};
    for (int k = 0; k < 8; ++k) {
        const double bx = (k & 1) ? f.x : 1.0 - f.x;
        const double by = ((k >> 1) & 1) ? f.y : 1.0 - f.y;
        const double bz = ((k >> 2) & 1) ? f.z : 1.0 - f.z;
        const double sx = (k & 1) ? 1.0 : -1.0;
        const double sy = ((k >> 1) & 1) ? 1.0 : -1.0;
        const double sz = ((k >> 2) & 1) ? 1.0 : -1.0;
        const double v = c.v[static_cast<size_t>(k)];
        g.x += v * sx * by * bz;
        g.y += v * bx * sy * bz;
        g.z += v * bx * by * sz;
    }
    return g / spacing;
}

}  // namespace

double interpolate(const VoxelGrid& grid, const Vec3& p) {
    const Box b = grid.bounds();
    const Vec3 q = b.clamp(p);
    Vec3 f;
    const GridIndex cell = locate_cell(grid, q, f);
    const double inside = trilerp(gather(grid, cell), f);
    if (q == p) return inside;
    return inside + norm(p - q);
}

Vec3 grid_gradient(const VoxelGrid& grid, const Vec3& p) {
    const Box b = grid.bounds();
    const Vec3 q = b.clamp(p);
    Vec3 f;
    const GridIndex cell = locate_cell(grid, q, f);
    Vec3 g = trilerp_gradient(gather(grid, cell), f, grid.spacing());
    if (q == p) return g;
    const Vec3 out = p - q;
    for (int a = 0; a < 3; ++a)
        if (out[a] != 0.0) g[a] = 0.0;
    return g + out / norm(out);
}

std::vector<double> gaussian_kernel(double sigma_voxels) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_voxels));
    std::vector<double> k(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma_voxels * sigma_voxels));
        k[static_cast<size_t>(i + radius)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

VoxelGrid gaussian_smooth(const VoxelGrid& grid, double sigma_voxels) {
    if (sigma_voxels < 0.0) throw ConfigError("gaussian_smooth: sigma must be non-negative");
    if (sigma_voxels == 0.0) return grid;

    const std::vector<double> kernel = gaussian_kernel(sigma_voxels);
    const int radius = static_cast<int>(kernel.size() / 2);
    const GridIndex res = grid.resolution();
    std::vector<double> cur(grid.values().begin(), grid.values().end());
    std::vector<double> next(cur.size());
    std::vector<double> line;

    for (int axis = 0; axis < 3; ++axis) {
        const int n = res[axis];
        line.resize(static_cast<size_t>(n));
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (int u = 0; u < res[a2]; ++u) {
            for (int v = 0; v < res[a1]; ++v) {
                GridIndex idx{};
                idx[a2] = u;
                idx[a1] = v;
                for (int i = 0; i < n; ++i) {
                    idx[axis] = i;
                    line[static_cast<size_t>(i)] = cur[grid.index(idx[0], idx[1], idx[2])];
                }
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int k = -radius; k <= radius; ++k) {
                        const int j = std::clamp(i + k, 0, n - 1);
                        acc += kernel[static_cast<size_t>(k + radius)] * line[static_cast<size_t>(j)];
                    }
                    idx[axis] = i;
                    next[grid.index(idx[0], idx[1], idx[2])] = acc;
                }
            }
        }
        std::swap(cur, next);
    }
    std::vector<float> out(cur.size());
    std::transform(cur.begin(), cur.end(), out.begin(), [](double v) { return static_cast<float>(v); });
    return grid.with_values(std::move(out));
}

void LocalFieldTransform::validate() const {
    if (!(scale > 0.0)) throw ConfigError("LocalFieldTransform: scale must be positive");
    const Mat3 rtr = rotation.transposed() * rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9)
                throw ConfigError("LocalFieldTransform: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
        throw ConfigError("LocalFieldTransform: rotation determinant must be +1");
}

Vec3 to_local(const Vec3& p, const LocalFieldTransform& t) { return (t.rotation * p + t.translation) * t.scale; }

Vec3 from_local(const Vec3& q, const LocalFieldTransform& t) {
    return t.rotation.transposed() * (q / t.scale - t.translation);
}

std::vector<uint8_t> encode_sdfg(const VoxelGrid& grid) {
    ByteWriter w;
    w.bytes("SDFG");
    w.put<uint32_t>(kSdfgVersion);
    for (int r : grid.resolution()) w.put<uint32_t>(static_cast<uint32_t>(r));
    for (int a = 0; a < 3; ++a) w.put<double>(grid.origin()[a]);
    w.put<double>(grid.spacing());
    w.put_array<float>(grid.values());
    return std::move(w.data());
}

VoxelGrid decode_sdfg(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect("SDFG");
    const auto version = r.get<uint32_t>();
    if (version != kSdfgVersion) throw FormatError("SDFG: unsupported version " + std::to_string(version));
    GridIndex res{};
    for (int& v : res) v = static_cast<int>(r.get<uint32_t>());
    Vec3 origin;
    for (int a = 0; a < 3; ++a) origin[a] = r.get<double>();
    const auto spacing = r.get<double>();
    const std::size_t n = static_cast<std::size_t>(res[0]) * static_cast<std::size_t>(res[1]) *
                          static_cast<std::size_t>(res[2]);
    std::vector<float> values(n);
    r.get_array<float>(values);
    if (!r.at_end()) throw FormatError("SDFG: trailing bytes");
    return VoxelGrid(res, origin, spacing, std::move(values));
}

void write_sdfg(const std::filesystem::path& path, const VoxelGrid& grid) { write_file(path, encode_sdfg(grid)); }

VoxelGrid read_sdfg(const std::filesystem::path& path) { return decode_sdfg(read_file(path)); }

}  // namespace resurf
