#include "resurf/meshing.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <fstream>
#include <numeric>
#include <sstream>

#include "resurf/binary_io.hpp"
#include "resurf/rng.hpp"

namespace resurf {

double TriangleMesh::area() const {
    double a = 0.0;
    for (const auto& t : triangles)
        a += 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
    return a;
}

double TriangleMesh::signed_volume() const {
    double v = 0.0;
    for (const auto& t : triangles) v += dot(vertices[t[0]], cross(vertices[t[1]], vertices[t[2]])) / 6.0;
    return v;
}

namespace {

Vec3 corner_offset(int k) { return {double(k & 1), double((k >> 1) & 1), double((k >> 2) & 1)}; }

// The table is derived rather than transcribed: on every cube face the iso-contour is traced as oriented
// segments (inside region on the left when seen from outside), segments are chained into loops across
// faces, and each loop is fan-triangulated. Ambiguous faces always separate the inside corners, which
// only depends on the shared face's corner signs, so neighbouring cells agree and the result is watertight.
MarchingCubesTable build_table() {
    MarchingCubesTable table{};
    int e = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const int bit = 1 << axis;
        for (int k = 0; k < 8; ++k)
            if (!(k & bit)) table.edge_corners[static_cast<size_t>(e++)] = {k, k | bit};
    }
    auto edge_of = [&](int a, int b) {
        for (int i = 0; i < 12; ++i) {
            const auto& ec = table.edge_corners[static_cast<size_t>(i)];
            if ((ec[0] == a && ec[1] == b) || (ec[0] == b && ec[1] == a)) return i;
        }
        return -1;
    };

    // Faces as corner cycles, counter-clockwise when viewed from outside the cube.
    std::array<std::array<int, 4>, 6> faces{};
    for (int axis = 0; axis < 3; ++axis) {
        for (int side = 0; side < 2; ++side) {
            const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
            std::array<int, 4> cyc{};
            const int pattern[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            for (int i = 0; i < 4; ++i)
                cyc[static_cast<size_t>(i)] = (side << axis) | (pattern[i][0] << a1) | (pattern[i][1] << a2);
            Vec3 outward{};
            outward[axis] = side ? 1.0 : -1.0;
            const Vec3 n = cross(corner_offset(cyc[1]) - corner_offset(cyc[0]),
                                 corner_offset(cyc[2]) - corner_offset(cyc[1]));
            if (dot(n, outward) < 0) std::swap(cyc[1], cyc[3]);
            faces[static_cast<size_t>(axis * 2 + side)] = cyc;
        }
    }

    for (int config = 0; config < 256; ++config) {
        auto inside = [&](int corner) { return (config >> corner) & 1; };
        std::array<int, 12> next{};
        next.fill(-1);
        for (const auto& f : faces) {
            for (int k = 0; k < 4; ++k) {
                const int qk = f[static_cast<size_t>(k)], qk1 = f[static_cast<size_t>((k + 1) % 4)];
                if (!(inside(qk) && !inside(qk1))) continue;
                int m = k;
                while (inside(f[static_cast<size_t>(m)])) m = (m + 3) % 4;
                const int start = edge_of(qk, qk1);
                const int end = edge_of(f[static_cast<size_t>(m)], f[static_cast<size_t>((m + 1) % 4)]);
                next[static_cast<size_t>(start)] = end;
            }
        }
        std::array<bool, 12> seen{};
        int out = 0;
        auto& tris = table.triangles[static_cast<size_t>(config)];
        tris.fill(-1);
        for (int s = 0; s < 12; ++s) {
            if (next[static_cast<size_t>(s)] < 0 || seen[static_cast<size_t>(s)]) continue;
            std::vector<int> loop;
            for (int cur = s; !seen[static_cast<size_t>(cur)]; cur = next[static_cast<size_t>(cur)]) {
                seen[static_cast<size_t>(cur)] = true;
                loop.push_back(cur);
            }
            // Loops run with the inside on the left; reverse the fan so normals point outward.
            for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
                tris[static_cast<size_t>(out++)] = static_cast<int8_t>(loop[0]);
                tris[static_cast<size_t>(out++)] = static_cast<int8_t>(loop[i + 1]);
                tris[static_cast<size_t>(out++)] = static_cast<int8_t>(loop[i]);
            }
        }
    }
    return table;
}

}  // namespace

const MarchingCubesTable& marching_cubes_table() {
    static const MarchingCubesTable table = build_table();
    return table;
}

TriangleMesh marching_cubes(const VoxelGrid& field, double iso, std::span<const uint8_t> mask) {
    const auto& table = marching_cubes_table();
    const GridIndex res = field.resolution();
    const bool masked = !mask.empty();
    if (masked && mask.size() != field.size()) throw ConfigError("marching_cubes: mask size mismatch");

    TriangleMesh mesh;
    // Vertex id per lattice edge, keyed by (lower lattice vertex, axis). Crossings within kSnap of a lattice
    // vertex are moved onto it and shared, so near-iso corners collapse triangles instead of leaving
    // slivers that would be culled and open a hole.
    constexpr double kSnap = 1e-3;
    std::array<std::vector<int32_t>, 3> edge_vertex;
    for (auto& v : edge_vertex) v.assign(field.size(), -1);
    std::vector<int32_t> corner_vertex(field.size(), -1);
    const auto values = field.values();

    auto vertex_at_corner = [&](std::size_t idx, const GridIndex& g) -> uint32_t {
        int32_t& slot = corner_vertex[idx];
        if (slot < 0) {
            slot = static_cast<int32_t>(mesh.vertices.size());
            mesh.vertices.push_back(field.vertex_position(g[0], g[1], g[2]));
        }
        return static_cast<uint32_t>(slot);
    };

    auto vertex_on_edge = [&](std::size_t lo_idx, int axis, const GridIndex& lo) -> uint32_t {
        int32_t& slot = edge_vertex[static_cast<size_t>(axis)][lo_idx];
        if (slot >= 0) return static_cast<uint32_t>(slot);
        GridIndex hi = lo;
        hi[static_cast<size_t>(axis)] += 1;
        const std::size_t hi_idx = field.index(hi[0], hi[1], hi[2]);
        const double va = values[lo_idx];
        const double vb = values[hi_idx];
        const double t = std::clamp((iso - va) / (vb - va), 0.0, 1.0);
        if (t < kSnap) return static_cast<uint32_t>(slot = static_cast<int32_t>(vertex_at_corner(lo_idx, lo)));
        if (t > 1.0 - kSnap) return static_cast<uint32_t>(slot = static_cast<int32_t>(vertex_at_corner(hi_idx, hi)));
        Vec3 pos = field.vertex_position(lo[0], lo[1], lo[2]);
        pos[axis] += t * field.spacing();
        slot = static_cast<int32_t>(mesh.vertices.size());
        mesh.vertices.push_back(pos);
        return static_cast<uint32_t>(slot);
    };

    bool any_crossing = false;
    for (int k = 0; k + 1 < res[2]; ++k) {
        for (int j = 0; j + 1 < res[1]; ++j) {
            for (int i = 0; i + 1 < res[0]; ++i) {
                int config = 0;
                bool skip = false;
                std::array<std::size_t, 8> idx{};
                for (int c = 0; c < 8; ++c) {
                    idx[static_cast<size_t>(c)] = field.index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                    if (masked && !mask[idx[static_cast<size_t>(c)]]) skip = true;
                    if (values[idx[static_cast<size_t>(c)]] < iso) config |= 1 << c;
                }
                if (config == 0 || config == 255) continue;
                any_crossing = true;
                if (skip) continue;
                const auto& tri = table.triangles[static_cast<size_t>(config)];
                for (int t = 0; t < 16 && tri[static_cast<size_t>(t)] >= 0; t += 3) {
                    std::array<uint32_t, 3> ids{};
                    for (int v = 0; v < 3; ++v) {
                        const int edge = tri[static_cast<size_t>(t + v)];
                        const auto& ec = table.edge_corners[static_cast<size_t>(edge)];
                        const int c0 = ec[0];
                        const int axis = edge / 4;
                        const GridIndex lo{i + (c0 & 1), j + ((c0 >> 1) & 1), k + ((c0 >> 2) & 1)};
                        ids[static_cast<size_t>(v)] = vertex_on_edge(idx[static_cast<size_t>(c0)], axis, lo);
                    }
                    if (ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2]) continue;
                    const Vec3& a = mesh.vertices[ids[0]];
                    const double area2 = norm(cross(mesh.vertices[ids[1]] - a, mesh.vertices[ids[2]] - a));
                    if (0.5 * area2 <= 1e-12) continue;
                    mesh.triangles.push_back(ids);
                }
            }
        }
    }
    if (!any_crossing) throw EmptySurface("marching_cubes: field has no crossing of the iso level");
    return mesh;
}

MeshTopology analyze_topology(const TriangleMesh& mesh) {
    MeshTopology topo;
    std::vector<uint64_t> edges;
    edges.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            const uint64_t a = t[static_cast<size_t>(e)], b = t[static_cast<size_t>((e + 1) % 3)];
            edges.push_back(std::min(a, b) << 32 | std::max(a, b));
        }
    }
    std::sort(edges.begin(), edges.end());
    std::size_t unique = 0;
    for (std::size_t i = 0; i < edges.size();) {
        std::size_t j = i;
        while (j < edges.size() && edges[j] == edges[i]) ++j;
        const std::size_t count = j - i;
        if (count == 1) ++topo.boundary_edges;
        if (count > 2) ++topo.nonmanifold_edges;
        ++unique;
        i = j;
    }

    // Union-find over vertices referenced by triangles.
    std::vector<uint32_t> parent(mesh.vertices.size());
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<uint8_t> used(mesh.vertices.size(), 0);
    for (const auto& t : mesh.triangles) {
        for (auto v : t) used[v] = 1;
        const uint32_t r0 = find(t[0]);
        parent[find(t[1])] = r0;
        parent[find(t[2])] = r0;
    }
    std::size_t used_count = 0;
    for (uint32_t v = 0; v < mesh.vertices.size(); ++v) {
        if (!used[v]) continue;
        ++used_count;
        if (find(v) == v) ++topo.components;
    }
    topo.euler_characteristic =
        static_cast<long>(used_count) - static_cast<long>(unique) + static_cast<long>(mesh.triangles.size());
    return topo;
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, uint64_t seed) {
    if (mesh.empty()) throw EmptySurface("sample_surface: empty mesh");
    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        total += 0.5 * norm(cross(mesh.vertices[t[1]] - mesh.vertices[t[0]], mesh.vertices[t[2]] - mesh.vertices[t[0]]));
        cumulative[i] = total;
    }
    Rng rng(seed);
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        const auto& t = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        out.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    }
    return out;
}

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using BPoint = bg::model::point<double, 3, bg::cs::cartesian>;

double mean_nearest_distance(std::span<const Vec3> from, std::span<const Vec3> to) {
    if (from.empty() || to.empty()) throw EmptySurface("mean_nearest_distance: empty point set");
    std::vector<BPoint> pts;
    pts.reserve(to.size());
    for (const auto& p : to) pts.emplace_back(p.x, p.y, p.z);
    const bgi::rtree<BPoint, bgi::rstar<16>> tree(pts.begin(), pts.end());
    double sum = 0.0;
    std::vector<BPoint> hit;
    for (const auto& p : from) {
        hit.clear();
        const BPoint q(p.x, p.y, p.z);
        tree.query(bgi::nearest(q, 1), std::back_inserter(hit));
        sum += bg::distance(q, hit.front());
    }
    return sum / static_cast<double>(from.size());
}

double chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_samples, uint64_t seed) {
    if (a.empty() || b.empty()) throw EmptySurface("chamfer: empty mesh");
    const auto sa = sample_surface(a, n_samples, seed);
    const auto sb = sample_surface(b, n_samples, seed);
    return 0.5 * (mean_nearest_distance(sa, sb) + mean_nearest_distance(sb, sa));
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
    ByteWriter w;
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n"
           << "element vertex " << mesh.vertices.size() << "\n"
           << "property float x\nproperty float y\nproperty float z\n"
           << "element face " << mesh.triangles.size() << "\n"
           << "property list uchar int vertex_indices\nend_header\n";
    w.bytes(header.str());
    for (const auto& v : mesh.vertices) {
        w.put<float>(static_cast<float>(v.x));
        w.put<float>(static_cast<float>(v.y));
        w.put<float>(static_cast<float>(v.z));
    }
    for (const auto& t : mesh.triangles) {
        w.put<uint8_t>(3);
        for (auto v : t) w.put<int32_t>(static_cast<int32_t>(v));
    }
    write_file(path, w.data());
}

TriangleMesh read_ply(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const std::string marker = "end_header\n";
    const std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 1024)));
    const auto end = head.find(marker);
    if (head.rfind("ply\n", 0) != 0 || end == std::string::npos) throw FormatError("PLY: bad header in " + path.string());
    if (head.find("format binary_little_endian 1.0") == std::string::npos)
        throw FormatError("PLY: only binary little-endian files written by this tool are supported");
    std::istringstream hs(head.substr(0, end));
    std::string line;
    std::size_t nv = 0, nf = 0;
    while (std::getline(hs, line)) {
        std::istringstream ls(line);
        std::string kw, what;
        ls >> kw >> what;
        if (kw == "element" && what == "vertex") ls >> nv;
        if (kw == "element" && what == "face") ls >> nf;
    }
    ByteReader r(std::span<const uint8_t>(bytes).subspan(end + marker.size()));
    TriangleMesh mesh;
    mesh.vertices.resize(nv);
    for (auto& v : mesh.vertices) {
        v.x = r.get<float>();
        v.y = r.get<float>();
        v.z = r.get<float>();
    }
    mesh.triangles.resize(nf);
    for (auto& t : mesh.triangles) {
        if (r.get<uint8_t>() != 3) throw FormatError("PLY: only triangle faces are supported");
        for (auto& v : t) {
            const auto id = r.get<int32_t>();
            if (id < 0 || static_cast<std::size_t>(id) >= nv) throw FormatError("PLY: face index out of range");
            v = static_cast<uint32_t>(id);
        }
    }
    return mesh;
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
    std::ostringstream out;
    out.precision(9);
    for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    write_text(path, out.str());
}

}  // namespace resurf
