#include "resurf/renderer.hpp"

namespace resurf {

void RenderConfig::validate() const {
    if (!std::isfinite(log_s)) throw ConfigError("render.log_s must be finite");
    if (patch_half_width < 1) throw ConfigError("render.patch_half_width must be >= 1");
    if (!(transmittance_cutoff >= 0.0 && transmittance_cutoff < 1.0))
        throw ConfigError("render.transmittance_cutoff must lie in [0, 1)");
}

double initial_log_s(double spacing, double voxels) { return std::log(4.0 / (voxels * spacing)); }

double logistic_cdf(double x, double s) { return sigmoid(s * x); }

namespace {

// log(sigmoid(x))
double log_sigmoid(double x) { return -softplus(-x); }

}  // namespace

double alpha_from_sdf(double d0, double d1, double s) {
    const double log_ratio = log_sigmoid(s * d1) - log_sigmoid(s * d0);
    return std::max(-std::expm1(log_ratio), 0.0);
}

AlphaGrad alpha_with_grad(double d0, double d1, double s) {
    AlphaGrad g;
    const double log_ratio = log_sigmoid(s * d1) - log_sigmoid(s * d0);
    const double a = -std::expm1(log_ratio);
    if (!(a > 0.0)) return g;
    const double r = std::exp(log_ratio);
    const double q0 = sigmoid(-s * d0);  // 1 - Phi(d0)
    const double q1 = sigmoid(-s * d1);
    g.alpha = a;
    g.d_d0 = r * s * q0;
    g.d_d1 = -r * s * q1;
    g.d_s = -r * (d1 * q1 - d0 * q0);
    return g;
}

RayRender composite(std::span<const double> alpha, std::span<const Rgb> colors, std::span<const Vec3> normals,
                    const Rgb& background) {
    RayRender out;
    const std::size_t k = alpha.size();
    out.alpha.assign(alpha.begin(), alpha.end());
    out.trans.resize(k);
    double t = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        out.trans[i] = t;
        const double w = t * alpha[i];
        for (std::size_t c = 0; c < 3; ++c) out.color[c] += w * colors[i][c];
        if (!normals.empty()) out.normal += normals[i] * w;
        t *= 1.0 - alpha[i];
    }
    out.t_final = t;
    for (std::size_t c = 0; c < 3; ++c) out.color[c] += t * background[c];
    return out;
}

std::vector<double> composite_backward(std::span<const double> alpha, std::span<const double> trans,
                                       std::span<const double> g, double g_final) {
    const std::size_t k = alpha.size();
    std::vector<double> d_alpha(k);
    double q = g_final;
    for (std::size_t i = k; i-- > 0;) {
        d_alpha[i] = trans[i] * (g[i] - q);
        q = g[i] * alpha[i] + (1.0 - alpha[i]) * q;
    }
    return d_alpha;
}

TracedRay trace_ray(const RaySampleBatch& batch, std::size_t ray, const RenderConfig& cfg, const SampleEvaluator& eval) {
    TracedRay out;
    const std::size_t b = batch.begin(ray), e = batch.end(ray);
    const Vec3 dir = batch.rays[ray].dir;
    const double s = cfg.s();
    std::vector<double> alpha;
    double t = 1.0;
    for (std::size_t i = b; i < e; ++i) {
        std::size_t tape = 0;
        const Vec3 p = batch.points[i];
        out.evals.push_back(eval(p, dir, tape));
        out.tape_index.push_back(tape);
        out.points.push_back(p);
        const std::size_t n = out.evals.size();
        if (n >= 2) {
            const double a = alpha_from_sdf(out.evals[n - 2].d, out.evals[n - 1].d, s);
            alpha.push_back(a);
            t *= 1.0 - a;
            if (t < cfg.transmittance_cutoff) break;
        }
    }
    if (!out.evals.empty()) alpha.push_back(0.0);

    std::vector<Rgb> colors;
    std::vector<Vec3> normals;
    for (const auto& ev : out.evals) {
        colors.push_back(ev.color);
        normals.push_back(ev.n);
    }
    out.render = composite(alpha, colors, normals, background_color(cfg.background));
    return out;
}

template <typename Real>
SampleEvaluator field_evaluator(const ResidualField<Real>& field) {
    return [&field](const Vec3& p, const Vec3& v, std::size_t&) { return field.evaluate(p, &v); };
}

template <typename Real>
SampleEvaluator basis_evaluator(const ResidualField<Real>& field) {
    return [&field](const Vec3& p, const Vec3& v, std::size_t&) {
        FieldEval e;
        e.d_basis = interpolate(field.basis(), p);
        e.n_basis = grid_gradient(field.basis(), p);
        e.d = e.d_basis;
        e.n = e.n_basis;
        e.color = field.color(p, v, e.d, e.n);
        return e;
    };
}

template SampleEvaluator field_evaluator<float>(const ResidualField<float>&);
template SampleEvaluator field_evaluator<double>(const ResidualField<double>&);
template SampleEvaluator basis_evaluator<float>(const ResidualField<float>&);
template SampleEvaluator basis_evaluator<double>(const ResidualField<double>&);

// ---------------------------------------------------------------------------------------------
// Losses

double loss_rgb(std::span<const Rgb> rendered, std::span<const Rgb> target) {
    if (rendered.size() != target.size()) throw ContractViolation("loss_rgb: size mismatch");
    if (rendered.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t r = 0; r < rendered.size(); ++r)
        for (std::size_t c = 0; c < 3; ++c) sum += std::abs(target[r][c] - rendered[r][c]);
    return sum / static_cast<double>(rendered.size());
}

double loss_normal(std::span<const Vec3> rendered, std::span<const Vec3> target, std::span<const uint8_t> mask) {
    if (rendered.size() != target.size() || rendered.size() != mask.size())
        throw ContractViolation("loss_normal: size mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < rendered.size(); ++r) {
        if (!mask[r]) continue;
        const Vec3 d = cwise_abs(target[r] - rendered[r]);
        sum += d.x + d.y + d.z;
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double loss_eikonal(std::span<const Vec3> normals) {
    if (normals.empty()) return 0.0;
    double sum = 0.0;
    for (const Vec3& n : normals) {
        const double e = norm(n) - 1.0;
        sum += e * e;
    }
    return sum / static_cast<double>(normals.size());
}

double loss_total(double rgb, double patch, double eikonal, double normal, const std::array<double, 3>& lambdas) {
    return rgb + lambdas[0] * patch + lambdas[1] * eikonal + lambdas[2] * normal;
}

bool ncc(std::span<const double> a, std::span<const double> b, double& value, std::vector<double>* d_a) {
    const std::size_t n = a.size();
    if (n == 0 || b.size() != n) return false;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i] - ma, y = b[i] - mb;
        aa += x * x;
        bb += y * y;
        ab += x * y;
    }
    const double eps = 1e-8 * static_cast<double>(n);
    if (aa < eps || bb < eps) return false;
    const double denom = std::sqrt(aa * bb);
    value = ab / denom;
    if (d_a) {
        d_a->resize(n);
        for (std::size_t i = 0; i < n; ++i) (*d_a)[i] = (b[i] - mb) / denom - value * (a[i] - ma) / aa;
    }
    return true;
}

bool GrayImage::sample(double u, double v, double& out) const {
    const double x = u - 0.5, y = v - 0.5;
    if (!(x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1)) return false;
    const int i = std::min(static_cast<int>(x), width - 2);
    const int j = std::min(static_cast<int>(y), height - 2);
    const double fx = x - i, fy = y - j;
    auto at = [&](int ii, int jj) { return static_cast<double>(values[static_cast<size_t>(jj) * static_cast<size_t>(width) + static_cast<size_t>(ii)]); };
    out = (1 - fy) * ((1 - fx) * at(i, j) + fx * at(i + 1, j)) + fy * ((1 - fx) * at(i, j + 1) + fx * at(i + 1, j + 1));
    return true;
}

bool warp_patch(const Camera& reference, const Camera& neighbor, const GrayImage& neighbor_image, double u, double v,
                int half_width, const Vec3& point, const Vec3& normal, std::vector<double>& out, double min_cos) {
    const Vec3 n = normalized(normal);
    if (norm(n) == 0.0) return false;
    if (dot(n, normalized(reference.center() - point)) < min_cos) return false;
    if (dot(n, normalized(neighbor.center() - point)) < min_cos) return false;
    out.clear();
    for (int dv = -half_width; dv <= half_width; ++dv) {
        for (int du = -half_width; du <= half_width; ++du) {
            const Ray r = reference.ray(u + du, v + dv);
            const double denom = dot(r.dir, n);
            if (std::abs(denom) < 1e-6) return false;
            const double t = dot(point - r.origin, n) / denom;
            if (!(t > 0.0)) return false;
            const auto uvz = neighbor.project(r.at(t));
            if (!(uvz[2] > 0.0)) return false;
            double value = 0.0;
            if (!neighbor_image.sample(uvz[0], uvz[1], value)) return false;
            out.push_back(value);
        }
    }
    return true;
}

bool reference_patch(const GrayImage& image, double u, double v, int half_width, std::vector<double>& out) {
    out.clear();
    for (int dv = -half_width; dv <= half_width; ++dv) {
        for (int du = -half_width; du <= half_width; ++du) {
            double value = 0.0;
            if (!image.sample(u + du, v + dv, value)) return false;
            out.push_back(value);
        }
    }
    return true;
}

std::size_t nearest_view(std::span<const Camera> cameras, std::size_t ref) {
    if (cameras.size() < 2) throw ConfigError("patch loss needs at least two cameras");
    std::size_t best = ref == 0 ? 1 : 0;
    double best_cos = -2.0;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        if (i == ref) continue;
        const double c = dot(cameras[i].forward(), cameras[ref].forward());
        if (c > best_cos) {
            best_cos = c;
            best = i;
        }
    }
    return best;
}

}  // namespace resurf
