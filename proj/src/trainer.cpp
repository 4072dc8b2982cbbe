#include "resurf/trainer.hpp"

#include <cstdio>
#include <numbers>
#include <sstream>

#include "resurf/binary_io.hpp"
#include "resurf/rng.hpp"

namespace resurf {

void TrainConfig::validate() const {
    if (iterations < 0) throw ConfigError("train.iterations must be >= 0");
    if (rays_per_batch < 1) throw ConfigError("train.rays_per_batch must be >= 1");
    if (eikonal_points < 0) throw ConfigError("train.eikonal_points must be >= 0");
    if (!(lr_tables >= 0 && lr_decoders >= 0 && lr_log_s >= 0)) throw ConfigError("train learning rates must be >= 0");
    if (!(final_lr_factor >= 0 && final_lr_factor <= 1)) throw ConfigError("train.final_lr_factor must lie in [0, 1]");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0))
        throw ConfigError("train Adam settings out of range");
    for (double l : lambdas)
        if (!(l >= 0.0)) throw ConfigError("train.lambdas must be >= 0");
    if (eval_every < 0 || eval_samples < 1) throw ConfigError("train evaluation settings out of range");
    if (max_empty_batches < 1) throw ConfigError("train.max_empty_batches must be >= 1");
}

TrainingData make_training_data(const SceneSpec& spec, int gt_mesh_resolution) {
    TrainingData d;
    d.spec = spec;
    d.cameras = make_cameras(spec);
    for (const auto& cam : d.cameras) {
        d.views.push_back(render_ground_truth(spec, cam));
        d.gray.push_back({cam.width, cam.height, d.views.back().gray()});
    }
    for (std::size_t i = 0; i < d.cameras.size(); ++i) d.neighbors.push_back(nearest_view(d.cameras, i));
    d.gt_mesh = ground_truth_mesh(spec, gt_mesh_resolution);
    return d;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const IterationMetrics> trace) {
    std::ostringstream out;
    out << "iteration,loss_total,loss_rgb,loss_patch,loss_eikonal,loss_normal,s,samples,patch_rays,chamfer\n";
    char buf[512];
    for (const auto& m : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu,", m.iteration, m.total, m.rgb,
                      m.patch, m.eikonal, m.normal, m.s, m.samples, m.patch_rays);
        out << buf;
        if (!std::isnan(m.chamfer)) {
            std::snprintf(buf, sizeof(buf), "%.9g", m.chamfer);
            out << buf;
        }
        out << '\n';
    }
    write_text(path, out.str());
}

VoxelGrid sample_field(const ResidualField<float>& field, int resolution) {
    const VoxelGrid& basis = field.basis();
    const bool reuse = resolution == 0 || resolution == std::max({basis.resolution()[0], basis.resolution()[1], basis.resolution()[2]});
    const VoxelGrid lattice = reuse ? basis : VoxelGrid::covering(basis.bounds(), resolution);
    const GridIndex res = lattice.resolution();
    std::vector<float> values(lattice.size());
    for (int k = 0; k < res[2]; ++k)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i < res[0]; ++i) {
                const std::size_t idx = lattice.index(i, j, k);
                const Vec3 p = lattice.vertex_position(i, j, k);
                const double d_basis = reuse ? static_cast<double>(basis.values()[idx]) : interpolate(basis, p);
                values[idx] = static_cast<float>(d_basis + field.offset(p));
            }
    return lattice.with_values(std::move(values));
}

TriangleMesh extract_mesh(const ResidualField<float>& field, int resolution, std::span<const uint8_t> mask) {
    const VoxelGrid grid = sample_field(field, resolution);
    const bool same = grid.resolution() == field.basis().resolution();
    return marching_cubes(grid, 0.0, same ? mask : std::span<const uint8_t>{});
}

std::vector<Rgb> render_view(const ResidualField<float>& field, const Camera& cam, const AreaGrid& areas,
                             const SamplingConfig& sampling, const RenderConfig& render, bool basis_only, uint64_t seed) {
    std::vector<PixelCoord> pixels;
    for (int j = 0; j < cam.height; ++j)
        for (int i = 0; i < cam.width; ++i) pixels.push_back({i + 0.5, j + 0.5});
    const auto rays = generate_rays(cam, pixels);
    const RaySampleBatch batch = sample_rays(rays, areas, sampling, seed);
    const SampleEvaluator eval = basis_only ? basis_evaluator(field) : field_evaluator(field);
    std::vector<Rgb> out;
    out.reserve(rays.size());
    for (std::size_t r = 0; r < rays.size(); ++r) out.push_back(trace_ray(batch, r, render, eval).render.color);
    return out;
}

// ---------------------------------------------------------------------------------------------

Trainer::Trainer(const TrainingData& data, std::shared_ptr<const VoxelGrid> basis, const AreaGrid& areas,
                 FieldConfig field_cfg, SamplingConfig sampling, RenderConfig render, TrainConfig cfg, uint64_t seed,
                 std::vector<uint8_t> mask)
    : data_(data),
      basis_(std::move(basis)),
      areas_(areas),
      sampling_(sampling),
      render_(render),
      cfg_(cfg),
      seed_(seed),
      mask_(std::move(mask)) {
    sampling_.validate();
    render_.validate();
    cfg_.validate();
    if (data_.cameras.empty()) throw ConfigError("training needs at least one camera");
    const VoxelGrid& b = *basis_;
    const GridIndex cells = areas_.cells();
    if (cells[0] != b.resolution()[0] - 1 || cells[1] != b.resolution()[1] - 1 || cells[2] != b.resolution()[2] - 1)
        throw ConfigError("area grid and basis lattice disagree");
    field_ = std::make_unique<ResidualField<float>>(field_cfg, basis_, init_params<float>(field_cfg, derive_seed(seed, 1)));
    auto groups = field_->params().groups();
    for (std::size_t g = 0; g < 4; ++g) {
        adam_[g].m.assign(groups[g].size(), 0.0f);
        adam_[g].v.assign(groups[g].size(), 0.0f);
    }
    const auto labels = areas_.labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != Area::empty) near_cells_.push_back(i);
}

void Trainer::load(const Checkpoint& ck) {
    if (!(ck.config == field_->config())) throw ConfigError("checkpoint field configuration differs from the run configuration");
    field_ = std::make_unique<ResidualField<float>>(ck.config, basis_, ck.params);
    render_.log_s = ck.log_s;
    iteration_ = static_cast<int>(ck.iteration);
}

void Trainer::set_state(const FieldParams<float>& params, double log_s) {
    field_->params() = params;
    render_.log_s = log_s;
}

Checkpoint Trainer::checkpoint() const {
    return {field_->config(), field_->domain(), render_.log_s, static_cast<uint64_t>(iteration_), field_->params()};
}

PixelBatch Trainer::make_batch(int iteration) const {
    PixelBatch b;
    Rng rng(derive_seed(seed_, 100 + static_cast<uint64_t>(iteration)));
    const auto n = static_cast<std::size_t>(cfg_.rays_per_batch);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t v = rng.index(data_.cameras.size());
        const Camera& cam = data_.cameras[v];
        const int i = static_cast<int>(rng.index(static_cast<uint64_t>(cam.width)));
        const int j = static_cast<int>(rng.index(static_cast<uint64_t>(cam.height)));
        b.view.push_back(v);
        b.pixel.push_back({i + 0.5, j + 0.5});
        b.flat_pixel.push_back(data_.views[v].pixel(i, j));
        b.rays.push_back(cam.ray(i + 0.5, j + 0.5));
    }
    return b;
}

double Trainer::learning_rate(double base) const {
    if (cfg_.iterations <= 1) return base;
    const double progress = std::min(1.0, static_cast<double>(iteration_) / (cfg_.iterations - 1));
    const double f = cfg_.final_lr_factor;
    return base * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

void Trainer::apply_update(const FieldParams<float>& grads, double d_log_s) {
    const int t = iteration_ + 1;
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    auto params = field_->params().groups();
    const auto g = grads.groups();
    const std::array<double, 4> base{cfg_.lr_tables, cfg_.lr_decoders, cfg_.lr_tables, cfg_.lr_decoders};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto lr = static_cast<float>(learning_rate(base[k]) / c1);
        const auto inv_c2 = static_cast<float>(1.0 / c2);
        const auto fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2), eps = static_cast<float>(cfg_.adam_eps);
        float* p = params[k].data();
        const float* gk = g[k].data();
        float* m = adam_[k].m.data();
        float* v = adam_[k].v.data();
        const std::size_t n = params[k].size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = fb1 * m[i] + (1.0f - fb1) * gk[i];
            v[i] = fb2 * v[i] + (1.0f - fb2) * gk[i] * gk[i];
            p[i] -= lr * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
        }
    }
    log_s_m_ = b1 * log_s_m_ + (1 - b1) * d_log_s;
    log_s_v_ = b2 * log_s_v_ + (1 - b2) * d_log_s * d_log_s;
    render_.log_s -= learning_rate(cfg_.lr_log_s) * (log_s_m_ / c1) / (std::sqrt(log_s_v_ / c2) + cfg_.adam_eps);
}

IterationMetrics Trainer::step() {
    FieldParams<float> grads = field_->params().zeros_like();
    double d_log_s = 0.0;
    const IterationMetrics met = loss_and_gradient(iteration_, grads, d_log_s);
    if (met.samples == 0) {
        if (++empty_streak_ > cfg_.max_empty_batches)
            throw ConfigError("no samples survived for more than " + std::to_string(cfg_.max_empty_batches) +
                              " consecutive iterations; check the basis field and camera placement");
        ++iteration_;
        return met;
    }
    empty_streak_ = 0;
    apply_update(grads, d_log_s);
    ++iteration_;
    return met;
}

IterationMetrics Trainer::loss_and_gradient(int iteration, FieldParams<float>& grads, double& d_log_s) const {
    IterationMetrics met;
    met.iteration = iteration;
    const PixelBatch pb = make_batch(iteration);
    const RaySampleBatch batch = sample_rays(pb.rays, areas_, sampling_, derive_seed(seed_, 2),
                                             static_cast<uint64_t>(iteration) * static_cast<uint64_t>(cfg_.rays_per_batch));
    met.samples = batch.sample_count();
    met.s = render_.s();
    if (batch.sample_count() == 0) return met;

    FieldTape<float> tape(*field_);
    const SampleEvaluator eval = [&tape](const Vec3& p, const Vec3& v, std::size_t& index) {
        FieldEval e;
        index = tape.record(p, &v, e);
        return e;
    };
    const std::size_t n_rays = batch.ray_count();
    std::vector<TracedRay> traced;
    traced.reserve(n_rays);
    for (std::size_t r = 0; r < n_rays; ++r) traced.push_back(trace_ray(batch, r, render_, eval));

    // Eikonal points: half uniform in the basis domain, half jittered around A1/A2 cells.
    std::vector<std::size_t> eik_index;
    std::vector<Vec3> eik_normals;
    {
        Rng rng(derive_seed(seed_, 1000000 + static_cast<uint64_t>(iteration)));
        const Box dom = field_->domain();
        const double h = areas_.spacing();
        for (int k = 0; k < cfg_.eikonal_points; ++k) {
            Vec3 p;
            if (k % 2 == 0 || near_cells_.empty()) {
                for (int a = 0; a < 3; ++a) p[a] = rng.uniform(dom.lo[a], dom.hi[a]);
            } else {
                p = areas_.cell_center(near_cells_[rng.index(near_cells_.size())]);
                for (int a = 0; a < 3; ++a) p[a] += h * rng.uniform(-0.5, 0.5);
            }
            FieldEval e;
            eik_index.push_back(tape.record(p, nullptr, e));
            eik_normals.push_back(e.n);
        }
    }

    std::vector<FieldEvalGrad> seeds(tape.size());
    const Rgb bg = background_color(render_.background);
    const double s = render_.s();
    const auto& lam = cfg_.lambdas;
    d_log_s = 0.0;

    // Photometric and normal terms.
    double rgb_sum = 0.0, normal_sum = 0.0, patch_sum = 0.0;
    std::size_t fg = 0;
    for (std::size_t r = 0; r < n_rays; ++r) if (data_.views[pb.view[r]].hit[pb.flat_pixel[r]]) ++fg;
    std::size_t patch_rays = 0;
    std::vector<std::vector<double>> patch_grad(n_rays);
    std::vector<std::vector<std::vector<double>>> patch_samples(n_rays);
    const int hw = render_.patch_half_width;
    std::vector<double> ref, warped, d_ncc;
    if (lam[0] > 0.0) {
        for (std::size_t r = 0; r < n_rays; ++r) {
            const std::size_t v = pb.view[r];
            if (!data_.views[v].hit[pb.flat_pixel[r]]) continue;
            const TracedRay& tr = traced[r];
            if (tr.evals.empty()) continue;
            if (!reference_patch(data_.gray[v], pb.pixel[r].u, pb.pixel[r].v, hw, ref)) continue;
            const std::size_t nb = data_.neighbors[v];
            const std::size_t k = tr.evals.size();
            std::vector<std::vector<double>> ps(k);
            std::vector<double> composite_patch(ref.size(), 0.0);
            double used_weight = 0.0;
            bool ok = true;
            for (std::size_t i = 0; i < k && ok; ++i) {
                const double w = tr.render.trans[i] * tr.render.alpha[i];
                if (w < cfg_.patch_min_weight) continue;
                // Interval i carries the logistic mass between samples i and i+1; its plane goes through the
                // midpoint, otherwise depth is biased by half a step.
                const Vec3 mid = i + 1 < k ? (tr.points[i] + tr.points[i + 1]) * 0.5 : tr.points[i];
                ok = warp_patch(data_.cameras[v], data_.cameras[nb], data_.gray[nb], pb.pixel[r].u, pb.pixel[r].v, hw,
                                mid, tr.evals[i].n, warped);
                if (!ok) break;
                ps[i] = warped;
                used_weight += w;
                for (std::size_t q = 0; q < ref.size(); ++q) composite_patch[q] += w * warped[q];
            }
            if (!ok || used_weight < 0.5) continue;
            double score = 0.0;
            if (!ncc(composite_patch, ref, score, &d_ncc)) continue;
            patch_sum += 1.0 - score;
            ++patch_rays;
            patch_grad[r] = d_ncc;
            patch_samples[r] = std::move(ps);
        }
    }

    for (std::size_t r = 0; r < n_rays; ++r) {
        const TracedRay& tr = traced[r];
        const std::size_t v = pb.view[r];
        const std::size_t px = pb.flat_pixel[r];
        const Rgb target = data_.views[v].color_at(px);
        const bool hit = data_.views[v].hit[px] != 0;
        const Rgb& c = tr.render.color;
        Rgb dC{};
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double diff = c[ch] - target[ch];
            rgb_sum += std::abs(diff);
            dC[ch] = (diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0)) / static_cast<double>(n_rays);
        }
        Vec3 dN;
        if (hit) {
            const Vec3 diff = tr.render.normal - data_.views[v].normal_at(px);
            normal_sum += std::abs(diff.x) + std::abs(diff.y) + std::abs(diff.z);
            if (lam[2] > 0.0)
                for (int a = 0; a < 3; ++a)
                    dN[a] = lam[2] * (diff[a] > 0 ? 1.0 : (diff[a] < 0 ? -1.0 : 0.0)) / static_cast<double>(fg);
        }
        const std::size_t k = tr.evals.size();
        if (k == 0) continue;
        std::vector<double> g(k, 0.0);
        const bool has_patch = !patch_grad[r].empty();
        for (std::size_t i = 0; i < k; ++i) {
            const FieldEval& e = tr.evals[i];
            g[i] = dC[0] * e.color[0] + dC[1] * e.color[1] + dC[2] * e.color[2] + dot(dN, e.n);
            if (has_patch && !patch_samples[r][i].empty()) {
                double acc = 0.0;
                for (std::size_t q = 0; q < patch_grad[r].size(); ++q) acc += patch_grad[r][q] * patch_samples[r][i][q];
                g[i] -= lam[0] * acc / static_cast<double>(patch_rays);
            }
        }
        const double g_final = dC[0] * bg[0] + dC[1] * bg[1] + dC[2] * bg[2];
        const std::vector<double> d_alpha = composite_backward(tr.render.alpha, tr.render.trans, g, g_final);
        for (std::size_t i = 0; i < k; ++i) {
            const double w = tr.render.trans[i] * tr.render.alpha[i];
            FieldEvalGrad& sd = seeds[tr.tape_index[i]];
            for (std::size_t ch = 0; ch < 3; ++ch) sd.color[ch] += w * dC[ch];
            sd.n += dN * w;
            if (i + 1 < k && d_alpha[i] != 0.0) {
                const AlphaGrad ag = alpha_with_grad(tr.evals[i].d, tr.evals[i + 1].d, s);
                sd.d += d_alpha[i] * ag.d_d0;
                seeds[tr.tape_index[i + 1]].d += d_alpha[i] * ag.d_d1;
                d_log_s += d_alpha[i] * ag.d_s * s;
            }
        }
    }

    double eik_sum = 0.0;
    for (std::size_t q = 0; q < eik_normals.size(); ++q) {
        const double len = norm(eik_normals[q]);
        const double e = len - 1.0;
        eik_sum += e * e;
        if (len > 0.0 && lam[1] > 0.0)
            seeds[eik_index[q]].n += eik_normals[q] * (lam[1] * 2.0 * e / len / static_cast<double>(eik_normals.size()));
    }

    met.rgb = rgb_sum / static_cast<double>(n_rays);
    met.normal = fg ? normal_sum / static_cast<double>(fg) : 0.0;
    met.patch = patch_rays ? patch_sum / static_cast<double>(patch_rays) : 0.0;
    met.eikonal = eik_normals.empty() ? 0.0 : eik_sum / static_cast<double>(eik_normals.size());
    met.patch_rays = patch_rays;
    met.total = loss_total(met.rgb, met.patch, met.eikonal, met.normal, lam);
    if (!std::isfinite(met.total) || !std::isfinite(d_log_s))
        throw DivergenceError("non-finite loss at iteration " + std::to_string(iteration));

    tape.backward(seeds, grads);
    if (!grads.all_finite()) throw DivergenceError("non-finite gradient at iteration " + std::to_string(iteration));
    return met;
}

double Trainer::evaluate_chamfer() const {
    try {
        const TriangleMesh mesh = extract_mesh(*field_, 0, mask_);
        return chamfer(mesh, data_.gt_mesh, static_cast<std::size_t>(cfg_.eval_samples), derive_seed(seed_, 3));
    } catch (const EmptySurface&) {
        return std::numeric_limits<double>::infinity();
    }
}

TrainResult Trainer::run(const std::function<void(const IterationMetrics&)>& on_iteration) {
    TrainResult result;
    FieldParams<float> last_good = field_->params();
    double last_good_log_s = render_.log_s;
    while (iteration_ < cfg_.iterations) {
        IterationMetrics m;
        FieldParams<float> before = field_->params();
        const double before_log_s = render_.log_s;
        try {
            m = step();
            if (!field_->params().all_finite() || !std::isfinite(render_.log_s))
                throw DivergenceError("non-finite parameters after iteration " + std::to_string(m.iteration));
            // The parameters that produced this finite loss become the fallback.
            last_good = std::move(before);
            last_good_log_s = before_log_s;
        } catch (const DivergenceError& e) {
            field_->params() = std::move(last_good);
            render_.log_s = last_good_log_s;
            result.diverged = true;
            result.message = e.what();
            break;
        }
        const bool last = iteration_ == cfg_.iterations;
        if ((cfg_.eval_every > 0 && iteration_ % cfg_.eval_every == 0) || last) m.chamfer = evaluate_chamfer();
        result.trace.push_back(m);
        if (on_iteration) on_iteration(m);
    }
    result.iterations_done = iteration_;
    return result;
}

}  // namespace resurf
