#include "resurf/residual_field.hpp"

#include <sstream>

#include "resurf/binary_io.hpp"
#include "resurf/rng.hpp"

namespace resurf {

// ---------------------------------------------------------------------------------------------
// Hash encoding

void HashEncodingConfig::validate() const {
    if (levels < 1) throw ConfigError("hash encoding: levels must be >= 1");
    if (features_per_level < 1) throw ConfigError("hash encoding: features_per_level must be >= 1");
    if (table_size_log2 < 2 || table_size_log2 > 26) throw ConfigError("hash encoding: table_size_log2 out of range");
    if (base_resolution < 1) throw ConfigError("hash encoding: base_resolution must be >= 1");
    if (!(growth_factor > 1.0)) throw ConfigError("hash encoding: growth_factor must be > 1");
    if (parameter_count() > std::numeric_limits<uint32_t>::max())
        throw ConfigError("hash encoding: table too large");
}

std::vector<int> level_resolutions(const HashEncodingConfig& cfg) {
    std::vector<int> res(static_cast<size_t>(cfg.levels));
    for (int l = 0; l < cfg.levels; ++l) res[static_cast<size_t>(l)] = std::max(1, cfg.level_resolution(l));
    return res;
}

template <typename Real>
void hash_encode(const HashEncodingConfig& cfg, std::span<const int> level_res, std::span<const Real> tables,
                 const Vec3& unit_p, Real* out, HashTrace<Real>* trace) {
    const int nf = cfg.features_per_level;
    const std::size_t tsize = cfg.table_size();
    for (int l = 0; l < cfg.levels; ++l) {
        const int n = level_res[static_cast<size_t>(l)];
        uint32_t cell[3];
        Real frac[3];
        for (int a = 0; a < 3; ++a) {
            const double x = unit_p[a] * n;
            const int i = std::clamp(static_cast<int>(std::floor(x)), 0, n - 1);
            cell[a] = static_cast<uint32_t>(i);
            frac[a] = static_cast<Real>(x - i);
        }
        const std::size_t level_base = static_cast<std::size_t>(l) * tsize * static_cast<std::size_t>(nf);
        Real* o = out + l * nf;
        for (int f = 0; f < nf; ++f) o[f] = Real(0);
        for (int c = 0; c < 8; ++c) {
            const uint32_t bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
            const Real w = (bx ? frac[0] : Real(1) - frac[0]) * (by ? frac[1] : Real(1) - frac[1]) *
                           (bz ? frac[2] : Real(1) - frac[2]);
            const uint32_t h = spatial_hash(cell[0] + bx, cell[1] + by, cell[2] + bz, tsize);
            const std::size_t entry = level_base + static_cast<std::size_t>(h) * static_cast<std::size_t>(nf);
            const Real* t = tables.data() + entry;
            for (int f = 0; f < nf; ++f) o[f] += w * t[f];
            if (trace) {
                trace->entries[l * 8 + c] = static_cast<uint32_t>(entry);
                trace->weights[l * 8 + c] = w;
            }
        }
    }
}

template <typename Real>
void hash_encode_backward(const HashEncodingConfig& cfg, const HashTrace<Real>& trace, const Real* d_features,
                          std::span<Real> d_tables) {
    const int nf = cfg.features_per_level;
    for (int l = 0; l < cfg.levels; ++l) {
        const Real* g = d_features + l * nf;
        bool any = false;
        for (int f = 0; f < nf; ++f) any |= g[f] != Real(0);
        if (!any) continue;
        for (int c = 0; c < 8; ++c) {
            const Real w = trace.weights[l * 8 + c];
            Real* t = d_tables.data() + trace.entries[l * 8 + c];
            for (int f = 0; f < nf; ++f) t[f] += w * g[f];
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Decoder

template <typename Real>
void mlp_forward(const MlpShape& shape, std::span<const Real> params, Real* acts, Real* out) {
    const Real* x = acts;
    const int w = shape.width;
    for (int l = 0; l < shape.layer_count(); ++l) {
        const int nin = shape.layer_in(l), nout = shape.layer_out(l);
        const Real* W = params.data() + shape.layer_offset(l);
        const Real* b = W + static_cast<std::size_t>(nin) * static_cast<std::size_t>(nout);
        const bool hidden = l < shape.hidden_layers;
        Real* pre = hidden ? acts + shape.inputs + 2 * l * w : out;
        for (int o = 0; o < nout; ++o) pre[o] = b[o];
        for (int i = 0; i < nin; ++i) {
            const Real xi = x[i];
            const Real* row = W + static_cast<std::size_t>(i) * static_cast<std::size_t>(nout);
            for (int o = 0; o < nout; ++o) pre[o] += row[o] * xi;
        }
        if (hidden) {
            Real* post = pre + w;
            for (int o = 0; o < nout; ++o) post[o] = softplus(pre[o]);
            x = post;
        }
    }
}

template <typename Real>
void mlp_backward(const MlpShape& shape, std::span<const Real> params, const Real* acts, const Real* d_out,
                  std::span<Real> d_params, Real* d_input, Real* scratch) {
    const int w = shape.width;
    const int span_max = std::max(w, std::max(shape.inputs, shape.outputs));
    Real* g = scratch;
    Real* gin = scratch + span_max;
    for (int o = 0; o < shape.outputs; ++o) g[o] = d_out[o];
    for (int l = shape.layer_count() - 1; l >= 0; --l) {
        const int nin = shape.layer_in(l), nout = shape.layer_out(l);
        const std::size_t off = shape.layer_offset(l);
        const Real* W = params.data() + off;
        Real* dW = d_params.data() + off;
        Real* db = dW + static_cast<std::size_t>(nin) * static_cast<std::size_t>(nout);
        const Real* x = l == 0 ? acts : acts + shape.inputs + 2 * (l - 1) * w + w;
        for (int o = 0; o < nout; ++o) db[o] += g[o];
        const bool need_input = l > 0 || d_input != nullptr;
        for (int i = 0; i < nin; ++i) {
            const Real xi = x[i];
            const Real* row = W + static_cast<std::size_t>(i) * static_cast<std::size_t>(nout);
            Real* drow = dW + static_cast<std::size_t>(i) * static_cast<std::size_t>(nout);
            Real acc = Real(0);
            for (int o = 0; o < nout; ++o) {
                drow[o] += xi * g[o];
                acc += row[o] * g[o];
            }
            if (need_input) gin[i] = acc;
        }
        if (l > 0) {
            const Real* pre = acts + shape.inputs + 2 * (l - 1) * w;
            for (int i = 0; i < nin; ++i) gin[i] *= sigmoid(pre[i]);
        } else if (d_input) {
            for (int i = 0; i < nin; ++i) d_input[i] = gin[i];
        }
        std::swap(g, gin);
    }
}

// ---------------------------------------------------------------------------------------------
// Parameters

void FieldConfig::validate() const {
    sdf_encoding.validate();
    color_encoding.validate();
    for (const auto* d : {&sdf_decoder, &color_decoder})
        if (d->hidden_layers < 1 || d->width < 1) throw ConfigError("decoder needs >= 1 hidden layer of width >= 1");
    if (!(table_init_range >= 0.0)) throw ConfigError("table_init_range must be >= 0");
}

MlpShape FieldConfig::sdf_shape() const { return {3 + sdf_encoding.output_dim(), sdf_decoder.hidden_layers, sdf_decoder.width, 1}; }

// p (3), color features, view direction (3), d (1), n (3)
MlpShape FieldConfig::color_shape() const {
    return {3 + color_encoding.output_dim() + 7, color_decoder.hidden_layers, color_decoder.width, 3};
}

template <typename Real>
FieldParams<Real> FieldParams<Real>::zeros_like() const {
    FieldParams z;
    z.sdf_tables.assign(sdf_tables.size(), Real(0));
    z.sdf_mlp.assign(sdf_mlp.size(), Real(0));
    z.color_tables.assign(color_tables.size(), Real(0));
    z.color_mlp.assign(color_mlp.size(), Real(0));
    return z;
}

template <typename Real>
void FieldParams<Real>::set_zero() {
    for (auto g : groups()) std::fill(g.begin(), g.end(), Real(0));
}

template <typename Real>
bool FieldParams<Real>::all_finite() const {
    for (auto g : groups())
        for (Real v : g)
            if (!std::isfinite(v)) return false;
    return true;
}

template <typename Real>
Real& FieldParams<Real>::flat(std::size_t i) {
    for (auto g : groups()) {
        if (i < g.size()) return g[i];
        i -= g.size();
    }
    throw std::out_of_range("FieldParams::flat");
}

template <typename Real>
Real FieldParams<Real>::flat(std::size_t i) const {
    for (auto g : groups()) {
        if (i < g.size()) return g[i];
        i -= g.size();
    }
    throw std::out_of_range("FieldParams::flat");
}

namespace {

template <typename Real>
void init_mlp(const MlpShape& shape, std::vector<Real>& out, Rng& rng, bool zero_output) {
    out.assign(shape.parameter_count(), Real(0));
    for (int l = 0; l < shape.layer_count(); ++l) {
        const int nin = shape.layer_in(l), nout = shape.layer_out(l);
        if (l == shape.hidden_layers && zero_output) continue;
        const double bound = std::sqrt(6.0 / (nin + nout));
        Real* W = out.data() + shape.layer_offset(l);
        for (int i = 0; i < nin * nout; ++i) W[i] = static_cast<Real>(rng.uniform(-bound, bound));
    }
}

}  // namespace

template <typename Real>
FieldParams<Real> init_params(const FieldConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    FieldParams<Real> p;
    const double r = cfg.table_init_range;
    p.sdf_tables.resize(cfg.sdf_encoding.parameter_count());
    for (auto& v : p.sdf_tables) v = static_cast<Real>(rng.uniform(-r, r));
    init_mlp(cfg.sdf_shape(), p.sdf_mlp, rng, true);
    p.color_tables.resize(cfg.color_encoding.parameter_count());
    for (auto& v : p.color_tables) v = static_cast<Real>(rng.uniform(-r, r));
    init_mlp(cfg.color_shape(), p.color_mlp, rng, false);
    return p;
}

// ---------------------------------------------------------------------------------------------
// Field

template <typename Real>
ResidualField<Real>::ResidualField(FieldConfig cfg, std::shared_ptr<const VoxelGrid> basis, FieldParams<Real> params)
    : cfg_(std::move(cfg)), basis_(std::move(basis)), params_(std::move(params)) {
    cfg_.validate();
    if (!basis_) throw ConfigError("ResidualField: basis grid required");
    domain_ = basis_->bounds();
    sdf_shape_ = cfg_.sdf_shape();
    color_shape_ = cfg_.color_shape();
    sdf_levels_ = level_resolutions(cfg_.sdf_encoding);
    color_levels_ = level_resolutions(cfg_.color_encoding);
    if (params_.sdf_tables.size() != cfg_.sdf_encoding.parameter_count() ||
        params_.sdf_mlp.size() != sdf_shape_.parameter_count() ||
        params_.color_tables.size() != cfg_.color_encoding.parameter_count() ||
        params_.color_mlp.size() != color_shape_.parameter_count())
        throw ConfigError("ResidualField: parameter shapes do not match the configuration");
    const double finest = 1.0 / sdf_levels_.back();
    normal_step_ = domain_.extent() * finest;
}

template <typename Real>
Vec3 ResidualField<Real>::to_unit(const Vec3& p) const {
    const Vec3 e = domain_.extent();
    Vec3 u{(p.x - domain_.lo.x) / e.x, (p.y - domain_.lo.y) / e.y, (p.z - domain_.lo.z) / e.z};
    return cwise_min(cwise_max(u, Vec3{0, 0, 0}), Vec3{1, 1, 1});
}

namespace {

template <typename Real>
struct Scratch {
    std::vector<Real> acts;
    std::vector<Real> tmp;
};

template <typename Real>
Scratch<Real>& thread_scratch() {
    thread_local Scratch<Real> s;
    return s;
}

}  // namespace

template <typename Real>
double ResidualField<Real>::offset(const Vec3& p) const {
    auto& s = thread_scratch<Real>();
    s.acts.resize(sdf_shape_.activation_size());
    const Vec3 u = to_unit(p);
    for (int a = 0; a < 3; ++a) s.acts[static_cast<size_t>(a)] = static_cast<Real>(2.0 * u[a] - 1.0);
    hash_encode<Real>(cfg_.sdf_encoding, sdf_levels_, params_.sdf_tables, u, s.acts.data() + 3);
    Real out{};
    mlp_forward<Real>(sdf_shape_, params_.sdf_mlp, s.acts.data(), &out);
    if (!std::isfinite(out)) throw DivergenceError("offset SDF evaluated to a non-finite value; parameters are corrupt");
    return static_cast<double>(out);
}

template <typename Real>
Vec3 ResidualField<Real>::normal(const Vec3& p) const {
    Vec3 n = grid_gradient(*basis_, p);
    for (int a = 0; a < 3; ++a) {
        Vec3 step{};
        step[a] = normal_step_[a];
        n[a] += (offset(p + step) - offset(p - step)) / (2.0 * normal_step_[a]);
    }
    return n;
}

template <typename Real>
std::array<double, 3> ResidualField<Real>::color(const Vec3& p, const Vec3& v, double d, const Vec3& n) const {
    auto& s = thread_scratch<Real>();
    s.acts.resize(color_shape_.activation_size());
    const Vec3 u = to_unit(p);
    Real* in = s.acts.data();
    for (int a = 0; a < 3; ++a) in[a] = static_cast<Real>(2.0 * u[a] - 1.0);
    const int cf = cfg_.color_encoding.output_dim();
    hash_encode<Real>(cfg_.color_encoding, color_levels_, params_.color_tables, u, in + 3);
    Real* tail = in + 3 + cf;
    for (int a = 0; a < 3; ++a) tail[a] = static_cast<Real>(v[a]);
    tail[3] = static_cast<Real>(d);
    for (int a = 0; a < 3; ++a) tail[4 + a] = static_cast<Real>(n[a]);
    Real z[3];
    mlp_forward<Real>(color_shape_, params_.color_mlp, in, z);
    return {static_cast<double>(sigmoid(z[0])), static_cast<double>(sigmoid(z[1])), static_cast<double>(sigmoid(z[2]))};
}

template <typename Real>
FieldEval ResidualField<Real>::evaluate(const Vec3& p, const Vec3* view_dir) const {
    FieldEval e;
    e.d_basis = interpolate(*basis_, p);
    e.n_basis = grid_gradient(*basis_, p);
    e.d_offset = offset(p);
    for (int a = 0; a < 3; ++a) {
        Vec3 step{};
        step[a] = normal_step_[a];
        e.n_offset[a] = (offset(p + step) - offset(p - step)) / (2.0 * normal_step_[a]);
    }
    e.d = e.d_basis + e.d_offset;
    e.n = e.n_basis + e.n_offset;
    if (view_dir) e.color = color(p, *view_dir, e.d, e.n);
    return e;
}

// ---------------------------------------------------------------------------------------------
// Tape

template <typename Real>
FieldTape<Real>::FieldTape(const ResidualField<Real>& field, Mode mode) : field_(field), mode_(mode) {
    const auto& s = field_.sdf_shape_;
    const auto& c = field_.color_shape_;
    const int m = std::max({s.width, s.inputs, c.width, c.inputs, 3});
    scratch_.resize(static_cast<size_t>(4 * m));
}

template <typename Real>
void FieldTape<Real>::reset() {
    consumed_ = false;
    samples_.clear();
    sdf_records_.clear();
    color_records_.clear();
    acts_.clear();
    entries_.clear();
    weights_.clear();
    color_out_.clear();
}

template <typename Real>
Real FieldTape<Real>::eval_sdf(const Vec3& p, int64_t& record_index) {
    const auto& shape = field_.sdf_shape_;
    const auto& enc = field_.cfg_.sdf_encoding;
    const std::size_t a0 = acts_.size();
    const std::size_t t0 = entries_.size();
    acts_.resize(a0 + shape.activation_size());
    entries_.resize(t0 + static_cast<size_t>(enc.levels) * 8);
    weights_.resize(t0 + static_cast<size_t>(enc.levels) * 8);
    Real* acts = acts_.data() + a0;
    const Vec3 u = field_.to_unit(p);
    for (int a = 0; a < 3; ++a) acts[a] = static_cast<Real>(2.0 * u[a] - 1.0);
    HashTrace<Real> trace{entries_.data() + t0, weights_.data() + t0};
    hash_encode<Real>(enc, field_.sdf_levels_, field_.params_.sdf_tables, u, acts + 3, &trace);
    Real out{};
    mlp_forward<Real>(shape, field_.params_.sdf_mlp, acts, &out);
    if (!std::isfinite(out)) throw DivergenceError("offset SDF evaluated to a non-finite value; parameters are corrupt");
    record_index = static_cast<int64_t>(sdf_records_.size());
    sdf_records_.push_back({a0, t0});
    return out;
}

template <typename Real>
void FieldTape<Real>::eval_color(const Vec3& p, const Vec3& v, double d, const Vec3& n, std::array<double, 3>& rgb,
                                 int64_t& record_index) {
    const auto& shape = field_.color_shape_;
    const auto& enc = field_.cfg_.color_encoding;
    const std::size_t a0 = acts_.size();
    const std::size_t t0 = entries_.size();
    acts_.resize(a0 + shape.activation_size());
    entries_.resize(t0 + static_cast<size_t>(enc.levels) * 8);
    weights_.resize(t0 + static_cast<size_t>(enc.levels) * 8);
    Real* in = acts_.data() + a0;
    const Vec3 u = field_.to_unit(p);
    for (int a = 0; a < 3; ++a) in[a] = static_cast<Real>(2.0 * u[a] - 1.0);
    HashTrace<Real> trace{entries_.data() + t0, weights_.data() + t0};
    const int cf = enc.output_dim();
    hash_encode<Real>(enc, field_.color_levels_, field_.params_.color_tables, u, in + 3, &trace);
    Real* tail = in + 3 + cf;
    for (int a = 0; a < 3; ++a) tail[a] = static_cast<Real>(v[a]);
    tail[3] = static_cast<Real>(d);
    for (int a = 0; a < 3; ++a) tail[4 + a] = static_cast<Real>(n[a]);
    Real z[3];
    mlp_forward<Real>(shape, field_.params_.color_mlp, in, z);
    std::array<Real, 3> c{sigmoid(z[0]), sigmoid(z[1]), sigmoid(z[2])};
    for (int k = 0; k < 3; ++k) rgb[static_cast<size_t>(k)] = static_cast<double>(c[static_cast<size_t>(k)]);
    record_index = static_cast<int64_t>(color_records_.size());
    color_records_.push_back({a0, t0});
    color_out_.push_back(c);
}

template <typename Real>
std::size_t FieldTape<Real>::record(const Vec3& p, const Vec3* view_dir, FieldEval& e) {
    if (consumed_) throw ContractViolation("FieldTape: recording after backward() requires reset()");
    SampleRecord rec;
    e = FieldEval{};
    e.d_basis = interpolate(field_.basis(), p);
    e.n_basis = grid_gradient(field_.basis(), p);
    if (mode_ == Mode::residual) {
        e.d_offset = static_cast<double>(eval_sdf(p, rec.sdf[0]));
        const Vec3 h = field_.normal_step();
        for (int a = 0; a < 3; ++a) {
            Vec3 step{};
            step[a] = h[a];
            const double plus = static_cast<double>(eval_sdf(p + step, rec.sdf[static_cast<size_t>(1 + 2 * a)]));
            const double minus = static_cast<double>(eval_sdf(p - step, rec.sdf[static_cast<size_t>(2 + 2 * a)]));
            e.n_offset[a] = (plus - minus) / (2.0 * h[a]);
        }
    }
    e.d = e.d_basis + e.d_offset;
    e.n = e.n_basis + e.n_offset;
    if (view_dir) eval_color(p, *view_dir, e.d, e.n, e.color, rec.color);
    samples_.push_back(rec);
    return samples_.size() - 1;
}

template <typename Real>
void FieldTape<Real>::backward(std::span<const FieldEvalGrad> seeds, FieldParams<Real>& grads) {
    if (consumed_) throw ContractViolation("FieldTape: backward() called twice without re-recording");
    if (seeds.size() != samples_.size()) throw ContractViolation("FieldTape: one seed per recorded sample required");
    consumed_ = true;

    const auto& sdf_shape = field_.sdf_shape_;
    const auto& color_shape = field_.color_shape_;
    const auto& sdf_enc = field_.cfg_.sdf_encoding;
    const auto& color_enc = field_.cfg_.color_encoding;
    const int cf = color_enc.output_dim();
    const std::size_t m = scratch_.size() / 4;
    Real* mlp_scratch = scratch_.data();
    Real* d_input = scratch_.data() + 2 * m;
    const Vec3 h = field_.normal_step();

    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const SampleRecord& rec = samples_[i];
        const FieldEvalGrad& g = seeds[i];
        double dd = g.d;
        Vec3 dn = g.n;

        if (rec.color >= 0) {
            const auto& cr = color_records_[static_cast<size_t>(rec.color)];
            const auto& c = color_out_[static_cast<size_t>(rec.color)];
            Real dz[3];
            bool any = false;
            for (int k = 0; k < 3; ++k) {
                const Real ck = c[static_cast<size_t>(k)];
                dz[k] = static_cast<Real>(g.color[static_cast<size_t>(k)]) * ck * (Real(1) - ck);
                any |= dz[k] != Real(0);
            }
            if (any) {
                mlp_backward<Real>(color_shape, field_.params_.color_mlp, acts_.data() + cr.acts, dz, grads.color_mlp,
                                   d_input, mlp_scratch);
                HashTrace<Real> trace{entries_.data() + cr.trace, weights_.data() + cr.trace};
                hash_encode_backward<Real>(color_enc, trace, d_input + 3, grads.color_tables);
                const Real* tail = d_input + 3 + cf;
                dd += static_cast<double>(tail[3]);
                for (int a = 0; a < 3; ++a) dn[a] += static_cast<double>(tail[4 + a]);
            }
        }

        if (rec.sdf[0] < 0) continue;
        std::array<double, 7> upstream{dd, 0, 0, 0, 0, 0, 0};
        for (int a = 0; a < 3; ++a) {
            upstream[static_cast<size_t>(1 + 2 * a)] = dn[a] / (2.0 * h[a]);
            upstream[static_cast<size_t>(2 + 2 * a)] = -dn[a] / (2.0 * h[a]);
        }
        for (int r = 0; r < 7; ++r) {
            const Real gr = static_cast<Real>(upstream[static_cast<size_t>(r)]);
            if (gr == Real(0)) continue;
            const auto& sr = sdf_records_[static_cast<size_t>(rec.sdf[static_cast<size_t>(r)])];
            mlp_backward<Real>(sdf_shape, field_.params_.sdf_mlp, acts_.data() + sr.acts, &gr, grads.sdf_mlp, d_input,
                               mlp_scratch);
            HashTrace<Real> trace{entries_.data() + sr.trace, weights_.data() + sr.trace};
            hash_encode_backward<Real>(sdf_enc, trace, d_input + 3, grads.sdf_tables);
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Checkpoints

namespace {

void put_encoding(ByteWriter& w, const HashEncodingConfig& c) {
    w.put<int32_t>(c.levels);
    w.put<int32_t>(c.features_per_level);
    w.put<int32_t>(c.table_size_log2);
    w.put<int32_t>(c.base_resolution);
    w.put<double>(c.growth_factor);
}
HashEncodingConfig get_encoding(ByteReader& r) {
    HashEncodingConfig c;
    c.levels = r.get<int32_t>();
    c.features_per_level = r.get<int32_t>();
    c.table_size_log2 = r.get<int32_t>();
    c.base_resolution = r.get<int32_t>();
    c.growth_factor = r.get<double>();
    return c;
}
void put_decoder(ByteWriter& w, const DecoderConfig& d) {
    w.put<int32_t>(d.hidden_layers);
    w.put<int32_t>(d.width);
}
DecoderConfig get_decoder(ByteReader& r) {
    DecoderConfig d;
    d.hidden_layers = r.get<int32_t>();
    d.width = r.get<int32_t>();
    return d;
}

}  // namespace

std::vector<uint8_t> encode_checkpoint(const Checkpoint& ck) {
    ByteWriter w;
    w.bytes("RSCK");
    w.put<uint32_t>(kCheckpointVersion);
    put_encoding(w, ck.config.sdf_encoding);
    put_decoder(w, ck.config.sdf_decoder);
    put_encoding(w, ck.config.color_encoding);
    put_decoder(w, ck.config.color_decoder);
    w.put<double>(ck.config.table_init_range);
    for (int a = 0; a < 3; ++a) w.put<double>(ck.domain.lo[a]);
    for (int a = 0; a < 3; ++a) w.put<double>(ck.domain.hi[a]);
    w.put<double>(ck.log_s);
    w.put<uint64_t>(ck.iteration);
    for (auto g : ck.params.groups()) {
        w.put<uint64_t>(g.size());
        w.put_array<float>(g);
    }
    return std::move(w.data());
}

Checkpoint decode_checkpoint(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect("RSCK");
    const auto version = r.get<uint32_t>();
    if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ck;
    ck.config.sdf_encoding = get_encoding(r);
    ck.config.sdf_decoder = get_decoder(r);
    ck.config.color_encoding = get_encoding(r);
    ck.config.color_decoder = get_decoder(r);
    ck.config.table_init_range = r.get<double>();
    ck.config.validate();
    for (int a = 0; a < 3; ++a) ck.domain.lo[a] = r.get<double>();
    for (int a = 0; a < 3; ++a) ck.domain.hi[a] = r.get<double>();
    ck.log_s = r.get<double>();
    ck.iteration = r.get<uint64_t>();
    const std::array<std::size_t, 4> expected{ck.config.sdf_encoding.parameter_count(), ck.config.sdf_shape().parameter_count(),
                                              ck.config.color_encoding.parameter_count(),
                                              ck.config.color_shape().parameter_count()};
    std::array<std::vector<float>*, 4> dst{&ck.params.sdf_tables, &ck.params.sdf_mlp, &ck.params.color_tables,
                                           &ck.params.color_mlp};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto n = r.get<uint64_t>();
        if (n != expected[i]) throw FormatError("checkpoint: parameter array size does not match its configuration");
        dst[i]->resize(n);
        r.get_array<float>(*dst[i]);
    }
    if (!r.at_end()) throw FormatError("checkpoint: trailing bytes");
    return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) { write_file(path, encode_checkpoint(ck)); }

Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

// ---------------------------------------------------------------------------------------------

template void hash_encode<float>(const HashEncodingConfig&, std::span<const int>, std::span<const float>, const Vec3&,
                                 float*, HashTrace<float>*);
template void hash_encode<double>(const HashEncodingConfig&, std::span<const int>, std::span<const double>, const Vec3&,
                                  double*, HashTrace<double>*);
template void hash_encode_backward<float>(const HashEncodingConfig&, const HashTrace<float>&, const float*,
                                          std::span<float>);
template void hash_encode_backward<double>(const HashEncodingConfig&, const HashTrace<double>&, const double*,
                                           std::span<double>);
template void mlp_forward<float>(const MlpShape&, std::span<const float>, float*, float*);
template void mlp_forward<double>(const MlpShape&, std::span<const double>, double*, double*);
template void mlp_backward<float>(const MlpShape&, std::span<const float>, const float*, const float*, std::span<float>,
                                  float*, float*);
template void mlp_backward<double>(const MlpShape&, std::span<const double>, const double*, const double*,
                                   std::span<double>, double*, double*);
template FieldParams<float> init_params<float>(const FieldConfig&, uint64_t);
template FieldParams<double> init_params<double>(const FieldConfig&, uint64_t);
template struct FieldParams<float>;
template struct FieldParams<double>;
template class ResidualField<float>;
template class ResidualField<double>;
template class FieldTape<float>;
template class FieldTape<double>;

}  // namespace resurf
