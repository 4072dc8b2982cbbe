#include "resurf/config.hpp"

#include <set>

#include "json.hpp"

#include "resurf/binary_io.hpp"

namespace resurf {

using nlohmann::json;

void PriorConfig::validate() const {
    if (groups < 1) throw ConfigError("priors.groups must be >= 1");
    corruption.validate();
}

void RenderSettings::validate() const {
    if (patch_half_width < 1) throw ConfigError("render.patch_half_width must be >= 1");
    if (!(initial_width_voxels > 0.0)) throw ConfigError("render.initial_width_voxels must be > 0");
    if (!(transmittance_cutoff >= 0.0 && transmittance_cutoff < 1.0))
        throw ConfigError("render.transmittance_cutoff must lie in [0, 1)");
}

void RunConfig::validate() const {
    scene.validate();
    priors.validate();
    fusion.validate();
    if (!(domain_padding >= 0.0)) throw ConfigError("domain_padding must be >= 0");
    sampling.validate();
    field.validate();
    render.validate();
    train.validate();
    if (gt_mesh_resolution < 16) throw ConfigError("gt_mesh_resolution must be >= 16");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

namespace {

// Reads the keys of one JSON object and rejects anything it was not asked for.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where(key) + " has the wrong type");
        }
    }

    template <typename E, typename Parse>
    void get_enum(const char* key, E& out, Parse&& parse) {
        std::string s;
        seen_.insert(key);
        if (!j_.contains(key)) return;
        get(key, s);
        out = parse(s);
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    Reader child(const char* key) { return Reader(j_.at(key), where(key)); }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError("unknown configuration key " + where(item.key().c_str()));
    }

private:
    std::string where(const char* key = nullptr) const {
        const std::string base = path_.empty() ? std::string("<root>") : path_;
        return key ? (path_.empty() ? std::string(key) : path_ + "." + key) : base;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_vec3(Reader& r, const char* key, Vec3& v) {
    std::array<double, 3> a{v.x, v.y, v.z};
    r.get(key, a);
    v = {a[0], a[1], a[2]};
}

void read_encoding(Reader r, HashEncodingConfig& e) {
    r.get("levels", e.levels);
    r.get("features_per_level", e.features_per_level);
    r.get("table_size_log2", e.table_size_log2);
    r.get("base_resolution", e.base_resolution);
    r.get("growth_factor", e.growth_factor);
    r.finish();
}

void read_decoder(Reader r, DecoderConfig& d) {
    r.get("hidden_layers", d.hidden_layers);
    r.get("width", d.width);
    r.finish();
}

json write_encoding(const HashEncodingConfig& e) {
    return {{"levels", e.levels},
            {"features_per_level", e.features_per_level},
            {"table_size_log2", e.table_size_log2},
            {"base_resolution", e.base_resolution},
            {"growth_factor", e.growth_factor}};
}

json write_decoder(const DecoderConfig& d) { return {{"hidden_layers", d.hidden_layers}, {"width", d.width}}; }

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Reader root(j, "");
    if (root.has("scene")) {
        Reader r = root.child("scene");
        r.get_enum("shape", c.scene.shape, shape_kind_from_string);
        if (r.has("bounds")) {
            Reader b = r.child("bounds");
            read_vec3(b, "lo", c.scene.bounds.lo);
            read_vec3(b, "hi", c.scene.bounds.hi);
            b.finish();
        }
        r.get("cameras", c.scene.num_cameras);
        r.get("image_size", c.scene.image_size);
        r.get("focal", c.scene.focal);
        r.get("camera_distance", c.scene.camera_distance);
        r.get_enum("background", c.scene.background, background_from_string);
        r.finish();
    }
    if (root.has("priors")) {
        Reader r = root.child("priors");
        auto& k = c.priors.corruption;
        r.get("groups", c.priors.groups);
        r.get("resolution", k.resolution);
        r.get("depth_crop", k.depth_crop);
        r.get("bias", k.bias);
        r.get("ripple_amplitude", k.ripple_amplitude);
        r.get("ripple_frequency", k.ripple_frequency);
        r.get("erosion", k.erosion);
        r.get("noise_sigma", k.noise_sigma);
        r.finish();
    }
    if (root.has("fusion")) {
        Reader r = root.child("fusion");
        r.get("resolution", c.fusion.resolution);
        r.get("sigma_voxels", c.fusion.sigma_voxels);
        r.get_enum("mode", c.fusion.mode, fusion_mode_from_string);
        r.get("domain_padding", c.domain_padding);
        r.finish();
    }
    if (root.has("sampling")) {
        Reader r = root.child("sampling");
        r.get("betas", c.sampling.betas);
        r.get("coarse_samples_per_ray", c.sampling.coarse_samples_per_ray);
        r.get("dilation_voxels", c.sampling.dilation_voxels);
        r.get_enum("strategy", c.sampling.strategy, sampling_strategy_from_string);
        r.finish();
    }
    if (root.has("field")) {
        Reader r = root.child("field");
        if (r.has("sdf_encoding")) read_encoding(r.child("sdf_encoding"), c.field.sdf_encoding);
        if (r.has("sdf_decoder")) read_decoder(r.child("sdf_decoder"), c.field.sdf_decoder);
        if (r.has("color_encoding")) read_encoding(r.child("color_encoding"), c.field.color_encoding);
        if (r.has("color_decoder")) read_decoder(r.child("color_decoder"), c.field.color_decoder);
        r.get("table_init_range", c.field.table_init_range);
        r.finish();
    }
    if (root.has("render")) {
        Reader r = root.child("render");
        r.get("patch_half_width", c.render.patch_half_width);
        r.get("initial_width_voxels", c.render.initial_width_voxels);
        r.get("transmittance_cutoff", c.render.transmittance_cutoff);
        r.finish();
    }
    if (root.has("train")) {
        Reader r = root.child("train");
        auto& t = c.train;
        r.get("iterations", t.iterations);
        r.get("rays_per_batch", t.rays_per_batch);
        r.get("eikonal_points", t.eikonal_points);
        r.get("lr_tables", t.lr_tables);
        r.get("lr_decoders", t.lr_decoders);
        r.get("lr_log_s", t.lr_log_s);
        r.get("final_lr_factor", t.final_lr_factor);
        r.get("adam_beta1", t.adam_beta1);
        r.get("adam_beta2", t.adam_beta2);
        r.get("adam_eps", t.adam_eps);
        r.get("lambdas", t.lambdas);
        r.get("eval_every", t.eval_every);
        r.get("eval_samples", t.eval_samples);
        r.get("patch_min_weight", t.patch_min_weight);
        r.get("max_empty_batches", t.max_empty_batches);
        r.finish();
    }
    root.get("gt_mesh_resolution", c.gt_mesh_resolution);
    root.get("output_dir", c.output_dir);
    root.get("seed", c.seed);
    root.finish();
    c.validate();
    return c;
}

std::string serialize_config(const RunConfig& c) {
    const auto& k = c.priors.corruption;
    const auto& t = c.train;
    json j = {
        {"scene",
         {{"shape", to_string(c.scene.shape)},
          {"bounds",
           {{"lo", {c.scene.bounds.lo.x, c.scene.bounds.lo.y, c.scene.bounds.lo.z}},
            {"hi", {c.scene.bounds.hi.x, c.scene.bounds.hi.y, c.scene.bounds.hi.z}}}},
          {"cameras", c.scene.num_cameras},
          {"image_size", c.scene.image_size},
          {"focal", c.scene.focal},
          {"camera_distance", c.scene.camera_distance},
          {"background", to_string(c.scene.background)}}},
        {"priors",
         {{"groups", c.priors.groups},
          {"resolution", k.resolution},
          {"depth_crop", k.depth_crop},
          {"bias", k.bias},
          {"ripple_amplitude", k.ripple_amplitude},
          {"ripple_frequency", k.ripple_frequency},
          {"erosion", k.erosion},
          {"noise_sigma", k.noise_sigma}}},
        {"fusion",
         {{"resolution", c.fusion.resolution},
          {"sigma_voxels", c.fusion.sigma_voxels},
          {"mode", to_string(c.fusion.mode)},
          {"domain_padding", c.domain_padding}}},
        {"sampling",
         {{"betas", c.sampling.betas},
          {"coarse_samples_per_ray", c.sampling.coarse_samples_per_ray},
          {"dilation_voxels", c.sampling.dilation_voxels},
          {"strategy", to_string(c.sampling.strategy)}}},
        {"field",
         {{"sdf_encoding", write_encoding(c.field.sdf_encoding)},
          {"sdf_decoder", write_decoder(c.field.sdf_decoder)},
          {"color_encoding", write_encoding(c.field.color_encoding)},
          {"color_decoder", write_decoder(c.field.color_decoder)},
          {"table_init_range", c.field.table_init_range}}},
        {"render",
         {{"patch_half_width", c.render.patch_half_width},
          {"initial_width_voxels", c.render.initial_width_voxels},
          {"transmittance_cutoff", c.render.transmittance_cutoff}}},
        {"train",
         {{"iterations", t.iterations},
          {"rays_per_batch", t.rays_per_batch},
          {"eikonal_points", t.eikonal_points},
          {"lr_tables", t.lr_tables},
          {"lr_decoders", t.lr_decoders},
          {"lr_log_s", t.lr_log_s},
          {"final_lr_factor", t.final_lr_factor},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps},
          {"lambdas", t.lambdas},
          {"eval_every", t.eval_every},
          {"eval_samples", t.eval_samples},
          {"patch_min_weight", t.patch_min_weight},
          {"max_empty_batches", t.max_empty_batches}}},
        {"gt_mesh_resolution", c.gt_mesh_resolution},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
    };
    return j.dump(2) + "\n";
}

RunConfig load_config(const std::filesystem::path& path) {
    std::vector<uint8_t> bytes;
    try {
        bytes = read_file(path);
    } catch (const Error& e) {
        throw ConfigError("cannot read configuration '" + path.string() + "': " + e.what());
    }
    return parse_config(std::string(bytes.begin(), bytes.end()));
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) { write_text(path, serialize_config(cfg)); }

}  // namespace resurf
