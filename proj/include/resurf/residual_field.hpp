#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "resurf/field_grid.hpp"
#include "resurf/hash_encoding.hpp"
#include "resurf/mlp.hpp"

namespace resurf {

struct DecoderConfig {
    int hidden_layers = 2;
    int width = 64;
    bool operator==(const DecoderConfig&) const = default;
};

struct FieldConfig {
    HashEncodingConfig sdf_encoding{};
    DecoderConfig sdf_decoder{};
    HashEncodingConfig color_encoding{};
    DecoderConfig color_decoder{};
    double table_init_range = 1e-4;

    void validate() const;
    MlpShape sdf_shape() const;
    MlpShape color_shape() const;
    bool operator==(const FieldConfig&) const = default;
};

/// Learnable state: hash tables and decoders for the offset SDF and the color field.
template <typename Real>
struct FieldParams {
    std::vector<Real> sdf_tables;
    std::vector<Real> sdf_mlp;
    std::vector<Real> color_tables;
    std::vector<Real> color_mlp;

    std::array<std::span<Real>, 4> groups() { return {sdf_tables, sdf_mlp, color_tables, color_mlp}; }
    std::array<std::span<const Real>, 4> groups() const { return {sdf_tables, sdf_mlp, color_tables, color_mlp}; }
    std::size_t size() const { return sdf_tables.size() + sdf_mlp.size() + color_tables.size() + color_mlp.size(); }
    /// Same shapes, zero-filled.
    FieldParams zeros_like() const;
    void set_zero();
    bool all_finite() const;
    /// Flat access across all groups, in group order.
    Real& flat(std::size_t i);
    Real flat(std::size_t i) const;
};

/// Tables uniform in [-range, range]; hidden layers Glorot-uniform; the offset decoder's output layer is
/// zeroed so the offset is exactly zero everywhere before training.
template <typename Real>
FieldParams<Real> init_params(const FieldConfig& cfg, uint64_t seed);

/// Geometry and appearance of one evaluation.
struct FieldEval {
    double d_basis = 0.0;
    double d_offset = 0.0;
    double d = 0.0;
    Vec3 n_basis;
    Vec3 n_offset;
    Vec3 n;
    std::array<double, 3> color{0.0, 0.0, 0.0};
};

/// Upstream gradient of the loss w.r.t. one FieldEval's outputs.
struct FieldEvalGrad {
    double d = 0.0;
    Vec3 n;
    std::array<double, 3> color{0.0, 0.0, 0.0};
};

/// d = d_basis + d_offset over a frozen basis grid; d_offset and color are hash-encoded decoders.
template <typename Real>
class ResidualField {
public:
    ResidualField(FieldConfig cfg, std::shared_ptr<const VoxelGrid> basis, FieldParams<Real> params);

    const FieldConfig& config() const { return cfg_; }
    const VoxelGrid& basis() const { return *basis_; }
    std::shared_ptr<const VoxelGrid> basis_ptr() const { return basis_; }
    const Box& domain() const { return domain_; }
    FieldParams<Real>& params() { return params_; }
    const FieldParams<Real>& params() const { return params_; }

    /// Scene box -> unit cube, clamped.
    Vec3 to_unit(const Vec3& p) const;
    /// Finite-difference step for offset normals along each world axis: one finest-level cell.
    Vec3 normal_step() const { return normal_step_; }

    /// Network output alone.
    double offset(const Vec3& p) const;
    /// Offset SDF plus the interpolated basis value.
    double sdf(const Vec3& p) const { return interpolate(*basis_, p) + offset(p); }
    /// n_basis + n_offset, with n_offset from central differences of the network.
    Vec3 normal(const Vec3& p) const;
    /// Full evaluation; color requires a unit view direction.
    FieldEval evaluate(const Vec3& p, const Vec3* view_dir) const;
    /// Color decoder on explicit geometry inputs.
    std::array<double, 3> color(const Vec3& p, const Vec3& view_dir, double d, const Vec3& n) const;

private:
    FieldConfig cfg_;
    std::shared_ptr<const VoxelGrid> basis_;
    Box domain_;
    Vec3 normal_step_;
    FieldParams<Real> params_;
    MlpShape sdf_shape_;
    MlpShape color_shape_;
    std::vector<int> sdf_levels_;
    std::vector<int> color_levels_;

    template <typename>
    friend class FieldTape;
};

/// Records field evaluations so that one reverse pass can produce parameter gradients.
/// A tape may be back-propagated once; call reset() before recording again.
template <typename Real>
class FieldTape {
public:
    enum class Mode { residual, basis_only };

    explicit FieldTape(const ResidualField<Real>& field, Mode mode = Mode::residual);

    /// Records an evaluation. Normals are always computed; color only when view_dir is non-null.
    /// Returns the sample's index in the tape.
    std::size_t record(const Vec3& p, const Vec3* view_dir, FieldEval& out);
    std::size_t size() const { return samples_.size(); }

    /// Reverse pass. `seeds[i]` is the upstream gradient for the i-th recorded sample.
    /// Throws ContractViolation if called twice without reset().
    void backward(std::span<const FieldEvalGrad> seeds, FieldParams<Real>& grads);
    void reset();

private:
    struct SdfRecord {
        std::size_t acts;   // offset into acts_
        std::size_t trace;  // offset into entries_/weights_
    };
    struct ColorRecord {
        std::size_t acts;
        std::size_t trace;
    };
    struct SampleRecord {
        std::array<int64_t, 7> sdf{-1, -1, -1, -1, -1, -1, -1};  // center, +x, -x, +y, -y, +z, -z
        int64_t color = -1;
    };

    Real eval_sdf(const Vec3& p, int64_t& record_index);
    void eval_color(const Vec3& p, const Vec3& v, double d, const Vec3& n, std::array<double, 3>& rgb,
                    int64_t& record_index);

    const ResidualField<Real>& field_;
    Mode mode_;
    bool consumed_ = false;
    std::vector<SampleRecord> samples_;
    std::vector<SdfRecord> sdf_records_;
    std::vector<ColorRecord> color_records_;
    std::vector<Real> acts_;
    std::vector<uint32_t> entries_;
    std::vector<Real> weights_;
    std::vector<std::array<Real, 3>> color_out_;
    std::vector<Real> scratch_;
};

/// Float parameters plus everything needed to rebuild the field. Stored little-endian f32.
struct Checkpoint {
    FieldConfig config;
    Box domain;
    double log_s = 0.0;
    uint64_t iteration = 0;
    FieldParams<float> params;
};
inline constexpr uint32_t kCheckpointVersion = 1;
std::vector<uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

extern template class ResidualField<float>;
extern template class ResidualField<double>;
extern template class FieldTape<float>;
extern template class FieldTape<double>;
extern template struct FieldParams<float>;
extern template struct FieldParams<double>;

}  // namespace resurf
