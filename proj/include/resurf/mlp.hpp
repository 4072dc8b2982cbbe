#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace resurf {

/// Fully connected decoder: `hidden_layers` softplus layers of `width`, then a linear output layer.
/// Parameters are packed per layer as W (stored input-major: W[i * out + o]) followed by b.
struct MlpShape {
    int inputs = 0;
    int hidden_layers = 2;
    int width = 64;
    int outputs = 1;

    int layer_count() const { return hidden_layers + 1; }
    int layer_in(int l) const { return l == 0 ? inputs : width; }
    int layer_out(int l) const { return l == hidden_layers ? outputs : width; }
    std::size_t layer_offset(int l) const {
        std::size_t off = 0;
        for (int i = 0; i < l; ++i) off += static_cast<std::size_t>(layer_in(i) + 1) * static_cast<std::size_t>(layer_out(i));
        return off;
    }
    std::size_t parameter_count() const { return layer_offset(layer_count()); }
    /// Floats of activation storage for one evaluation: input, then pre- and post-activation per hidden layer.
    std::size_t activation_size() const {
        return static_cast<std::size_t>(inputs) + 2 * static_cast<std::size_t>(hidden_layers) * static_cast<std::size_t>(width);
    }
};

template <typename Real>
inline Real softplus(Real x) {
    return std::log1p(std::exp(-std::abs(x))) + std::max(x, Real(0));
}
template <typename Real>
inline Real sigmoid(Real x) {
    if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}

/// Forward pass. `acts` must hold activation_size() values and must already contain the input
/// in its first `inputs` slots. Writes `outputs` values to `out`.
template <typename Real>
void mlp_forward(const MlpShape& shape, std::span<const Real> params, Real* acts, Real* out);

/// Backward pass over stored activations. Accumulates into `d_params`; writes d(loss)/d(input) into
/// `d_input` when non-null. `scratch` must hold 2 * max(width, inputs) values.
template <typename Real>
void mlp_backward(const MlpShape& shape, std::span<const Real> params, const Real* acts, const Real* d_out,
                  std::span<Real> d_params, Real* d_input, Real* scratch);

}  // namespace resurf
