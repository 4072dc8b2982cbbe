#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "resurf/core.hpp"

namespace resurf {

/// Multi-resolution hash grid settings. Level l has floor(base * growth^l) cells per axis.
struct HashEncodingConfig {
    int levels = 14;
    int features_per_level = 2;
    int table_size_log2 = 19;
    int base_resolution = 16;
    double growth_factor = 1.38;

    void validate() const;
    std::size_t table_size() const { return std::size_t{1} << table_size_log2; }
    std::size_t parameter_count() const {
        return static_cast<std::size_t>(levels) * table_size() * static_cast<std::size_t>(features_per_level);
    }
    int output_dim() const { return levels * features_per_level; }
    int level_resolution(int level) const {
        return static_cast<int>(std::floor(base_resolution * std::pow(growth_factor, level)));
    }
    bool operator==(const HashEncodingConfig&) const = default;
};

inline constexpr std::array<uint32_t, 3> kHashPrimes{73856093u, 19349663u, 83492791u};

/// Spatial hash of an integer lattice corner into [0, table_size).
inline uint32_t spatial_hash(uint32_t x, uint32_t y, uint32_t z, std::size_t table_size) {
    return ((x * kHashPrimes[0]) ^ (y * kHashPrimes[1]) ^ (z * kHashPrimes[2])) &
           static_cast<uint32_t>(table_size - 1);
}

/// Corner indices and trilinear weights of one encoding, kept for the backward pass.
/// `entries` holds table offsets (already including the level base) of each corner.
template <typename Real>
struct HashTrace {
    static constexpr int kCorners = 8;
    uint32_t* entries;  // levels * 8
    Real* weights;      // levels * 8
};

/// Per-level lattice resolutions, computed once per configuration.
std::vector<int> level_resolutions(const HashEncodingConfig& cfg);

/// Encodes a point of the unit cube. Writes levels * features_per_level values to `out`.
/// When `trace` is non-null the corner entries and weights are recorded.
template <typename Real>
void hash_encode(const HashEncodingConfig& cfg, std::span<const int> level_res, std::span<const Real> tables,
                 const Vec3& unit_p, Real* out, HashTrace<Real>* trace = nullptr);

/// Scatter-adds d(loss)/d(features) into the table gradient using a recorded trace.
template <typename Real>
void hash_encode_backward(const HashEncodingConfig& cfg, const HashTrace<Real>& trace, const Real* d_features,
                          std::span<Real> d_tables);

}  // namespace resurf
