#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "error.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace ctreg {

struct NoiseSpec {
    double variance = 0.0;  ///< s^2
    std::uint64_t seed = 0;

    void validate() const {
        if (!(variance >= 0.0)) throw ConfigError("noise variance must be >= 0");
    }
};

/// I.i.d. N(0, s^2) sinogram noise for one sample. The realization is
/// s * z where z is drawn from the stream derive_seed(seed, noise, index) in
/// angle-major order, so every variance shares the same standard-normal draw.
inline Sinogram sample_noise(const NoiseSpec& spec, const Geometry& geometry, std::uint64_t sample_index) {
    spec.validate();
    geometry.validate();
    Sinogram out(geometry);
    if (spec.variance == 0.0) return out;
    Xoshiro256 rng(derive_seed(spec.seed, stream_tag::noise, sample_index));
    const double s = std::sqrt(spec.variance);
    for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values[i] = s * rng.normal();
    return out;
}

/// Noise for a block of consecutive samples, one column per sample.
inline Eigen::MatrixXd sample_noise_block(const NoiseSpec& spec, const Geometry& geometry,
                                          std::uint64_t first_index, int count) {
    Eigen::MatrixXd out(geometry.num_rays(), count);
    for (int i = 0; i < count; ++i) out.col(i) = sample_noise(spec, geometry, first_index + i).values;
    return out;
}

/// delta^2 = max_n Delta_n.
inline double noise_level(const Eigen::VectorXd& delta) {
    if (delta.size() == 0) throw ConfigError("noise_level: empty statistics");
    return delta.maxCoeff();
}

}  // namespace ctreg
