#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "error.hpp"

namespace ctreg {

/// Parallel-beam geometry on the unit square [-1/2, 1/2]^2.
///
/// Angles are the half-open grid theta_k = k pi / K, positions are cell
/// centers of [-sqrt(2)/2, sqrt(2)/2] split into L equal cells.
struct Geometry {
    int image_size = 0;     ///< I, pixels per side
    int num_angles = 0;     ///< K
    int num_positions = 0;  ///< L

    void validate() const {
        if (image_size < 1 || num_angles < 1 || num_positions < 1)
            throw ConfigError("geometry requires I, K, L >= 1 (got I=" + std::to_string(image_size) +
                              ", K=" + std::to_string(num_angles) +
                              ", L=" + std::to_string(num_positions) + ")");
    }

    int num_pixels() const { return image_size * image_size; }
    int num_rays() const { return num_angles * num_positions; }

    double pixel_width() const { return 1.0 / image_size; }
    double position_spacing() const { return std::numbers::sqrt2 / num_positions; }

    double angle(int k) const { return k * std::numbers::pi / num_angles; }
    double position(int l) const {
        return -std::numbers::sqrt2 / 2 + (l + 0.5) * position_spacing();
    }

    bool operator==(const Geometry&) const = default;
};

/// Square image, row-major. Row 0 is the bottom row; pixel (r, c) covers
/// [c/I, (c+1)/I] x [r/I, (r+1)/I] in unit-square coordinates.
struct Image {
    int size = 0;
    Eigen::VectorXd pixels;

    Image() = default;
    explicit Image(int n) : size(n), pixels(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * n)) {}
    Image(int n, Eigen::VectorXd values) : size(n), pixels(std::move(values)) {
        detail::require_dims(pixels.size() == static_cast<Eigen::Index>(n) * n,
                             "image pixel count does not match size^2");
    }

    double& at(int row, int col) { return pixels[static_cast<Eigen::Index>(row) * size + col]; }
    double at(int row, int col) const { return pixels[static_cast<Eigen::Index>(row) * size + col]; }
};

/// Angle-major sinogram: value (k, l) lives at index k * L + l.
struct Sinogram {
    int num_angles = 0;
    int num_positions = 0;
    Eigen::VectorXd values;

    Sinogram() = default;
    Sinogram(int k, int l)
        : num_angles(k), num_positions(l), values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k) * l)) {}
    Sinogram(int k, int l, Eigen::VectorXd v) : num_angles(k), num_positions(l), values(std::move(v)) {
        detail::require_dims(values.size() == static_cast<Eigen::Index>(k) * l,
                             "sinogram value count does not match K*L");
    }
    explicit Sinogram(const Geometry& g) : Sinogram(g.num_angles, g.num_positions) {}

    double& at(int k, int l) { return values[static_cast<Eigen::Index>(k) * num_positions + l]; }
    double at(int k, int l) const { return values[static_cast<Eigen::Index>(k) * num_positions + l]; }
};

}  // namespace ctreg
