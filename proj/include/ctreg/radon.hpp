#pragma once

// Discrete Radon transform with the Spline-0 (piecewise-constant) pixel
// model: the matrix entry for ray (k, l) and pixel p is the length of the
// ray inside p. Lengths are measured in pixel widths, so the pixel side is
// 1 and a ray crosses a pixel with length at most sqrt(2).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "error.hpp"
#include "geometry.hpp"

namespace ctreg {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct RayEntry {
    int pixel;
    double length;
};

/// Pixels crossed by the line {x : x1 cos(theta) + x2 sin(theta) = s}, with
/// x1 the vertical (row) and x2 the horizontal (column) coordinate.
///
/// Implemented by parametric traversal: the line is clipped against the
/// square, all grid-line crossings inside the clip interval are sorted, and
/// each sub-segment is charged to the pixel containing its midpoint. Entries
/// come back ordered by pixel index, without duplicates.
inline std::vector<RayEntry> trace_ray(int image_size, double theta, double s) {
    constexpr double kParallel = 1e-14;
    const double n[2] = {std::cos(theta), std::sin(theta)};
    const double d[2] = {-n[1], n[0]};
    const double p0[2] = {s * n[0], s * n[1]};

    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 2; ++i) {
        if (std::abs(d[i]) < kParallel) {
            if (p0[i] <= -0.5 || p0[i] >= 0.5) return {};
            continue;
        }
        double a = (-0.5 - p0[i]) / d[i];
        double b = (0.5 - p0[i]) / d[i];
        if (a > b) std::swap(a, b);
        t_lo = std::max(t_lo, a);
        t_hi = std::min(t_hi, b);
    }
    if (!(t_hi > t_lo)) return {};

    std::vector<double> ts{t_lo, t_hi};
    ts.reserve(2 * image_size + 4);
    for (int i = 0; i < 2; ++i) {
        if (std::abs(d[i]) < kParallel) continue;
        for (int m = 1; m < image_size; ++m) {
            const double x = -0.5 + static_cast<double>(m) / image_size;
            const double t = (x - p0[i]) / d[i];
            if (t > t_lo && t < t_hi) ts.push_back(t);
        }
    }
    std::sort(ts.begin(), ts.end());

    std::vector<RayEntry> out;
    out.reserve(ts.size());
    for (std::size_t j = 0; j + 1 < ts.size(); ++j) {
        const double dt = ts[j + 1] - ts[j];
        if (dt <= 0.0) continue;
        const double tm = 0.5 * (ts[j] + ts[j + 1]);
        const double x1 = p0[0] + tm * d[0];
        const double x2 = p0[1] + tm * d[1];
        const int row = std::clamp(static_cast<int>(std::floor((x1 + 0.5) * image_size)), 0, image_size - 1);
        const int col = std::clamp(static_cast<int>(std::floor((x2 + 0.5) * image_size)), 0, image_size - 1);
        out.push_back({row * image_size + col, dt * image_size});
    }
    std::sort(out.begin(), out.end(), [](const RayEntry& a, const RayEntry& b) { return a.pixel < b.pixel; });
    std::vector<RayEntry> merged;
    merged.reserve(out.size());
    for (const auto& e : out) {
        if (!merged.empty() && merged.back().pixel == e.pixel)
            merged.back().length += e.length;
        else
            merged.push_back(e);
    }
    return merged;
}

/// Immutable (K*L) x I^2 system matrix. Rays missing the square keep their
/// (empty) rows.
struct RadonMatrix {
    Geometry geometry;
    SparseRowMatrix matrix;

    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

inline RadonMatrix build_operator(const Geometry& geometry) {
    geometry.validate();
    std::vector<Eigen::Triplet<double, int>> triplets;
    triplets.reserve(static_cast<std::size_t>(geometry.num_rays()) * 2 * geometry.image_size);
    for (int k = 0; k < geometry.num_angles; ++k) {
        const double theta = geometry.angle(k);
        for (int l = 0; l < geometry.num_positions; ++l) {
            const int row = k * geometry.num_positions + l;
            for (const auto& e : trace_ray(geometry.image_size, theta, geometry.position(l)))
                triplets.emplace_back(row, e.pixel, e.length);
        }
    }
    RadonMatrix op{geometry, SparseRowMatrix(geometry.num_rays(), geometry.num_pixels())};
    op.matrix.setFromTriplets(triplets.begin(), triplets.end());
    op.matrix.makeCompressed();
    return op;
}

inline Sinogram forward(const RadonMatrix& op, const Image& u) {
    detail::require_dims(u.size == op.geometry.image_size, "forward: image size does not match geometry");
    return Sinogram(op.geometry.num_angles, op.geometry.num_positions, op.matrix * u.pixels);
}

inline Image adjoint(const RadonMatrix& op, const Sinogram& f) {
    detail::require_dims(f.num_angles == op.geometry.num_angles && f.num_positions == op.geometry.num_positions,
                         "adjoint: sinogram shape does not match geometry");
    return Image(op.geometry.image_size, op.matrix.transpose() * f.values);
}

/// Factors relating discrete quantities to their continuous counterparts on
/// L^2 of the unit square / [0, pi) x [-sqrt2/2, sqrt2/2]:
///   A^* v  ~ adjoint_factor * A^T v
///   sigma^ ~ sigma_factor * sigma,   u^_n ~ u_factor * u_n,  v^_n ~ v_factor * v_n
///   Pi^    ~ Pi_factor * Pi,  Delta^ ~ Delta_factor * Delta,  Gamma^ ~ Gamma_factor * Gamma
struct ScalingFactors {
    double adjoint_factor;
    double sigma_factor;
    double u_factor;
    double v_factor;
    double Pi_factor;
    double Delta_factor;
    double Gamma_factor;
};

inline ScalingFactors continuous_scaling(const Geometry& g) {
    g.validate();
    const double w = std::numbers::sqrt2 * std::numbers::pi / (static_cast<double>(g.num_angles) * g.num_positions);
    const double I = g.image_size;
    return {
        .adjoint_factor = w,
        .sigma_factor = std::sqrt(w),
        .u_factor = I,
        .v_factor = 1.0 / std::sqrt(w),
        .Pi_factor = 1.0 / (I * I),
        .Delta_factor = w,
        .Gamma_factor = std::sqrt(w) / I,
    };
}

/// Writes `operator.json` (geometry header) and `operator.triplets`
/// ("row col value" per line, row-major order, %.17g) into `dir`.
inline void dump_operator(const RadonMatrix& op, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json header;
    header["image_size"] = op.geometry.image_size;
    header["num_angles"] = op.geometry.num_angles;
    header["num_positions"] = op.geometry.num_positions;
    header["rows"] = op.matrix.rows();
    header["cols"] = op.matrix.cols();
    header["nnz"] = op.matrix.nonZeros();
    header["row_order"] = "angle-major: row = k*L + l";
    header["pixel_order"] = "row-major, row 0 at bottom";
    header["length_unit"] = "pixel width";
    std::ofstream(dir / "operator.json") << header.dump(2) << "\n";

    std::ofstream out(dir / "operator.triplets");
    out << std::setprecision(17);
    for (int r = 0; r < op.matrix.outerSize(); ++r)
        for (SparseRowMatrix::InnerIterator it(op.matrix, r); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace ctreg
