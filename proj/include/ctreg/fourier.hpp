#pragma once

// Filtered back-projection in the per-angle DFT domain.
//
// Conventions: unitary DFT along the position axis, length L, no padding.
// Bin j has signed index j' = j for j <= L/2 and j - L otherwise, and
// physical frequency r_j = j' / (L h) with h = sqrt(2)/L the position
// spacing (cycles per unit length).

#include <cmath>
#include <complex>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "error.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "radon.hpp"

namespace ctreg {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXcd = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline int signed_frequency_index(int j, int length) { return 2 * j <= length ? j : j - length; }

inline Eigen::VectorXd frequency_grid(const Geometry& g) {
    Eigen::VectorXd r(g.num_positions);
    const double scale = 1.0 / (g.num_positions * g.position_spacing());
    for (int j = 0; j < g.num_positions; ++j) r[j] = signed_frequency_index(j, g.num_positions) * scale;
    return r;
}

/// Dense unitary DFT matrix, F(j, l) = exp(-2 pi i j l / L) / sqrt(L). F is
/// symmetric, so a row-major K x L block X transforms as X * F and inverts as
/// S * conj(F).
class Dft {
public:
    explicit Dft(int length) : length_(length), forward_(length, length) {
        if (length < 1) throw ConfigError("DFT length must be >= 1");
        const double norm = 1.0 / std::sqrt(static_cast<double>(length));
        for (int j = 0; j < length; ++j)
            for (int l = 0; l < length; ++l) {
                const long m = (static_cast<long>(j) * l) % length;
                const double phase = -2.0 * std::numbers::pi * static_cast<double>(m) / length;
                forward_(j, l) = std::polar(norm, phase);
            }
        inverse_ = forward_.conjugate();
    }

    int length() const { return length_; }

    RowMatrixXcd forward(const RowMatrixXd& rows) const { return rows.cast<std::complex<double>>() * forward_; }
    RowMatrixXcd forward(const RowMatrixXcd& rows) const { return rows * forward_; }
    RowMatrixXcd inverse(const RowMatrixXcd& spectrum) const { return spectrum * inverse_; }

private:
    int length_;
    Eigen::MatrixXcd forward_;
    Eigen::MatrixXcd inverse_;
};

inline Eigen::Map<const RowMatrixXd> as_rows(const Sinogram& f) {
    return {f.values.data(), f.num_angles, f.num_positions};
}

inline RowMatrixXcd sinogram_dft(const Sinogram& f, const Dft& dft) {
    detail::require_dims(dft.length() == f.num_positions, "DFT length does not match sinogram positions");
    return dft.forward(RowMatrixXd(as_rows(f)));
}

inline RowMatrixXcd sinogram_dft(const Sinogram& f) { return sinogram_dft(f, Dft(f.num_positions)); }

inline Sinogram inverse_sinogram_dft(const RowMatrixXcd& spectrum, const Dft& dft, double* max_imag = nullptr) {
    const RowMatrixXcd x = dft.inverse(spectrum);
    if (max_imag) *max_imag = x.size() ? x.imag().cwiseAbs().maxCoeff() : 0.0;
    const RowMatrixXd re = x.real();
    return Sinogram(static_cast<int>(re.rows()), static_cast<int>(re.cols()),
                    Eigen::Map<const Eigen::VectorXd>(re.data(), re.size()));
}

enum class FilterKind { ramp, hamming, pseudo_ramp, analytic_empirical, learned, custom };

inline const char* to_string(FilterKind k) {
    switch (k) {
        case FilterKind::ramp: return "ramp";
        case FilterKind::hamming: return "hamming";
        case FilterKind::pseudo_ramp: return "pseudo_ramp";
        case FilterKind::analytic_empirical: return "analytic_empirical";
        case FilterKind::learned: return "learned";
        case FilterKind::custom: return "custom";
    }
    return "?";
}

/// Real filter on the (angle x frequency-bin) grid.
///
/// With `ramp_relative` false, `values` is the multiplier rho applied to the
/// spectrum before back-projection. With it true, `values` is the gain
/// psi = rho / |r| and must be combined with a base filter (the ramp or a
/// pseudo-ramp) via `compose` before use.
struct FourierFilter {
    Geometry geometry;
    RowMatrixXd values;  ///< K x L
    bool angle_constant = false;
    bool ramp_relative = false;
    FilterKind kind = FilterKind::custom;

    static FourierFilter constant(const Geometry& g, double v, FilterKind kind = FilterKind::custom) {
        return {g, RowMatrixXd::Constant(g.num_angles, g.num_positions, v), true, false, kind};
    }

    /// Angle-constant filter from one row of L bin values.
    static FourierFilter from_row(const Geometry& g, const Eigen::VectorXd& row, FilterKind kind) {
        detail::require_dims(row.size() == g.num_positions, "filter row length must equal L");
        FourierFilter f{g, RowMatrixXd(g.num_angles, g.num_positions), true, false, kind};
        f.values.rowwise() = row.transpose();
        return f;
    }

    Eigen::VectorXd row(int k = 0) const { return values.row(k).transpose(); }
};

/// Per-angle multiplication of the spectrum by the real filter. The
/// imaginary residue of the inverse transform is discarded; it vanishes for
/// filters with rho(r) = rho(-r).
inline Sinogram apply_filter(const Sinogram& f, const FourierFilter& filter, const Dft& dft,
                             double* max_imag = nullptr) {
    detail::require_dims(f.num_angles == filter.values.rows() && f.num_positions == filter.values.cols(),
                         "apply_filter: filter shape does not match sinogram");
    if (filter.ramp_relative) throw ConfigError("apply_filter: ramp-relative gain must be composed with a base filter");
    RowMatrixXcd spec = sinogram_dft(f, dft);
    spec.array() *= filter.values.array().cast<std::complex<double>>();
    return inverse_sinogram_dft(spec, dft, max_imag);
}

inline Sinogram apply_filter(const Sinogram& f, const FourierFilter& filter, double* max_imag = nullptr) {
    return apply_filter(f, filter, Dft(f.num_positions), max_imag);
}

/// sqrt(2) pi / (K L) * A^T (filtered f).
inline Image fbp_reconstruct(const RadonMatrix& op, const FourierFilter& filter, const Sinogram& f, const Dft& dft) {
    detail::require_dims(filter.geometry == op.geometry, "fbp_reconstruct: filter geometry does not match operator");
    const Sinogram q = apply_filter(f, filter, dft);
    Image out = adjoint(op, q);
    out.pixels *= continuous_scaling(op.geometry).adjoint_factor;
    return out;
}

inline Image fbp_reconstruct(const RadonMatrix& op, const FourierFilter& filter, const Sinogram& f) {
    return fbp_reconstruct(op, filter, f, Dft(op.geometry.num_positions));
}

/// Columns of `f` are sinograms; returns one image per column.
inline Eigen::MatrixXd fbp_reconstruct(const RadonMatrix& op, const FourierFilter& filter, const Eigen::MatrixXd& f,
                                       const Dft& dft) {
    const Geometry& g = op.geometry;
    Eigen::MatrixXd out(g.num_pixels(), f.cols());
    for (Eigen::Index i = 0; i < f.cols(); ++i)
        out.col(i) = fbp_reconstruct(op, filter, Sinogram(g.num_angles, g.num_positions, f.col(i)), dft).pixels;
    return out;
}

/// ramp: |r|; hamming: |r| (0.54 + 0.46 cos(pi |r| / r_max)), r_max the
/// largest |r| on the grid.
inline FourierFilter classical_filter(FilterKind kind, const Geometry& g) {
    g.validate();
    const Eigen::VectorXd r = frequency_grid(g).cwiseAbs();
    Eigen::VectorXd row = r;
    if (kind == FilterKind::hamming) {
        const double rmax = r.maxCoeff();
        for (Eigen::Index j = 0; j < r.size(); ++j)
            row[j] = rmax > 0 ? r[j] * (0.54 + 0.46 * std::cos(std::numbers::pi * r[j] / rmax)) : 0.0;
    } else if (kind != FilterKind::ramp) {
        throw ConfigError(std::string("not a classical filter: ") + to_string(kind));
    }
    return FourierFilter::from_row(g, row, kind);
}

/// Applied filter gain * base (elementwise); `gain` must be ramp-relative.
inline FourierFilter compose(const FourierFilter& gain, const FourierFilter& base) {
    detail::require_dims(gain.values.rows() == base.values.rows() && gain.values.cols() == base.values.cols(),
                         "compose: filter shapes differ");
    if (!gain.ramp_relative || base.ramp_relative) throw ConfigError("compose expects (gain, base) filters");
    FourierFilter out = gain;
    out.values = gain.values.cwiseProduct(base.values);
    out.ramp_relative = false;
    out.angle_constant = gain.angle_constant && base.angle_constant;
    return out;
}

/// Mean over angles per frequency bin.
inline FourierFilter angle_average(const FourierFilter& filter) {
    FourierFilter out = filter;
    const Eigen::RowVectorXd mean = filter.values.colwise().mean();
    out.values.rowwise() = mean;
    out.angle_constant = true;
    return out;
}

/// Empirical (angle x frequency) moments of per-angle spectra a = F(A u), n = F(nu):
///   Pi = mean |a|^2,  Delta = mean |n|^2,  Gamma = mean (a conj(n) + conj(a) n) = mean 2 Re(a conj(n)).
struct FourierStats {
    RowMatrixXd Pi, Delta, Gamma;
    int sample_count = 0;
};

/// Columns of `clean` are noiseless sinograms A u_i, columns of `noise` are nu_i.
inline FourierStats compute_fourier_stats(const Geometry& g, const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noise) {
    detail::require_dims(clean.cols() == noise.cols(), "fourier stats: sinogram and noise counts differ");
    detail::require_dims(clean.rows() == g.num_rays() && noise.rows() == g.num_rays(),
                         "fourier stats: sinogram size does not match geometry");
    if (clean.cols() < 1) throw DimensionError("fourier stats need at least one sample");
    const Dft dft(g.num_positions);
    FourierStats s;
    s.Pi = RowMatrixXd::Zero(g.num_angles, g.num_positions);
    s.Delta = s.Pi;
    s.Gamma = s.Pi;
    for (Eigen::Index i = 0; i < clean.cols(); ++i) {
        const RowMatrixXcd a = sinogram_dft(Sinogram(g.num_angles, g.num_positions, clean.col(i)), dft);
        const RowMatrixXcd n = sinogram_dft(Sinogram(g.num_angles, g.num_positions, noise.col(i)), dft);
        s.Pi.array() += a.array().abs2();
        s.Delta.array() += n.array().abs2();
        s.Gamma.array() += 2.0 * (a.array() * n.array().conjugate()).real();
    }
    const double inv = 1.0 / static_cast<double>(clean.cols());
    s.Pi *= inv;
    s.Delta *= inv;
    s.Gamma *= inv;
    s.sample_count = static_cast<int>(clean.cols());
    return s;
}

/// Exact per-bin minimizer of mean |a - psi (a + n)|^2:
///   psi = (Pi + Gamma/2) / (Pi + Delta + Gamma),
/// 0 where the denominator mean |a + n|^2 vanishes. Returned as a
/// ramp-relative gain.
inline FourierFilter analytic_filter_empirical(const Geometry& g, const FourierStats& s) {
    detail::require_dims(s.Pi.rows() == g.num_angles && s.Pi.cols() == g.num_positions,
                         "fourier stats shape does not match geometry");
    FourierFilter f{g, RowMatrixXd(g.num_angles, g.num_positions), false, true, FilterKind::analytic_empirical};
    for (Eigen::Index k = 0; k < s.Pi.rows(); ++k)
        for (Eigen::Index j = 0; j < s.Pi.cols(); ++j) {
            const double den = s.Pi(k, j) + s.Delta(k, j) + s.Gamma(k, j);
            f.values(k, j) = den > 0.0 ? (s.Pi(k, j) + 0.5 * s.Gamma(k, j)) / den : 0.0;
        }
    return f;
}

/// Population gain psi = Pi / (Pi + Delta).
inline FourierFilter analytic_filter_population(const Geometry& g, const RowMatrixXd& Pi, const RowMatrixXd& Delta) {
    FourierFilter f{g, RowMatrixXd(Pi.rows(), Pi.cols()), false, true, FilterKind::analytic_empirical};
    const auto den = Pi.array() + Delta.array();
    f.values = (den > 0.0).select(Pi.array() / den, 0.0).matrix();
    return f;
}

/// Pi~ = Pi / (Pi + Delta) * Pi.
inline RowMatrixXd fourier_expected_smoothness(const RowMatrixXd& Pi, const RowMatrixXd& Delta) {
    const auto den = Pi.array() + Delta.array();
    return (den > 0.0).select(Pi.array().square() / den, 0.0).matrix();
}

/// Columns: angle_index, frequency_r, psi, rho (psi = rho / |r|; nan at r = 0
/// when only rho is known).
inline void write_filter_csv(const std::filesystem::path& path, const FourierFilter& f) {
    const Eigen::VectorXd r = frequency_grid(f.geometry);
    CsvWriter csv(path, {"angle_index", "frequency_r", "psi", "rho"});
    for (Eigen::Index k = 0; k < f.values.rows(); ++k)
        for (Eigen::Index j = 0; j < f.values.cols(); ++j) {
            const double v = f.values(k, j), ar = std::abs(r[j]);
            const double psi = f.ramp_relative ? v : (ar > 0 ? v / ar : std::numeric_limits<double>::quiet_NaN());
            const double rho = f.ramp_relative ? v * ar : v;
            csv.row(static_cast<long>(k), r[j], psi, rho);
        }
}

}  // namespace ctreg
