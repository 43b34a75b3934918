#pragma once

// Spectral (singular-basis) regularization of the discrete Radon operator:
// operator SVD, per-mode signal/noise statistics, optimal and classical
// filter coefficients, and reconstruction.
//
// Conventions: A = V diag(sigma) U^T with U (I^2 x R) spanning image space
// and V (K*L x R) spanning sinogram space; data f = A u + nu.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "error.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "radon.hpp"

namespace ctreg {

struct OperatorSVD {
    Eigen::MatrixXd U;      ///< image-space singular vectors u_n (columns)
    Eigen::VectorXd sigma;  ///< non-increasing, strictly positive
    Eigen::MatrixXd V;      ///< sinogram-space singular vectors v_n (columns)

    int rank() const { return static_cast<int>(sigma.size()); }
};

struct SvdOptions {
    double truncation_tol = 1e-12;                        ///< drop sigma_n < tol * sigma_1
    std::size_t memory_budget_bytes = std::size_t{3} << 30;  ///< dense working set limit
};

/// Bytes needed for the dense matrix, its thin factors and BDCSVD workspace.
inline std::size_t svd_working_set_bytes(Eigen::Index rows, Eigen::Index cols) {
    const auto m = static_cast<std::size_t>(rows), n = static_cast<std::size_t>(cols);
    const auto k = std::min(m, n);
    return sizeof(double) * (2 * m * n + m * k + n * k + 2 * k * k);
}

inline OperatorSVD compute_svd(const Eigen::MatrixXd& a, const SvdOptions& opts = {}) {
    if (a.size() == 0) throw DimensionError("compute_svd: empty matrix");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::Index r = 0;
    const double cutoff = opts.truncation_tol * (s.size() ? s[0] : 0.0);
    while (r < s.size() && s[r] > 0.0 && s[r] >= cutoff) ++r;
    OperatorSVD out;
    out.sigma = s.head(r);
    out.V = svd.matrixU().leftCols(r);
    out.U = svd.matrixV().leftCols(r);
    return out;
}

/// Throws CapacityError when the dense working set exceeds the budget; the
/// SVD route is only practical at low resolution.
inline OperatorSVD compute_svd(const RadonMatrix& op, const SvdOptions& opts = {}) {
    const auto need = svd_working_set_bytes(op.matrix.rows(), op.matrix.cols());
    if (need > opts.memory_budget_bytes)
        throw CapacityError("dense SVD of a " + std::to_string(op.matrix.rows()) + " x " +
                            std::to_string(op.matrix.cols()) + " operator needs ~" +
                            std::to_string(need >> 20) + " MiB (budget " +
                            std::to_string(opts.memory_budget_bytes >> 20) +
                            " MiB); reduce the image size or raise memory_budget_bytes");
    return compute_svd(op.dense(), opts);
}

/// Empirical per-mode moments over N (image, noise) pairs:
///   Pi_n = mean <u,u_n>^2,  Delta_n = mean <nu,v_n>^2,  Gamma_n = mean <u,u_n><nu,v_n>.
struct SpectralStats {
    Eigen::VectorXd Pi;
    Eigen::VectorXd Delta;
    Eigen::VectorXd Gamma;
    int sample_count = 0;
    double noise_variance = 0.0;
};

/// Per-sample singular-basis coefficients: c = U^T u and eta = V^T nu.
struct ModalCoefficients {
    Eigen::MatrixXd signal;  ///< R x N
    Eigen::MatrixXd noise;   ///< R x N
};

inline ModalCoefficients project_modes(const OperatorSVD& svd, const Eigen::MatrixXd& images,
                                       const Eigen::MatrixXd& noises) {
    detail::require_dims(images.cols() == noises.cols(), "spectral stats: image and noise counts differ");
    detail::require_dims(images.rows() == svd.U.rows(), "spectral stats: image size does not match operator");
    detail::require_dims(noises.rows() == svd.V.rows(), "spectral stats: sinogram size does not match operator");
    return {svd.U.transpose() * images, svd.V.transpose() * noises};
}

inline SpectralStats stats_from_modes(const ModalCoefficients& m, double noise_variance = 0.0) {
    const auto n = m.signal.cols();
    if (n < 1) throw DimensionError("spectral stats need at least one sample");
    SpectralStats s;
    s.Pi = m.signal.array().square().rowwise().sum() / static_cast<double>(n);
    s.Delta = m.noise.array().square().rowwise().sum() / static_cast<double>(n);
    s.Gamma = (m.signal.array() * m.noise.array()).rowwise().sum() / static_cast<double>(n);
    s.sample_count = static_cast<int>(n);
    s.noise_variance = noise_variance;
    return s;
}

/// Images are columns (I^2 x N); noises are columns (K*L x N).
inline SpectralStats compute_spectral_stats(const OperatorSVD& svd, const Eigen::MatrixXd& images,
                                            const Eigen::MatrixXd& noises, double noise_variance = 0.0) {
    return stats_from_modes(project_modes(svd, images, noises), noise_variance);
}

inline SpectralStats compute_spectral_stats(const OperatorSVD& svd, const std::vector<Image>& images,
                                            const std::vector<Sinogram>& noises, double noise_variance = 0.0) {
    detail::require_dims(images.size() == noises.size(), "spectral stats: image and noise counts differ");
    detail::require_dims(!images.empty(), "spectral stats need at least one sample");
    Eigen::MatrixXd u(svd.U.rows(), static_cast<Eigen::Index>(images.size()));
    Eigen::MatrixXd nu(svd.V.rows(), static_cast<Eigen::Index>(noises.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
        detail::require_dims(images[i].pixels.size() == u.rows(), "spectral stats: image size mismatch");
        detail::require_dims(noises[i].values.size() == nu.rows(), "spectral stats: sinogram size mismatch");
        u.col(static_cast<Eigen::Index>(i)) = images[i].pixels;
        nu.col(static_cast<Eigen::Index>(i)) = noises[i].values;
    }
    return compute_spectral_stats(svd, u, nu, noise_variance);
}

inline double noise_level(const SpectralStats& stats) {
    if (stats.Delta.size() == 0) throw ConfigError("noise_level: empty statistics");
    return stats.Delta.maxCoeff();
}

enum class CoefficientKind { analytic_population, analytic_empirical, learned, tikhonov, tsvd, pseudo_inverse };

inline const char* to_string(CoefficientKind k) {
    switch (k) {
        case CoefficientKind::analytic_population: return "analytic_population";
        case CoefficientKind::analytic_empirical: return "analytic_empirical";
        case CoefficientKind::learned: return "learned";
        case CoefficientKind::tikhonov: return "tikhonov";
        case CoefficientKind::tsvd: return "tsvd";
        case CoefficientKind::pseudo_inverse: return "pseudo_inverse";
    }
    return "?";
}

struct SpectralCoefficients {
    Eigen::VectorXd g;
    CoefficientKind kind = CoefficientKind::pseudo_inverse;
    double parameter = 0.0;  ///< alpha (tikhonov) or tau (tsvd)
    double noise_variance = 0.0;
};

namespace detail {

inline void check_moments(const Eigen::VectorXd& sigma, const Eigen::VectorXd& Pi, const Eigen::VectorXd& Delta) {
    require_dims(sigma.size() == Pi.size() && sigma.size() == Delta.size(),
                 "coefficient inputs have mismatched lengths");
    if ((Pi.array() < 0).any() || (Delta.array() < 0).any())
        throw ConfigError("Pi and Delta must be non-negative");
}

}  // namespace detail

/// g_n = sigma_n Pi_n / (sigma_n^2 Pi_n + Delta_n), and 0 where the
/// denominator vanishes (the objective is flat in g_n there).
inline SpectralCoefficients optimal_coefficients_population(const Eigen::VectorXd& sigma, const Eigen::VectorXd& Pi,
                                                            const Eigen::VectorXd& Delta) {
    detail::check_moments(sigma, Pi, Delta);
    SpectralCoefficients c{Eigen::VectorXd(sigma.size()), CoefficientKind::analytic_population};
    for (Eigen::Index n = 0; n < sigma.size(); ++n) {
        const double den = sigma[n] * sigma[n] * Pi[n] + Delta[n];
        c.g[n] = den > 0.0 ? sigma[n] * Pi[n] / den : 0.0;
    }
    return c;
}

/// Exact minimizer of the empirical risk (1/N) sum_i ||u_i - R(A u_i + nu_i; g)||^2:
///   g_n = (sigma_n Pi_n + Gamma_n) / (sigma_n^2 Pi_n + Delta_n + 2 sigma_n Gamma_n).
/// The denominator is mean (sigma c + eta)^2 >= 0; where it is 0 we return 0.
/// Negative values are legitimate and kept.
inline SpectralCoefficients optimal_coefficients_empirical(const Eigen::VectorXd& sigma, const SpectralStats& stats) {
    detail::check_moments(sigma, stats.Pi, stats.Delta);
    detail::require_dims(stats.Gamma.size() == sigma.size(), "Gamma length mismatch");
    SpectralCoefficients c{Eigen::VectorXd(sigma.size()), CoefficientKind::analytic_empirical};
    c.noise_variance = stats.noise_variance;
    for (Eigen::Index n = 0; n < sigma.size(); ++n) {
        const double s = sigma[n];
        const double den = s * s * stats.Pi[n] + stats.Delta[n] + 2.0 * s * stats.Gamma[n];
        c.g[n] = den > 0.0 ? (s * stats.Pi[n] + stats.Gamma[n]) / den : 0.0;
    }
    return c;
}

inline SpectralCoefficients tikhonov_coefficients(const Eigen::VectorXd& sigma, double alpha) {
    if (!(alpha > 0.0)) throw ConfigError("tikhonov alpha must be > 0");
    SpectralCoefficients c{sigma.array() / (sigma.array().square() + alpha), CoefficientKind::tikhonov, alpha};
    return c;
}

inline SpectralCoefficients tsvd_coefficients(const Eigen::VectorXd& sigma, double tau) {
    if (!(tau >= 0.0)) throw ConfigError("tsvd threshold must be >= 0");
    SpectralCoefficients c{(sigma.array() >= tau).select(sigma.array().inverse(), 0.0), CoefficientKind::tsvd, tau};
    return c;
}

inline SpectralCoefficients pseudo_inverse_coefficients(const Eigen::VectorXd& sigma) {
    return {sigma.array().inverse(), CoefficientKind::pseudo_inverse};
}

inline SpectralCoefficients classical_coefficients(CoefficientKind kind, const Eigen::VectorXd& sigma,
                                                   double parameter = 0.0) {
    switch (kind) {
        case CoefficientKind::tikhonov: return tikhonov_coefficients(sigma, parameter);
        case CoefficientKind::tsvd: return tsvd_coefficients(sigma, parameter);
        case CoefficientKind::pseudo_inverse: return pseudo_inverse_coefficients(sigma);
        default: throw ConfigError(std::string("not a classical coefficient family: ") + to_string(kind));
    }
}

/// R(f; g) = A^T V diag(g / sigma) V^T f  (factored form; one back-projection).
inline Eigen::MatrixXd reconstruct_spectral(const RadonMatrix& op, const OperatorSVD& svd, const Eigen::VectorXd& g,
                                            const Eigen::MatrixXd& f) {
    detail::require_dims(g.size() == svd.sigma.size(), "reconstruct_spectral: coefficient count != rank");
    detail::require_dims(f.rows() == svd.V.rows() && f.rows() == op.matrix.rows(),
                         "reconstruct_spectral: sinogram size mismatch");
    const Eigen::MatrixXd modal = (g.array() / svd.sigma.array()).matrix().asDiagonal() * (svd.V.transpose() * f);
    const Eigen::MatrixXd filtered = svd.V * modal;
    return op.matrix.transpose() * filtered;
}

inline Image reconstruct_spectral(const RadonMatrix& op, const OperatorSVD& svd, const SpectralCoefficients& c,
                                  const Sinogram& f) {
    return Image(op.geometry.image_size, reconstruct_spectral(op, svd, c.g, f.values));
}

/// R(f; g) = sum_n g_n <f, v_n> u_n  (mode-sum form).
inline Eigen::MatrixXd reconstruct_modal(const OperatorSVD& svd, const Eigen::VectorXd& g, const Eigen::MatrixXd& f) {
    detail::require_dims(g.size() == svd.sigma.size(), "reconstruct_modal: coefficient count != rank");
    detail::require_dims(f.rows() == svd.V.rows(), "reconstruct_modal: sinogram size mismatch");
    return svd.U * (g.asDiagonal() * (svd.V.transpose() * f));
}

/// sum_n (1 - sigma_n g_n)^2 Pi_n + g_n^2 Delta_n
inline double spectral_objective(const Eigen::VectorXd& sigma, const Eigen::VectorXd& Pi, const Eigen::VectorXd& Delta,
                                 const Eigen::VectorXd& g) {
    const auto r = 1.0 - sigma.array() * g.array();
    return (r.square() * Pi.array() + g.array().square() * Delta.array()).sum();
}

/// Empirical risk in the singular basis (excluding the part of u outside
/// span(U)): sum_n (1 - sigma_n g_n)^2 Pi_n - 2 g_n (1 - sigma_n g_n) Gamma_n + g_n^2 Delta_n
inline double empirical_objective(const Eigen::VectorXd& sigma, const SpectralStats& s, const Eigen::VectorXd& g) {
    const auto r = 1.0 - sigma.array() * g.array();
    return (r.square() * s.Pi.array() - 2.0 * g.array() * r * s.Gamma.array() +
            g.array().square() * s.Delta.array())
        .sum();
}

/// Minimal expected error sum_n Delta_n Pi_n / (sigma_n^2 Pi_n + Delta_n).
inline double expected_error(const Eigen::VectorXd& sigma, const Eigen::VectorXd& Pi, const Eigen::VectorXd& Delta) {
    detail::check_moments(sigma, Pi, Delta);
    double e = 0.0;
    for (Eigen::Index n = 0; n < sigma.size(); ++n) {
        const double den = sigma[n] * sigma[n] * Pi[n] + Delta[n];
        if (den > 0.0) e += Delta[n] * Pi[n] / den;
    }
    return e;
}

/// Expected squared mode coefficients of optimally regularized reconstructions:
/// Pi~_n = sigma_n^2 Pi_n / (sigma_n^2 Pi_n + Delta_n) * Pi_n.
inline Eigen::VectorXd expected_smoothness(const Eigen::VectorXd& sigma, const Eigen::VectorXd& Pi,
                                           const Eigen::VectorXd& Delta) {
    detail::check_moments(sigma, Pi, Delta);
    Eigen::VectorXd out(sigma.size());
    for (Eigen::Index n = 0; n < sigma.size(); ++n) {
        const double sp = sigma[n] * sigma[n] * Pi[n];
        const double den = sp + Delta[n];
        out[n] = den > 0.0 ? sp / den * Pi[n] : 0.0;
    }
    return out;
}

/// w_n = Delta_n^2 / (Pi_n^2 sigma_n^2). Modes with Pi_n = 0 are reported
/// as +infinity.
inline Eigen::VectorXd range_condition_weights(const Eigen::VectorXd& sigma, const Eigen::VectorXd& Pi,
                                               const Eigen::VectorXd& Delta) {
    detail::check_moments(sigma, Pi, Delta);
    Eigen::VectorXd w(sigma.size());
    for (Eigen::Index n = 0; n < sigma.size(); ++n) {
        const double den = Pi[n] * Pi[n] * sigma[n] * sigma[n];
        w[n] = den > 0.0 ? Delta[n] * Delta[n] / den : std::numeric_limits<double>::infinity();
    }
    return w;
}

/// Columns: n, sigma_n, Pi_n, Delta_n, Gamma_n, g_n, g_tikhonov, weight_range_condition.
inline void write_coefficients_csv(const std::filesystem::path& path, const Eigen::VectorXd& sigma,
                                   const SpectralStats& stats, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& g_tikhonov) {
    detail::require_dims(g.size() == sigma.size() && g_tikhonov.size() == sigma.size(), "coefficient CSV size mismatch");
    const Eigen::VectorXd w = range_condition_weights(sigma, stats.Pi, stats.Delta);
    CsvWriter csv(path, {"n", "sigma_n", "Pi_n", "Delta_n", "Gamma_n", "g_n", "g_tikhonov", "weight_range_condition"});
    for (Eigen::Index n = 0; n < sigma.size(); ++n)
        csv.row(static_cast<long>(n + 1), sigma[n], stats.Pi[n], stats.Delta[n], stats.Gamma[n], g[n], g_tikhonov[n],
                w[n]);
}

}  // namespace ctreg
