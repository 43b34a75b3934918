#pragma once

// Mini-batch Adam training of spectral coefficients and Fourier filters.
//
// Both objectives are convex quadratics in their parameters, so each problem
// precomputes per-sample quantities once and then evaluates losses and exact
// mini-batch gradients cheaply:
//   * spectral: per-mode c = U^T u and b = V^T f, loss = sum_n (c_n - g_n b_n)^2
//     plus the part of u outside span(U);
//   * Fourier (angle-constant): per-sample Gram G = M^T M, h = M^T u where
//     column j of M is the FBP reconstruction of f through the unit filter
//     on bin j, loss = rho^T G rho - 2 h^T rho + |u|^2;
//   * Fourier (per-angle): matrix-free, gradient from one projection of the
//     residual per sample.
// Losses are per-sample squared L2 errors averaged over samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "adam.hpp"
#include "error.hpp"
#include "fourier.hpp"
#include "radon.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace ctreg {

struct TrainConfig {
    int batch_size = 32;
    int epochs = 50;
    AdamParams adam;
    /// Learning rate at the last epoch relative to the first; the rate decays
    /// geometrically in between. 1 keeps it constant.
    double lr_decay = 1.0;
    std::uint64_t seed = 0;
    double early_stop_rel = 1e-10;
    double divergence_factor = 1e3;

    void validate() const {
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be > 0");
    }
};

/// Entry e is the full-set loss after e epochs (entry 0 is the initial loss).
struct LossTrace {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, LossTrace trace) : Error(what), trace_(std::move(trace)) {}
    const char* kind() const noexcept override { return "training"; }
    const LossTrace& trace() const noexcept { return trace_; }

private:
    LossTrace trace_;
};

/// A problem exposes: num_params(), num_samples(), loss(x) (full-set mean),
/// and batch_gradient(x, indices) (gradient of the batch mean).
template <class P>
concept QuadraticProblem = requires(const P& p, const Eigen::VectorXd& x, std::span<const int> idx) {
    { p.num_params() } -> std::convertible_to<Eigen::Index>;
    { p.num_samples() } -> std::convertible_to<int>;
    { p.loss(x) } -> std::convertible_to<double>;
    { p.batch_gradient(x, idx) } -> std::convertible_to<Eigen::VectorXd>;
};

/// Fisher-Yates with the stream derive_seed(seed, shuffle, epoch).
inline std::vector<int> epoch_order(int n, std::uint64_t seed, int epoch) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Xoshiro256 rng(derive_seed(seed, stream_tag::shuffle, static_cast<std::uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    return order;
}

template <QuadraticProblem P>
struct TrainResult {
    Eigen::VectorXd params;
    LossTrace trace;
};

template <QuadraticProblem P>
TrainResult<P> train(const P& problem, Eigen::VectorXd init, const TrainConfig& cfg, const P* validation = nullptr) {
    cfg.validate();
    if (problem.num_samples() < 1) throw ConfigError("training set is empty");
    if (init.size() != problem.num_params()) throw DimensionError("initial parameters have the wrong length");

    TrainResult<P> out{std::move(init), {}};
    auto record = [&] {
        out.trace.train_loss.push_back(problem.loss(out.params));
        if (validation) out.trace.val_loss.push_back(validation->loss(out.params));
    };
    record();
    const double initial = out.trace.train_loss.front();

    Adam adam(out.params.size(), cfg.adam);
    const int n = problem.num_samples();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.adam.learning_rate *
                          std::pow(cfg.lr_decay, cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 0.0);
        const auto order = epoch_order(n, cfg.seed, epoch);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int len = std::min(cfg.batch_size, n - start);
            const Eigen::VectorXd grad = problem.batch_gradient(out.params, std::span<const int>(order).subspan(start, len));
            adam.step(out.params, grad, lr);
        }
        record();
        const double prev = out.trace.train_loss[out.trace.train_loss.size() - 2];
        const double cur = out.trace.train_loss.back();
        if (!std::isfinite(cur) || (initial > 0.0 && cur > cfg.divergence_factor * initial))
            throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1), out.trace);
        if (std::abs(prev - cur) <= cfg.early_stop_rel * std::abs(prev)) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral coefficients

class SpectralProblem {
public:
    /// images: I^2 x N, data: K*L x N (noisy sinograms f = A u + nu).
    SpectralProblem(const OperatorSVD& svd, const Eigen::MatrixXd& images, const Eigen::MatrixXd& data)
        : c_(svd.U.transpose() * images), b_(svd.V.transpose() * data) {
        detail::require_dims(images.cols() == data.cols(), "spectral problem: image and data counts differ");
        outside_ = images.colwise().squaredNorm().transpose() - c_.colwise().squaredNorm().transpose();
        outside_ = outside_.cwiseMax(0.0);
    }

    Eigen::Index num_params() const { return c_.rows(); }
    int num_samples() const { return static_cast<int>(c_.cols()); }

    double loss(const Eigen::VectorXd& g) const {
        const Eigen::MatrixXd r = c_ - g.asDiagonal() * b_;
        return (r.colwise().squaredNorm().sum() + outside_.sum()) / num_samples();
    }

    Eigen::VectorXd batch_gradient(const Eigen::VectorXd& g, std::span<const int> idx) const {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(g.size());
        for (int i : idx) grad.array() -= 2.0 * b_.col(i).array() * (c_.col(i).array() - g.array() * b_.col(i).array());
        return grad / static_cast<double>(idx.size());
    }

    Eigen::VectorXd full_gradient(const Eigen::VectorXd& g) const {
        std::vector<int> all(num_samples());
        std::iota(all.begin(), all.end(), 0);
        return batch_gradient(g, all);
    }

    /// Largest Hessian eigenvalue of the full-set loss: 2 max_n mean b_n^2.
    double max_curvature() const { return 2.0 * (b_.array().square().rowwise().sum() / num_samples()).maxCoeff(); }

private:
    Eigen::MatrixXd c_, b_;
    Eigen::VectorXd outside_;
};

struct SpectralTraining {
    SpectralCoefficients coefficients;
    LossTrace trace;
};

/// Starts from g = 0.
inline SpectralTraining train_spectral(const SpectralProblem& train_set, const TrainConfig& cfg,
                                       const SpectralProblem* validation = nullptr, double noise_variance = 0.0) {
    auto r = train(train_set, Eigen::VectorXd::Zero(train_set.num_params()), cfg, validation);
    SpectralCoefficients c{std::move(r.params), CoefficientKind::learned};
    c.noise_variance = noise_variance;
    return {std::move(c), std::move(r.trace)};
}

// ---------------------------------------------------------------------------
// Fourier filters

/// For one sinogram f, the I^2 x L matrix whose column j is the scaled
/// back-projection of f filtered by the indicator of bin j (all angles).
inline Eigen::MatrixXd fbp_bin_responses(const RadonMatrix& op, const Dft& dft, const Eigen::Ref<const Eigen::VectorXd>& f) {
    const Geometry& g = op.geometry;
    const int K = g.num_angles, L = g.num_positions;
    const RowMatrixXcd spec = sinogram_dft(Sinogram(K, L, f), dft);
    // Re(F^{-1} applied to S[:, j] e_j^T) = Re(S[:, j] * conj(F)(j, :)); conj(F)(j, l) = exp(+2 pi i j l / L)/sqrt(L)
    Eigen::MatrixXd filtered(static_cast<Eigen::Index>(K) * L, L);
    const double norm = 1.0 / std::sqrt(static_cast<double>(L));
    for (int j = 0; j < L; ++j) {
        for (int l = 0; l < L; ++l) {
            const long m = (static_cast<long>(j) * l) % L;
            const std::complex<double> w = std::polar(norm, 2.0 * std::numbers::pi * static_cast<double>(m) / L);
            for (int k = 0; k < K; ++k) filtered(static_cast<Eigen::Index>(k) * L + l, j) = (spec(k, j) * w).real();
        }
    }
    return continuous_scaling(g).adjoint_factor * (op.matrix.transpose() * filtered);
}

/// Angle-constant filter training problem: parameters are the L bin values.
class FourierGramProblem {
public:
    FourierGramProblem(const RadonMatrix& op, const Eigen::MatrixXd& images, const Eigen::MatrixXd& data)
        : L_(op.geometry.num_positions) {
        detail::require_dims(images.cols() == data.cols(), "fourier problem: image and data counts differ");
        detail::require_dims(images.rows() == op.geometry.num_pixels() && data.rows() == op.geometry.num_rays(),
                             "fourier problem: sizes do not match geometry");
        const Dft dft(L_);
        const auto n = images.cols();
        gram_.resize(L_, L_ * n);
        h_.resize(L_, n);
        q_ = images.colwise().squaredNorm().transpose();
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::MatrixXd m = fbp_bin_responses(op, dft, data.col(i));
            gram_.middleCols(i * L_, L_).noalias() = m.transpose() * m;
            h_.col(i).noalias() = m.transpose() * images.col(i);
        }
        mean_gram_ = Eigen::MatrixXd::Zero(L_, L_);
        for (Eigen::Index i = 0; i < n; ++i) mean_gram_ += gram_.middleCols(i * L_, L_);
        mean_gram_ /= static_cast<double>(n);
        mean_h_ = h_.rowwise().mean();
        mean_q_ = q_.mean();
    }

    Eigen::Index num_params() const { return L_; }
    int num_samples() const { return static_cast<int>(h_.cols()); }

    double loss(const Eigen::VectorXd& rho) const {
        return rho.dot(mean_gram_ * rho) - 2.0 * mean_h_.dot(rho) + mean_q_;
    }

    Eigen::VectorXd batch_gradient(const Eigen::VectorXd& rho, std::span<const int> idx) const {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(L_);
        for (int i : idx) grad.noalias() += gram_.middleCols(static_cast<Eigen::Index>(i) * L_, L_) * rho - h_.col(i);
        return 2.0 * grad / static_cast<double>(idx.size());
    }

    Eigen::VectorXd full_gradient(const Eigen::VectorXd& rho) const { return 2.0 * (mean_gram_ * rho - mean_h_); }

    /// Exact minimizer over angle-constant filters (least-squares normal
    /// equations, minimum-norm via complete orthogonal decomposition).
    Eigen::VectorXd minimizer() const;

    const Eigen::MatrixXd& hessian_half() const { return mean_gram_; }

private:
    Eigen::Index L_;
    Eigen::MatrixXd gram_;  ///< L x (L * N), per-sample Grams side by side
    Eigen::MatrixXd h_;     ///< L x N
    Eigen::VectorXd q_;
    Eigen::MatrixXd mean_gram_;
    Eigen::VectorXd mean_h_;
    double mean_q_ = 0.0;
};

}  // namespace ctreg

#include <Eigen/QR>

namespace ctreg {

inline Eigen::VectorXd FourierGramProblem::minimizer() const {
    return mean_gram_.completeOrthogonalDecomposition().solve(mean_h_);
}

/// Per-angle filter training problem (K * L parameters, row-major like
/// FourierFilter::values). Matrix-free: the gradient for bin (k, j) is
///   -2 w Re( (F f)_{kj} conj((F A r)_{kj}) ),  r = u - R(f; rho).
class FourierDirectProblem {
public:
    FourierDirectProblem(const RadonMatrix& op, const Eigen::MatrixXd& images, const Eigen::MatrixXd& data)
        : op_(&op), dft_(op.geometry.num_positions), images_(images), data_(data) {
        detail::require_dims(images.cols() == data.cols(), "fourier problem: image and data counts differ");
        detail::require_dims(images.rows() == op.geometry.num_pixels() && data.rows() == op.geometry.num_rays(),
                             "fourier problem: sizes do not match geometry");
    }

    Eigen::Index num_params() const { return op_->geometry.num_rays(); }
    int num_samples() const { return static_cast<int>(images_.cols()); }

    FourierFilter filter(const Eigen::VectorXd& rho) const {
        const Geometry& g = op_->geometry;
        FourierFilter f{g, Eigen::Map<const RowMatrixXd>(rho.data(), g.num_angles, g.num_positions), false, false,
                        FilterKind::learned};
        return f;
    }

    double loss(const Eigen::VectorXd& rho) const {
        const FourierFilter f = filter(rho);
        double total = 0.0;
        for (Eigen::Index i = 0; i < images_.cols(); ++i) total += residual(f, static_cast<int>(i)).squaredNorm();
        return total / static_cast<double>(images_.cols());
    }

    Eigen::VectorXd batch_gradient(const Eigen::VectorXd& rho, std::span<const int> idx) const {
        const Geometry& g = op_->geometry;
        const FourierFilter f = filter(rho);
        const double w = continuous_scaling(g).adjoint_factor;
        RowMatrixXd grad = RowMatrixXd::Zero(g.num_angles, g.num_positions);
        for (int i : idx) {
            const Sinogram fi(g.num_angles, g.num_positions, data_.col(i));
            const Eigen::VectorXd r = residual(f, i);
            const Sinogram ar(g.num_angles, g.num_positions, op_->matrix * r);
            const RowMatrixXcd s = sinogram_dft(fi, dft_);
            const RowMatrixXcd z = sinogram_dft(ar, dft_);
            grad.array() -= 2.0 * w * (s.array() * z.array().conjugate()).real();
        }
        grad /= static_cast<double>(idx.size());
        return Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
    }

private:
    Eigen::VectorXd residual(const FourierFilter& f, int i) const {
        const Geometry& g = op_->geometry;
        const Sinogram fi(g.num_angles, g.num_positions, data_.col(i));
        return images_.col(i) - fbp_reconstruct(*op_, f, fi, dft_).pixels;
    }

    const RadonMatrix* op_;
    Dft dft_;
    Eigen::MatrixXd images_;
    Eigen::MatrixXd data_;
};

struct FourierTraining {
    FourierFilter filter;
    LossTrace trace;
};

/// Trains from rho = 0. With `angle_constant` the parameter count is L.
inline FourierTraining train_fourier(const RadonMatrix& op, const Eigen::MatrixXd& images, const Eigen::MatrixXd& data,
                                     const TrainConfig& cfg, bool angle_constant,
                                     const Eigen::MatrixXd* val_images = nullptr,
                                     const Eigen::MatrixXd* val_data = nullptr) {
    const Geometry& g = op.geometry;
    if (images.cols() < 1) throw ConfigError("training set is empty");
    const bool with_val = val_images && val_data && val_images->cols() > 0;
    if (angle_constant) {
        const FourierGramProblem p(op, images, data);
        std::optional<FourierGramProblem> v;
        if (with_val) v.emplace(op, *val_images, *val_data);
        auto r = train(p, Eigen::VectorXd::Zero(p.num_params()), cfg, v ? &*v : nullptr);
        return {FourierFilter::from_row(g, r.params, FilterKind::learned), std::move(r.trace)};
    }
    const FourierDirectProblem p(op, images, data);
    std::optional<FourierDirectProblem> v;
    if (with_val) v.emplace(op, *val_images, *val_data);
    auto r = train(p, Eigen::VectorXd::Zero(p.num_params()), cfg, v ? &*v : nullptr);
    return {p.filter(r.params), std::move(r.trace)};
}

// ---------------------------------------------------------------------------

/// Relative mismatch between the analytic directional derivative grad . d
/// and the central difference (f(x + h d) - f(x - h d)) / (2 h).
inline double gradient_check(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& analytic_gradient, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& direction, double step = 1e-5) {
    detail::require_dims(analytic_gradient.size() == x.size() && direction.size() == x.size(),
                         "gradient_check: size mismatch");
    const double fp = objective(x + step * direction);
    const double fm = objective(x - step * direction);
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw NumericError("gradient_check: objective is not finite");
    const double numeric = (fp - fm) / (2.0 * step);
    const double analytic = analytic_gradient.dot(direction);
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-300});
    return std::abs(numeric - analytic) / scale;
}

}  // namespace ctreg
