#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "error.hpp"
#include "geometry.hpp"

namespace ctreg {

inline double mse(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    detail::require_dims(a.size() == b.size(), "mse: size mismatch");
    detail::require_dims(a.size() > 0, "mse: empty input");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

inline double mse(const Image& a, const Image& b) {
    detail::require_dims(a.size == b.size, "mse: image sizes differ");
    return mse(a.pixels, b.pixels);
}

/// 10 log10(peak^2 / mse) in dB; +infinity when the images are identical.
inline double psnr_from_mse(double m, double peak = 1.0) {
    if (!(peak > 0.0)) throw ConfigError("psnr: peak must be > 0");
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / m);
}

inline double psnr(const Image& a, const Image& b, double peak = 1.0) { return psnr_from_mse(mse(a, b), peak); }

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean SSIM over all fully-contained window positions ("valid" region),
/// Gaussian-weighted local statistics, separable filtering.
inline double ssim(const Image& a, const Image& b, const SsimParams& p = {}) {
    detail::require_dims(a.size == b.size, "ssim: image sizes differ");
    if (a.size < p.window) throw DimensionError("ssim: image smaller than the window");
    const int n = a.size, w = p.window, m = n - w + 1;

    Eigen::VectorXd kernel(w);
    const double c = (w - 1) / 2.0;
    for (int i = 0; i < w; ++i) kernel[i] = std::exp(-(i - c) * (i - c) / (2.0 * p.sigma * p.sigma));
    kernel /= kernel.sum();

    using Mat = Eigen::MatrixXd;
    auto grid = [n](const Image& im) {
        Mat g(n, n);
        for (int r = 0; r < n; ++r)
            for (int col = 0; col < n; ++col) g(r, col) = im.at(r, col);
        return g;
    };
    auto filter = [&](const Mat& x) {
        Mat rows(m, n);
        for (int r = 0; r < m; ++r) rows.row(r) = kernel.transpose() * x.middleRows(r, w);
        Mat out(m, m);
        for (int col = 0; col < m; ++col) out.col(col) = rows.middleCols(col, w) * kernel;
        return out;
    };

    const Mat x = grid(a), y = grid(b);
    const Mat mx = filter(x), my = filter(y);
    const Mat sxx = filter(x.cwiseProduct(x)) - mx.cwiseProduct(mx);
    const Mat syy = filter(y.cwiseProduct(y)) - my.cwiseProduct(my);
    const Mat sxy = filter(x.cwiseProduct(y)) - mx.cwiseProduct(my);
    const double c1 = std::pow(p.k1 * p.dynamic_range, 2), c2 = std::pow(p.k2 * p.dynamic_range, 2);
    const auto num = (2.0 * mx.array() * my.array() + c1) * (2.0 * sxy.array() + c2);
    const auto den = (mx.array().square() + my.array().square() + c1) * (sxx.array() + syy.array() + c2);
    return (num / den).mean();
}

}  // namespace ctreg
