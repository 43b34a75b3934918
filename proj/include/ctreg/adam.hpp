#pragma once

#include <cmath>

#include <Eigen/Core>

namespace ctreg {

struct AdamParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam (Kingma & Ba) with bias-corrected moments, as in the reference
/// formulation: x -= lr * m_hat / (sqrt(v_hat) + eps).
class Adam {
public:
    Adam(Eigen::Index size, AdamParams params)
        : params_(params), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

    void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad, double learning_rate) {
        ++t_;
        m_ = params_.beta1 * m_ + (1.0 - params_.beta1) * grad;
        v_ = params_.beta2 * v_ + (1.0 - params_.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(params_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(params_.beta2, static_cast<double>(t_));
        x.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + params_.epsilon);
    }

    void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad) { step(x, grad, params_.learning_rate); }

    long steps() const { return t_; }

private:
    AdamParams params_;
    Eigen::VectorXd m_, v_;
    long t_ = 0;
};

}  // namespace ctreg
