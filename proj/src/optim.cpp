#include "ceql/optim.hpp"

#include <algorithm>
#include <cmath>

namespace ceql {

Adam::Adam(Index params, AdamConfig config)
    : cfg_(config), m_(Eigen::ArrayXd::Zero(2 * params)), v_(Eigen::ArrayXd::Zero(2 * params)) {}

void Adam::reset() {
    m_.setZero();
    v_.setZero();
    t_ = 0;
}

void Adam::step(VectorXc& w, const VectorXc& grad, const ArrayXb& active, double lr) {
    if (m_.size() != 2 * w.size()) {
        m_ = Eigen::ArrayXd::Zero(2 * w.size());
        v_ = Eigen::ArrayXd::Zero(2 * w.size());
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double step = lr / bc1;
    const double root_bc2 = std::sqrt(bc2);

    // std::complex<double> is layout-compatible with double[2].
    double* wc = reinterpret_cast<double*>(w.data());
    const double* gc = reinterpret_cast<const double*>(grad.data());
    for (Index p = 0; p < w.size(); ++p) {
        if (!active[p]) continue;
        for (Index c = 2 * p; c < 2 * p + 2; ++c) {
            const double g = gc[c];
            m_[c] = cfg_.beta1 * m_[c] + (1.0 - cfg_.beta1) * g;
            v_[c] = cfg_.beta2 * v_[c] + (1.0 - cfg_.beta2) * g * g;
            wc[c] -= step * m_[c] / (std::sqrt(v_[c]) / root_bc2 + cfg_.eps);
        }
    }
}

double PlateauScheduler::observe(double loss) {
    if (loss < best_ * (1.0 - cfg_.threshold)) {
        best_ = loss;
        bad_epochs_ = 0;
        return lr_;
    }
    if (++bad_epochs_ > cfg_.patience) {
        if (lr_ <= cfg_.min_lr) converged_ = true;
        const double next = lr_ * cfg_.factor;
        // Repeated decay lands a few ulp above the floor (1e-2 * 0.1^3 > 1e-5).
        lr_ = next <= cfg_.min_lr * (1.0 + 1e-9) ? cfg_.min_lr : next;
        bad_epochs_ = 0;
    }
    return lr_;
}

}  // namespace ceql
