#pragma once

#include <limits>

#include "ceql/types.hpp"

namespace ceql {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam over the real and imaginary coordinate of every complex parameter.
/// Coordinates of inactive parameters are left untouched.
class Adam {
public:
    explicit Adam(Index params = 0, AdamConfig config = {});

    void reset();
    void step(VectorXc& w, const VectorXc& grad, const ArrayXb& active, double lr);
    Index steps() const { return t_; }

private:
    AdamConfig cfg_;
    Eigen::ArrayXd m_;
    Eigen::ArrayXd v_;
    Index t_ = 0;
};

struct PlateauConfig {
    Index patience = 2000;
    double factor = 0.1;
    double min_lr = 1e-5;
    /// Relative improvement required to reset the patience counter.
    double threshold = 1e-7;
};

/// Reduce-on-plateau: an epoch improves when loss < best * (1 - threshold);
/// after more than `patience` epochs without improvement lr is multiplied by
/// `factor`, floored at `min_lr`.
class PlateauScheduler {
public:
    PlateauScheduler(PlateauConfig config, double lr) : cfg_(config), lr_(lr) {}

    /// Feeds one epoch's loss; returns the learning rate for the next step.
    double observe(double loss);
    double lr() const { return lr_; }
    /// True once the rate sits at its floor and a further full patience
    /// window passed without improvement.
    bool converged() const { return converged_; }

private:
    PlateauConfig cfg_;
    double lr_;
    double best_ = std::numeric_limits<double>::infinity();
    Index bad_epochs_ = 0;
    bool converged_ = false;
};

}  // namespace ceql
