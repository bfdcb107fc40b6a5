#include "ceql/train.hpp"

#include <cmath>
#include <limits>

namespace ceql {

PhaseSchedule PhaseSchedule::defaults(double phase3_lambda_im) {
    PhaseSchedule s;
    auto& p1 = s.phases[0];
    p1.epochs = 100000;
    p1.loss = {DataTerm::MSE, 1e-10, 1e-10, 1e-10};
    p1.lr = 1e-2;
    p1.pruning = PrunePolicy{PruneKind::ThresholdOnce, 1e-2, 0, 0.0, 0};

    auto& p2 = s.phases[1];
    p2.epochs = 200000;
    p2.loss = {DataTerm::MSE, 1e-3, 1e-7, 1e3};
    p2.lr = 1e-2;
    p2.pruning = PrunePolicy{PruneKind::ImpactIterative, 0.0, 10000, 0.1, 15};

    auto& p3 = s.phases[2];
    p3.epochs = 50000;
    p3.loss = {DataTerm::MSE, phase3_lambda_im, 0.0, 1e3};
    p3.lr = 1e-2;
    p3.plateau = PlateauConfig{2000, 0.1, 1e-5, 1e-7};
    return s;
}

PhaseSchedule PhaseSchedule::scaled(double f) const {
    if (!(f >= 0.0)) throw Error(ErrorCode::InvalidConfig, "scale must be non-negative");
    auto scale = [f](Index n) { return static_cast<Index>(std::llround(static_cast<double>(n) * f)); };
    PhaseSchedule s = *this;
    for (auto& p : s.phases) {
        p.epochs = scale(p.epochs);
        if (p.pruning && p.pruning->kind == PruneKind::ImpactIterative)
            p.pruning->interval_epochs = std::max<Index>(1, scale(p.pruning->interval_epochs));
        if (p.plateau) p.plateau->patience = std::max<Index>(1, scale(p.plateau->patience));
    }
    return s;
}

Index PhaseSchedule::total_epochs() const {
    Index n = 0;
    for (const auto& p : phases) n += p.epochs;
    return n;
}

LossBreakdown NetworkModel::evaluate(const Dataset& data, const LossSpec& spec, Gradient* grad,
                                     MatrixXr* branch_args) const {
    Trace trace;
    const LossBreakdown out = backward(net_, data, spec, grad, branch_args ? &trace : nullptr);
    if (branch_args) {
        const Index n = data.rows();
        branch_args->resize(n, branched_node_count(net_));
        Index col = 0;
        for (Index l = 0; l < net_.layer_count(); ++l) {
            const LayerSpec& spec_l = net_.layer(l);
            for (Index j = 0; j < spec_l.unary_count(); ++j) {
                if (!is_branched(spec_l.unary_ops[static_cast<std::size_t>(j)])) continue;
                const auto& sums = trace.layers[static_cast<std::size_t>(l)].sums;
                for (Index i = 0; i < n; ++i)
                    (*branch_args)(i, col) = trace.valid(i) ? std::arg(sums(i, j))
                                                            : std::numeric_limits<double>::quiet_NaN();
                ++col;
            }
        }
    }
    return out;
}

TrainedNetwork run_training(Network net, const Dataset& data, const PhaseSchedule& schedule,
                            std::uint64_t seed, Index record_stride) {
    TrainOptions opts;
    opts.seed = seed;
    opts.record_stride = std::max<Index>(1, record_stride);
    return run_phases(NetworkModel(std::move(net)), data, schedule, opts);
}

std::vector<Index> impact_prune(Network& net, const Dataset& batch, const LossSpec& spec,
                                double fraction, Index min_edges) {
    NetworkModel model(net);
    auto pruned = impact_prune(model, batch, spec, fraction, min_edges);
    net = model.network();
    return pruned;
}

}  // namespace ceql
