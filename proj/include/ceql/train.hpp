#pragma once

// Three-phase training: sparsity warm-up with a one-shot magnitude prune,
// iterative impact pruning, then fine-tuning with plateau learning-rate decay.
//
// The trainer is generic over a model type exposing a flat complex parameter
// vector (see the Trainable concept); the equation-learner network and the
// FRF surrogate both plug into it.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ceql/autodiff.hpp"
#include "ceql/network.hpp"
#include "ceql/optim.hpp"
#include "ceql/prune.hpp"

namespace ceql {

enum class PruneKind { ThresholdOnce, ImpactIterative };

struct PrunePolicy {
    PruneKind kind = PruneKind::ThresholdOnce;
    double threshold = 1e-2;       // ThresholdOnce
    Index interval_epochs = 10000;  // ImpactIterative
    double fraction = 0.1;
    Index min_edges = 15;
};

struct PhaseConfig {
    Index epochs = 0;
    LossSpec loss;
    double lr = 1e-2;
    std::optional<PrunePolicy> pruning;
    std::optional<PlateauConfig> plateau;
};

struct PhaseSchedule {
    std::array<PhaseConfig, 3> phases;

    /// Benchmark defaults. `phase3_lambda_im` selects between the two
    /// readings of the final imaginary-weight penalty (1e3 or 1e-3).
    static PhaseSchedule defaults(double phase3_lambda_im = 1e3);

    /// Multiplies epoch counts, the pruning interval and the plateau patience by f.
    PhaseSchedule scaled(double f) const;

    Index total_epochs() const;
};

struct EpochRecord {
    Index epoch = 0;
    int phase = 0;
    double loss = 0.0;
    double data_mse = 0.0;
    double l1_mass = 0.0;
    double im_mass = 0.0;
    double arg_penalty = 0.0;
    Index active_edges = 0;
    double lr = 0.0;
    Index flagged_samples = 0;
    Index branch_crossings = 0;
};

struct PruneEvent {
    Index epoch = 0;
    int phase = 0;
    PruneKind kind = PruneKind::ThresholdOnce;
    Index pruned = 0;
    Index cleaned = 0;
    Index active_after = 0;
};

struct History {
    std::vector<EpochRecord> epochs;
    std::vector<PruneEvent> prunes;
    Index total_flagged = 0;
    Index total_branch_crossings = 0;
    bool early_stopped = false;
};

struct TrainOptions {
    /// Keep one epoch record out of every `record_stride` (the last epoch of
    /// each phase is always kept).
    Index record_stride = 1;
    std::uint64_t seed = 0;
};

template <class Model>
struct TrainResult {
    Model model;
    History history;
    bool failed = false;
    std::string failure;
    std::uint64_t seed = 0;
};

/// What the trainer needs from a model.
template <class M>
concept Trainable = std::copy_constructible<M> &&
    requires(M& m, const M& cm, const Dataset& d, const LossSpec& s, Gradient* g, MatrixXr* args,
             const VectorXc& w, Index e) {
        { cm.parameters() } -> std::convertible_to<VectorXc>;
        m.set_parameters(w);
        { cm.active() } -> std::convertible_to<ArrayXb>;
        { cm.prunable() } -> std::convertible_to<ArrayXb>;
        { cm.real_only() } -> std::convertible_to<ArrayXb>;
        { cm.evaluate(d, s, g, args) } -> std::same_as<LossBreakdown>;
        m.deactivate(e);
        { m.cascade_cleanup() } -> std::convertible_to<Index>;
        { cm.active_edge_count() } -> std::convertible_to<Index>;
        { cm.degenerate() } -> std::convertible_to<bool>;
    };

/// Adapter exposing a Network to the trainer.
class NetworkModel {
public:
    NetworkModel() = default;
    explicit NetworkModel(Network net) : net_(std::move(net)) {}

    const Network& network() const { return net_; }
    Network& network() { return net_; }

    const VectorXc& parameters() const { return net_.weights(); }
    void set_parameters(const VectorXc& w) { net_.set_weights(w); }
    const ArrayXb& active() const { return net_.active(); }
    const ArrayXb& prunable() const { return net_.structural(); }
    ArrayXb real_only() const { return ArrayXb::Constant(net_.parameter_count(), false); }

    /// `branch_args` receives arg(z) of every log/sqrt summation node per
    /// sample (NaN for flagged samples).
    LossBreakdown evaluate(const Dataset& data, const LossSpec& spec, Gradient* grad,
                           MatrixXr* branch_args) const;

    void deactivate(Index e) { net_.deactivate(e); }
    Index cascade_cleanup() { return ceql::cascade_cleanup(net_); }
    Index active_edge_count() const { return net_.active_edge_count(); }
    bool degenerate() const { return net_.active_edge_count() == 0 || !has_output_path(net_); }

private:
    Network net_;
};

/// Deactivates prunable edges of `model` with |w| < threshold.
template <Trainable Model>
Index threshold_prune(Model& model, double threshold) {
    const VectorXc w = model.parameters();
    const ArrayXb active = model.active();
    const ArrayXb prunable = model.prunable();
    Index pruned = 0;
    for (Index e = 0; e < w.size(); ++e)
        if (active[e] && prunable[e] && std::abs(w[e]) < threshold) {
            model.deactivate(e);
            ++pruned;
        }
    return pruned;
}

/// Impact of each active prunable edge: |L(model with edge zeroed) - L(model)|
/// on the data term. Zeroing that creates new guard hits has infinite impact.
template <Trainable Model>
std::vector<std::pair<Index, double>> edge_impacts(const Model& model, const Dataset& batch,
                                                   const LossSpec& spec) {
    const LossBreakdown base = model.evaluate(batch, spec, nullptr, nullptr);
    const ArrayXb active = model.active();
    const ArrayXb prunable = model.prunable();
    std::vector<std::pair<Index, double>> impacts;
    for (Index e = 0; e < active.size(); ++e) {
        if (!active[e] || !prunable[e]) continue;
        Model probe = model;
        probe.deactivate(e);
        double impact = std::numeric_limits<double>::infinity();
        try {
            const LossBreakdown l = probe.evaluate(batch, spec, nullptr, nullptr);
            if (l.flagged <= base.flagged) impact = std::abs(l.data - base.data);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::EmptyBatch) throw;
        }
        impacts.emplace_back(e, impact);
    }
    return impacts;
}

/// Removes the floor(fraction * active) edges with the smallest impact on
/// the batch loss. Ties go to the smaller |w|, then the smaller index. The
/// list is truncated so that the active count after the follow-up cascade
/// cleanup stays at or above min_edges. Returns the pruned edges.
template <Trainable Model>
std::vector<Index> impact_prune(Model& model, const Dataset& batch, const LossSpec& spec,
                                double fraction, Index min_edges) {
    const Index active_count = model.active_edge_count();
    if (active_count <= min_edges) return {};
    const Index budget = static_cast<Index>(std::floor(fraction * static_cast<double>(active_count)));
    if (budget <= 0) return {};

    auto impacts = edge_impacts(model, batch, spec);
    const VectorXc w = model.parameters();
    std::sort(impacts.begin(), impacts.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        const double wa = std::abs(w[a.first]);
        const double wb = std::abs(w[b.first]);
        if (wa != wb) return wa < wb;
        return a.first < b.first;
    });

    std::vector<Index> pruned;
    for (const auto& [e, impact] : impacts) {
        if (static_cast<Index>(pruned.size()) >= budget) break;
        if (!std::isfinite(impact)) break;
        Model trial = model;
        trial.deactivate(e);
        trial.cascade_cleanup();
        if (trial.active_edge_count() < min_edges) break;
        model.deactivate(e);
        pruned.push_back(e);
    }
    return pruned;
}

namespace detail {

inline Index count_branch_crossings(const MatrixXr& prev, const MatrixXr& cur) {
    if (prev.size() == 0 || prev.rows() != cur.rows() || prev.cols() != cur.cols()) return 0;
    Index n = 0;
    for (Index i = 0; i < cur.size(); ++i) {
        const double a = prev.data()[i];
        const double b = cur.data()[i];
        if (std::isfinite(a) && std::isfinite(b) && std::abs(a - b) > M_PI) ++n;
    }
    return n;
}

}  // namespace detail

/// Runs the three phases on `model`. Run-level failures (a degenerate graph
/// after pruning, a fully flagged batch) are reported through `failed`.
template <Trainable Model>
TrainResult<Model> run_phases(Model model, const Dataset& data, const PhaseSchedule& schedule,
                              const TrainOptions& options = {}) {
    if (data.rows() < 2) throw Error(ErrorCode::InvalidConfig, "training needs at least 2 samples");
    TrainResult<Model> result{std::move(model), {}, false, {}, options.seed};
    Model& m = result.model;
    History& hist = result.history;
    Index epoch = 0;

    try {
        for (int p = 0; p < 3; ++p) {
            const PhaseConfig& cfg = schedule.phases[static_cast<std::size_t>(p)];
            if (cfg.epochs <= 0) continue;
            LossSpec spec = cfg.loss;
            if (p == 2) spec.lambda_l1 = 0.0;  // sparsity is off while fine-tuning

            VectorXc w = m.parameters();
            const ArrayXb real_only = m.real_only();
            Adam adam(w.size());
            double lr = cfg.lr;
            std::optional<PlateauScheduler> plateau;
            if (cfg.plateau) plateau.emplace(*cfg.plateau, lr);
            const bool impact = cfg.pruning && cfg.pruning->kind == PruneKind::ImpactIterative;

            double best_loss = std::numeric_limits<double>::infinity();
            VectorXc best_w = w;
            MatrixXr prev_args;
            MatrixXr args;
            Gradient grad;

            for (Index t = 1; t <= cfg.epochs; ++t) {
                ++epoch;
                const LossBreakdown ev = m.evaluate(data, spec, &grad, &args);
                const Index crossings = detail::count_branch_crossings(prev_args, args);
                std::swap(prev_args, args);
                hist.total_flagged += ev.flagged;
                hist.total_branch_crossings += crossings;

                if (t % options.record_stride == 0 || t == cfg.epochs || t == 1) {
                    hist.epochs.push_back({epoch, p + 1, ev.total, ev.data_mse, ev.l1_mass, ev.im_mass,
                                           ev.arg_penalty, m.active_edge_count(), lr, ev.flagged,
                                           crossings});
                }
                if (p == 2 && ev.total < best_loss) {
                    best_loss = ev.total;
                    best_w = w;
                }

                for (Index e = 0; e < grad.size(); ++e) {
                    if (real_only[e]) grad[e].imag(0.0);
                    if (!std::isfinite(grad[e].real()) || !std::isfinite(grad[e].imag()))
                        throw Error(ErrorCode::NonFiniteGradient,
                                    "non-finite gradient at parameter " + std::to_string(e));
                }
                adam.step(w, grad, m.active(), lr);
                m.set_parameters(w);
                w = m.parameters();

                if (plateau) {
                    lr = plateau->observe(ev.total);
                    if (plateau->converged()) {
                        hist.early_stopped = true;
                        break;
                    }
                }

                if (impact && t % cfg.pruning->interval_epochs == 0) {
                    const auto pruned = impact_prune(m, data, spec, cfg.pruning->fraction,
                                                     cfg.pruning->min_edges);
                    const Index cleaned = m.cascade_cleanup();
                    hist.prunes.push_back({epoch, p + 1, PruneKind::ImpactIterative,
                                           static_cast<Index>(pruned.size()), cleaned,
                                           m.active_edge_count()});
                    if (m.degenerate()) throw Error(ErrorCode::DegenerateModel, "graph emptied by pruning");
                    w = m.parameters();
                }
            }

            if (p == 2) {
                // The step after the last recorded epoch may have improved further.
                const LossBreakdown last = m.evaluate(data, spec, nullptr, nullptr);
                if (!(last.total < best_loss)) m.set_parameters(best_w);
            }

            if (cfg.pruning && cfg.pruning->kind == PruneKind::ThresholdOnce) {
                const Index pruned = threshold_prune(m, cfg.pruning->threshold);
                const Index cleaned = m.cascade_cleanup();
                hist.prunes.push_back({epoch, p + 1, PruneKind::ThresholdOnce, pruned, cleaned,
                                       m.active_edge_count()});
                if (m.degenerate()) throw Error(ErrorCode::DegenerateModel, "graph emptied by pruning");
            }
        }
    } catch (const Error& err) {
        if (err.code() == ErrorCode::InvalidConfig) throw;
        result.failed = true;
        result.failure = err.what();
    }
    return result;
}

using TrainedNetwork = TrainResult<NetworkModel>;

/// Trains an equation-learner network on `data`.
TrainedNetwork run_training(Network net, const Dataset& data, const PhaseSchedule& schedule,
                            std::uint64_t seed = 0, Index record_stride = 1);

/// Network-level impact pruning on the full batch.
std::vector<Index> impact_prune(Network& net, const Dataset& batch, const LossSpec& spec,
                                double fraction, Index min_edges);

}  // namespace ceql
