#include "ceql/autodiff.hpp"

#include <cmath>

namespace ceql {

void add_weight_penalties(const VectorXc& w, const ArrayXb& mask, const LossSpec& spec,
                          LossBreakdown& out, Gradient* grad) {
    double l1 = 0.0;
    double im = 0.0;
    for (Index e = 0; e < w.size(); ++e) {
        if (!mask[e]) continue;
        const double mag = std::abs(w[e]);
        l1 += mag;
        im += w[e].imag() * w[e].imag();
        if (grad) {
            if (spec.lambda_l1 != 0.0 && mag > 0.0) (*grad)[e] += spec.lambda_l1 * w[e] / mag;
            if (spec.lambda_im != 0.0) (*grad)[e] += Complex(0.0, 2.0 * spec.lambda_im * w[e].imag());
        }
    }
    out.l1_mass += l1;
    out.im_mass += im;
    out.total += spec.lambda_l1 * l1 + spec.lambda_im * im;
}

double data_term(const VectorXr& prediction, const std::vector<OpStatus>& status,
                 const VectorXr& y, DataTerm term, double* mse, VectorXr* adjoint) {
    const Index n = prediction.size();
    Index valid = 0;
    double sse = 0.0;
    double yy = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (status[static_cast<std::size_t>(i)] != OpStatus::Ok) continue;
        const double r = y[i] - prediction[i];
        sse += r * r;
        yy += y[i] * y[i];
        ++valid;
    }
    if (valid == 0) throw Error(ErrorCode::EmptyBatch, "every sample in the batch is flagged");
    const double m = sse / static_cast<double>(valid);
    double scale = 1.0;
    if (term == DataTerm::RelativeMSE) scale = 1.0 / (yy / static_cast<double>(valid) + 1e-8);
    if (mse) *mse = m;
    if (adjoint) {
        adjoint->setZero(n);
        for (Index i = 0; i < n; ++i) {
            if (status[static_cast<std::size_t>(i)] != OpStatus::Ok) continue;
            (*adjoint)[i] = -2.0 * scale * (y[i] - prediction[i]) / static_cast<double>(valid);
        }
    }
    return m * scale;
}

Index branched_node_count(const Network& net) {
    Index count = 0;
    for (const auto& spec : net.layers())
        for (auto k : spec.unary_ops) count += is_branched(k);
    return count;
}

double argument_penalty(const Network& net, const Trace& trace) {
    const Index nodes = branched_node_count(net);
    if (nodes == 0) return 0.0;
    const Index n = static_cast<Index>(trace.status.size());
    Index valid = 0;
    for (Index i = 0; i < n; ++i) valid += trace.valid(i);
    if (valid == 0) return 0.0;
    double acc = 0.0;
    for (Index l = 0; l < net.layer_count(); ++l) {
        const auto& spec = net.layer(l);
        const auto& sums = trace.layers[static_cast<std::size_t>(l)].sums;
        for (Index j = 0; j < spec.unary_count(); ++j) {
            if (!is_branched(spec.unary_ops[static_cast<std::size_t>(j)])) continue;
            for (Index i = 0; i < n; ++i)
                if (trace.valid(i)) acc += sums(i, j).imag() * sums(i, j).imag();
        }
    }
    return acc / static_cast<double>(nodes * valid);
}

void backpropagate(const Network& net, const Trace& trace, const VectorXc& output_adjoint,
                   double arg_scale, Gradient& grad) {
    const Index n = output_adjoint.size();
    VectorXc g_out = output_adjoint;
    for (Index i = 0; i < n; ++i)
        if (!trace.valid(i)) g_out[i] = Complex(0.0);

    grad.segment(net.output_offset(), net.fan_in(net.layer_count())).noalias() +=
        trace.output_input.adjoint() * g_out;

    const Index last_acts = net.layer(net.layer_count() - 1).activation_count();
    MatrixXc g_acts = (g_out * net.output_weights().adjoint()).leftCols(last_acts);

    for (Index l = net.layer_count() - 1; l >= 0; --l) {
        const LayerSpec& spec = net.layer(l);
        const LayerTrace& lt = trace.layers[static_cast<std::size_t>(l)];
        MatrixXc g_sums = MatrixXc::Zero(n, spec.summation_count());
        const Index m = spec.unary_count();
        const ArrayXb used = net.activation_used(l);

        for (Index j = 0; j < m; ++j) {
            const OperatorKind kind = spec.unary_ops[static_cast<std::size_t>(j)];
            if (kind == OperatorKind::Constant) {
                Complex acc(0.0);
                for (Index i = 0; i < n; ++i)
                    if (trace.valid(i)) acc += g_acts(i, j);
                grad[net.bias_offset(l) + j] += acc;
                continue;
            }
            for (Index i = 0; i < n; ++i) {
                if (!trace.valid(i)) continue;
                Complex g = used[j] ? unary_adjoint(kind, lt.sums(i, j), g_acts(i, j)) : Complex(0.0);
                if (arg_scale != 0.0 && is_branched(kind))
                    g += Complex(0.0, 2.0 * arg_scale * lt.sums(i, j).imag());
                g_sums(i, j) = g;
            }
        }
        for (Index k = 0; k < spec.binary_count(); ++k) {
            const OperatorKind kind = spec.binary_ops[static_cast<std::size_t>(k)];
            if (!used[m + k]) continue;
            for (Index i = 0; i < n; ++i) {
                if (!trace.valid(i)) continue;
                const auto [gx, gy] = binary_adjoint(kind, lt.sums(i, m + 2 * k),
                                                     lt.sums(i, m + 2 * k + 1), g_acts(i, m + k));
                g_sums(i, m + 2 * k) = gx;
                g_sums(i, m + 2 * k + 1) = gy;
            }
        }

        const Index fan = net.fan_in(l);
        Eigen::Map<MatrixXc> g_w(grad.data() + net.matrix_offset(l), fan, spec.summation_count());
        g_w.noalias() += lt.input.adjoint() * g_sums;

        if (l > 0) {
            const Index prev_acts = net.layer(l - 1).activation_count();
            g_acts = (g_sums * net.layer_matrix(l).adjoint()).leftCols(prev_acts);
        }
    }
}

LossBreakdown backward(const Network& net, const Dataset& batch, const LossSpec& spec,
                       Gradient* grad, Trace* trace_out) {
    Trace trace = forward(net, batch.X);
    LossBreakdown out;
    VectorXr adjoint;
    out.data = data_term(trace.prediction, trace.status, batch.y, spec.data_term, &out.data_mse,
                         grad ? &adjoint : nullptr);
    out.flagged = trace.flagged_count();
    out.valid = batch.rows() - out.flagged;
    out.total = out.data;

    const Index nodes = branched_node_count(net);
    out.arg_penalty = argument_penalty(net, trace);
    out.total += spec.lambda_arg * out.arg_penalty;

    if (grad) {
        grad->setZero(net.parameter_count());
        const double arg_scale =
            nodes > 0 ? spec.lambda_arg / static_cast<double>(nodes * out.valid) : 0.0;
        backpropagate(net, trace, adjoint.cast<Complex>(), arg_scale, *grad);
    }
    add_weight_penalties(net.weights(), net.active(), spec, out, grad);
    if (grad) *grad = net.active().select(*grad, Complex(0.0));
    if (trace_out) *trace_out = std::move(trace);
    return out;
}

Gradient finite_difference_oracle(const Network& net, const Dataset& batch, const LossSpec& spec,
                                  double h) {
    if (!(h >= 1e-8 && h <= 1e-4))
        throw Error(ErrorCode::InvalidConfig, "finite-difference step must lie in [1e-8, 1e-4]");
    // Samples flagged at the unperturbed weights stay excluded, as in backward.
    const Trace base = forward(net, batch.X);
    std::vector<Index> keep;
    for (Index i = 0; i < batch.rows(); ++i)
        if (base.valid(i)) keep.push_back(i);
    if (keep.empty()) throw Error(ErrorCode::EmptyBatch, "every sample in the batch is flagged");
    Dataset valid;
    valid.split = batch.split;
    valid.X = batch.X(keep, Eigen::all);
    valid.y = batch.y(keep);

    Gradient g = Gradient::Zero(net.parameter_count());
    Network probe = net;
    for (Index e = 0; e < net.parameter_count(); ++e) {
        if (!net.active()[e]) continue;
        const Complex w = net.weight(e);
        for (const Complex dir : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
            probe.set_weight(e, w + h * dir);
            const double plus = composite_loss(probe, valid, spec).total;
            probe.set_weight(e, w - h * dir);
            const double minus = composite_loss(probe, valid, spec).total;
            g[e] += dir * ((plus - minus) / (2.0 * h));
        }
        probe.set_weight(e, w);
    }
    return g;
}

}  // namespace ceql
