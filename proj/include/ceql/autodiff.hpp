#pragma once

#include "ceql/network.hpp"
#include "ceql/types.hpp"

namespace ceql {

enum class DataTerm { MSE, RelativeMSE };

/// Composite training objective:
///   data + l1 * sum|w| + im * sum Im(w)^2 + arg * mean_{log/sqrt nodes, samples} Im(z)^2
/// with sums over active weights only.
struct LossSpec {
    DataTerm data_term = DataTerm::MSE;
    double lambda_im = 0.0;
    double lambda_l1 = 0.0;
    double lambda_arg = 0.0;
};

struct LossBreakdown {
    double total = 0.0;
    double data = 0.0;      // the selected data term
    double data_mse = 0.0;  // plain MSE over unflagged samples
    double l1_mass = 0.0;
    double im_mass = 0.0;
    double arg_penalty = 0.0;
    Index flagged = 0;
    Index valid = 0;
};

/// Gradient of a real loss with respect to complex weights, stored as
/// dL/dRe(w) + i dL/dIm(w) per parameter slot. Inactive slots carry 0.
using Gradient = VectorXc;

/// Adds the weight penalties of `spec` over `mask`ed entries of `w` to `out`
/// (and their derivative to `grad` when given).
void add_weight_penalties(const VectorXc& w, const ArrayXb& mask, const LossSpec& spec,
                          LossBreakdown& out, Gradient* grad);

/// Data-term value and its adjoint dL/dprediction for every sample.
/// Flagged samples (NaN prediction) get a zero adjoint. Throws EmptyBatch when
/// no sample is valid.
double data_term(const VectorXr& prediction, const std::vector<OpStatus>& status,
                 const VectorXr& y, DataTerm term, double* mse, VectorXr* adjoint);

/// Reverse pass from an arbitrary complex output adjoint. `arg_scale` is the
/// coefficient c of the argument penalty c * sum Im(z)^2 over log/sqrt
/// summation nodes of valid samples. Accumulates into `grad`.
void backpropagate(const Network& net, const Trace& trace, const VectorXc& output_adjoint,
                   double arg_scale, Gradient& grad);

/// Number of log/sqrt summation nodes in the network.
Index branched_node_count(const Network& net);

/// Mean Im(z)^2 over log/sqrt summation nodes and valid samples.
double argument_penalty(const Network& net, const Trace& trace);

/// Composite loss and (optionally) its exact gradient treating each complex
/// weight as two independent real parameters.
LossBreakdown backward(const Network& net, const Dataset& batch, const LossSpec& spec,
                       Gradient* grad, Trace* trace_out = nullptr);

inline LossBreakdown composite_loss(const Network& net, const Dataset& batch,
                                    const LossSpec& spec) {
    return backward(net, batch, spec, nullptr);
}

/// Central differences over both real coordinates of every active weight.
/// Samples flagged at the given weights are left out of every evaluation.
Gradient finite_difference_oracle(const Network& net, const Dataset& batch, const LossSpec& spec,
                                  double h);

}  // namespace ceql
