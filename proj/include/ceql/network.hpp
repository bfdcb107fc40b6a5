#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ceql/complex_ops.hpp"
#include "ceql/types.hpp"

namespace ceql {

/// Operator library of one layer. The layer exposes m + 2n summation nodes:
/// the first m feed the unary operators, the remaining 2n feed the binary
/// operators in consecutive pairs.
struct LayerSpec {
    std::vector<OperatorKind> unary_ops;
    std::vector<OperatorKind> binary_ops;

    Index unary_count() const { return static_cast<Index>(unary_ops.size()); }
    Index binary_count() const { return static_cast<Index>(binary_ops.size()); }
    Index summation_count() const { return unary_count() + 2 * binary_count(); }
    Index activation_count() const { return unary_count() + binary_count(); }

    /// Operator fed by summation node j.
    OperatorKind op_of_summation(Index j) const;
    bool is_constant(Index j) const;

    bool operator==(const LayerSpec&) const = default;
};

enum class Layer1Variant { AsPrinted, IdSubstituted };

/// The two-layer benchmark library: (const, square, const, mul) then
/// (id, log, sqrt, div), each operator duplicated.
std::vector<LayerSpec> benchmark_library(Layer1Variant variant = Layer1Variant::AsPrinted);

/// One layer of {id, const, square, mul}.
LayerSpec polynomial_layer();

/// Weight initialization: independent uniform real and imaginary parts.
struct InitPolicy {
    double re_low = -1.0;
    double re_high = 1.0;
    double im_low = -0.5;
    double im_high = 0.5;
};

enum class EdgeKind { Summation, Bias, Output };

/// Position of a parameter in the graph. For summation edges `source` indexes
/// the layer fan-in (previous activations followed by raw inputs when skip
/// connections are on); for output edges it indexes the output fan-in.
struct EdgeInfo {
    EdgeKind kind = EdgeKind::Summation;
    Index layer = 0;
    Index source = 0;
    Index target = 0;
};

/// Complex equation-learner graph.
///
/// All edge weights live in one flat complex vector. Layer l owns a dense
/// fan_in(l) x summation_count(l) block (column major), then one bias slot per
/// summation node; the output edges come last. Slots that are not edges of the
/// graph (the input column of a Constant node, bias slots of non-constant
/// nodes) are non-structural: always inactive and zero. Inactive weights are
/// exactly zero, which lets the forward pass run on the dense blocks.
class Network {
public:
    Network() = default;

    static Network build(Index input_dim, std::vector<LayerSpec> layers, bool skip_inputs,
                         const InitPolicy& init, std::uint64_t seed);

    Index input_dim() const { return input_dim_; }
    bool skip_inputs() const { return skip_inputs_; }
    Index layer_count() const { return static_cast<Index>(specs_.size()); }
    const std::vector<LayerSpec>& layers() const { return specs_; }
    const LayerSpec& layer(Index l) const { return specs_[static_cast<std::size_t>(l)]; }

    /// Fan-in of layer l; l == layer_count() is the output node.
    Index fan_in(Index l) const;

    Index parameter_count() const { return weights_.size(); }
    Index edge_count() const;
    Index active_edge_count() const;

    const VectorXc& weights() const { return weights_; }
    const ArrayXb& active() const { return active_; }
    const ArrayXb& structural() const { return structural_; }

    /// Replaces all weights; inactive slots are forced back to zero.
    void set_weights(const VectorXc& w);
    Complex weight(Index e) const { return weights_[e]; }
    /// Sets a weight and marks the edge active. Throws for non-structural slots.
    void set_weight(Index e, Complex w);
    void deactivate(Index e);
    /// Deactivates every edge.
    void clear();

    EdgeInfo edge_info(Index e) const;
    Index summation_edge(Index layer, Index source, Index target) const;
    Index bias_edge(Index layer, Index target) const;
    Index output_edge(Index source) const;

    /// Activations of layer l with at least one active outgoing edge. Unused
    /// operators are not evaluated and cannot flag samples.
    ArrayXb activation_used(Index l) const;

    Eigen::Map<const MatrixXc> layer_matrix(Index l) const;
    Eigen::Map<const VectorXc> layer_bias(Index l) const;
    Eigen::Map<const VectorXc> output_weights() const;

    Index matrix_offset(Index l) const { return layout_[static_cast<std::size_t>(l)].matrix_offset; }
    Index bias_offset(Index l) const { return layout_[static_cast<std::size_t>(l)].bias_offset; }
    Index output_offset() const { return output_offset_; }

    bool operator==(const Network&) const;

private:
    struct Layout {
        Index fan_in = 0;
        Index sums = 0;
        Index matrix_offset = 0;
        Index bias_offset = 0;
    };

    void init_layout();

    Index input_dim_ = 0;
    bool skip_inputs_ = false;
    std::vector<LayerSpec> specs_;
    std::vector<Layout> layout_;
    Index output_offset_ = 0;
    VectorXc weights_;
    ArrayXb active_;
    ArrayXb structural_;

    friend Network make_network(Index, std::vector<LayerSpec>, bool);
};

/// Structure with every structural edge active and all weights zero.
Network make_network(Index input_dim, std::vector<LayerSpec> layers, bool skip_inputs);

struct LayerTrace {
    MatrixXc input;  // samples x fan_in
    MatrixXc sums;   // samples x summation_count
    MatrixXc acts;   // samples x activation_count
};

/// Every summation and operator value of a batch evaluation.
struct Trace {
    std::vector<LayerTrace> layers;
    MatrixXc output_input;
    VectorXc output;
    /// Re(output); NaN for flagged samples.
    VectorXr prediction;
    /// First operator guard hit per sample.
    std::vector<OpStatus> status;

    bool valid(Index i) const { return status[static_cast<std::size_t>(i)] == OpStatus::Ok; }
    Index flagged_count() const;
};

/// Batch forward pass. Samples that hit an operator guard are flagged; their
/// downstream activations are zeroed so the rest of the batch is unaffected.
Trace forward(const Network& net, const MatrixXr& X);

struct Prediction {
    double value = 0.0;
    OpStatus status = OpStatus::Ok;
    Trace trace;
};

Prediction forward(const Network& net, std::span<const double> x);

}  // namespace ceql
