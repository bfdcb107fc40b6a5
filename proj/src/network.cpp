#include "ceql/network.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace ceql {

OperatorKind LayerSpec::op_of_summation(Index j) const {
    if (j < unary_count()) return unary_ops[static_cast<std::size_t>(j)];
    return binary_ops[static_cast<std::size_t>((j - unary_count()) / 2)];
}

bool LayerSpec::is_constant(Index j) const {
    return j < unary_count() && unary_ops[static_cast<std::size_t>(j)] == OperatorKind::Constant;
}

std::vector<LayerSpec> benchmark_library(Layer1Variant variant) {
    using K = OperatorKind;
    const K third = variant == Layer1Variant::AsPrinted ? K::Constant : K::Identity;
    LayerSpec first{{K::Constant, K::Constant, K::Square, K::Square, third, third},
                    {K::Multiply, K::Multiply}};
    LayerSpec second{{K::Identity, K::Log, K::Log, K::Sqrt, K::Sqrt}, {K::Divide, K::Divide}};
    return {first, second};
}

LayerSpec polynomial_layer() {
    using K = OperatorKind;
    return LayerSpec{{K::Identity, K::Constant, K::Square}, {K::Multiply}};
}

namespace {

void validate(Index input_dim, const std::vector<LayerSpec>& layers) {
    if (input_dim < 1) throw Error(ErrorCode::InvalidConfig, "input_dim must be at least 1");
    if (layers.empty()) throw Error(ErrorCode::InvalidConfig, "network needs at least one layer");
    for (const auto& spec : layers) {
        if (spec.unary_ops.empty() && spec.binary_ops.empty())
            throw Error(ErrorCode::InvalidConfig, "empty operator library");
        for (auto k : spec.unary_ops)
            if (arity(k) != 1)
                throw Error(ErrorCode::InvalidConfig,
                            std::string("binary operator in unary slot: ") + to_string(k));
        for (auto k : spec.binary_ops)
            if (arity(k) != 2)
                throw Error(ErrorCode::InvalidConfig,
                            std::string("unary operator in binary slot: ") + to_string(k));
    }
}

}  // namespace

Network make_network(Index input_dim, std::vector<LayerSpec> layers, bool skip_inputs) {
    validate(input_dim, layers);
    Network net;
    net.input_dim_ = input_dim;
    net.skip_inputs_ = skip_inputs;
    net.specs_ = std::move(layers);
    net.init_layout();
    return net;
}

void Network::init_layout() {
    layout_.clear();
    Index offset = 0;
    Index prev_acts = 0;
    for (std::size_t l = 0; l < specs_.size(); ++l) {
        Layout lay;
        lay.fan_in = l == 0 ? input_dim_ : prev_acts + (skip_inputs_ ? input_dim_ : 0);
        lay.sums = specs_[l].summation_count();
        lay.matrix_offset = offset;
        offset += lay.fan_in * lay.sums;
        lay.bias_offset = offset;
        offset += lay.sums;
        layout_.push_back(lay);
        prev_acts = specs_[l].activation_count();
    }
    output_offset_ = offset;
    offset += fan_in(layer_count());

    weights_ = VectorXc::Zero(offset);
    structural_ = ArrayXb::Constant(offset, false);
    for (std::size_t l = 0; l < specs_.size(); ++l) {
        const auto& lay = layout_[l];
        for (Index j = 0; j < lay.sums; ++j) {
            const bool constant = specs_[l].is_constant(j);
            for (Index i = 0; i < lay.fan_in; ++i)
                structural_[lay.matrix_offset + j * lay.fan_in + i] = !constant;
            structural_[lay.bias_offset + j] = constant;
        }
    }
    for (Index i = output_offset_; i < offset; ++i) structural_[i] = true;
    active_ = structural_;
}

Network Network::build(Index input_dim, std::vector<LayerSpec> layers, bool skip_inputs,
                       const InitPolicy& init, std::uint64_t seed) {
    Network net = make_network(input_dim, std::move(layers), skip_inputs);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> re(init.re_low, init.re_high);
    std::uniform_real_distribution<double> im(init.im_low, init.im_high);
    for (Index e = 0; e < net.parameter_count(); ++e) {
        if (!net.structural_[e]) continue;
        const double r = re(rng);
        const double i = im(rng);
        net.weights_[e] = Complex(r, i);
    }
    return net;
}

Index Network::fan_in(Index l) const {
    if (l < layer_count()) return layout_[static_cast<std::size_t>(l)].fan_in;
    return specs_.back().activation_count() + (skip_inputs_ ? input_dim_ : 0);
}

Index Network::edge_count() const { return structural_.count(); }

Index Network::active_edge_count() const {
    if (specs_.empty()) throw Error(ErrorCode::InvalidConfig, "network has no layers");
    return active_.count();
}

void Network::set_weights(const VectorXc& w) {
    if (w.size() != weights_.size())
        throw Error(ErrorCode::InvalidConfig, "weight vector size mismatch");
    weights_ = active_.select(w, Complex(0.0));
}

void Network::set_weight(Index e, Complex w) {
    if (e < 0 || e >= parameter_count() || !structural_[e])
        throw Error(ErrorCode::InvalidConfig, "not an edge: " + std::to_string(e));
    weights_[e] = w;
    active_[e] = true;
}

void Network::deactivate(Index e) {
    weights_[e] = Complex(0.0);
    active_[e] = false;
}

void Network::clear() {
    weights_.setZero();
    active_.setConstant(false);
}

EdgeInfo Network::edge_info(Index e) const {
    if (e >= output_offset_) return {EdgeKind::Output, layer_count(), e - output_offset_, 0};
    for (Index l = layer_count() - 1; l >= 0; --l) {
        const auto& lay = layout_[static_cast<std::size_t>(l)];
        if (e >= lay.bias_offset) return {EdgeKind::Bias, l, -1, e - lay.bias_offset};
        if (e >= lay.matrix_offset) {
            const Index k = e - lay.matrix_offset;
            return {EdgeKind::Summation, l, k % lay.fan_in, k / lay.fan_in};
        }
    }
    throw Error(ErrorCode::InvalidConfig, "edge index out of range");
}

Index Network::summation_edge(Index layer, Index source, Index target) const {
    const auto& lay = layout_.at(static_cast<std::size_t>(layer));
    if (source < 0 || source >= lay.fan_in || target < 0 || target >= lay.sums)
        throw Error(ErrorCode::InvalidConfig, "summation edge out of range");
    return lay.matrix_offset + target * lay.fan_in + source;
}

Index Network::bias_edge(Index layer, Index target) const {
    const auto& lay = layout_.at(static_cast<std::size_t>(layer));
    if (target < 0 || target >= lay.sums) throw Error(ErrorCode::InvalidConfig, "bias out of range");
    return lay.bias_offset + target;
}

Index Network::output_edge(Index source) const {
    if (source < 0 || source >= fan_in(layer_count()))
        throw Error(ErrorCode::InvalidConfig, "output edge out of range");
    return output_offset_ + source;
}

ArrayXb Network::activation_used(Index l) const {
    const Index acts = layer(l).activation_count();
    ArrayXb used = ArrayXb::Constant(acts, false);
    if (l + 1 == layer_count()) {
        used = active_.segment(output_offset_, acts);
        return used;
    }
    const auto& next = layout_[static_cast<std::size_t>(l + 1)];
    for (Index j = 0; j < next.sums; ++j)
        used = used || active_.segment(next.matrix_offset + j * next.fan_in, acts);
    return used;
}

Eigen::Map<const MatrixXc> Network::layer_matrix(Index l) const {
    const auto& lay = layout_[static_cast<std::size_t>(l)];
    return {weights_.data() + lay.matrix_offset, lay.fan_in, lay.sums};
}

Eigen::Map<const VectorXc> Network::layer_bias(Index l) const {
    const auto& lay = layout_[static_cast<std::size_t>(l)];
    return {weights_.data() + lay.bias_offset, lay.sums};
}

Eigen::Map<const VectorXc> Network::output_weights() const {
    return {weights_.data() + output_offset_, fan_in(layer_count())};
}

bool Network::operator==(const Network& o) const {
    return input_dim_ == o.input_dim_ && skip_inputs_ == o.skip_inputs_ && specs_ == o.specs_ &&
           weights_.size() == o.weights_.size() && (weights_.array() == o.weights_.array()).all() &&
           (active_ == o.active_).all();
}

Index Trace::flagged_count() const {
    Index n = 0;
    for (auto s : status) n += s != OpStatus::Ok;
    return n;
}

namespace {

MatrixXc concat_inputs(const MatrixXc& acts, const MatrixXc& raw) {
    MatrixXc out(acts.rows(), acts.cols() + raw.cols());
    out << acts, raw;
    return out;
}

}  // namespace

Trace forward(const Network& net, const MatrixXr& X) {
    if (X.cols() != net.input_dim())
        throw Error(ErrorCode::InvalidConfig, "input dimension mismatch");
    const Index n = X.rows();
    Trace trace;
    trace.status.assign(static_cast<std::size_t>(n), OpStatus::Ok);
    const MatrixXc raw = X.cast<Complex>();

    auto flag = [&](Index i, OpStatus s) {
        auto& st = trace.status[static_cast<std::size_t>(i)];
        if (st == OpStatus::Ok) st = s;
    };

    MatrixXc prev;
    for (Index l = 0; l < net.layer_count(); ++l) {
        const LayerSpec& spec = net.layer(l);
        LayerTrace lt;
        lt.input = (l == 0) ? raw : (net.skip_inputs() ? concat_inputs(prev, raw) : prev);
        lt.sums.noalias() = lt.input * net.layer_matrix(l);
        const auto bias = net.layer_bias(l);
        for (Index j = 0; j < spec.unary_count(); ++j)
            if (spec.is_constant(j)) lt.sums.col(j).setConstant(bias[j]);

        lt.acts = MatrixXc::Zero(n, spec.activation_count());
        const ArrayXb used = net.activation_used(l);
        for (Index j = 0; j < spec.unary_count(); ++j) {
            const OperatorKind kind = spec.unary_ops[static_cast<std::size_t>(j)];
            if (!used[j]) continue;
            if (kind == OperatorKind::Constant) {
                lt.acts.col(j) = lt.sums.col(j);
                continue;
            }
            for (Index i = 0; i < n; ++i) {
                const auto r = apply_unary(kind, lt.sums(i, j));
                lt.acts(i, j) = r.value;
                if (!r.ok()) flag(i, r.status);
            }
        }
        const Index m = spec.unary_count();
        for (Index k = 0; k < spec.binary_count(); ++k) {
            const OperatorKind kind = spec.binary_ops[static_cast<std::size_t>(k)];
            if (!used[m + k]) continue;
            for (Index i = 0; i < n; ++i) {
                const auto r = apply_binary(kind, lt.sums(i, m + 2 * k), lt.sums(i, m + 2 * k + 1));
                lt.acts(i, m + k) = r.value;
                if (!r.ok()) flag(i, r.status);
            }
        }
        for (Index i = 0; i < n; ++i)
            if (!trace.valid(i)) lt.acts.row(i).setZero();
        prev = lt.acts;
        trace.layers.push_back(std::move(lt));
    }

    trace.output_input = net.skip_inputs() ? concat_inputs(prev, raw) : prev;
    trace.output.noalias() = trace.output_input * net.output_weights();
    trace.prediction.resize(n);
    for (Index i = 0; i < n; ++i) {
        if (trace.valid(i) && !std::isfinite(trace.output[i].real())) flag(i, OpStatus::NonFinite);
        trace.prediction[i] =
            trace.valid(i) ? trace.output[i].real() : std::numeric_limits<double>::quiet_NaN();
    }
    return trace;
}

Prediction forward(const Network& net, std::span<const double> x) {
    MatrixXr X(1, static_cast<Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) X(0, static_cast<Index>(i)) = x[i];
    Prediction p;
    p.trace = forward(net, X);
    p.value = p.trace.prediction[0];
    p.status = p.trace.status[0];
    return p;
}

}  // namespace ceql
