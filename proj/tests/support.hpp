#pragma once

// Shared generators and hand-wired networks for the test binaries.

#include <cmath>
#include <random>

#include "ceql/autodiff.hpp"
#include "ceql/network.hpp"

namespace ceql::test {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    Complex complex(double half) { return {uniform(-half, half), uniform(-half, half)}; }
    Index index(Index n) { return std::uniform_int_distribution<Index>(0, n - 1)(rng_); }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline double distance_to_cut(Complex z) { return z.real() <= 0.0 ? std::abs(z.imag()) : std::abs(z); }

/// True when no used Divide denominator is within `margin` of zero and no used
/// log/sqrt argument is within `margin` of the negative real axis.
inline bool away_from_guards(const Network& net, const Trace& t, Index row, double margin) {
    if (!t.valid(row)) return false;
    for (Index l = 0; l < net.layer_count(); ++l) {
        const LayerSpec& spec = net.layer(l);
        const ArrayXb used = net.activation_used(l);
        const Index m = spec.unary_count();
        for (Index j = 0; j < spec.summation_count(); ++j) {
            const Index act = j < m ? j : m + (j - m) / 2;
            if (!used[act]) continue;
            const Complex z = t.layers[static_cast<std::size_t>(l)].sums(row, j);
            const OperatorKind op = spec.op_of_summation(j);
            if (op == OperatorKind::Divide && (j - m) % 2 == 1 && std::abs(z) < margin) return false;
            if (is_branched(op) && distance_to_cut(z) < margin) return false;
        }
    }
    return true;
}

/// n rows with inputs in [-2, 2] that keep every guarded node at least
/// `margin` away from its singular set. Targets are uniform in [-1, 1].
inline Dataset guarded_batch(const Network& net, Gen& gen, Index n, double margin = 0.1) {
    Dataset d;
    d.X.resize(n, net.input_dim());
    d.y.resize(n);
    Index filled = 0;
    for (int attempt = 0; attempt < 100000 && filled < n; ++attempt) {
        MatrixXr x(1, net.input_dim());
        for (Index j = 0; j < net.input_dim(); ++j) x(0, j) = gen.uniform(-2.0, 2.0);
        const Trace t = forward(net, x);
        if (!away_from_guards(net, t, 0, margin)) continue;
        d.X.row(filled) = x.row(0);
        d.y[filled] = gen.uniform(-1.0, 1.0);
        ++filled;
    }
    d.X.conservativeResize(filled, Eigen::NoChange);
    d.y.conservativeResize(filled);
    return d;
}

/// Normwise relative error ||a - b||_inf / ||b||_inf.
inline double relative_error(const VectorXc& a, const VectorXc& b) {
    const double scale = b.cwiseAbs().maxCoeff();
    const double diff = (a - b).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
}

/// f(x) = Re(1 / (x + a)): a constant feeds the numerator with weight 1 and the
/// denominator with weight a; the identity feeds the denominator with weight 1.
inline Network reciprocal_network(Complex a) {
    using K = OperatorKind;
    Network net = make_network(1, {LayerSpec{{K::Constant, K::Identity}, {}}, LayerSpec{{}, {K::Divide}}}, false);
    net.clear();
    net.set_weight(net.bias_edge(0, 0), 1.0);
    net.set_weight(net.summation_edge(0, 0, 1), 1.0);
    net.set_weight(net.summation_edge(1, 0, 0), 1.0);
    net.set_weight(net.summation_edge(1, 0, 1), a);
    net.set_weight(net.summation_edge(1, 1, 1), 1.0);
    net.set_weight(net.output_edge(0), 1.0);
    return net;
}

/// x -> w_in -> Identity -> w_out.
inline Network identity_chain(Complex w_in, Complex w_out) {
    Network net = make_network(1, {LayerSpec{{OperatorKind::Identity}, {}}}, false);
    net.clear();
    net.set_weight(net.summation_edge(0, 0, 0), w_in);
    net.set_weight(net.output_edge(0), w_out);
    return net;
}

inline Network random_full_library(std::uint64_t seed, Index input_dim = 1) {
    return Network::build(input_dim, benchmark_library(), true, InitPolicy{}, seed);
}

inline Dataset rows(std::initializer_list<double> xs, std::initializer_list<double> ys) {
    Dataset d;
    d.X.resize(static_cast<Index>(xs.size()), 1);
    d.y.resize(static_cast<Index>(ys.size()));
    Index i = 0;
    for (double x : xs) d.X(i++, 0) = x;
    i = 0;
    for (double y : ys) d.y[i++] = y;
    return d;
}

}  // namespace ceql::test
