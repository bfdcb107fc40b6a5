#include "ceql/prune.hpp"

#include <cmath>

namespace ceql {

namespace {

std::vector<bool> source_alive(const Network& net, const Connectivity& c, Index l) {
    const Index fan = net.fan_in(l);
    std::vector<bool> alive(static_cast<std::size_t>(fan), true);
    if (l == 0) return alive;
    const auto& prev = c.alive[static_cast<std::size_t>(l - 1)];
    for (std::size_t i = 0; i < prev.size(); ++i) alive[i] = prev[i];
    return alive;
}

}  // namespace

Connectivity analyze_connectivity(const Network& net) {
    const Index layers = net.layer_count();
    Connectivity c;
    c.alive.resize(static_cast<std::size_t>(layers));
    c.useful.resize(static_cast<std::size_t>(layers));
    std::vector<std::vector<bool>> sum_live(static_cast<std::size_t>(layers));

    for (Index l = 0; l < layers; ++l) {
        const LayerSpec& spec = net.layer(l);
        const auto src = source_alive(net, c, l);
        auto& live = sum_live[static_cast<std::size_t>(l)];
        live.assign(static_cast<std::size_t>(spec.summation_count()), false);
        for (Index j = 0; j < spec.summation_count(); ++j) {
            if (spec.is_constant(j)) {
                live[static_cast<std::size_t>(j)] = net.active()[net.bias_edge(l, j)];
                continue;
            }
            for (Index i = 0; i < net.fan_in(l); ++i)
                if (src[static_cast<std::size_t>(i)] && net.active()[net.summation_edge(l, i, j)]) {
                    live[static_cast<std::size_t>(j)] = true;
                    break;
                }
        }
        auto& alive = c.alive[static_cast<std::size_t>(l)];
        alive.assign(static_cast<std::size_t>(spec.activation_count()), false);
        const Index m = spec.unary_count();
        for (Index j = 0; j < m; ++j) alive[static_cast<std::size_t>(j)] = live[static_cast<std::size_t>(j)];
        for (Index k = 0; k < spec.binary_count(); ++k)
            alive[static_cast<std::size_t>(m + k)] =
                live[static_cast<std::size_t>(m + 2 * k)] && live[static_cast<std::size_t>(m + 2 * k + 1)];
    }

    // Usefulness flows backwards from the output through live nodes only.
    std::vector<bool> act_useful(static_cast<std::size_t>(net.layer(layers - 1).activation_count()), false);
    for (std::size_t a = 0; a < act_useful.size(); ++a)
        act_useful[a] = c.alive[static_cast<std::size_t>(layers - 1)][a] &&
                        net.active()[net.output_edge(static_cast<Index>(a))];

    for (Index l = layers - 1; l >= 0; --l) {
        const LayerSpec& spec = net.layer(l);
        const Index m = spec.unary_count();
        auto& useful = c.useful[static_cast<std::size_t>(l)];
        useful.assign(static_cast<std::size_t>(spec.summation_count()), false);
        for (Index j = 0; j < m; ++j) useful[static_cast<std::size_t>(j)] = act_useful[static_cast<std::size_t>(j)];
        for (Index k = 0; k < spec.binary_count(); ++k) {
            const bool u = act_useful[static_cast<std::size_t>(m + k)];
            useful[static_cast<std::size_t>(m + 2 * k)] = u;
            useful[static_cast<std::size_t>(m + 2 * k + 1)] = u;
        }
        if (l == 0) break;
        const auto src = source_alive(net, c, l);
        std::vector<bool> prev(static_cast<std::size_t>(net.layer(l - 1).activation_count()), false);
        for (std::size_t i = 0; i < prev.size(); ++i) {
            if (!src[i]) continue;
            for (Index j = 0; j < spec.summation_count(); ++j)
                if (useful[static_cast<std::size_t>(j)] &&
                    net.active()[net.summation_edge(l, static_cast<Index>(i), j)]) {
                    prev[i] = true;
                    break;
                }
        }
        act_useful = std::move(prev);
    }
    return c;
}

bool has_output_path(const Network& net) {
    const Connectivity c = analyze_connectivity(net);
    const auto src = [&] {
        std::vector<bool> alive(static_cast<std::size_t>(net.fan_in(net.layer_count())), true);
        const auto& last = c.alive.back();
        for (std::size_t i = 0; i < last.size(); ++i) alive[i] = last[i];
        return alive;
    }();
    for (Index i = 0; i < net.fan_in(net.layer_count()); ++i)
        if (src[static_cast<std::size_t>(i)] && net.active()[net.output_edge(i)]) return true;
    return false;
}

Index cascade_cleanup(Network& net) {
    Index removed = 0;
    for (;;) {
        const Connectivity c = analyze_connectivity(net);
        Index pass = 0;
        for (Index l = 0; l < net.layer_count(); ++l) {
            const LayerSpec& spec = net.layer(l);
            const auto src = source_alive(net, c, l);
            const auto& useful = c.useful[static_cast<std::size_t>(l)];
            const auto& alive = c.alive[static_cast<std::size_t>(l)];
            const Index m = spec.unary_count();
            for (Index j = 0; j < spec.summation_count(); ++j) {
                // A summation node is kept only if its operator both evaluates
                // and reaches the output.
                const Index act = j < m ? j : m + (j - m) / 2;
                const bool keep_target = useful[static_cast<std::size_t>(j)] && alive[static_cast<std::size_t>(act)];
                if (spec.is_constant(j)) {
                    const Index e = net.bias_edge(l, j);
                    if (net.active()[e] && !keep_target) {
                        net.deactivate(e);
                        ++pass;
                    }
                    continue;
                }
                for (Index i = 0; i < net.fan_in(l); ++i) {
                    const Index e = net.summation_edge(l, i, j);
                    if (net.active()[e] && !(keep_target && src[static_cast<std::size_t>(i)])) {
                        net.deactivate(e);
                        ++pass;
                    }
                }
            }
        }
        const Index out_fan = net.fan_in(net.layer_count());
        const auto& last = c.alive.back();
        for (Index i = 0; i < out_fan; ++i) {
            const bool src_alive = i >= static_cast<Index>(last.size()) || last[static_cast<std::size_t>(i)];
            const Index e = net.output_edge(i);
            if (net.active()[e] && !src_alive) {
                net.deactivate(e);
                ++pass;
            }
        }
        removed += pass;
        if (pass == 0) break;
    }
    return removed;
}

Index threshold_prune(Network& net, double threshold) {
    Index pruned = 0;
    for (Index e = 0; e < net.parameter_count(); ++e)
        if (net.active()[e] && std::abs(net.weight(e)) < threshold) {
            net.deactivate(e);
            ++pruned;
        }
    return pruned;
}

}  // namespace ceql
