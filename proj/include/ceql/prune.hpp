#pragma once

#include <vector>

#include "ceql/network.hpp"

namespace ceql {

/// Per-node reachability of a network over its active edges.
struct Connectivity {
    /// [layer][activation]: the activation is fed by some active path from a
    /// raw input or an active constant.
    std::vector<std::vector<bool>> alive;
    /// [layer][summation]: the summation node lies on an active path to the output.
    std::vector<std::vector<bool>> useful;
};

Connectivity analyze_connectivity(const Network& net);

/// True when some active output edge carries a live signal.
bool has_output_path(const Network& net);

/// Deactivates every edge that is not on an active input-to-output path.
/// Binary operators with a disconnected argument are removed together with
/// their remaining input edges. Returns the number of edges removed.
Index cascade_cleanup(Network& net);

/// Deactivates active edges with |w| < threshold (weights set to zero).
Index threshold_prune(Network& net, double threshold);

}  // namespace ceql
