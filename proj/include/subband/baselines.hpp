#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "subband/allocation.hpp"
#include "subband/channel.hpp"
#include "subband/graph.hpp"

namespace subband {

/// Independent uniform sub-band per subnetwork.
Allocation random_alloc(int n_subnetworks, int n_subbands, std::uint64_t seed);

/// Greedy coloring with K colors in DSATUR order: the next node is the one
/// whose coloured neighbours span the most sub-bands, ties to the larger
/// degree. It takes the lowest free sub-band; when none is free, the one
/// shared with the fewest neighbours (lowest index on ties). Exact on
/// bipartite graphs with K = 2.
Allocation cgc_greedy(const InterferenceGraph& graph);

/// Sum over subnetworks of co-channel interference divided by desired
/// power, computed from `power_gain` (rx AP row, tx device column).
double sisa_objective(const Eigen::MatrixXd& power_gain, const Allocation& alloc);

struct SisaResult {
  Allocation allocation;
  double objective = 0.0;
  int sweeps = 0;
  bool converged = false;  // a full sweep changed nothing
  /// Objective after the random start and after every node visit; only
  /// filled when requested.
  std::vector<double> objective_trace;
};

inline constexpr int kSisaDefaultMaxIters = 100;

/// Sequential coordinate descent on sisa_objective from a random start.
/// Nodes are visited in index order; a node moves only to a strictly better
/// sub-band.
SisaResult sisa(const LinkGains& gains, int n_subbands, std::uint64_t seed,
                int max_iters = kSisaDefaultMaxIters, bool record_trace = false);
SisaResult sisa(const Eigen::MatrixXd& power_gain, int n_subbands, std::uint64_t seed,
                int max_iters = kSisaDefaultMaxIters, bool record_trace = false);

}  // namespace subband
