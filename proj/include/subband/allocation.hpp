#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "subband/autodiff.hpp"

namespace subband {

class InterferenceGraph;

/// One sub-band per subnetwork.
struct Allocation {
  int n_subbands = 0;
  std::vector<int> subband;

  int size() const { return static_cast<int>(subband.size()); }
  /// Throws kInvalidArgument unless every entry lies in [0, n_subbands).
  void validate() const;
  /// N x K one-hot rows.
  ad::Tensor one_hot() const;

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

/// Number of edges whose endpoints share a sub-band.
std::size_t count_conflicts(const InterferenceGraph& graph, const Allocation& alloc);

/// CSV: subnetwork,subband
void write_allocation_csv(std::ostream& out, const Allocation& alloc);

}  // namespace subband
