#include "subband/allocation.hpp"

#include <ostream>
#include <string>

#include "subband/error.hpp"
#include "subband/graph.hpp"

namespace subband {

void Allocation::validate() const {
  if (n_subbands < 1) throw Error(ErrorCode::kInvalidArgument, "allocation: K must be >= 1");
  for (std::size_t n = 0; n < subband.size(); ++n)
    if (subband[n] < 0 || subband[n] >= n_subbands)
      throw Error(ErrorCode::kInvalidArgument,
                  "allocation: subnetwork " + std::to_string(n) + " has sub-band " +
                      std::to_string(subband[n]) + " outside [0, " +
                      std::to_string(n_subbands) + ")");
}

ad::Tensor Allocation::one_hot() const {
  validate();
  ad::Tensor t(size(), n_subbands);
  for (int n = 0; n < size(); ++n) t(n, subband[n]) = 1.0;
  return t;
}

std::size_t count_conflicts(const InterferenceGraph& graph, const Allocation& alloc) {
  if (alloc.size() != graph.n_nodes())
    throw Error(ErrorCode::kShapeMismatch, "count_conflicts: allocation size differs from graph");
  std::size_t conflicts = 0;
  for (auto [a, b] : graph.edges())
    if (alloc.subband[a] == alloc.subband[b]) ++conflicts;
  return conflicts;
}

void write_allocation_csv(std::ostream& out, const Allocation& alloc) {
  out << "subnetwork,subband\n";
  for (int n = 0; n < alloc.size(); ++n) out << n << ',' << alloc.subband[n] << '\n';
}

}  // namespace subband
