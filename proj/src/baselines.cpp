#include "subband/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "subband/error.hpp"
#include "subband/rng.hpp"

namespace subband {

Allocation random_alloc(int n_subnetworks, int n_subbands, std::uint64_t seed) {
  if (n_subbands < 1 || n_subnetworks < 0)
    throw Error(ErrorCode::kInvalidArgument, "random_alloc: need K >= 1 and N >= 0");
  Rng rng(derive_seed(seed, "alloc.random"));
  std::uniform_int_distribution<int> pick(0, n_subbands - 1);
  Allocation a;
  a.n_subbands = n_subbands;
  a.subband.resize(n_subnetworks);
  for (int& s : a.subband) s = pick(rng);
  return a;
}

Allocation cgc_greedy(const InterferenceGraph& graph) {
  const int n = graph.n_nodes();
  const int k = graph.n_subbands();
  std::vector<std::vector<int>> nbrs(n);
  for (int v = 0; v < n; ++v) nbrs[v] = graph.neighbors(v);

  Allocation a;
  a.n_subbands = k;
  a.subband.assign(n, -1);
  // used(v, c): coloured neighbours of v on sub-band c. saturation(v): how
  // many distinct sub-bands those neighbours occupy.
  std::vector<int> used(static_cast<std::size_t>(n) * k, 0);
  std::vector<int> saturation(n, 0);
  for (int step = 0; step < n; ++step) {
    // most saturated uncoloured node; ties to the higher degree, then the
    // lower index. With nothing coloured this is plain largest-first.
    int v = -1;
    for (int m = 0; m < n; ++m) {
      if (a.subband[m] >= 0) continue;
      if (v < 0 || saturation[m] > saturation[v] ||
          (saturation[m] == saturation[v] && nbrs[m].size() > nbrs[v].size()))
        v = m;
    }
    int* row = used.data() + static_cast<std::size_t>(v) * k;
    // first minimum: a free sub-band if any exists, otherwise the
    // least-conflicting one, lowest index first
    const int c = static_cast<int>(std::min_element(row, row + k) - row);
    a.subband[v] = c;
    for (int m : nbrs[v])
      if (used[static_cast<std::size_t>(m) * k + c]++ == 0) ++saturation[m];
  }
  return a;
}

namespace {

// w(n, m) = g(n, m) / g(n, n): interference from m relative to n's signal.
Eigen::MatrixXd normalized_interference(const Eigen::MatrixXd& g) {
  if (g.rows() != g.cols())
    throw Error(ErrorCode::kShapeMismatch, "sisa: gain matrix must be square");
  Eigen::MatrixXd w = g.array().colwise() / g.diagonal().array();
  w.diagonal().setZero();
  return w;
}

}  // namespace

double sisa_objective(const Eigen::MatrixXd& power_gain, const Allocation& alloc) {
  if (alloc.size() != power_gain.rows())
    throw Error(ErrorCode::kShapeMismatch, "sisa_objective: allocation size mismatch");
  double total = 0.0;
  for (int n = 0; n < alloc.size(); ++n) {
    double interference = 0.0;
    for (int m = 0; m < alloc.size(); ++m)
      if (m != n && alloc.subband[m] == alloc.subband[n]) interference += power_gain(n, m);
    total += interference / power_gain(n, n);
  }
  return total;
}

SisaResult sisa(const Eigen::MatrixXd& power_gain, int n_subbands, std::uint64_t seed,
                int max_iters, bool record_trace) {
  if (max_iters < 0) throw Error(ErrorCode::kInvalidArgument, "sisa: max_iters must be >= 0");
  const int n = static_cast<int>(power_gain.rows());
  const Eigen::MatrixXd w = normalized_interference(power_gain);
  // Moving node v to band k costs what v receives from k plus what v adds
  // to every k-user: sym(v, m) = w(v, m) + w(m, v).
  const Eigen::MatrixXd sym = w + w.transpose();

  SisaResult r;
  r.allocation = random_alloc(n, n_subbands, derive_seed(seed, "sisa.start"));
  auto& band = r.allocation.subband;
  r.objective = sisa_objective(power_gain, r.allocation);
  if (record_trace) r.objective_trace.push_back(r.objective);

  std::vector<double> cost(n_subbands);
  for (int sweep = 0; sweep < max_iters; ++sweep) {
    bool changed = false;
    for (int v = 0; v < n; ++v) {
      std::fill(cost.begin(), cost.end(), 0.0);
      for (int m = 0; m < n; ++m)
        if (m != v) cost[band[m]] += sym(v, m);
      int best = band[v];
      for (int k = 0; k < n_subbands; ++k)
        if (cost[k] < cost[best]) best = k;
      if (best != band[v]) {
        r.objective += cost[best] - cost[band[v]];
        band[v] = best;
        changed = true;
      }
      if (record_trace) r.objective_trace.push_back(r.objective);
    }
    ++r.sweeps;
    if (!changed) {
      r.converged = true;
      break;
    }
  }
  // Recompute to shed accumulated rounding from the incremental updates.
  r.objective = sisa_objective(power_gain, r.allocation);
  return r;
}

SisaResult sisa(const LinkGains& gains, int n_subbands, std::uint64_t seed, int max_iters,
                bool record_trace) {
  return sisa(gains.power_gain, n_subbands, seed, max_iters, record_trace);
}

}  // namespace subband
