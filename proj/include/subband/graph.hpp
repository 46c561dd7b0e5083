#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "subband/channel.hpp"

namespace subband {

enum class InterferenceMetric {
  kLargeScale,     // path loss + shadowing, fading excluded
  kInstantaneous,  // full power gain including fading
};

/// Undirected interference graph over N subnetworks with a coloring budget
/// of K sub-bands. Stored as dense boolean matrices; N stays in the hundreds.
class InterferenceGraph {
 public:
  InterferenceGraph() = default;
  InterferenceGraph(int n_nodes, int n_subbands);

  /// Graph from an undirected edge list. directed_origin mirrors adjacency.
  static InterferenceGraph from_edges(int n_nodes, int n_subbands,
                                      const std::vector<std::pair<int, int>>& edges);

  int n_nodes() const { return n_; }
  int n_subbands() const { return k_; }

  bool adjacent(int a, int b) const { return adjacency_[index(a, b)] != 0; }
  /// Whether b was selected among a's strongest interferers.
  bool directed_origin(int a, int b) const { return directed_[index(a, b)] != 0; }

  int degree(int node) const;
  /// Neighbours of `node` in increasing index order.
  std::vector<int> neighbors(int node) const;
  /// Undirected edges (a, b) with a < b, lexicographically ordered.
  std::vector<std::pair<int, int>> edges() const;
  std::size_t edge_count() const;

  /// Same graph with node i relabelled perm[i].
  InterferenceGraph permuted(const std::vector<int>& perm) const;

  // Metadata carried into dataset files.
  std::uint64_t seed = 0;
  std::string profile = "InF-DL";

  friend bool operator==(const InterferenceGraph& a, const InterferenceGraph& b) {
    return a.n_ == b.n_ && a.k_ == b.k_ && a.adjacency_ == b.adjacency_ &&
           a.directed_ == b.directed_;
  }

 private:
  friend InterferenceGraph build_graph_from_strength(const Eigen::MatrixXd&, int);

  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + b;
  }
  void add_directed(int a, int b);

  int n_ = 0;
  int k_ = 0;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::uint8_t> directed_;
};

/// Connects every node n to the K-1 largest entries of row n of `strength`
/// (interference from m into n, diagonal ignored); ties go to the lower
/// index. The result is the undirected union of those selections.
InterferenceGraph build_graph_from_strength(const Eigen::MatrixXd& strength,
                                            int n_subbands);

InterferenceGraph build_graph(const LinkGains& gains, int n_subbands,
                              InterferenceMetric metric = InterferenceMetric::kLargeScale);

enum class SignallingScheme { kGgnn, kSisa };

/// Messages sent to the central controller: N(K-1) neighbour ids for the
/// graph-based scheme, N^2 channel gains for SISA.
std::int64_t signalling_count(std::int64_t n_subnetworks, std::int64_t n_subbands,
                              SignallingScheme scheme);

/// Text format:
///   subband-graph 1
///   N <n>
///   K <k>
///   seed <seed>
///   profile <name>
///   edges <count>
///   <a> <b>        (one undirected edge per line, a < b)
void write_graph(std::ostream& out, const InterferenceGraph& g);
InterferenceGraph read_graph(std::istream& in);

struct DatasetEntry {
  std::string file;
  std::uint64_t seed = 0;
  int n_nodes = 0;
  int n_subbands = 0;
  std::size_t n_edges = 0;
};

inline constexpr const char* kManifestFile = "manifest.csv";

/// Writes graph_<index>.txt files and manifest.csv into `dir`.
void write_dataset(const std::filesystem::path& dir,
                   const std::vector<InterferenceGraph>& graphs);
std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir);
std::vector<InterferenceGraph> read_dataset(const std::filesystem::path& dir);

}  // namespace subband
