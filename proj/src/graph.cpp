#include "subband/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "subband/error.hpp"

namespace subband {

InterferenceGraph::InterferenceGraph(int n_nodes, int n_subbands)
    : n_(n_nodes),
      k_(n_subbands),
      adjacency_(static_cast<std::size_t>(n_nodes) * n_nodes, 0),
      directed_(static_cast<std::size_t>(n_nodes) * n_nodes, 0) {
  if (n_nodes < 0 || n_subbands < 1)
    throw Error(ErrorCode::kInvalidArgument, "graph: need N >= 0 and K >= 1");
}

void InterferenceGraph::add_directed(int a, int b) {
  directed_[index(a, b)] = 1;
  adjacency_[index(a, b)] = 1;
  adjacency_[index(b, a)] = 1;
}

InterferenceGraph InterferenceGraph::from_edges(
    int n_nodes, int n_subbands, const std::vector<std::pair<int, int>>& edges) {
  InterferenceGraph g(n_nodes, n_subbands);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes || a == b)
      throw Error(ErrorCode::kInvalidArgument,
                  "graph: invalid edge (" + std::to_string(a) + ", " +
                      std::to_string(b) + ")");
    g.add_directed(a, b);
    g.add_directed(b, a);
  }
  return g;
}

int InterferenceGraph::degree(int node) const {
  const auto* row = adjacency_.data() + index(node, 0);
  return static_cast<int>(std::count(row, row + n_, std::uint8_t{1}));
}

std::vector<int> InterferenceGraph::neighbors(int node) const {
  std::vector<int> out;
  for (int m = 0; m < n_; ++m)
    if (adjacency_[index(node, m)]) out.push_back(m);
  return out;
}

std::vector<std::pair<int, int>> InterferenceGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < n_; ++a)
    for (int b = a + 1; b < n_; ++b)
      if (adjacency_[index(a, b)]) out.emplace_back(a, b);
  return out;
}

std::size_t InterferenceGraph::edge_count() const {
  return static_cast<std::size_t>(
             std::count(adjacency_.begin(), adjacency_.end(), std::uint8_t{1})) / 2;
}

InterferenceGraph InterferenceGraph::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != n_)
    throw Error(ErrorCode::kShapeMismatch, "graph: permutation size mismatch");
  InterferenceGraph g(n_, k_);
  g.seed = seed;
  g.profile = profile;
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) {
      g.adjacency_[g.index(perm[a], perm[b])] = adjacency_[index(a, b)];
      g.directed_[g.index(perm[a], perm[b])] = directed_[index(a, b)];
    }
  return g;
}

InterferenceGraph build_graph_from_strength(const Eigen::MatrixXd& strength,
                                            int n_subbands) {
  if (strength.rows() != strength.cols())
    throw Error(ErrorCode::kShapeMismatch, "build_graph: strength matrix must be square");
  if (n_subbands < 2)
    throw Error(ErrorCode::kInvalidArgument, "build_graph: need K >= 2");
  const int n = static_cast<int>(strength.rows());
  InterferenceGraph g(n, n_subbands);
  const int picks = std::min(n_subbands - 1, n - 1);

  std::vector<int> order;
  for (int rx = 0; rx < n; ++rx) {
    order.clear();
    for (int tx = 0; tx < n; ++tx)
      if (tx != rx) order.push_back(tx);
    // stable_sort keeps lower indices first among equal strengths
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return strength(rx, a) > strength(rx, b);
    });
    for (int i = 0; i < picks; ++i) g.add_directed(rx, order[i]);
  }
  return g;
}

InterferenceGraph build_graph(const LinkGains& gains, int n_subbands,
                              InterferenceMetric metric) {
  // Ranking by dB is equivalent to ranking by linear power.
  if (metric == InterferenceMetric::kLargeScale)
    return build_graph_from_strength(gains.large_scale_db, n_subbands);
  return build_graph_from_strength(gains.power_gain, n_subbands);
}

std::int64_t signalling_count(std::int64_t n_subnetworks, std::int64_t n_subbands,
                              SignallingScheme scheme) {
  if (n_subnetworks < 1)
    throw Error(ErrorCode::kInvalidArgument, "signalling_count: need N >= 1");
  switch (scheme) {
    case SignallingScheme::kGgnn: return n_subnetworks * (n_subbands - 1);
    case SignallingScheme::kSisa: return n_subnetworks * n_subnetworks;
  }
  return 0;
}

// --- files -----------------------------------------------------------------

void write_graph(std::ostream& out, const InterferenceGraph& g) {
  const auto edges = g.edges();
  std::ostringstream buf;
  buf << "subband-graph 1\n"
      << "N " << g.n_nodes() << '\n'
      << "K " << g.n_subbands() << '\n'
      << "seed " << g.seed << '\n'
      << "profile " << g.profile << '\n'
      << "edges " << edges.size() << '\n';
  for (auto [a, b] : edges) buf << a << ' ' << b << '\n';
  out << buf.str();
}

namespace {

template <typename T>
T expect_field(std::istream& in, const std::string& key) {
  std::string got;
  T value{};
  if (!(in >> got) || got != key || !(in >> value))
    throw Error(ErrorCode::kCorruptFile, "graph file: expected field '" + key + "'");
  return value;
}

}  // namespace

InterferenceGraph read_graph(std::istream& in) {
  const int version = expect_field<int>(in, "subband-graph");
  if (version != 1)
    throw Error(ErrorCode::kFormatVersionMismatch,
                "graph file: unsupported version " + std::to_string(version));
  const int n = expect_field<int>(in, "N");
  const int k = expect_field<int>(in, "K");
  const auto seed = expect_field<std::uint64_t>(in, "seed");
  const auto profile = expect_field<std::string>(in, "profile");
  const auto count = expect_field<std::size_t>(in, "edges");
  if (n < 0 || k < 1) throw Error(ErrorCode::kCorruptFile, "graph file: bad N or K");
  std::vector<std::pair<int, int>> edges(count);
  for (auto& [a, b] : edges)
    if (!(in >> a >> b))
      throw Error(ErrorCode::kCorruptFile, "graph file: truncated edge list");
  InterferenceGraph g = InterferenceGraph::from_edges(n, k, edges);
  g.seed = seed;
  g.profile = profile;
  return g;
}

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<InterferenceGraph>& graphs) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream manifest(dir / kManifestFile, std::ios::binary);
  if (!manifest) throw Error(ErrorCode::kIo, "cannot write " + (dir / kManifestFile).string());
  manifest << "index,file,seed,n_nodes,n_subbands,n_edges\n";
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const std::string name = "graph_" + std::to_string(i) + ".txt";
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    write_graph(f, graphs[i]);
    manifest << i << ',' << name << ',' << graphs[i].seed << ','
             << graphs[i].n_nodes() << ',' << graphs[i].n_subbands() << ','
             << graphs[i].edge_count() << '\n';
  }
  if (!manifest) throw Error(ErrorCode::kIo, "error writing manifest");
}

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw Error(ErrorCode::kIo, "dataset manifest not found: " + (dir / kManifestFile).string());
  std::string line;
  std::getline(in, line);
  if (line != "index,file,seed,n_nodes,n_subbands,n_edges")
    throw Error(ErrorCode::kCorruptFile, "manifest: unexpected header");
  std::vector<DatasetEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string idx, file, seed, n, k, e;
    if (!std::getline(row, idx, ',') || !std::getline(row, file, ',') ||
        !std::getline(row, seed, ',') || !std::getline(row, n, ',') ||
        !std::getline(row, k, ',') || !std::getline(row, e))
      throw Error(ErrorCode::kCorruptFile, "manifest: malformed row '" + line + "'");
    entries.push_back({file, std::stoull(seed), std::stoi(n), std::stoi(k),
                       static_cast<std::size_t>(std::stoull(e))});
  }
  return entries;
}

std::vector<InterferenceGraph> read_dataset(const std::filesystem::path& dir) {
  std::vector<InterferenceGraph> graphs;
  for (const DatasetEntry& entry : read_manifest(dir)) {
    std::ifstream f(dir / entry.file);
    if (!f) throw Error(ErrorCode::kIo, "missing graph file " + (dir / entry.file).string());
    graphs.push_back(read_graph(f));
  }
  return graphs;
}

}  // namespace subband
