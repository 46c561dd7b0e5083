#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "subband/allocation.hpp"
#include "subband/autodiff.hpp"
#include "subband/graph.hpp"

namespace subband {

enum class InitScheme { kRandomNormal, kConstant };

struct GgnnConfig {
  int n_layers = 10;
  int embedding_dim = 64;
  int n_subbands = 5;
  InitScheme init_scheme = InitScheme::kRandomNormal;
  /// Seeds the initial node embeddings used at inference.
  std::uint64_t init_seed = 0;

  void validate() const;
  friend bool operator==(const GgnnConfig&, const GgnnConfig&) = default;
};

/// Weights of one message-passing layer: the aggregation transform and the
/// GRU gates (reset, update, candidate), each with an input-side and a
/// hidden-side matrix and bias.
struct GgnnLayer {
  ad::Parameter aggregation;
  ad::Parameter reset_in, reset_hidden;
  ad::Parameter update_in, update_hidden;
  ad::Parameter candidate_in, candidate_hidden;
  ad::Parameter reset_in_bias, reset_hidden_bias;
  ad::Parameter update_in_bias, update_hidden_bias;
  ad::Parameter candidate_in_bias, candidate_hidden_bias;
};

class GgnnModel {
 public:
  GgnnModel() = default;

  /// Weights uniform in +-1/sqrt(dim), biases zero.
  static GgnnModel initialize(const GgnnConfig& cfg, std::uint64_t seed);

  const GgnnConfig& config() const { return config_; }
  std::vector<GgnnLayer>& layers() { return layers_; }
  const std::vector<GgnnLayer>& layers() const { return layers_; }
  ad::Parameter& readout_weight() { return readout_weight_; }  // K x dim
  ad::Parameter& readout_bias() { return readout_bias_; }      // 1 x K
  const ad::Parameter& readout_weight() const { return readout_weight_; }
  const ad::Parameter& readout_bias() const { return readout_bias_; }

  /// Every parameter in serialization order: layers first (aggregation,
  /// then the gate matrices and biases as declared), readout last.
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

  friend bool operator==(const GgnnModel& a, const GgnnModel& b);

 private:
  friend GgnnModel read_model(std::istream& in);

  GgnnConfig config_;
  std::vector<GgnnLayer> layers_;
  ad::Parameter readout_weight_;
  ad::Parameter readout_bias_;
};

/// Initial embeddings (n_nodes x dim). Random: Normal(0, 1/dim) from `seed`.
/// Constant: every entry 1/sqrt(dim).
ad::Tensor init_embeddings(int n_nodes, const GgnnConfig& cfg, std::uint64_t seed);
/// Uses cfg.init_seed.
ad::Tensor init_embeddings(const InterferenceGraph& graph, const GgnnConfig& cfg);

/// Tape variables for one layer's parameters.
struct LayerVars {
  ad::Var aggregation, reset_in, reset_hidden, update_in, update_hidden,
      candidate_in, candidate_hidden, reset_in_bias, reset_hidden_bias,
      update_in_bias, update_hidden_bias, candidate_in_bias, candidate_hidden_bias;
};

LayerVars bind_layer(ad::Tape& tape, GgnnLayer& layer);
LayerVars bind_layer(ad::Tape& tape, const GgnnLayer& layer);

/// One message-passing step: sum the neighbours' embeddings, transform, and
/// update every node state with the GRU.
ad::Var layer_forward(ad::Tape& tape, const ad::Neighborhood& nb, ad::Var hidden,
                      const LayerVars& p);

/// Row-wise softmax(W h + b).
ad::Var readout(ad::Tape& tape, ad::Var hidden, ad::Var weight, ad::Var bias);

/// Full forward pass returning the N x K soft assignment.
ad::Var forward(ad::Tape& tape, GgnnModel& model, const ad::Neighborhood& nb,
                const ad::Tensor& initial);
ad::Var forward(ad::Tape& tape, const GgnnModel& model, const ad::Neighborhood& nb,
                const ad::Tensor& initial);

/// Soft assignment for `graph` using cfg.init_seed embeddings.
ad::Tensor soft_assignment(const InterferenceGraph& graph, const GgnnModel& model);
ad::Tensor soft_assignment(const InterferenceGraph& graph, const GgnnModel& model,
                           const ad::Tensor& initial);

/// Sum over undirected edges of the dot product of the endpoint rows.
double potts_loss(const InterferenceGraph& graph, const ad::Tensor& theta);
/// Differentiable version over a neighbourhood that lists each edge in both
/// directions: half of sum(theta .* scatter_sum(theta)).
ad::Var potts_loss(ad::Tape& tape, const ad::Neighborhood& nb, ad::Var theta);

/// Row-wise argmax, ties to the lowest sub-band.
Allocation argmax_rows(const ad::Tensor& theta);
Allocation predict(const InterferenceGraph& graph, const GgnnModel& model);
Allocation predict(const InterferenceGraph& graph, const GgnnModel& model,
                   const ad::Tensor& initial);

struct TrainerConfig {
  int batch_size = 64;
  int max_epochs = 500;
  double learning_rate = 1e-3;
  /// Training stops once the epoch-mean loss changes by less than this.
  double stop_tolerance = 1e-4;
  int dataset_size = 50'000;
  /// Threads for per-chunk forward/backward; results do not depend on it.
  int workers = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  GgnnModel model;
  std::vector<EpochRecord> history;
  bool converged = false;  // stopped by the tolerance rule
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Graphs per independent tape inside a mini-batch. Fixed so that gradient
/// reduction order never depends on the worker count.
inline constexpr int kTrainChunkGraphs = 16;

/// Mini-batch Adam on the mean per-graph Potts loss. Throws kDatasetEmpty or
/// kMixedSubbands.
TrainResult train(std::span<const InterferenceGraph> dataset, const GgnnConfig& cfg,
                  const TrainerConfig& trainer, std::uint64_t seed,
                  const EpochCallback& on_epoch = {});

/// Binary layout (little endian):
///   magic "SBGGNN\0\0", u32 version,
///   u32 layers, u32 dim, u32 K, u32 init scheme, u64 init seed,
///   u32 parameter count, then per parameter: u32 name length, name bytes,
///   u32 rows, u32 cols, rows*cols f64,
///   u64 FNV-1a checksum of everything before it.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const GgnnModel& model);
GgnnModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const GgnnModel& model);
GgnnModel load_model(const std::filesystem::path& path);

/// CSV: epoch,mean_loss
void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace subband
