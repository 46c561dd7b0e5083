#include "subband/ggnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "subband/error.hpp"
#include "subband/rng.hpp"

namespace subband {

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

void GgnnConfig::validate() const {
  if (n_layers < 1) throw Error(ErrorCode::kInvalidArgument, "ggnn: n_layers must be >= 1");
  if (n_subbands < 1) throw Error(ErrorCode::kInvalidArgument, "ggnn: n_subbands must be >= 1");
  if (embedding_dim < n_subbands)
    throw Error(ErrorCode::kInvalidArgument, "ggnn: embedding_dim must be >= n_subbands");
}

void TrainerConfig::validate() const {
  if (batch_size < 1 || max_epochs < 1 || !(learning_rate > 0.0) || dataset_size < 1 ||
      workers < 1)
    throw Error(ErrorCode::kInvalidArgument, "trainer: sizes and learning rate must be positive");
  if (!(stop_tolerance >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "trainer: stop_tolerance must be >= 0");
}

// --- model -----------------------------------------------------------------

namespace {

template <typename Layer, typename Fn>
void for_each_layer_param(Layer& l, Fn&& fn) {
  fn(l.aggregation);
  fn(l.reset_in);
  fn(l.reset_hidden);
  fn(l.update_in);
  fn(l.update_hidden);
  fn(l.candidate_in);
  fn(l.candidate_hidden);
  fn(l.reset_in_bias);
  fn(l.reset_hidden_bias);
  fn(l.update_in_bias);
  fn(l.update_hidden_bias);
  fn(l.candidate_in_bias);
  fn(l.candidate_hidden_bias);
}

ad::Parameter uniform_param(std::string name, int rows, int cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  ad::Tensor t(rows, cols);
  for (double& v : t.values()) v = u(rng);
  return ad::Parameter(std::move(name), std::move(t));
}

ad::Parameter zero_param(std::string name, int rows, int cols) {
  return ad::Parameter(std::move(name), ad::Tensor(rows, cols));
}

}  // namespace

GgnnModel GgnnModel::initialize(const GgnnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  GgnnModel m;
  m.config_ = cfg;
  Rng rng(derive_seed(seed, "ggnn.params"));
  const int d = cfg.embedding_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    GgnnLayer layer;
    layer.aggregation = uniform_param(p + "aggregation", d, d, bound, rng);
    layer.reset_in = uniform_param(p + "reset_in", d, d, bound, rng);
    layer.reset_hidden = uniform_param(p + "reset_hidden", d, d, bound, rng);
    layer.update_in = uniform_param(p + "update_in", d, d, bound, rng);
    layer.update_hidden = uniform_param(p + "update_hidden", d, d, bound, rng);
    layer.candidate_in = uniform_param(p + "candidate_in", d, d, bound, rng);
    layer.candidate_hidden = uniform_param(p + "candidate_hidden", d, d, bound, rng);
    layer.reset_in_bias = zero_param(p + "reset_in_bias", 1, d);
    layer.reset_hidden_bias = zero_param(p + "reset_hidden_bias", 1, d);
    layer.update_in_bias = zero_param(p + "update_in_bias", 1, d);
    layer.update_hidden_bias = zero_param(p + "update_hidden_bias", 1, d);
    layer.candidate_in_bias = zero_param(p + "candidate_in_bias", 1, d);
    layer.candidate_hidden_bias = zero_param(p + "candidate_hidden_bias", 1, d);
    m.layers_.push_back(std::move(layer));
  }
  m.readout_weight_ = uniform_param("readout.weight", cfg.n_subbands, d, bound, rng);
  m.readout_bias_ = zero_param("readout.bias", 1, cfg.n_subbands);
  return m;
}

std::vector<ad::Parameter*> GgnnModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (GgnnLayer& l : layers_) for_each_layer_param(l, [&](ad::Parameter& p) { out.push_back(&p); });
  out.push_back(&readout_weight_);
  out.push_back(&readout_bias_);
  return out;
}

std::vector<const ad::Parameter*> GgnnModel::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const GgnnLayer& l : layers_)
    for_each_layer_param(l, [&](const ad::Parameter& p) { out.push_back(&p); });
  out.push_back(&readout_weight_);
  out.push_back(&readout_bias_);
  return out;
}

bool operator==(const GgnnModel& a, const GgnnModel& b) {
  if (!(a.config_ == b.config_)) return false;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->name != pb[i]->name || !(pa[i]->value == pb[i]->value)) return false;
  return true;
}

// --- forward ---------------------------------------------------------------

ad::Tensor init_embeddings(int n_nodes, const GgnnConfig& cfg, std::uint64_t seed) {
  const int d = cfg.embedding_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  if (cfg.init_scheme == InitScheme::kConstant) return ad::Tensor(n_nodes, d, scale);
  Rng rng(derive_seed(seed, "ggnn.embeddings"));
  std::normal_distribution<double> normal(0.0, scale);
  ad::Tensor t(n_nodes, d);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

ad::Tensor init_embeddings(const InterferenceGraph& graph, const GgnnConfig& cfg) {
  return init_embeddings(graph.n_nodes(), cfg, cfg.init_seed);
}

namespace {

template <typename Layer, typename Bind>
LayerVars bind_layer_with(Layer& l, Bind&& bind) {
  return LayerVars{bind(l.aggregation),       bind(l.reset_in),
                   bind(l.reset_hidden),      bind(l.update_in),
                   bind(l.update_hidden),     bind(l.candidate_in),
                   bind(l.candidate_hidden),  bind(l.reset_in_bias),
                   bind(l.reset_hidden_bias), bind(l.update_in_bias),
                   bind(l.update_hidden_bias), bind(l.candidate_in_bias),
                   bind(l.candidate_hidden_bias)};
}

template <typename Layer>
LayerVars bind_layer_impl(ad::Tape& tape, Layer& l) {
  return bind_layer_with(l, [&](auto& p) { return tape.parameter(p); });
}

template <typename Model>
ad::Var forward_impl(ad::Tape& tape, Model& model, const ad::Neighborhood& nb,
                     const ad::Tensor& initial) {
  const GgnnConfig& cfg = model.config();
  if (initial.rows() != nb.n_nodes || initial.cols() != cfg.embedding_dim)
    throw Error(ErrorCode::kShapeMismatch, "ggnn: initial embeddings have the wrong shape");
  ad::Var h = tape.constant(initial);
  for (auto& layer : model.layers()) h = layer_forward(tape, nb, h, bind_layer(tape, layer));
  return readout(tape, h, tape.parameter(model.readout_weight()),
                 tape.parameter(model.readout_bias()));
}

}  // namespace

LayerVars bind_layer(ad::Tape& tape, GgnnLayer& layer) { return bind_layer_impl(tape, layer); }
LayerVars bind_layer(ad::Tape& tape, const GgnnLayer& layer) { return bind_layer_impl(tape, layer); }

ad::Var layer_forward(ad::Tape& t, const ad::Neighborhood& nb, ad::Var hidden,
                      const LayerVars& p) {
  const ad::Var message = t.matmul_nt(t.scatter_sum(hidden, nb), p.aggregation);
  auto affine = [&](ad::Var x, ad::Var w, ad::Var b) { return t.add_row(t.matmul_nt(x, w), b); };
  const ad::Var reset = t.sigmoid(t.add(affine(message, p.reset_in, p.reset_in_bias),
                                        affine(hidden, p.reset_hidden, p.reset_hidden_bias)));
  const ad::Var update = t.sigmoid(t.add(affine(message, p.update_in, p.update_in_bias),
                                         affine(hidden, p.update_hidden, p.update_hidden_bias)));
  const ad::Var candidate = t.tanh(
      t.add(affine(message, p.candidate_in, p.candidate_in_bias),
            t.hadamard(reset, affine(hidden, p.candidate_hidden, p.candidate_hidden_bias))));
  return t.add(t.hadamard(t.one_minus(update), candidate), t.hadamard(update, hidden));
}

ad::Var readout(ad::Tape& tape, ad::Var hidden, ad::Var weight, ad::Var bias) {
  return tape.softmax_rows(tape.add_row(tape.matmul_nt(hidden, weight), bias));
}

ad::Var forward(ad::Tape& tape, GgnnModel& model, const ad::Neighborhood& nb,
                const ad::Tensor& initial) {
  return forward_impl(tape, model, nb, initial);
}

ad::Var forward(ad::Tape& tape, const GgnnModel& model, const ad::Neighborhood& nb,
                const ad::Tensor& initial) {
  return forward_impl(tape, model, nb, initial);
}

ad::Tensor soft_assignment(const InterferenceGraph& graph, const GgnnModel& model,
                           const ad::Tensor& initial) {
  if (graph.n_subbands() != model.config().n_subbands)
    throw Error(ErrorCode::kMixedSubbands,
                "ggnn: model trained for K=" + std::to_string(model.config().n_subbands) +
                    " applied to a graph with K=" + std::to_string(graph.n_subbands()));
  const ad::Neighborhood nb = ad::Neighborhood::from_graph(graph);
  ad::Tape tape(/*record_gradients=*/false);
  return tape.value(forward(tape, model, nb, initial));
}

ad::Tensor soft_assignment(const InterferenceGraph& graph, const GgnnModel& model) {
  return soft_assignment(graph, model, init_embeddings(graph, model.config()));
}

// --- loss and prediction ---------------------------------------------------

double potts_loss(const InterferenceGraph& graph, const ad::Tensor& theta) {
  if (theta.rows() != graph.n_nodes())
    throw Error(ErrorCode::kShapeMismatch, "potts_loss: assignment rows differ from node count");
  double total = 0.0;
  for (auto [a, b] : graph.edges()) {
    const double* ra = theta.row(a);
    const double* rb = theta.row(b);
    for (int k = 0; k < theta.cols(); ++k) total += ra[k] * rb[k];
  }
  return total;
}

ad::Var potts_loss(ad::Tape& tape, const ad::Neighborhood& nb, ad::Var theta) {
  return tape.scale(tape.sum(tape.hadamard(theta, tape.scatter_sum(theta, nb))), 0.5);
}

Allocation argmax_rows(const ad::Tensor& theta) {
  Allocation a;
  a.n_subbands = theta.cols();
  a.subband.resize(theta.rows());
  for (int n = 0; n < theta.rows(); ++n) {
    const double* r = theta.row(n);
    a.subband[n] = static_cast<int>(std::max_element(r, r + theta.cols()) - r);
  }
  return a;
}

Allocation predict(const InterferenceGraph& graph, const GgnnModel& model,
                   const ad::Tensor& initial) {
  return argmax_rows(soft_assignment(graph, model, initial));
}

Allocation predict(const InterferenceGraph& graph, const GgnnModel& model) {
  return argmax_rows(soft_assignment(graph, model));
}

// --- training --------------------------------------------------------------

namespace {

struct ChunkResult {
  double loss_sum = 0.0;  // sum of per-graph losses
  std::vector<ad::Tensor> grads;
};

ChunkResult run_chunk(const GgnnModel& model, std::span<const InterferenceGraph* const> graphs,
                      const ad::Tensor& initial, double grad_scale) {
  const ad::Neighborhood nb = ad::Neighborhood::disjoint_union(graphs);
  ad::Tape tape;
  std::vector<ad::Var> param_vars;
  auto watch = [&](const ad::Parameter& p) { return tape.watch(p); };
  ad::Var h = tape.constant(initial);
  for (const GgnnLayer& layer : model.layers()) {
    const LayerVars v = bind_layer_with(layer, watch);
    param_vars.insert(param_vars.end(),
                      {v.aggregation, v.reset_in, v.reset_hidden, v.update_in,
                       v.update_hidden, v.candidate_in, v.candidate_hidden, v.reset_in_bias,
                       v.reset_hidden_bias, v.update_in_bias, v.update_hidden_bias,
                       v.candidate_in_bias, v.candidate_hidden_bias});
    h = layer_forward(tape, nb, h, v);
  }
  const ad::Var w = tape.watch(model.readout_weight());
  const ad::Var b = tape.watch(model.readout_bias());
  param_vars.push_back(w);
  param_vars.push_back(b);
  const ad::Var theta = readout(tape, h, w, b);
  const ad::Var loss = potts_loss(tape, nb, theta);

  ChunkResult r;
  r.loss_sum = tape.value(loss)(0, 0);
  tape.backward(tape.scale(loss, grad_scale));
  r.grads.reserve(param_vars.size());
  for (ad::Var v : param_vars) r.grads.push_back(tape.grad(v));
  return r;
}

}  // namespace

TrainResult train(std::span<const InterferenceGraph> dataset, const GgnnConfig& cfg,
                  const TrainerConfig& trainer, std::uint64_t seed,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  trainer.validate();
  if (dataset.empty()) throw Error(ErrorCode::kDatasetEmpty, "train: dataset is empty");
  for (const InterferenceGraph& g : dataset)
    if (g.n_subbands() != cfg.n_subbands)
      throw Error(ErrorCode::kMixedSubbands,
                  "train: dataset contains a graph with K=" + std::to_string(g.n_subbands()) +
                      " but the model uses K=" + std::to_string(cfg.n_subbands));

  TrainResult result;
  result.model = GgnnModel::initialize(cfg, derive_seed(seed, "train.init"));
  GgnnModel& model = result.model;
  const auto params = model.parameters();
  ad::AdamState adam;
  adam.learning_rate = trainer.learning_rate;

  Rng shuffle_rng(derive_seed(seed, "train.shuffle"));
  Rng embed_rng(derive_seed(seed, "train.embeddings"));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double previous = 0.0;
  for (int epoch = 1; epoch <= trainer.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(trainer.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(trainer.batch_size));
      const double grad_scale = 1.0 / static_cast<double>(end - start);

      // Chunk inputs are prepared serially so the random stream is consumed
      // in the same order whatever the worker count.
      struct ChunkInput {
        std::vector<const InterferenceGraph*> graphs;
        ad::Tensor initial;
      };
      std::vector<ChunkInput> chunks;
      for (std::size_t c = start; c < end; c += kTrainChunkGraphs) {
        ChunkInput in;
        int rows = 0;
        for (std::size_t i = c; i < std::min(end, c + kTrainChunkGraphs); ++i) {
          in.graphs.push_back(&dataset[order[i]]);
          rows += dataset[order[i]].n_nodes();
        }
        in.initial = init_embeddings(rows, cfg, embed_rng());
        chunks.push_back(std::move(in));
      }

      std::vector<ChunkResult> results(chunks.size());
      auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < chunks.size(); i += stride)
          results[i] = run_chunk(model, chunks[i].graphs, chunks[i].initial, grad_scale);
      };
      const std::size_t n_threads =
          std::min<std::size_t>(static_cast<std::size_t>(trainer.workers), chunks.size());
      if (n_threads <= 1) {
        work(0, 1);
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work, t, n_threads);
      }

      for (ad::Parameter* p : params) p->zero_grad();
      for (const ChunkResult& r : results) {
        epoch_loss += r.loss_sum;
        for (std::size_t i = 0; i < params.size(); ++i)
          params[i]->grad.matrix() += r.grads[i].matrix();
      }
      ad::adam_step(params, adam);
    }

    const double mean = epoch_loss / static_cast<double>(dataset.size());
    result.history.push_back({epoch, mean});
    if (on_epoch) on_epoch(result.history.back());
    // A rise in the loss is noise, not convergence; only a flat loss stops.
    if (mean == 0.0 || (epoch > 1 && std::abs(previous - mean) < trainer.stop_tolerance)) {
      result.converged = true;
      break;
    }
    previous = mean;
  }
  return result;
}

// --- serialization ---------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'B', 'G', 'G', 'N', 'N', '\0', '\0'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::kCorruptFile, "model file: truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_model(std::ostream& out, const GgnnModel& model) {
  const GgnnConfig& cfg = model.config();
  std::string buf(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, kModelFormatVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.n_layers));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.embedding_dim));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.n_subbands));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.init_scheme));
  put<std::uint64_t>(buf, cfg.init_seed);
  const auto params = model.parameters();
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.size()));
  for (const ad::Parameter* p : params) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(p->name.size()));
    buf += p->name;
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(p->value.rows()));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(p->value.cols()));
    for (double v : p->value.values()) put<double>(buf, v);
  }
  put<std::uint64_t>(buf, fnv1a(buf));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::kIo, "model: write failed");
}

GgnnModel read_model(std::istream& in) {
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(data);
  if (r.bytes(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
    throw Error(ErrorCode::kCorruptFile, "model file: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion)
    throw Error(ErrorCode::kFormatVersionMismatch,
                "model file: version " + std::to_string(version) + ", expected " +
                    std::to_string(kModelFormatVersion));
  if (data.size() < sizeof(std::uint64_t))
    throw Error(ErrorCode::kCorruptFile, "model file: truncated");
  const std::size_t body = data.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + body, sizeof(stored));
  if (stored != fnv1a(std::string_view(data).substr(0, body)))
    throw Error(ErrorCode::kCorruptFile, "model file: checksum mismatch");

  GgnnConfig cfg;
  cfg.n_layers = static_cast<int>(r.get<std::uint32_t>());
  cfg.embedding_dim = static_cast<int>(r.get<std::uint32_t>());
  cfg.n_subbands = static_cast<int>(r.get<std::uint32_t>());
  const auto scheme = r.get<std::uint32_t>();
  if (scheme > static_cast<std::uint32_t>(InitScheme::kConstant))
    throw Error(ErrorCode::kCorruptFile, "model file: unknown init scheme");
  cfg.init_scheme = static_cast<InitScheme>(scheme);
  cfg.init_seed = r.get<std::uint64_t>();
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("model file: ") + e.what());
  }

  GgnnModel model = GgnnModel::initialize(cfg, 0);
  const auto params = model.parameters();
  if (r.get<std::uint32_t>() != params.size())
    throw Error(ErrorCode::kCorruptFile, "model file: parameter count mismatch");
  for (ad::Parameter* p : params) {
    const auto name_len = r.get<std::uint32_t>();
    const std::string name(r.bytes(name_len));
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (name != p->name || static_cast<int>(rows) != p->value.rows() ||
        static_cast<int>(cols) != p->value.cols())
      throw Error(ErrorCode::kCorruptFile, "model file: unexpected parameter block '" + name + "'");
    for (double& v : p->value.values()) v = r.get<double>();
    if (!p->value.all_finite())
      throw Error(ErrorCode::kCorruptFile, "model file: non-finite value in " + name);
  }
  if (r.remaining() != sizeof(std::uint64_t))
    throw Error(ErrorCode::kCorruptFile, "model file: trailing bytes");
  return model;
}

void save_model(const std::filesystem::path& path, const GgnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model to " + path.string());
  write_model(out, model);
}

GgnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model " + path.string());
  return read_model(in);
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "epoch,mean_loss\n";
  for (const EpochRecord& r : history) buf << r.epoch << ',' << r.mean_loss << '\n';
  out << buf.str();
}

}  // namespace subband
