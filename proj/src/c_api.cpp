#include "subband.h"

#include <exception>
#include <fstream>
#include <mutex>
#include <new>
#include <string>

#include "subband/baselines.hpp"
#include "subband/config.hpp"
#include "subband/error.hpp"
#include "subband/eval.hpp"
#include "subband/ggnn.hpp"
#include "subband/pipeline.hpp"
#include "subband/scenario.hpp"

using namespace subband;

struct sb_config {
  RunConfig cfg;
  std::string yaml;
};

struct sb_network {
  Scenario scenario;
  NetworkInstance instance;
};

struct sb_graph {
  InterferenceGraph graph;
};

struct sb_model {
  GgnnModel model;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
sb_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

static_assert(static_cast<int>(ErrorCode::kInternal) == SB_ERR_INTERNAL);
static_assert(static_cast<int>(ErrorCode::kConfig) == SB_ERR_CONFIG);

sb_status fail(sb_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class Fn>
sb_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return SB_OK;
  } catch (const Error& e) {
    return fail(static_cast<sb_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SB_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

LogFn logger() {
  return [](const std::string& line) {
    std::lock_guard lock(g_log_mutex);
    if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
  };
}

Eigen::MatrixXd square(const double* data, int n) {
  need(data, "matrix");
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "matrix size must be >= 1");
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = data[static_cast<std::size_t>(r) * n + c];
  return m;
}

Allocation allocation(const int* alloc, int n, int k) {
  need(alloc, "alloc");
  Allocation a{k, std::vector<int>(alloc, alloc + n)};
  a.validate();
  return a;
}

void copy_out(const Allocation& a, int* out) {
  std::copy(a.subband.begin(), a.subband.end(), out);
}

}  // namespace

extern "C" {

const char* sb_version(void) { return "1.0.0"; }

const char* sb_status_name(sb_status status) {
  if (status == SB_OK) return "Ok";
  return to_string(static_cast<ErrorCode>(status));
}

const char* sb_last_error(void) { return g_last_error.c_str(); }

// --- configuration ------------------------------------------------------------

sb_status sb_config_default(sb_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new sb_config{RunConfig::desk(), {}};
  });
}

sb_status sb_config_load(const char* path, sb_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new sb_config{load_run_config(path), {}};
  });
}

sb_status sb_config_set(sb_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    RunConfig next = cfg->cfg;
    apply_override(next, key, value);
    cfg->cfg = std::move(next);
  });
}

sb_status sb_config_to_yaml(sb_config* cfg, const char** yaml) {
  return guard([&] {
    need(cfg, "cfg");
    need(yaml, "yaml");
    cfg->yaml = to_yaml(cfg->cfg);
    *yaml = cfg->yaml.c_str();
  });
}

void sb_config_free(sb_config* cfg) { delete cfg; }

// --- commands -----------------------------------------------------------------

void sb_set_log_callback(sb_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

sb_status sb_cmd_gen_data(const sb_config* cfg) {
  return guard([&] { need(cfg, "cfg"); cmd_gen_data(cfg->cfg, logger()); });
}

sb_status sb_cmd_train(const sb_config* cfg) {
  return guard([&] { need(cfg, "cfg"); cmd_train(cfg->cfg, logger()); });
}

sb_status sb_cmd_eval(const sb_config* cfg) {
  return guard([&] { need(cfg, "cfg"); cmd_eval(cfg->cfg, logger()); });
}

sb_status sb_cmd_bench(const sb_config* cfg) {
  return guard([&] { need(cfg, "cfg"); cmd_bench(cfg->cfg, logger()); });
}

sb_status sb_cmd_generalize(const sb_config* cfg) {
  return guard([&] { need(cfg, "cfg"); cmd_generalize(cfg->cfg, logger()); });
}

// --- networks -----------------------------------------------------------------

sb_status sb_network_generate(const sb_config* cfg, const char* scenario, uint64_t seed,
                              sb_network** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    const Scenario& sc = scenario ? cfg->cfg.scenario_named(scenario) : cfg->cfg.active_scenario();
    *out = new sb_network{sc, make_instance(sc, seed)};
  });
}

int sb_network_size(const sb_network* net) { return net ? net->instance.gains.size() : 0; }

int sb_network_subbands(const sb_network* net) { return net ? net->scenario.n_subbands() : 0; }

sb_status sb_network_power_gain(const sb_network* net, double* out, size_t len) {
  return guard([&] {
    need(net, "net");
    need(out, "out");
    const auto& g = net->instance.gains.power_gain;
    const auto n = static_cast<std::size_t>(g.rows());
    if (len < n * n) throw Error(ErrorCode::kShapeMismatch, "output buffer holds fewer than n*n values");
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) out[r * n + c] = g(r, c);
  });
}

double sb_network_noise_mw(const sb_network* net) {
  return net ? net->scenario.noise.subband_noise_mw() : 0.0;
}

sb_status sb_network_write_snapshot_csv(const sb_network* net, const char* path) {
  return guard([&] {
    need(net, "net");
    need(path, "path");
    std::ofstream out(path);
    write_snapshot_csv(out, net->instance.snapshot);
    if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + path);
  });
}

sb_status sb_network_write_gains_csv(const sb_network* net, const char* path) {
  return guard([&] {
    need(net, "net");
    need(path, "path");
    std::ofstream out(path);
    write_gains_csv(out, net->instance.gains);
    if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + path);
  });
}

sb_status sb_network_graph(const sb_network* net, sb_graph** out) {
  return guard([&] {
    need(net, "net");
    need(out, "out");
    *out = new sb_graph{net->instance.graph};
  });
}

void sb_network_free(sb_network* net) { delete net; }

// --- graphs -------------------------------------------------------------------

sb_status sb_graph_from_edges(int n_nodes, int n_subbands, const int* edges, size_t n_edges,
                              sb_graph** out) {
  return guard([&] {
    need(out, "out");
    if (n_edges > 0) need(edges, "edges");
    std::vector<std::pair<int, int>> list;
    for (std::size_t i = 0; i < n_edges; ++i) list.emplace_back(edges[2 * i], edges[2 * i + 1]);
    *out = new sb_graph{InterferenceGraph::from_edges(n_nodes, n_subbands, list)};
  });
}

sb_status sb_graph_from_strength(const double* strength, int n, int n_subbands, sb_graph** out) {
  return guard([&] {
    need(out, "out");
    *out = new sb_graph{build_graph_from_strength(square(strength, n), n_subbands)};
  });
}

sb_status sb_graph_load(const char* path, sb_graph** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, std::string("cannot open ") + path);
    *out = new sb_graph{read_graph(in)};
  });
}

sb_status sb_graph_save(const sb_graph* g, const char* path) {
  return guard([&] {
    need(g, "graph");
    need(path, "path");
    std::ofstream out(path);
    write_graph(out, g->graph);
    if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + path);
  });
}

int sb_graph_nodes(const sb_graph* g) { return g ? g->graph.n_nodes() : 0; }

int sb_graph_subbands(const sb_graph* g) { return g ? g->graph.n_subbands() : 0; }

size_t sb_graph_edge_count(const sb_graph* g) { return g ? g->graph.edge_count() : 0; }

size_t sb_graph_edges(const sb_graph* g, int* pairs, size_t capacity) {
  if (!g || !pairs) return 0;
  std::size_t written = 0;
  for (const auto& [a, b] : g->graph.edges()) {
    if (written == capacity) break;
    pairs[2 * written] = a;
    pairs[2 * written + 1] = b;
    ++written;
  }
  return written;
}

void sb_graph_free(sb_graph* g) { delete g; }

int64_t sb_signalling_count(int64_t n_subnetworks, int64_t n_subbands, sb_signalling scheme) {
  return signalling_count(n_subnetworks, n_subbands,
                          scheme == SB_SIGNALLING_SISA ? SignallingScheme::kSisa
                                                       : SignallingScheme::kGgnn);
}

// --- allocation ---------------------------------------------------------------

sb_status sb_alloc_random(int n, int n_subbands, uint64_t seed, int* out) {
  return guard([&] {
    need(out, "out");
    copy_out(random_alloc(n, n_subbands, seed), out);
  });
}

sb_status sb_alloc_cgc(const sb_graph* g, int* out) {
  return guard([&] {
    need(g, "graph");
    need(out, "out");
    copy_out(cgc_greedy(g->graph), out);
  });
}

sb_status sb_alloc_sisa(const double* power_gain, int n, int n_subbands, uint64_t seed,
                        int max_iters, int* out, double* objective) {
  return guard([&] {
    need(out, "out");
    const SisaResult r = sisa(square(power_gain, n), n_subbands, seed,
                              max_iters > 0 ? max_iters : kSisaDefaultMaxIters);
    copy_out(r.allocation, out);
    if (objective) *objective = r.objective;
  });
}

sb_status sb_alloc_ggnn(const sb_graph* g, const sb_model* model, int* out) {
  return guard([&] {
    need(g, "graph");
    need(model, "model");
    need(out, "out");
    copy_out(predict(g->graph, model->model), out);
  });
}

sb_status sb_count_conflicts(const sb_graph* g, const int* alloc, size_t* out) {
  return guard([&] {
    need(g, "graph");
    need(out, "out");
    *out = count_conflicts(g->graph, allocation(alloc, g->graph.n_nodes(), g->graph.n_subbands()));
  });
}

sb_status sb_potts_loss(const sb_graph* g, const double* theta, double* out) {
  return guard([&] {
    need(g, "graph");
    need(theta, "theta");
    need(out, "out");
    const int n = g->graph.n_nodes();
    const int k = g->graph.n_subbands();
    ad::Tensor t(n, k, std::vector<double>(theta, theta + static_cast<std::size_t>(n) * k));
    *out = potts_loss(g->graph, t);
  });
}

sb_status sb_sinr(const double* power_gain, int n, const int* alloc, int n_subbands,
                  double noise_mw, double tx_dbm, double* out) {
  return guard([&] {
    need(out, "out");
    const auto v = sinr(square(power_gain, n), allocation(alloc, n, n_subbands), noise_mw, tx_dbm);
    std::copy(v.begin(), v.end(), out);
  });
}

// --- models -------------------------------------------------------------------

sb_status sb_model_train(const sb_config* cfg, const sb_graph* const* graphs, size_t count,
                         uint64_t seed, sb_model** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    if (count > 0) need(graphs, "graphs");
    std::vector<InterferenceGraph> dataset;
    for (std::size_t i = 0; i < count; ++i) {
      need(graphs[i], "graph");
      dataset.push_back(graphs[i]->graph);
    }
    *out = new sb_model{train_model(cfg->cfg, dataset, seed, logger()).model};
  });
}

sb_status sb_model_load(const char* path, sb_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new sb_model{load_model(path)};
  });
}

sb_status sb_model_save(const sb_model* model, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    save_model(path, model->model);
  });
}

int sb_model_subbands(const sb_model* model) {
  return model ? model->model.config().n_subbands : 0;
}

sb_status sb_model_soft_assignment(const sb_model* model, const sb_graph* g, double* out,
                                   size_t len) {
  return guard([&] {
    need(model, "model");
    need(g, "graph");
    need(out, "out");
    const ad::Tensor t = soft_assignment(g->graph, model->model);
    if (len < t.size()) throw Error(ErrorCode::kShapeMismatch, "output buffer holds fewer than n*K values");
    std::copy(t.values().begin(), t.values().end(), out);
  });
}

void sb_model_free(sb_model* model) { delete model; }

}  // extern "C"
