/* C interface to the sub-band allocation library.
 *
 * Every function returning sb_status leaves a message for the calling thread
 * in sb_last_error() on failure. Handles are opaque and owned by the caller;
 * release them with the matching *_free function (NULL is accepted).
 * Matrices are dense, row-major, float64.
 */
#ifndef SUBBAND_H
#define SUBBAND_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SB_API __declspec(dllexport)
#else
#define SB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sb_status {
  SB_OK = 0,
  SB_ERR_INVALID_ARGUMENT = 1,
  SB_ERR_CONFIG = 2,
  SB_ERR_IO = 3,
  SB_ERR_PLACEMENT_FAILURE = 4,
  SB_ERR_SHAPE_MISMATCH = 5,
  SB_ERR_NON_FINITE_VALUE = 6,
  SB_ERR_DISCONNECTED_GRAPH = 7,
  SB_ERR_DATASET_EMPTY = 8,
  SB_ERR_MIXED_SUBBANDS = 9,
  SB_ERR_FORMAT_VERSION_MISMATCH = 10,
  SB_ERR_CORRUPT_FILE = 11,
  SB_ERR_UNKNOWN_ALLOCATOR = 12,
  SB_ERR_INTERNAL = 13
} sb_status;

typedef enum sb_signalling {
  SB_SIGNALLING_GGNN = 0, /* N (K - 1) */
  SB_SIGNALLING_SISA = 1  /* N^2 */
} sb_signalling;

typedef struct sb_config sb_config;
typedef struct sb_network sb_network;
typedef struct sb_graph sb_graph;
typedef struct sb_model sb_model;

typedef void (*sb_log_fn)(const char* line, void* user);

SB_API const char* sb_version(void);
SB_API const char* sb_status_name(sb_status status);
/* Message of the last failure on this thread; empty string if none. */
SB_API const char* sb_last_error(void);

/* ---- configuration ---- */

/* Desk-scale defaults with the three scenario presets. */
SB_API sb_status sb_config_default(sb_config** out);
SB_API sb_status sb_config_load(const char* path, sb_config** out);
/* Dotted key, YAML value: "trainer.max_epochs", "100". */
SB_API sb_status sb_config_set(sb_config* cfg, const char* key, const char* value);
/* Resolved config as YAML. The string lives until the next call on cfg. */
SB_API sb_status sb_config_to_yaml(sb_config* cfg, const char** yaml);
SB_API void sb_config_free(sb_config* cfg);

/* ---- commands ---- */

/* Progress lines from commands; NULL disables logging. Process-wide. */
SB_API void sb_set_log_callback(sb_log_fn fn, void* user);

SB_API sb_status sb_cmd_gen_data(const sb_config* cfg);
SB_API sb_status sb_cmd_train(const sb_config* cfg);
SB_API sb_status sb_cmd_eval(const sb_config* cfg);
SB_API sb_status sb_cmd_bench(const sb_config* cfg);
SB_API sb_status sb_cmd_generalize(const sb_config* cfg);

/* ---- networks ---- */

/* One realization of a scenario from cfg (NULL name = active scenario). */
SB_API sb_status sb_network_generate(const sb_config* cfg, const char* scenario, uint64_t seed,
                                     sb_network** out);
SB_API int sb_network_size(const sb_network* net);
SB_API int sb_network_subbands(const sb_network* net);
/* n*n linear power gains; entry (n, m) is device m -> AP n. */
SB_API sb_status sb_network_power_gain(const sb_network* net, double* out, size_t len);
/* Per-sub-band noise power in mW. */
SB_API double sb_network_noise_mw(const sb_network* net);
SB_API sb_status sb_network_write_snapshot_csv(const sb_network* net, const char* path);
SB_API sb_status sb_network_write_gains_csv(const sb_network* net, const char* path);
SB_API sb_status sb_network_graph(const sb_network* net, sb_graph** out);
SB_API void sb_network_free(sb_network* net);

/* ---- interference graphs ---- */

/* edges: n_edges pairs (a, b), 0-based. */
SB_API sb_status sb_graph_from_edges(int n_nodes, int n_subbands, const int* edges,
                                     size_t n_edges, sb_graph** out);
/* Top-(K-1) strongest interferers per node from an n*n strength matrix. */
SB_API sb_status sb_graph_from_strength(const double* strength, int n, int n_subbands,
                                        sb_graph** out);
SB_API sb_status sb_graph_load(const char* path, sb_graph** out);
SB_API sb_status sb_graph_save(const sb_graph* g, const char* path);
SB_API int sb_graph_nodes(const sb_graph* g);
SB_API int sb_graph_subbands(const sb_graph* g);
SB_API size_t sb_graph_edge_count(const sb_graph* g);
/* Writes up to capacity pairs (a < b); returns the number written. */
SB_API size_t sb_graph_edges(const sb_graph* g, int* pairs, size_t capacity);
SB_API void sb_graph_free(sb_graph* g);

SB_API int64_t sb_signalling_count(int64_t n_subnetworks, int64_t n_subbands,
                                   sb_signalling scheme);

/* ---- allocation; out holds one sub-band index per node ---- */

SB_API sb_status sb_alloc_random(int n, int n_subbands, uint64_t seed, int* out);
SB_API sb_status sb_alloc_cgc(const sb_graph* g, int* out);
/* objective may be NULL. max_iters <= 0 selects the default. */
SB_API sb_status sb_alloc_sisa(const double* power_gain, int n, int n_subbands, uint64_t seed,
                               int max_iters, int* out, double* objective);
SB_API sb_status sb_alloc_ggnn(const sb_graph* g, const sb_model* model, int* out);

SB_API sb_status sb_count_conflicts(const sb_graph* g, const int* alloc, size_t* out);
/* theta: n * K soft assignment. */
SB_API sb_status sb_potts_loss(const sb_graph* g, const double* theta, double* out);
/* Per-device SINR (linear) for transmit power tx_dbm and noise noise_mw. */
SB_API sb_status sb_sinr(const double* power_gain, int n, const int* alloc, int n_subbands,
                         double noise_mw, double tx_dbm, double* out);

/* ---- models ---- */

/* Trains on the given graphs with the model and trainer blocks of cfg. */
SB_API sb_status sb_model_train(const sb_config* cfg, const sb_graph* const* graphs,
                                size_t count, uint64_t seed, sb_model** out);
SB_API sb_status sb_model_load(const char* path, sb_model** out);
SB_API sb_status sb_model_save(const sb_model* model, const char* path);
SB_API int sb_model_subbands(const sb_model* model);
/* n * K soft assignment. */
SB_API sb_status sb_model_soft_assignment(const sb_model* model, const sb_graph* g, double* out,
                                          size_t len);
SB_API void sb_model_free(sb_model* model);

#ifdef __cplusplus
}
#endif

#endif /* SUBBAND_H */
