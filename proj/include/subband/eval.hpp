#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "subband/allocation.hpp"
#include "subband/channel.hpp"
#include "subband/ggnn.hpp"
#include "subband/graph.hpp"
#include "subband/scenario.hpp"

namespace subband {

/// Uplink SINR per subnetwork: desired power over co-channel interference
/// plus per-sub-band noise. power_gain(n, m) is device m -> AP n.
std::vector<double> sinr(const Eigen::MatrixXd& power_gain, const Allocation& alloc,
                         const NoiseModel& noise, double tx_power_dbm = 0.0);
std::vector<double> sinr(const Eigen::MatrixXd& power_gain, const Allocation& alloc,
                         double noise_mw, double tx_power_dbm = 0.0);
std::vector<double> sinr(const LinkGains& gains, const Allocation& alloc,
                         const NoiseModel& noise, double tx_power_dbm = 0.0);

/// log2(1 + sinr), elementwise.
std::vector<double> spectral_efficiency(const std::vector<double>& sinr_linear);

struct SnapshotResult {
  std::string allocator;
  std::vector<double> sinr;
  std::vector<double> se;
  double sum_se = 0.0;
  std::size_t conflicts = 0;
  double runtime_ms = 0.0;
};

struct AllocationInput {
  const LinkGains& gains;
  const InterferenceGraph& graph;
  std::uint64_t seed;
};

struct Allocator {
  std::string name;
  std::function<Allocation(const AllocationInput&)> run;
};

/// Known names: ra, cgc, sisa, ggnn. ggnn needs a model; throws
/// kUnknownAllocator (listing valid names) for anything else.
Allocator make_allocator(const std::string& name,
                         std::shared_ptr<const GgnnModel> model = nullptr);
const std::vector<std::string>& allocator_names();

/// Runs one allocator on one instance; runtime covers only the allocation call.
SnapshotResult evaluate_snapshot(const Allocator& allocator, const NetworkInstance& instance,
                                 const Scenario& scenario, std::uint64_t alloc_seed);

struct EvalConfig {
  int n_snapshots = 1000;
  std::vector<std::string> allocators{"ra", "cgc", "sisa", "ggnn"};
  /// Cumulative probabilities at which CDFs are reported; empty = every sample.
  std::vector<double> cdf_grid;
  int workers = 1;

  void validate() const;
};

struct AllocatorResults {
  std::string allocator;
  std::vector<double> sum_se;     // one per snapshot
  std::vector<double> device_se;  // every device of every snapshot
  std::vector<double> conflicts;  // one per snapshot
  std::vector<double> runtime_ms;
};

struct EvalReport {
  std::string scenario;
  int n_snapshots = 0;
  std::vector<AllocatorResults> results;  // in EvalConfig::allocators order

  const AllocatorResults& at(const std::string& allocator) const;
};

/// Every allocator sees the same instances: snapshot s uses
/// derive_seed(seed, "eval.snapshot", s).
EvalReport evaluate(const Scenario& scenario, const std::vector<Allocator>& allocators,
                    const EvalConfig& cfg, std::uint64_t seed);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);
double stddev(const std::vector<double>& values);

struct CdfPoint {
  double value;
  double probability;
};

/// Empirical CDF: sorted samples with probability i/n (i = 1..n), or the
/// sample quantiles at the requested probabilities.
std::vector<CdfPoint> empirical_cdf(std::vector<double> values,
                                    const std::vector<double>& grid = {});

/// cdf_sum_se_<a>.csv, cdf_device_se_<a>.csv and summary.csv.
void write_eval_outputs(const std::filesystem::path& dir, const EvalReport& report,
                        const std::vector<double>& cdf_grid = {});

struct RuntimeRow {
  int n_subnetworks = 0;
  std::string allocator;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

struct RuntimeSweepConfig {
  std::vector<int> n_list = default_n_list();
  int reps = 100;
  int warmup = 3;

  static std::vector<int> default_n_list();  // 50, 60, ..., 200
  void validate() const;
};

/// Wall-clock allocation time per N. The area grows with N so that density
/// matches the base scenario. Single-threaded by construction.
std::vector<RuntimeRow> runtime_sweep(const Scenario& base, const std::vector<Allocator>& allocators,
                                      const RuntimeSweepConfig& cfg, std::uint64_t seed);

/// runtime(max N) / runtime(min N) for one allocator.
double growth_ratio(const std::vector<RuntimeRow>& rows, const std::string& allocator);

void write_runtime_csv(const std::filesystem::path& file, const std::vector<RuntimeRow>& rows);

struct GeneralizationCell {
  std::string train;
  std::string test;
  double mean_se = 0.0;
};

/// Mean per-device SE of each trained model on each test scenario.
std::vector<GeneralizationCell> generalization_matrix(
    const std::vector<std::pair<std::string, std::shared_ptr<const GgnnModel>>>& models,
    const std::vector<Scenario>& test_scenarios, int n_snapshots, std::uint64_t seed,
    int workers = 1);

void write_generalization_csv(const std::filesystem::path& file,
                              const std::vector<GeneralizationCell>& cells);

}  // namespace subband
