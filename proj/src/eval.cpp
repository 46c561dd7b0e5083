#include "subband/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "subband/baselines.hpp"
#include "subband/error.hpp"
#include "subband/rng.hpp"

namespace subband {

std::vector<double> sinr(const Eigen::MatrixXd& power_gain, const Allocation& alloc,
                         const NoiseModel& noise, double tx_power_dbm) {
  return sinr(power_gain, alloc, noise.subband_noise_mw(), tx_power_dbm);
}

std::vector<double> sinr(const Eigen::MatrixXd& power_gain, const Allocation& alloc,
                         double noise_mw, double tx_power_dbm) {
  const int n = static_cast<int>(power_gain.rows());
  if (power_gain.cols() != n || alloc.size() != n)
    throw Error(ErrorCode::kShapeMismatch, "sinr: gain matrix and allocation sizes differ");
  const double pt = dbm_to_mw(tx_power_dbm);
  const double sigma2 = noise_mw;
  std::vector<double> out(n);
  for (int rx = 0; rx < n; ++rx) {
    double interference = 0.0;
    for (int tx = 0; tx < n; ++tx)
      if (tx != rx && alloc.subband[tx] == alloc.subband[rx])
        interference += pt * power_gain(rx, tx);
    out[rx] = pt * power_gain(rx, rx) / (interference + sigma2);
  }
  return out;
}

std::vector<double> sinr(const LinkGains& gains, const Allocation& alloc,
                         const NoiseModel& noise, double tx_power_dbm) {
  return sinr(gains.power_gain, alloc, noise, tx_power_dbm);
}

std::vector<double> spectral_efficiency(const std::vector<double>& sinr_linear) {
  std::vector<double> se(sinr_linear.size());
  std::transform(sinr_linear.begin(), sinr_linear.end(), se.begin(),
                 [](double g) { return std::log2(1.0 + g); });
  return se;
}

// --- allocators ------------------------------------------------------------

const std::vector<std::string>& allocator_names() {
  static const std::vector<std::string> names{"ra", "cgc", "sisa", "ggnn"};
  return names;
}

Allocator make_allocator(const std::string& name, std::shared_ptr<const GgnnModel> model) {
  if (name == "ra")
    return {name, [](const AllocationInput& in) {
              return random_alloc(in.graph.n_nodes(), in.graph.n_subbands(), in.seed);
            }};
  if (name == "cgc")
    return {name, [](const AllocationInput& in) { return cgc_greedy(in.graph); }};
  if (name == "sisa")
    return {name, [](const AllocationInput& in) {
              return sisa(in.gains, in.graph.n_subbands(), in.seed).allocation;
            }};
  if (name == "ggnn") {
    if (!model) throw Error(ErrorCode::kInvalidArgument, "allocator ggnn requires a trained model");
    return {name, [model](const AllocationInput& in) { return predict(in.graph, *model); }};
  }
  std::string valid;
  for (const auto& n : allocator_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::kUnknownAllocator,
              "unknown allocator '" + name + "'; valid names: " + valid);
}

SnapshotResult evaluate_snapshot(const Allocator& allocator, const NetworkInstance& instance,
                                 const Scenario& scenario, std::uint64_t alloc_seed) {
  const AllocationInput input{instance.gains, instance.graph, alloc_seed};
  const auto t0 = std::chrono::steady_clock::now();
  const Allocation alloc = allocator.run(input);
  const auto t1 = std::chrono::steady_clock::now();
  alloc.validate();

  SnapshotResult r;
  r.allocator = allocator.name;
  r.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  r.sinr = sinr(instance.gains, alloc, scenario.noise, scenario.tx_power_dbm);
  r.se = spectral_efficiency(r.sinr);
  r.sum_se = std::accumulate(r.se.begin(), r.se.end(), 0.0);
  r.conflicts = count_conflicts(instance.graph, alloc);
  return r;
}

// --- evaluation ------------------------------------------------------------

void EvalConfig::validate() const {
  if (n_snapshots < 1) throw Error(ErrorCode::kConfig, "eval: n_snapshots must be >= 1");
  if (allocators.empty()) throw Error(ErrorCode::kConfig, "eval: allocator list is empty");
  if (workers < 1) throw Error(ErrorCode::kConfig, "eval: workers must be >= 1");
  for (double p : cdf_grid)
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorCode::kConfig, "eval: cdf grid values must lie in [0, 1]");
}

const AllocatorResults& EvalReport::at(const std::string& allocator) const {
  for (const auto& r : results)
    if (r.allocator == allocator) return r;
  throw Error(ErrorCode::kUnknownAllocator, "report has no allocator '" + allocator + "'");
}

namespace {

template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  const int n_threads = std::max(1, std::min(workers, count));
  if (n_threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += n_threads) fn(i);
    });
}

}  // namespace

EvalReport evaluate(const Scenario& scenario, const std::vector<Allocator>& allocators,
                    const EvalConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  scenario.validate();
  std::vector<std::vector<SnapshotResult>> per_snapshot(cfg.n_snapshots);
  parallel_for(cfg.n_snapshots, cfg.workers, [&](int s) {
    const std::uint64_t snap_seed = derive_seed(seed, "eval.snapshot", static_cast<std::uint64_t>(s));
    const NetworkInstance inst = make_instance(scenario, snap_seed);
    const std::uint64_t alloc_seed = derive_seed(snap_seed, "alloc");
    for (const Allocator& a : allocators)
      per_snapshot[s].push_back(evaluate_snapshot(a, inst, scenario, alloc_seed));
  });

  EvalReport report;
  report.scenario = scenario.name;
  report.n_snapshots = cfg.n_snapshots;
  for (std::size_t i = 0; i < allocators.size(); ++i) {
    AllocatorResults r;
    r.allocator = allocators[i].name;
    for (const auto& snap : per_snapshot) {
      const SnapshotResult& s = snap[i];
      r.sum_se.push_back(s.sum_se);
      r.device_se.insert(r.device_se.end(), s.se.begin(), s.se.end());
      r.conflicts.push_back(static_cast<double>(s.conflicts));
      r.runtime_ms.push_back(s.runtime_ms);
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "mean of empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values, const std::vector<double>& grid) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> out;
  const auto n = values.size();
  if (n == 0) return out;
  if (grid.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({values[i], static_cast<double>(i + 1) / static_cast<double>(n)});
    return out;
  }
  for (double p : grid) {
    // smallest sample whose empirical CDF reaches p
    const auto idx = static_cast<std::size_t>(
        std::max(0.0, std::ceil(p * static_cast<double>(n)) - 1.0));
    out.push_back({values[std::min(idx, n - 1)], p});
  }
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out.precision(17);
  return out;
}

void write_cdf(const std::filesystem::path& file, const std::vector<double>& values,
               const std::vector<double>& grid) {
  auto out = open_out(file);
  out << "value,cumulative_probability\n";
  for (const CdfPoint& p : empirical_cdf(values, grid)) out << p.value << ',' << p.probability << '\n';
}

}  // namespace

void write_eval_outputs(const std::filesystem::path& dir, const EvalReport& report,
                        const std::vector<double>& cdf_grid) {
  std::filesystem::create_directories(dir);
  auto summary = open_out(dir / "summary.csv");
  summary << "allocator,median_sum_se,mean_sum_se,median_device_se,mean_device_se,"
             "mean_conflicts,mean_runtime_ms\n";
  for (const AllocatorResults& r : report.results) {
    write_cdf(dir / ("cdf_sum_se_" + r.allocator + ".csv"), r.sum_se, cdf_grid);
    write_cdf(dir / ("cdf_device_se_" + r.allocator + ".csv"), r.device_se, cdf_grid);
    summary << r.allocator << ',' << median(r.sum_se) << ',' << mean(r.sum_se) << ','
            << median(r.device_se) << ',' << mean(r.device_se) << ',' << mean(r.conflicts)
            << ',' << mean(r.runtime_ms) << '\n';
  }
}

// --- runtime ---------------------------------------------------------------

std::vector<int> RuntimeSweepConfig::default_n_list() {
  std::vector<int> n;
  for (int v = 50; v <= 200; v += 10) n.push_back(v);
  return n;
}

void RuntimeSweepConfig::validate() const {
  if (n_list.empty()) throw Error(ErrorCode::kConfig, "bench: n_list is empty");
  for (int n : n_list)
    if (n < 1) throw Error(ErrorCode::kConfig, "bench: every N must be >= 1");
  if (reps < 1 || warmup < 0) throw Error(ErrorCode::kConfig, "bench: reps >= 1, warmup >= 0");
}

std::vector<RuntimeRow> runtime_sweep(const Scenario& base, const std::vector<Allocator>& allocators,
                                      const RuntimeSweepConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double density = base.deploy.density_per_km2();
  const double aspect = base.deploy.area_width_m / base.deploy.area_height_m;
  std::vector<RuntimeRow> rows;
  for (int n : cfg.n_list) {
    Scenario sc = base;
    const double area_m2 = n / density * 1.0e6;
    sc.deploy.n_subnetworks = n;
    sc.deploy.area_width_m = std::sqrt(area_m2 * aspect);
    sc.deploy.area_height_m = area_m2 / sc.deploy.area_width_m;

    std::vector<NetworkInstance> instances;
    for (int r = 0; r < cfg.warmup + cfg.reps; ++r)
      instances.push_back(make_instance(
          sc, derive_seed(seed, "bench", static_cast<std::uint64_t>(n) * 1'000'003ULL + r)));

    for (const Allocator& a : allocators) {
      std::vector<double> times;
      for (int r = 0; r < cfg.warmup + cfg.reps; ++r) {
        const AllocationInput in{instances[r].gains, instances[r].graph,
                                 derive_seed(seed, "bench.alloc", static_cast<std::uint64_t>(r))};
        const auto t0 = std::chrono::steady_clock::now();
        const Allocation alloc = a.run(in);
        const auto t1 = std::chrono::steady_clock::now();
        if (alloc.size() != n) throw Error(ErrorCode::kInternal, "bench: allocator returned wrong size");
        if (r >= cfg.warmup) times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      rows.push_back({n, a.name, mean(times), stddev(times)});
    }
  }
  return rows;
}

double growth_ratio(const std::vector<RuntimeRow>& rows, const std::string& allocator) {
  const RuntimeRow* lo = nullptr;
  const RuntimeRow* hi = nullptr;
  for (const RuntimeRow& r : rows) {
    if (r.allocator != allocator) continue;
    if (!lo || r.n_subnetworks < lo->n_subnetworks) lo = &r;
    if (!hi || r.n_subnetworks > hi->n_subnetworks) hi = &r;
  }
  if (!lo) throw Error(ErrorCode::kUnknownAllocator, "no runtime rows for '" + allocator + "'");
  return hi->mean_ms / lo->mean_ms;
}

void write_runtime_csv(const std::filesystem::path& file, const std::vector<RuntimeRow>& rows) {
  auto out = open_out(file);
  out << "N,allocator,mean_ms,std_ms\n";
  for (const RuntimeRow& r : rows)
    out << r.n_subnetworks << ',' << r.allocator << ',' << r.mean_ms << ',' << r.std_ms << '\n';
}

// --- generalization --------------------------------------------------------

std::vector<GeneralizationCell> generalization_matrix(
    const std::vector<std::pair<std::string, std::shared_ptr<const GgnnModel>>>& models,
    const std::vector<Scenario>& test_scenarios, int n_snapshots, std::uint64_t seed,
    int workers) {
  std::vector<GeneralizationCell> cells;
  EvalConfig cfg;
  cfg.n_snapshots = n_snapshots;
  cfg.workers = workers;
  cfg.allocators = {"ggnn"};
  for (const auto& [train_name, model] : models) {
    const std::vector<Allocator> allocs{make_allocator("ggnn", model)};
    for (const Scenario& test : test_scenarios) {
      // Same test seed for every trained model: paired comparison per column.
      const EvalReport report = evaluate(test, allocs, cfg, derive_seed(seed, test.name));
      cells.push_back({train_name, test.name, mean(report.results.front().device_se)});
    }
  }
  return cells;
}

void write_generalization_csv(const std::filesystem::path& file,
                              const std::vector<GeneralizationCell>& cells) {
  auto out = open_out(file);
  out << "train,test,mean_se\n";
  for (const auto& c : cells) out << c.train << ',' << c.test << ',' << c.mean_se << '\n';
}

}  // namespace subband
