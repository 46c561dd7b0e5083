#include "subband/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <thread>

#include "subband/error.hpp"
#include "subband/eval.hpp"
#include "subband/rng.hpp"

namespace subband {

namespace fs = std::filesystem;

namespace {

void say(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

std::string hex(const unsigned char* d, unsigned n) {
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned i = 0; i < n; ++i) os << std::setw(2) << static_cast<int>(d[i]);
  return os.str();
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
}

bool uses(const std::vector<std::string>& list, const std::string& name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

std::shared_ptr<const GgnnModel> load_for(const fs::path& path, const Scenario& scenario) {
  if (path.empty())
    throw Error(ErrorCode::kConfig, "the ggnn allocator needs a model file (--model or paths.model)");
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, "model file not found: " + path.string());
  auto model = std::make_shared<const GgnnModel>(load_model(path));
  if (model->config().n_subbands != scenario.n_subbands())
    throw Error(ErrorCode::kMixedSubbands,
                "model was trained for " + std::to_string(model->config().n_subbands) +
                    " sub-bands but scenario " + scenario.name + " uses " +
                    std::to_string(scenario.n_subbands()));
  return model;
}

std::vector<Allocator> allocators_for(const std::vector<std::string>& names,
                                      std::shared_ptr<const GgnnModel> model) {
  std::vector<Allocator> out;
  for (const auto& n : names) out.push_back(make_allocator(n, model));
  return out;
}

std::vector<fs::path> dataset_files(const fs::path& dir) {
  std::vector<fs::path> files{dir / "manifest.csv"};
  for (const auto& e : read_manifest(dir)) files.push_back(dir / e.file);
  return files;
}

}  // namespace

std::string content_hash(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error(ErrorCode::kInternal, "SHA-1 digest failed");
  return hex(digest, len);
}

std::string file_hash(const fs::path& file) { return content_hash(read_file(file)); }

void write_run_record(const fs::path& dir, const RunConfig& cfg, const std::string& command,
                      const std::vector<fs::path>& inputs) {
  ensure_dir(dir);
  const std::string yaml = to_yaml(cfg);
  {
    std::ofstream out(dir / "resolved_config.yaml", std::ios::binary);
    out << yaml;
    if (!out) throw Error(ErrorCode::kIo, "cannot write resolved_config.yaml in " + dir.string());
  }
  std::ostringstream body;
  body << content_hash(yaml) << "  resolved_config.yaml\n";
  for (const auto& f : inputs) body << file_hash(f) << "  " << f.generic_string() << "\n";
  std::ofstream out(dir / "provenance.txt", std::ios::binary);
  out << "command " << command << "\n"
      << "seed " << cfg.seed << "\n"
      << "inputs " << content_hash(body.str()) << "\n"
      << body.str();
  if (!out) throw Error(ErrorCode::kIo, "cannot write provenance.txt in " + dir.string());
}

std::vector<InterferenceGraph> generate_graphs(const Scenario& scenario, int count,
                                               std::uint64_t seed, int workers) {
  if (count < 1) throw Error(ErrorCode::kConfig, "dataset size must be >= 1");
  scenario.validate();
  std::vector<InterferenceGraph> graphs(static_cast<std::size_t>(count));
  const int w = std::clamp(workers, 1, count);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  auto work = [&](int id) {
    try {
      for (int i = id; i < count; i += w)
        graphs[static_cast<std::size_t>(i)] =
            make_instance(scenario, derive_seed(seed, "data", static_cast<std::uint64_t>(i))).graph;
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
    }
  };
  if (w == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int id = 0; id < w; ++id) pool.emplace_back(work, id);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return graphs;
}

TrainResult train_model(const RunConfig& cfg, const std::vector<InterferenceGraph>& dataset,
                        std::uint64_t seed, const LogFn& log) {
  if (dataset.empty()) throw Error(ErrorCode::kDatasetEmpty, "training dataset is empty");
  GgnnConfig model = cfg.model;
  model.n_subbands = dataset.front().n_subbands();
  TrainerConfig trainer = cfg.trainer;
  trainer.workers = cfg.resolved_workers();
  return train(dataset, model, trainer, seed, [&](const EpochRecord& r) {
    std::ostringstream os;
    os << "epoch " << r.epoch << " mean_loss " << std::setprecision(8) << r.mean_loss;
    say(log, os.str());
  });
}

void cmd_gen_data(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  const Scenario& sc = cfg.active_scenario();
  const int count = cfg.trainer.dataset_size;
  say(log, "generating " + std::to_string(count) + " graphs for scenario " + sc.name +
               " (seed " + std::to_string(cfg.seed) + ")");
  auto graphs = generate_graphs(sc, count, cfg.seed, cfg.resolved_workers());
  ensure_dir(cfg.output_dir);
  write_dataset(cfg.output_dir, graphs);
  write_run_record(cfg.output_dir, cfg, "gen-data", {});
  say(log, "wrote " + (cfg.output_dir / "manifest.csv").string());
}

void cmd_train(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  if (cfg.dataset_dir.empty())
    throw Error(ErrorCode::kConfig, "train needs a dataset directory (--dataset or paths.dataset)");
  if (!fs::is_directory(cfg.dataset_dir))
    throw Error(ErrorCode::kIo, "dataset directory not found: " + cfg.dataset_dir.string());
  const auto dataset = read_dataset(cfg.dataset_dir);
  say(log, "training on " + std::to_string(dataset.size()) + " graphs from " +
               cfg.dataset_dir.string());
  const TrainResult result = train_model(cfg, dataset, derive_seed(cfg.seed, "train"), log);
  ensure_dir(cfg.output_dir);
  save_model(cfg.output_dir / "model.bin", result.model);
  {
    std::ofstream out(cfg.output_dir / "loss_history.csv");
    write_history_csv(out, result.history);
    if (!out) throw Error(ErrorCode::kIo, "cannot write loss_history.csv");
  }
  write_run_record(cfg.output_dir, cfg, "train", dataset_files(cfg.dataset_dir));
  say(log, std::string(result.converged ? "stopped by tolerance" : "reached max_epochs") +
               " after " + std::to_string(result.history.size()) + " epochs");
}

void cmd_eval(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  const Scenario& sc = cfg.active_scenario();
  std::shared_ptr<const GgnnModel> model;
  std::vector<fs::path> inputs;
  if (uses(cfg.eval.allocators, "ggnn")) {
    model = load_for(cfg.model_path, sc);
    inputs.push_back(cfg.model_path);
  }
  EvalConfig ec = cfg.eval;
  ec.workers = cfg.resolved_workers();
  say(log, "evaluating " + std::to_string(ec.n_snapshots) + " snapshots of scenario " + sc.name);
  const EvalReport report =
      evaluate(sc, allocators_for(ec.allocators, model), ec, derive_seed(cfg.seed, "eval"));
  ensure_dir(cfg.output_dir);
  write_eval_outputs(cfg.output_dir, report, ec.cdf_grid);
  write_run_record(cfg.output_dir, cfg, "eval", inputs);
  for (const auto& r : report.results)
    say(log, r.allocator + " median sum SE " + std::to_string(median(r.sum_se)));
}

void cmd_bench(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  const Scenario& sc = cfg.active_scenario();
  std::shared_ptr<const GgnnModel> model;
  std::vector<fs::path> inputs;
  if (uses(cfg.bench_allocators, "ggnn")) {
    model = load_for(cfg.model_path, sc);
    inputs.push_back(cfg.model_path);
  }
  say(log, "runtime sweep over " + std::to_string(cfg.bench.n_list.size()) + " network sizes");
  const auto rows = runtime_sweep(sc, allocators_for(cfg.bench_allocators, model), cfg.bench,
                                  derive_seed(cfg.seed, "bench"));
  ensure_dir(cfg.output_dir);
  write_runtime_csv(cfg.output_dir / "runtime.csv", rows);

  std::ofstream meta(cfg.output_dir / "bench_metadata.txt");
  meta << "threads 1\n"
       << "timer steady_clock\n"
       << "timed_region allocation call only; graph construction and gain collection excluded\n"
       << "warmup " << cfg.bench.warmup << "\n"
       << "reps " << cfg.bench.reps << "\n"
       << "area scaled with N at the base scenario density\n";
  if (cfg.bench.n_list.size() > 1)
    for (const auto& name : cfg.bench_allocators)
      meta << "growth_ratio " << name << " " << growth_ratio(rows, name) << "\n";
  if (!meta) throw Error(ErrorCode::kIo, "cannot write bench_metadata.txt");
  meta.close();
  write_run_record(cfg.output_dir, cfg, "bench", inputs);
  say(log, "wrote " + (cfg.output_dir / "runtime.csv").string());
}

void cmd_generalize(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  ensure_dir(cfg.output_dir);
  std::vector<std::pair<std::string, std::shared_ptr<const GgnnModel>>> models;
  std::vector<Scenario> tests;
  std::vector<fs::path> inputs;
  for (const auto& name : cfg.generalization_scenarios) {
    const Scenario& sc = cfg.scenario_named(name);
    tests.push_back(sc);
    auto it = cfg.generalization_models.find(name);
    if (it != cfg.generalization_models.end()) {
      say(log, "loading model for " + name + " from " + it->second.string());
      models.emplace_back(name, load_for(it->second, sc));
      inputs.push_back(it->second);
      continue;
    }
    say(log, "training model for " + name);
    const auto dataset = generate_graphs(sc, cfg.trainer.dataset_size,
                                         derive_seed(cfg.seed, "generalize.data." + name),
                                         cfg.resolved_workers());
    const TrainResult result =
        train_model(cfg, dataset, derive_seed(cfg.seed, "generalize.train." + name), log);
    const fs::path dir = cfg.output_dir / "models";
    ensure_dir(dir);
    save_model(dir / (name + ".bin"), result.model);
    std::ofstream hist(dir / (name + "_loss_history.csv"));
    write_history_csv(hist, result.history);
    models.emplace_back(name, std::make_shared<const GgnnModel>(result.model));
  }
  for (const auto& [train_name, model] : models)
    for (const auto& t : tests)
      if (model->config().n_subbands != t.n_subbands())
        throw Error(ErrorCode::kMixedSubbands,
                    "scenarios " + train_name + " and " + t.name + " use different sub-band counts");
  say(log, "evaluating " + std::to_string(models.size()) + "x" + std::to_string(tests.size()) +
               " matrix on " + std::to_string(cfg.eval.n_snapshots) + " snapshots");
  const auto cells = generalization_matrix(models, tests, cfg.eval.n_snapshots,
                                           derive_seed(cfg.seed, "generalize.eval"),
                                           cfg.resolved_workers());
  write_generalization_csv(cfg.output_dir / "generalization.csv", cells);
  write_run_record(cfg.output_dir, cfg, "generalize", inputs);
  say(log, "wrote " + (cfg.output_dir / "generalization.csv").string());
}

}  // namespace subband
