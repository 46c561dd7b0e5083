// subband: dataset generation, training, evaluation and benchmarking.
//
// Exit status: 0 success, 2 configuration error, 3 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "subband.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;  // key, value
};

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int report(sb_status s) {
  if (s == SB_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", sb_status_name(s), sb_last_error());
  return s == SB_ERR_CONFIG || s == SB_ERR_UNKNOWN_ALLOCATOR ? kExitConfig : kExitRuntime;
}

// Adds a flag that becomes a config override when given.
void flag(CLI::App* app, Common& c, const std::string& name, const std::string& key,
          const std::string& help) {
  app->add_option_function<std::string>(
      name, [&c, key](const std::string& v) { c.flags.emplace_back(key, v); }, help);
}

void common_flags(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "YAML config file")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "Override a config value, key=value (repeatable)");
  flag(app, c, "--seed", "seed", "Master seed");
  flag(app, c, "--out", "output_dir", "Output directory");
  flag(app, c, "--workers", "workers", "Worker threads (0 = all cores)");
  flag(app, c, "--scenario", "scenario", "Scenario name");
}

int run(const Common& c, sb_status (*cmd)(const sb_config*), bool print_only = false) {
  sb_config* cfg = nullptr;
  sb_status s = c.config.empty() ? sb_config_default(&cfg) : sb_config_load(c.config.c_str(), &cfg);
  if (s != SB_OK) return report(s);

  auto apply = [&](const std::string& key, const std::string& value) {
    return sb_config_set(cfg, key.c_str(), value.c_str());
  };
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error (Config): --set expects key=value, got '%s'\n", kv.c_str());
      sb_config_free(cfg);
      return kExitConfig;
    }
    if ((s = apply(kv.substr(0, eq), kv.substr(eq + 1))) != SB_OK) break;
  }
  for (const auto& [key, value] : c.flags) {
    if (s != SB_OK) break;
    s = apply(key, value);
  }
  if (s == SB_OK) {
    if (print_only) {
      const char* yaml = nullptr;
      s = sb_config_to_yaml(cfg, &yaml);
      if (s == SB_OK) std::cout << yaml;
    } else {
      s = cmd(cfg);
    }
  }
  sb_config_free(cfg);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-band allocation for dense subnetworks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sb_version()));

  Common gen, train, eval, bench, gener, show;

  auto* g = app.add_subcommand("gen-data", "Generate an interference-graph dataset");
  common_flags(g, gen);
  flag(g, gen, "--count", "trainer.dataset_size", "Number of graphs");

  auto* t = app.add_subcommand("train", "Train a GGNN model on a dataset");
  common_flags(t, train);
  flag(t, train, "--dataset", "paths.dataset", "Dataset directory");
  flag(t, train, "--epochs", "trainer.max_epochs", "Maximum epochs");

  auto* e = app.add_subcommand("eval", "Evaluate allocators on test snapshots");
  common_flags(e, eval);
  flag(e, eval, "--model", "paths.model", "Trained model file");
  flag(e, eval, "--allocators", "eval.allocators", "Comma-separated allocator list");
  flag(e, eval, "--snapshots", "eval.n_snapshots", "Number of test snapshots");

  auto* b = app.add_subcommand("bench", "Allocation runtime versus network size");
  common_flags(b, bench);
  flag(b, bench, "--model", "paths.model", "Trained model file");
  flag(b, bench, "--allocators", "bench.allocators", "Comma-separated allocator list");
  flag(b, bench, "--n-list", "bench.n_list", "Comma-separated network sizes");
  flag(b, bench, "--reps", "bench.reps", "Timed repetitions per size");

  auto* z = app.add_subcommand("generalize", "Cross-scenario generalization matrix");
  common_flags(z, gener);
  flag(z, gener, "--snapshots", "eval.n_snapshots", "Test snapshots per cell");
  z->add_option_function<std::vector<std::string>>(
      "--model-for",
      [&](const std::vector<std::string>& items) {
        for (const auto& item : items) {
          const auto eq = item.find('=');
          if (eq == std::string::npos)
            throw CLI::ValidationError("--model-for", "expects scenario=path");
          gener.flags.emplace_back("generalization.models." + item.substr(0, eq),
                                    item.substr(eq + 1));
        }
      },
      "Pre-trained model for a scenario, scenario=path (repeatable)");

  auto* s = app.add_subcommand("show-config", "Print the resolved configuration");
  common_flags(s, show);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitConfig;
  }

  sb_set_log_callback(log_line, nullptr);
  if (g->parsed()) return run(gen, sb_cmd_gen_data);
  if (t->parsed()) return run(train, sb_cmd_train);
  if (e->parsed()) return run(eval, sb_cmd_eval);
  if (b->parsed()) return run(bench, sb_cmd_bench);
  if (z->parsed()) return run(gener, sb_cmd_generalize);
  return run(show, nullptr, true);
}
