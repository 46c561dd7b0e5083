#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "subband/config.hpp"
#include "subband/ggnn.hpp"
#include "subband/graph.hpp"

namespace subband {

using LogFn = std::function<void(const std::string&)>;

/// Git blob id: SHA-1 over "blob <size>\0" followed by the content, in hex.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& file);

/// Writes resolved_config.yaml and provenance.txt into `dir`. Provenance
/// lists the hash of the resolved config and of every input file, plus an
/// aggregate hash over all of them.
void write_run_record(const std::filesystem::path& dir, const RunConfig& cfg,
                      const std::string& command,
                      const std::vector<std::filesystem::path>& inputs);

/// Interference graphs for `count` independent snapshots; graph i uses the
/// sub-stream ("data", i) of `seed`. Result does not depend on `workers`.
std::vector<InterferenceGraph> generate_graphs(const Scenario& scenario, int count,
                                               std::uint64_t seed, int workers);

/// Trains on `dataset` with the trainer and model blocks of `cfg`.
TrainResult train_model(const RunConfig& cfg, const std::vector<InterferenceGraph>& dataset,
                        std::uint64_t seed, const LogFn& log = {});

// Commands. Output goes to cfg.output_dir; inputs come from cfg.dataset_dir
// and cfg.model_path.
void cmd_gen_data(const RunConfig& cfg, const LogFn& log = {});
void cmd_train(const RunConfig& cfg, const LogFn& log = {});
void cmd_eval(const RunConfig& cfg, const LogFn& log = {});
void cmd_bench(const RunConfig& cfg, const LogFn& log = {});
void cmd_generalize(const RunConfig& cfg, const LogFn& log = {});

}  // namespace subband
