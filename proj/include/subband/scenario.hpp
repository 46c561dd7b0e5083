#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subband/channel.hpp"
#include "subband/deploy.hpp"
#include "subband/graph.hpp"

namespace subband {

/// Everything needed to draw one network realization.
struct Scenario {
  std::string name = "default";
  ScenarioConfig deploy;
  ChannelProfile channel;
  ChannelOptions channel_options;
  NoiseModel noise;
  double tx_power_dbm = 0.0;
  InterferenceMetric graph_metric = InterferenceMetric::kLargeScale;

  int n_subbands() const { return noise.n_subbands; }
  void validate() const;

  /// "default": 50 subnetworks, 40x25 m, InF-DL.
  /// "scenario1": 80 subnetworks, 50x30 m, InF-SL.
  /// "scenario2": 20 subnetworks, 25x25 m, InH-Office.
  static Scenario preset(const std::string& name);
  static const std::vector<std::string>& preset_names();
};

struct NetworkInstance {
  DeploymentSnapshot snapshot;
  LinkGains gains;
  InterferenceGraph graph;
};

/// Deployment, channel and graph for one seed; the three stages use
/// separate sub-streams of it.
NetworkInstance make_instance(const Scenario& scenario, std::uint64_t seed);

}  // namespace subband
