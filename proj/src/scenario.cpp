#include "subband/scenario.hpp"

#include "subband/error.hpp"
#include "subband/rng.hpp"

namespace subband {

void Scenario::validate() const {
  deploy.validate();
  channel.validate();
  if (noise.n_subbands < 2)
    throw Error(ErrorCode::kInvalidArgument, "scenario " + name + ": need at least 2 sub-bands");
  if (!(noise.total_bandwidth_hz > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "scenario " + name + ": bandwidth must be positive");
  if (deploy.channel_profile != channel.id)
    throw Error(ErrorCode::kInvalidArgument,
                "scenario " + name + ": deployment and channel profile disagree");
}

Scenario Scenario::preset(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "default") {
    // defaults already match
  } else if (name == "scenario1") {
    s.deploy.n_subnetworks = 80;
    s.deploy.area_width_m = 50.0;
    s.deploy.area_height_m = 30.0;
    s.deploy.channel_profile = ChannelProfileId::kInfSl;
  } else if (name == "scenario2") {
    s.deploy.n_subnetworks = 20;
    s.deploy.area_width_m = 25.0;
    s.deploy.area_height_m = 25.0;
    s.deploy.channel_profile = ChannelProfileId::kInhOffice;
  } else {
    throw Error(ErrorCode::kConfig,
                "unknown scenario preset '" + name + "' (expected default, scenario1, scenario2)");
  }
  s.channel = ChannelProfile::preset(s.deploy.channel_profile);
  return s;
}

const std::vector<std::string>& Scenario::preset_names() {
  static const std::vector<std::string> names{"default", "scenario1", "scenario2"};
  return names;
}

NetworkInstance make_instance(const Scenario& scenario, std::uint64_t seed) {
  NetworkInstance inst;
  inst.snapshot = generate_snapshot(scenario.deploy, derive_seed(seed, "deploy"));
  inst.gains = realize_gains(inst.snapshot, scenario.channel, derive_seed(seed, "channel"),
                             scenario.channel_options);
  inst.graph = build_graph(inst.gains, scenario.n_subbands(), scenario.graph_metric);
  inst.graph.seed = seed;
  inst.graph.profile = std::string(to_string(scenario.channel.id));
  return inst;
}

}  // namespace subband
