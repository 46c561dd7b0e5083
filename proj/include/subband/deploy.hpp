#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace subband {

enum class ChannelProfileId { kInfDl, kInfSl, kInhOffice };

std::string_view to_string(ChannelProfileId id);
/// Accepts "InF-DL", "InF-SL", "InH-Office" (case-insensitive).
ChannelProfileId parse_channel_profile_id(std::string_view name);

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

struct ScenarioConfig {
  double area_width_m = 40.0;
  double area_height_m = 25.0;
  int n_subnetworks = 50;
  int devices_per_subnetwork = 1;
  double subnetwork_radius_m = 2.5;
  double min_ap_separation_m = 2.5;
  double min_device_ap_distance_m = 1.0;
  ChannelProfileId channel_profile = ChannelProfileId::kInfDl;
  std::uint64_t seed = 0;

  /// Subnetworks per square kilometre.
  double density_per_km2() const;
  /// Throws Error(kInvalidArgument) when an invariant is violated.
  void validate() const;
};

struct DeploymentSnapshot {
  double area_width_m = 0.0;
  double area_height_m = 0.0;
  std::vector<Point> ap_positions;
  /// device_positions[n][j]: device j of subnetwork n.
  std::vector<std::vector<Point>> device_positions;

  int n_subnetworks() const { return static_cast<int>(ap_positions.size()); }
};

/// Maximum rejection-sampling attempts per AP (and per device angle).
inline constexpr int kMaxPlacementAttempts = 10'000;

/// Random deployment: APs by rejection sampling against the minimum
/// separation, devices uniform over the annulus around their AP.
/// Throws Error(kPlacementFailure) when an AP or device cannot be placed.
DeploymentSnapshot generate_snapshot(const ScenarioConfig& cfg,
                                     std::uint64_t seed);

/// CSV layout: header `type,subnetwork,x,y`, then one row per node with
/// type `ap` or `dev`. APs come first, devices follow in (n, j) order.
void write_snapshot_csv(std::ostream& out, const DeploymentSnapshot& snap);
DeploymentSnapshot read_snapshot_csv(std::istream& in);

}  // namespace subband
