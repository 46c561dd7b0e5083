#include "subband/deploy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "subband/error.hpp"
#include "subband/rng.hpp"

namespace subband {

std::string_view to_string(ChannelProfileId id) {
  switch (id) {
    case ChannelProfileId::kInfDl: return "InF-DL";
    case ChannelProfileId::kInfSl: return "InF-SL";
    case ChannelProfileId::kInhOffice: return "InH-Office";
  }
  return "unknown";
}

ChannelProfileId parse_channel_profile_id(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "inf-dl") return ChannelProfileId::kInfDl;
  if (lower == "inf-sl") return ChannelProfileId::kInfSl;
  if (lower == "inh-office") return ChannelProfileId::kInhOffice;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown channel profile '" + std::string(name) +
                  "' (expected InF-DL, InF-SL or InH-Office)");
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double ScenarioConfig::density_per_km2() const {
  return n_subnetworks / (area_width_m * area_height_m) * 1.0e6;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidArgument, "scenario: " + msg);
  };
  if (!(area_width_m > 0.0) || !(area_height_m > 0.0))
    fail("area dimensions must be positive");
  if (n_subnetworks < 1) fail("n_subnetworks must be >= 1");
  if (devices_per_subnetwork < 1) fail("devices_per_subnetwork must be >= 1");
  if (!(subnetwork_radius_m > 0.0)) fail("subnetwork_radius_m must be positive");
  if (min_ap_separation_m < 0.0) fail("min_ap_separation_m must be >= 0");
  if (min_device_ap_distance_m < 0.0)
    fail("min_device_ap_distance_m must be >= 0");
  if (!(min_device_ap_distance_m < subnetwork_radius_m))
    fail("min_device_ap_distance_m must be below subnetwork_radius_m");
}

namespace {

bool inside(Point p, double w, double h) {
  return p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h;
}

}  // namespace

DeploymentSnapshot generate_snapshot(const ScenarioConfig& cfg,
                                     std::uint64_t seed) {
  cfg.validate();
  DeploymentSnapshot snap;
  snap.area_width_m = cfg.area_width_m;
  snap.area_height_m = cfg.area_height_m;

  Rng ap_rng(derive_seed(seed, "deploy.ap"));
  std::uniform_real_distribution<double> ux(0.0, cfg.area_width_m);
  std::uniform_real_distribution<double> uy(0.0, cfg.area_height_m);

  snap.ap_positions.reserve(cfg.n_subnetworks);
  for (int n = 0; n < cfg.n_subnetworks; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      Point p{ux(ap_rng), uy(ap_rng)};
      bool ok = std::all_of(
          snap.ap_positions.begin(), snap.ap_positions.end(),
          [&](Point q) { return distance(p, q) >= cfg.min_ap_separation_m; });
      if (ok) {
        snap.ap_positions.push_back(p);
        placed = true;
        break;
      }
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "could not place AP " << n << " of " << cfg.n_subnetworks
          << " with separation " << cfg.min_ap_separation_m << " m in "
          << cfg.area_width_m << "x" << cfg.area_height_m << " m after "
          << kMaxPlacementAttempts << " attempts";
      throw Error(ErrorCode::kPlacementFailure, msg.str());
    }
  }

  // Radius density proportional to r on [r_min, r_max]; the angle is
  // redrawn until the device lands inside the area.
  const double r_min = cfg.min_device_ap_distance_m;
  const double r_max = cfg.subnetwork_radius_m;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  snap.device_positions.resize(cfg.n_subnetworks);
  for (int n = 0; n < cfg.n_subnetworks; ++n) {
    Rng dev_rng(derive_seed(seed, "deploy.device", static_cast<std::uint64_t>(n)));
    const Point ap = snap.ap_positions[n];
    for (int j = 0; j < cfg.devices_per_subnetwork; ++j) {
      const double r =
          std::sqrt(unit(dev_rng) * (r_max * r_max - r_min * r_min) + r_min * r_min);
      bool placed = false;
      for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        const double a = angle(dev_rng);
        Point p{ap.x + r * std::cos(a), ap.y + r * std::sin(a)};
        if (inside(p, cfg.area_width_m, cfg.area_height_m)) {
          snap.device_positions[n].push_back(p);
          placed = true;
          break;
        }
      }
      if (!placed) {
        throw Error(ErrorCode::kPlacementFailure,
                    "could not place device " + std::to_string(j) +
                        " of subnetwork " + std::to_string(n) +
                        " inside the area");
      }
    }
  }
  return snap;
}

void write_snapshot_csv(std::ostream& out, const DeploymentSnapshot& snap) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "type,subnetwork,x,y\n";
  for (std::size_t n = 0; n < snap.ap_positions.size(); ++n)
    buf << "ap," << n << ',' << snap.ap_positions[n].x << ','
        << snap.ap_positions[n].y << '\n';
  for (std::size_t n = 0; n < snap.device_positions.size(); ++n)
    for (const Point& p : snap.device_positions[n])
      buf << "dev," << n << ',' << p.x << ',' << p.y << '\n';
  out << buf.str();
}

DeploymentSnapshot read_snapshot_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "type,subnetwork,x,y")
    throw Error(ErrorCode::kCorruptFile, "snapshot csv: missing header");
  DeploymentSnapshot snap;
  double max_x = 0.0, max_y = 0.0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string type, id, x, y;
    if (!std::getline(row, type, ',') || !std::getline(row, id, ',') ||
        !std::getline(row, x, ',') || !std::getline(row, y))
      throw Error(ErrorCode::kCorruptFile,
                  "snapshot csv: malformed line " + std::to_string(lineno));
    const auto n = static_cast<std::size_t>(std::stoul(id));
    Point p{std::stod(x), std::stod(y)};
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
    if (type == "ap") {
      if (n != snap.ap_positions.size())
        throw Error(ErrorCode::kCorruptFile,
                    "snapshot csv: APs out of order at line " + std::to_string(lineno));
      snap.ap_positions.push_back(p);
    } else if (type == "dev") {
      if (n >= snap.ap_positions.size())
        throw Error(ErrorCode::kCorruptFile,
                    "snapshot csv: device without AP at line " + std::to_string(lineno));
      snap.device_positions.resize(snap.ap_positions.size());
      snap.device_positions[n].push_back(p);
    } else {
      throw Error(ErrorCode::kCorruptFile,
                  "snapshot csv: unknown type '" + type + "' at line " +
                      std::to_string(lineno));
    }
  }
  snap.device_positions.resize(snap.ap_positions.size());
  // The area is not stored; the bounding box of the nodes stands in for it.
  snap.area_width_m = max_x;
  snap.area_height_m = max_y;
  return snap;
}

}  // namespace subband
