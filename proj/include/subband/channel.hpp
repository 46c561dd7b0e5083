#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "subband/deploy.hpp"
#include "subband/rng.hpp"

namespace subband {

enum class LosModel {
  kInfClutter,       // exp(-d / k), k = -clutter_size / ln(1 - clutter_density)
  kInhMixedOffice,   // piecewise indoor-office form
};

/// Large-scale channel constants for one propagation environment.
///
/// Path loss follows the alpha-beta-gamma form
///   PL = beta + 10 alpha log10(d) + 10 gamma log10(f_GHz)
/// with separate constants for LOS and NLOS links.
struct ChannelProfile {
  ChannelProfileId id = ChannelProfileId::kInfDl;
  LosModel los_model = LosModel::kInfClutter;
  double ple_los = 2.15;
  double ple_nlos = 3.57;
  double sf_std_los_db = 4.0;
  double sf_std_nlos_db = 7.2;
  double clutter_density = 0.6;
  double clutter_size_m = 2.0;
  double corr_distance_m = 10.0;
  double carrier_freq_ghz = 28.0;
  double beta_los_db = 31.84;
  double beta_nlos_db = 18.6;
  double freq_coef_los = 19.0;
  double freq_coef_nlos = 20.0;
  /// NLOS loss never drops below the LOS loss at the same distance.
  bool nlos_floor_at_los = true;

  static ChannelProfile preset(ChannelProfileId id);
  void validate() const;
};

struct NoiseModel {
  double total_bandwidth_hz = 20.0e6;
  int n_subbands = 5;
  double noise_figure_db = 10.0;
  double thermal_density_dbm_hz = -174.0;

  double subband_bandwidth_hz() const { return total_bandwidth_hz / n_subbands; }
  /// Per-sub-band noise power.
  double subband_noise_dbm() const;
  double subband_noise_mw() const;
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// LOS probability at 2-D distance d2d (m); non-increasing in d2d.
double los_probability(double d2d, const ChannelProfile& profile);

/// Minimum distance used in the path-loss log term.
inline constexpr double kPathlossMinDistanceM = 1.0;

double pathloss_db(double d3d, bool los, const ChannelProfile& profile);

/// Zero-mean, unit-variance Gaussian field on a regular grid with isotropic
/// correlation exp(-distance / corr_distance).
class ShadowField {
 public:
  ShadowField(double resolution_m, int nx, int ny, std::vector<double> values);

  /// Nearest-grid-point lookup; points outside the grid are clamped.
  double at(Point p) const;
  double at_index(int ix, int iy) const { return values_[static_cast<std::size_t>(iy) * nx_ + ix]; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double resolution_m() const { return resolution_m_; }

 private:
  double resolution_m_;
  int nx_;
  int ny_;
  std::vector<double> values_;
};

/// Samples ShadowFields by circulant embedding of the covariance on a
/// padded periodic grid. The eigenvalue spectrum is computed once per
/// generator; negative eigenvalues from the embedding are clipped to zero.
class ShadowFieldGenerator {
 public:
  static constexpr double kDefaultResolutionM = 0.5;

  ShadowFieldGenerator(double width_m, double height_m, double corr_distance_m,
                       double resolution_m = kDefaultResolutionM);

  ShadowField sample(Rng& rng) const;

  int nx() const { return nx_; }
  int ny() const { return ny_; }

 private:
  double resolution_m_;
  double corr_distance_m_;
  int nx_, ny_;
  int px_, py_;  // padded (periodic) grid
  std::vector<double> sqrt_eigen_;  // already scaled by 1/sqrt(px*py)
};

struct ChannelOptions {
  bool fading = true;
};

/// Per-link gains. Entry (n, m) describes the link from the device of
/// subnetwork m to the AP of subnetwork n; the diagonal holds desired links.
struct LinkGains {
  Eigen::MatrixXd pathloss_db;     // rho = -PL
  Eigen::MatrixXd shadow_db;       // s
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> los;
  Eigen::MatrixXd large_scale_db;  // rho + s
  Eigen::MatrixXcd fading;         // h
  Eigen::MatrixXd power_gain;      // |h|^2 10^((rho + s) / 10)

  int size() const { return static_cast<int>(power_gain.rows()); }
  /// 10^(large_scale_db / 10), fading excluded.
  Eigen::MatrixXd large_scale_linear() const;
};

/// Combines a large-scale gain (dB) and fading sample into a linear power gain.
double compose_power_gain(double large_scale_db, std::complex<double> h);

/// Draws LOS states, shadowing and fading for every AP-device pair.
/// Requires one device per subnetwork.
LinkGains realize_gains(const DeploymentSnapshot& snap,
                        const ChannelProfile& profile, std::uint64_t seed,
                        const ChannelOptions& options = {});

/// Gains with the given linear power matrix and unit fading; used for
/// hand-built instances.
LinkGains gains_from_power(const Eigen::MatrixXd& power_gain);

/// CSV: rx_ap,tx_subnetwork,los,pathloss_db,shadow_db,fading_re,fading_im,power_gain
void write_gains_csv(std::ostream& out, const LinkGains& gains);

}  // namespace subband
