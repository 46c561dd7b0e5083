#include "subband/channel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "subband/error.hpp"

namespace subband {

ChannelProfile ChannelProfile::preset(ChannelProfileId id) {
  ChannelProfile p;
  p.id = id;
  switch (id) {
    case ChannelProfileId::kInfDl:
      break;
    case ChannelProfileId::kInfSl:
      p.ple_nlos = 2.55;
      p.sf_std_nlos_db = 5.7;
      p.clutter_density = 0.35;
      p.clutter_size_m = 10.0;
      p.beta_nlos_db = 33.0;
      p.freq_coef_nlos = 20.0;
      break;
    case ChannelProfileId::kInhOffice:
      p.los_model = LosModel::kInhMixedOffice;
      p.ple_los = 1.73;
      p.ple_nlos = 3.83;
      p.sf_std_los_db = 3.0;
      p.sf_std_nlos_db = 8.03;
      p.clutter_density = 0.0;
      p.clutter_size_m = 0.0;
      p.corr_distance_m = 6.0;
      p.beta_los_db = 32.4;
      p.freq_coef_los = 20.0;
      p.beta_nlos_db = 17.3;
      p.freq_coef_nlos = 24.9;
      break;
  }
  return p;
}

void ChannelProfile::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidArgument, "channel profile: " + msg);
  };
  if (ple_los <= 0.0 || ple_nlos <= 0.0) fail("path-loss exponents must be positive");
  if (sf_std_los_db < 0.0 || sf_std_nlos_db < 0.0) fail("shadowing std must be >= 0");
  if (corr_distance_m < 0.0) fail("corr_distance_m must be >= 0");
  if (carrier_freq_ghz <= 0.0) fail("carrier_freq_ghz must be positive");
  if (los_model == LosModel::kInfClutter) {
    if (clutter_density <= 0.0 || clutter_density >= 1.0)
      fail("clutter_density must lie in (0, 1)");
    if (clutter_size_m <= 0.0) fail("clutter_size_m must be positive");
  }
}

double NoiseModel::subband_noise_dbm() const {
  return thermal_density_dbm_hz + 10.0 * std::log10(subband_bandwidth_hz()) +
         noise_figure_db;
}

double NoiseModel::subband_noise_mw() const { return dbm_to_mw(subband_noise_dbm()); }

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

double los_probability(double d2d, const ChannelProfile& profile) {
  if (d2d <= 0.0) return 1.0;
  switch (profile.los_model) {
    case LosModel::kInfClutter: {
      const double k = -profile.clutter_size_m / std::log(1.0 - profile.clutter_density);
      return std::exp(-d2d / k);
    }
    case LosModel::kInhMixedOffice:
      if (d2d <= 1.2) return 1.0;
      if (d2d < 6.5) return std::exp(-(d2d - 1.2) / 4.7);
      return std::exp(-(d2d - 6.5) / 32.6) * 0.32;
  }
  return 0.0;
}

double pathloss_db(double d3d, bool los, const ChannelProfile& profile) {
  const double d = std::max(d3d, kPathlossMinDistanceM);
  const double log_f = std::log10(profile.carrier_freq_ghz);
  const double pl_los = profile.beta_los_db + 10.0 * profile.ple_los * std::log10(d) +
                        profile.freq_coef_los * log_f;
  if (los) return pl_los;
  const double pl_nlos = profile.beta_nlos_db +
                         10.0 * profile.ple_nlos * std::log10(d) +
                         profile.freq_coef_nlos * log_f;
  return profile.nlos_floor_at_los ? std::max(pl_los, pl_nlos) : pl_nlos;
}

// --- shadowing -------------------------------------------------------------

ShadowField::ShadowField(double resolution_m, int nx, int ny,
                         std::vector<double> values)
    : resolution_m_(resolution_m), nx_(nx), ny_(ny), values_(std::move(values)) {}

double ShadowField::at(Point p) const {
  const int ix = std::clamp(static_cast<int>(std::lround(p.x / resolution_m_)), 0, nx_ - 1);
  const int iy = std::clamp(static_cast<int>(std::lround(p.y / resolution_m_)), 0, ny_ - 1);
  return at_index(ix, iy);
}

namespace {

int next_pow2(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

// In-place 2-D DFT of a row-major (rows x cols) complex array.
void fft2(std::vector<std::complex<double>>& data, int rows, int cols, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, out;
  in.resize(cols);
  for (int r = 0; r < rows; ++r) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(r) * cols, cols, in.begin());
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy(out.begin(), out.end(), data.begin() + static_cast<std::ptrdiff_t>(r) * cols);
  }
  in.resize(rows);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) in[r] = data[static_cast<std::size_t>(r) * cols + c];
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (int r = 0; r < rows; ++r) data[static_cast<std::size_t>(r) * cols + c] = out[r];
  }
}

}  // namespace

ShadowFieldGenerator::ShadowFieldGenerator(double width_m, double height_m,
                                           double corr_distance_m,
                                           double resolution_m)
    : resolution_m_(resolution_m), corr_distance_m_(corr_distance_m) {
  if (!(resolution_m > 0.0) || !(width_m > 0.0) || !(height_m > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "shadow field: bad grid geometry");
  nx_ = static_cast<int>(std::ceil(width_m / resolution_m)) + 1;
  ny_ = static_cast<int>(std::ceil(height_m / resolution_m)) + 1;
  if (corr_distance_m_ <= 0.0) return;

  px_ = next_pow2(2 * nx_);
  py_ = next_pow2(2 * ny_);
  std::vector<std::complex<double>> cov(static_cast<std::size_t>(px_) * py_);
  for (int iy = 0; iy < py_; ++iy) {
    const double dy = std::min(iy, py_ - iy) * resolution_m_;
    for (int ix = 0; ix < px_; ++ix) {
      const double dx = std::min(ix, px_ - ix) * resolution_m_;
      cov[static_cast<std::size_t>(iy) * px_ + ix] =
          std::exp(-std::hypot(dx, dy) / corr_distance_m_);
    }
  }
  fft2(cov, py_, px_, /*inverse=*/false);
  const double scale = 1.0 / (static_cast<double>(px_) * py_);
  sqrt_eigen_.resize(cov.size());
  for (std::size_t i = 0; i < cov.size(); ++i)
    sqrt_eigen_[i] = std::sqrt(std::max(cov[i].real(), 0.0) * scale);
}

ShadowField ShadowFieldGenerator::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(static_cast<std::size_t>(nx_) * ny_);
  if (corr_distance_m_ <= 0.0) {
    for (double& v : values) v = normal(rng);
    return ShadowField(resolution_m_, nx_, ny_, std::move(values));
  }
  std::vector<std::complex<double>> z(sqrt_eigen_.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    z[i] = sqrt_eigen_[i] * std::complex<double>(re, im);
  }
  // Eigen's inverse transform divides by the length; undo that so this is
  // an unnormalized forward-type transform.
  fft2(z, py_, px_, /*inverse=*/true);
  const double unscale = static_cast<double>(px_) * py_;
  for (int iy = 0; iy < ny_; ++iy)
    for (int ix = 0; ix < nx_; ++ix)
      values[static_cast<std::size_t>(iy) * nx_ + ix] =
          z[static_cast<std::size_t>(iy) * px_ + ix].real() * unscale;
  return ShadowField(resolution_m_, nx_, ny_, std::move(values));
}

// --- gains -----------------------------------------------------------------

Eigen::MatrixXd LinkGains::large_scale_linear() const {
  return large_scale_db.unaryExpr([](double db) { return std::pow(10.0, db / 10.0); });
}

double compose_power_gain(double large_scale_db, std::complex<double> h) {
  return std::norm(h) * std::pow(10.0, large_scale_db / 10.0);
}

LinkGains realize_gains(const DeploymentSnapshot& snap,
                        const ChannelProfile& profile, std::uint64_t seed,
                        const ChannelOptions& options) {
  profile.validate();
  const int n = snap.n_subnetworks();
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "realize_gains: empty snapshot");
  for (const auto& devs : snap.device_positions)
    if (devs.size() != 1)
      throw Error(ErrorCode::kInvalidArgument,
                  "realize_gains: exactly one device per subnetwork is supported");

  Rng los_rng(derive_seed(seed, "channel.los"));
  Rng shadow_rng(derive_seed(seed, "channel.shadow"));
  Rng fading_rng(derive_seed(seed, "channel.fading"));

  const double width = std::max(snap.area_width_m, 1.0);
  const double height = std::max(snap.area_height_m, 1.0);
  ShadowFieldGenerator generator(width, height, profile.corr_distance_m);
  const ShadowField field = generator.sample(shadow_rng);

  LinkGains g;
  g.pathloss_db.resize(n, n);
  g.shadow_db.resize(n, n);
  g.los.resize(n, n);
  g.large_scale_db.resize(n, n);
  g.fading.resize(n, n);
  g.power_gain.resize(n, n);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> half_normal(0.0, std::sqrt(0.5));
  for (int rx = 0; rx < n; ++rx) {
    for (int tx = 0; tx < n; ++tx) {
      const Point dev = snap.device_positions[tx][0];
      const double d = distance(snap.ap_positions[rx], dev);
      const bool los = unit(los_rng) < los_probability(d, profile);
      const double sigma = los ? profile.sf_std_los_db : profile.sf_std_nlos_db;
      g.los(rx, tx) = los;
      g.pathloss_db(rx, tx) = -pathloss_db(d, los, profile);
      g.shadow_db(rx, tx) = sigma * field.at(dev);
      g.large_scale_db(rx, tx) = g.pathloss_db(rx, tx) + g.shadow_db(rx, tx);
      std::complex<double> h(1.0, 0.0);
      if (options.fading) {
        const double re = half_normal(fading_rng);
        const double im = half_normal(fading_rng);
        h = {re, im};
      }
      g.fading(rx, tx) = h;
      g.power_gain(rx, tx) = compose_power_gain(g.large_scale_db(rx, tx), h);
    }
  }
  return g;
}

LinkGains gains_from_power(const Eigen::MatrixXd& power_gain) {
  if (power_gain.rows() != power_gain.cols() || power_gain.rows() < 1)
    throw Error(ErrorCode::kShapeMismatch, "gains_from_power: need a non-empty square matrix");
  if ((power_gain.array() <= 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "gains_from_power: gains must be positive");
  const auto n = power_gain.rows();
  LinkGains g;
  g.large_scale_db = power_gain.unaryExpr([](double v) { return 10.0 * std::log10(v); });
  g.pathloss_db = g.large_scale_db;
  g.shadow_db = Eigen::MatrixXd::Zero(n, n);
  g.los = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, true);
  g.fading = Eigen::MatrixXcd::Constant(n, n, {1.0, 0.0});
  g.power_gain = power_gain;
  return g;
}

void write_gains_csv(std::ostream& out, const LinkGains& gains) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "rx_ap,tx_subnetwork,los,pathloss_db,shadow_db,fading_re,fading_im,power_gain\n";
  for (int rx = 0; rx < gains.size(); ++rx)
    for (int tx = 0; tx < gains.size(); ++tx)
      buf << rx << ',' << tx << ',' << (gains.los(rx, tx) ? 1 : 0) << ','
          << gains.pathloss_db(rx, tx) << ',' << gains.shadow_db(rx, tx) << ','
          << gains.fading(rx, tx).real() << ',' << gains.fading(rx, tx).imag() << ','
          << gains.power_gain(rx, tx) << '\n';
  out << buf.str();
}

}  // namespace subband
