#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sinrlab {

/// Raised when a parameter set violates the model domain.
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Model parameters as they appear at the I/O boundary: thresholds in dB,
/// powers in dBm, everything else in SI units.
struct RawParams {
  double lambda = 1e-4;      // transmitters per m^2
  double r = 25.0;           // link distance, m
  double alpha = 3.8;        // path-loss exponent
  double theta_db = 0.0;     // SINR decoding threshold
  double xi = 0.1;           // packet arrivals per slot
  double p_tx_dbm = 17.0;
  double sigma2_dbm = -90.0;

  /// The reference scenario: 1 km^2 torus defaults used throughout the
  /// figure reproductions.
  static RawParams reference() { return RawParams{}; }
};

/// Validated, linear-unit model parameters. Immutable; the only way to
/// obtain one is through a checking factory, so `delta` and `rho` are always
/// consistent with the primary fields.
class SystemParams {
 public:
  /// All arguments in linear units (theta linear, powers in mW).
  static SystemParams from_linear(double lambda, double r, double alpha, double theta,
                                  double xi, double p_tx, double sigma2);

  double lambda() const { return lambda_; }
  double r() const { return r_; }
  double alpha() const { return alpha_; }
  double theta() const { return theta_; }
  double xi() const { return xi_; }
  double p_tx() const { return p_tx_; }
  double sigma2() const { return sigma2_; }
  double delta() const { return delta_; }
  double rho() const { return rho_; }

  /// theta * r^alpha / rho, the exponent of the noise-limited success probability.
  double noise_exponent() const;
  /// exp(-noise_exponent()).
  double noise_limited_success() const;
  /// lambda * pi * r^2 * theta^delta, the common interference scale.
  double interference_scale() const;

  SystemParams with_lambda(double lambda) const;
  SystemParams with_r(double r) const;
  SystemParams with_theta(double theta) const;
  SystemParams with_xi(double xi) const;

  RawParams to_raw() const;

 private:
  SystemParams() = default;

  double lambda_ = 0.0;
  double r_ = 0.0;
  double alpha_ = 0.0;
  double theta_ = 0.0;
  double xi_ = 0.0;
  double p_tx_ = 0.0;
  double sigma2_ = 0.0;
  double delta_ = 0.0;
  double rho_ = 0.0;
};

/// Converts dB/dBm inputs to linear units and validates the domain.
SystemParams build_params(const RawParams& raw);

/// Square simulation window, optionally with torus (wrap-around) boundaries.
struct Region {
  double side = 1000.0;
  bool wrap = true;

  static Region make(double side, bool wrap = true);
};

/// A CDF sampled on an increasing grid over [0, 1], linearly interpolated
/// between grid points.
class MetaCurve {
 public:
  MetaCurve(Eigen::ArrayXd grid, Eigen::ArrayXd cdf);

  /// Repairs a noisy estimate: clamps to [0,1] and enforces monotonicity
  /// with a running maximum.
  static MetaCurve monotonized(Eigen::ArrayXd grid, Eigen::ArrayXd cdf);
  /// Unit step at `location` (all mass at one reliability value).
  static MetaCurve step(const Eigen::ArrayXd& grid, double location);

  const Eigen::ArrayXd& grid() const { return grid_; }
  const Eigen::ArrayXd& cdf() const { return cdf_; }
  Eigen::Index size() const { return grid_.size(); }

  /// F(u) by linear interpolation; 0 below the grid, 1 above it.
  double operator()(double u) const;

  /// E[X^m] by midpoint Stieltjes sums over grid cells.
  double moment(int m) const;
  double mean() const { return moment(1); }
  double variance() const;

  /// sup_u |F(u) - G(u)| over the union of both grids.
  double kolmogorov_distance(const MetaCurve& other) const;

 private:
  Eigen::ArrayXd grid_;
  Eigen::ArrayXd cdf_;
};

/// n equally spaced points from 0 to 1 inclusive.
Eigen::ArrayXd uniform_grid(Eigen::Index n);

}  // namespace sinrlab
