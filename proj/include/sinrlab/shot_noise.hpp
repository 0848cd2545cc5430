#pragma once

#include "sinrlab/numerics.hpp"

#include <complex>
#include <vector>

namespace sinrlab {

/// Log-moment function of X = exp(-shift - sum_i L_i), where the jumps L_i
/// are the points of a Poisson process with intensity measure nu on (0, inf):
///
///   log E[X^s] = -s shift - int (1 - e^{-s L}) nu(dL).
///
/// Every success probability in a Poisson field of independently faded,
/// independently active interferers has this form: each interferer
/// multiplies the conditional success probability by 1 - q g, i.e. adds the
/// jump L = -ln(1 - q g). Unlike a truncated binomial series in s, this
/// representation stays well conditioned for large imaginary s.
///
/// The measure is stored binned on a logarithmic jump scale. Each bin keeps
/// its mass, mean and spread; within-bin dispersion is carried to second
/// order. Jumps below the smallest bin enter through their first two moments.
class ShotNoiseExponent {
 public:
  std::complex<double> operator()(std::complex<double> s) const;
  std::complex<double> at_omega(double omega) const { return (*this)({0.0, omega}); }

  /// Copies the exponent into a callable usable by gil_pelaez_cdf.
  LogMgf log_mgf() const;

  double shift() const { return shift_; }
  /// int L nu(dL), so that E[ln X] = -(shift + mean_jump_integral()).
  double mean_jump_integral() const;
  std::size_t bins() const { return mean_.size(); }
  /// Largest jump among bins holding at least `min_mass`; the fastest
  /// rotation rate that matters when inverting.
  double significant_jump(double min_mass = 1e-4) const;
  /// Gil-Pelaez options whose panel size resolves significant_jump().
  GilPelaezOptions inversion_options(GilPelaezOptions base = {}) const;

 private:
  friend class ShotNoiseBuilder;
  double shift_ = 0.0;
  double small_m1_ = 0.0;  // sum of w L over sub-resolution jumps
  double small_m2_ = 0.0;  // sum of w L^2 over sub-resolution jumps
  std::vector<double> mass_;
  std::vector<double> mean_;
  std::vector<double> var_;
};

class ShotNoiseBuilder {
 public:
  explicit ShotNoiseBuilder(double shift = 0.0, double min_jump = 1e-6, double max_jump = 200.0,
                            int bins_per_decade = 48);

  /// Adds mass `weight` at jump size `jump` (non-positive jumps are ignored).
  void add(double jump, double weight);
  /// Adds jumps known only through their first two moments (far-field tails).
  void add_moments(double m1, double m2);

  ShotNoiseExponent build() const;

 private:
  double shift_;
  double log_min_;
  double min_jump_;
  double max_jump_;
  int per_decade_;
  double small_m1_ = 0.0;
  double small_m2_ = 0.0;
  std::vector<double> w_;
  std::vector<double> wl_;
  std::vector<double> wl2_;
};

}  // namespace sinrlab
