#include "sinrlab/shot_noise.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace sinrlab {

std::complex<double> ShotNoiseExponent::operator()(std::complex<double> s) const {
  using cd = std::complex<double>;
  cd acc = -s * (shift_ + small_m1_) + 0.5 * s * s * small_m2_;
  const cd half_s2 = 0.5 * s * s;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    // E over the bin of e^{-s L} ~ e^{-s m + s^2 v / 2}
    const cd z = -s * mean_[i] + half_s2 * var_[i];
    cd e;
    if (z.real() < -40.0) {
      e = -1.0;
    } else if (std::norm(z) < 1e-6) {
      e = z * (1.0 + z * (0.5 + z / 6.0));
    } else if (std::norm(z) > 0.25) {
      e = std::exp(z) - 1.0;
    } else {
      e = complex_expm1(z);
    }
    acc += mass_[i] * e;
  }
  return acc;
}

LogMgf ShotNoiseExponent::log_mgf() const {
  auto self = std::make_shared<const ShotNoiseExponent>(*this);
  return [self](double omega) { return self->at_omega(omega); };
}

double ShotNoiseExponent::mean_jump_integral() const {
  double acc = small_m1_;
  for (std::size_t i = 0; i < mean_.size(); ++i) acc += mass_[i] * mean_[i];
  return acc;
}

double ShotNoiseExponent::significant_jump(double min_mass) const {
  double out = 0.0;
  for (std::size_t i = 0; i < mean_.size(); ++i)
    if (mass_[i] >= min_mass) out = std::max(out, mean_[i]);
  return out;
}

GilPelaezOptions ShotNoiseExponent::inversion_options(GilPelaezOptions base) const {
  base.min_rate = std::max(base.min_rate, significant_jump());
  return base;
}

ShotNoiseBuilder::ShotNoiseBuilder(double shift, double min_jump, double max_jump,
                                   int bins_per_decade)
    : shift_(shift),
      log_min_(std::log10(min_jump)),
      min_jump_(min_jump),
      max_jump_(max_jump),
      per_decade_(bins_per_decade) {
  if (!(min_jump > 0.0 && max_jump > min_jump && bins_per_decade > 0))
    throw std::invalid_argument("ShotNoiseBuilder: need 0 < min_jump < max_jump and bins_per_decade > 0");
  const auto n = static_cast<std::size_t>(
      std::ceil((std::log10(max_jump) - log_min_) * bins_per_decade)) + 1;
  w_.assign(n, 0.0);
  wl_.assign(n, 0.0);
  wl2_.assign(n, 0.0);
}

void ShotNoiseBuilder::add(double jump, double weight) {
  if (!(jump > 0.0) || !(weight > 0.0)) return;
  if (jump < min_jump_) {
    small_m1_ += weight * jump;
    small_m2_ += weight * jump * jump;
    return;
  }
  jump = std::min(jump, max_jump_);
  auto idx = static_cast<std::size_t>((std::log10(jump) - log_min_) * per_decade_);
  idx = std::min(idx, w_.size() - 1);
  w_[idx] += weight;
  wl_[idx] += weight * jump;
  wl2_[idx] += weight * jump * jump;
}

void ShotNoiseBuilder::add_moments(double m1, double m2) {
  small_m1_ += m1;
  small_m2_ += m2;
}

ShotNoiseExponent ShotNoiseBuilder::build() const {
  ShotNoiseExponent e;
  e.shift_ = shift_;
  e.small_m1_ = small_m1_;
  e.small_m2_ = small_m2_;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (w_[i] <= 0.0) continue;
    const double m = wl_[i] / w_[i];
    const double v = std::max(0.0, wl2_[i] / w_[i] - m * m);
    e.mass_.push_back(w_[i]);
    e.mean_.push_back(m);
    e.var_.push_back(v);
  }
  return e;
}

}  // namespace sinrlab
