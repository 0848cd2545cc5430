#include "sinrlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sinrlab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ParamError(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

SystemParams SystemParams::from_linear(double lambda, double r, double alpha, double theta,
                                       double xi, double p_tx, double sigma2) {
  require(finite(lambda) && finite(r) && finite(alpha) && finite(theta) && finite(xi) &&
              finite(p_tx) && finite(sigma2),
          "parameters must be finite");
  require(alpha > 2.0, "alpha must exceed 2");
  require(xi > 0.0 && xi <= 1.0, "xi must lie in (0, 1]");
  require(theta > 0.0, "theta must be positive");
  require(lambda > 0.0, "lambda must be positive");
  require(r > 0.0, "r must be positive");
  require(p_tx > 0.0 && sigma2 > 0.0, "powers must be positive");

  SystemParams p;
  p.lambda_ = lambda;
  p.r_ = r;
  p.alpha_ = alpha;
  p.theta_ = theta;
  p.xi_ = xi;
  p.p_tx_ = p_tx;
  p.sigma2_ = sigma2;
  p.delta_ = 2.0 / alpha;
  p.rho_ = p_tx / sigma2;
  require(finite(p.rho_) && p.rho_ > 0.0, "rho must be finite and positive");
  return p;
}

double SystemParams::noise_exponent() const { return theta_ * std::pow(r_, alpha_) / rho_; }

double SystemParams::noise_limited_success() const { return std::exp(-noise_exponent()); }

double SystemParams::interference_scale() const {
  return lambda_ * std::numbers::pi * r_ * r_ * std::pow(theta_, delta_);
}

SystemParams SystemParams::with_lambda(double lambda) const {
  return from_linear(lambda, r_, alpha_, theta_, xi_, p_tx_, sigma2_);
}
SystemParams SystemParams::with_r(double r) const {
  return from_linear(lambda_, r, alpha_, theta_, xi_, p_tx_, sigma2_);
}
SystemParams SystemParams::with_theta(double theta) const {
  return from_linear(lambda_, r_, alpha_, theta, xi_, p_tx_, sigma2_);
}
SystemParams SystemParams::with_xi(double xi) const {
  return from_linear(lambda_, r_, alpha_, theta_, xi, p_tx_, sigma2_);
}

RawParams SystemParams::to_raw() const {
  RawParams raw;
  raw.lambda = lambda_;
  raw.r = r_;
  raw.alpha = alpha_;
  raw.theta_db = linear_to_db(theta_);
  raw.xi = xi_;
  raw.p_tx_dbm = linear_to_db(p_tx_);
  raw.sigma2_dbm = linear_to_db(sigma2_);
  return raw;
}

SystemParams build_params(const RawParams& raw) {
  require(finite(raw.theta_db) && finite(raw.p_tx_dbm) && finite(raw.sigma2_dbm),
          "dB quantities must be finite");
  return SystemParams::from_linear(raw.lambda, raw.r, raw.alpha, db_to_linear(raw.theta_db),
                                   raw.xi, db_to_linear(raw.p_tx_dbm),
                                   db_to_linear(raw.sigma2_dbm));
}

Region Region::make(double side, bool wrap) {
  require(std::isfinite(side) && side > 0.0, "region side must be positive");
  return Region{side, wrap};
}

// ---------------------------------------------------------------------------

MetaCurve::MetaCurve(Eigen::ArrayXd grid, Eigen::ArrayXd cdf)
    : grid_(std::move(grid)), cdf_(std::move(cdf)) {
  if (grid_.size() < 2 || grid_.size() != cdf_.size())
    throw std::invalid_argument("MetaCurve: grid and cdf must have equal size >= 2");
  if (grid_(0) != 0.0 || grid_(grid_.size() - 1) != 1.0)
    throw std::invalid_argument("MetaCurve: grid must start at 0 and end at 1");
  for (Eigen::Index i = 0; i < grid_.size(); ++i) {
    if (i > 0 && !(grid_(i) > grid_(i - 1)))
      throw std::invalid_argument("MetaCurve: grid must be strictly increasing");
    if (!(cdf_(i) >= 0.0 && cdf_(i) <= 1.0))
      throw std::invalid_argument("MetaCurve: cdf values must lie in [0, 1]");
    if (i > 0 && cdf_(i) < cdf_(i - 1))
      throw std::invalid_argument("MetaCurve: cdf must be non-decreasing");
  }
}

MetaCurve MetaCurve::monotonized(Eigen::ArrayXd grid, Eigen::ArrayXd cdf) {
  double running = 0.0;
  for (Eigen::Index i = 0; i < cdf.size(); ++i) {
    const double v = std::isfinite(cdf(i)) ? std::clamp(cdf(i), 0.0, 1.0) : running;
    running = std::max(running, v);
    cdf(i) = running;
  }
  return MetaCurve(std::move(grid), std::move(cdf));
}

MetaCurve MetaCurve::step(const Eigen::ArrayXd& grid, double location) {
  Eigen::ArrayXd cdf(grid.size());
  // F(u) = P(X < u): zero up to and including the atom.
  for (Eigen::Index i = 0; i < grid.size(); ++i) cdf(i) = grid(i) > location ? 1.0 : 0.0;
  return MetaCurve(grid, std::move(cdf));
}

double MetaCurve::operator()(double u) const {
  const Eigen::Index n = grid_.size();
  if (u <= grid_(0)) return cdf_(0);
  if (u >= grid_(n - 1)) return cdf_(n - 1);
  const double* begin = grid_.data();
  const auto it = std::upper_bound(begin, begin + n, u);
  const Eigen::Index hi = it - begin;
  const Eigen::Index lo = hi - 1;
  const double t = (u - grid_(lo)) / (grid_(hi) - grid_(lo));
  return cdf_(lo) + t * (cdf_(hi) - cdf_(lo));
}

double MetaCurve::moment(int m) const {
  // Mass below the first grid point sits at 0 and contributes nothing for m >= 1;
  // mass missing at the top (1 - F(1)) sits at u = 1.
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < grid_.size(); ++i) {
    const double mass = cdf_(i + 1) - cdf_(i);
    if (mass <= 0.0) continue;
    const double mid = 0.5 * (grid_(i) + grid_(i + 1));
    acc += mass * std::pow(mid, m);
  }
  acc += 1.0 - cdf_(grid_.size() - 1);
  return acc;
}

double MetaCurve::variance() const {
  const double m1 = moment(1);
  return std::max(0.0, moment(2) - m1 * m1);
}

double MetaCurve::kolmogorov_distance(const MetaCurve& other) const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grid_.size(); ++i)
    worst = std::max(worst, std::abs(cdf_(i) - other(grid_(i))));
  for (Eigen::Index i = 0; i < other.grid_.size(); ++i)
    worst = std::max(worst, std::abs((*this)(other.grid_(i)) - other.cdf_(i)));
  return worst;
}

Eigen::ArrayXd uniform_grid(Eigen::Index n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  Eigen::ArrayXd g = Eigen::ArrayXd::LinSpaced(n, 0.0, 1.0);
  g(0) = 0.0;
  g(n - 1) = 1.0;
  return g;
}

}  // namespace sinrlab
