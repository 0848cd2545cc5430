#include "sinrlab/analysis.hpp"

#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sinrlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kQBins = 128;  // uniform bins on [0, 1) plus one atom at q = 1

// Law of the activity factor q of an interferer, per radial node: averaged
// over the orientation of its own link and over its reliability t.
struct ActivityField {
  Eigen::ArrayXXd mass;  // (kQBins + 1, nv), columns sum to 1
  Eigen::ArrayXXd mean;  // mean q within each bin
  double far_mean = 0.0; // E[q] far from the typical link
};

void deposit(ActivityField& f, Eigen::Index j, double q, double m) {
  if (m <= 0.0) return;
  const int b = q >= 1.0 ? kQBins : std::min(static_cast<int>(q * kQBins), kQBins - 1);
  f.mass(b, j) += m;
  f.mean(b, j) += m * q;
}

void finish(ActivityField& f) {
  f.mean = (f.mass > 0.0).select(f.mean / f.mass, 0.0);
}

ActivityField constant_field(const detail::InteractionRule& rule, double xi) {
  const auto nv = static_cast<Eigen::Index>(rule.v.size());
  ActivityField f{Eigen::ArrayXXd::Zero(kQBins + 1, nv), Eigen::ArrayXXd::Zero(kQBins + 1, nv),
                  xi};
  for (Eigen::Index j = 0; j < nv; ++j) deposit(f, j, xi, 1.0);
  finish(f);
  return f;
}

// q = min(H / t, 1) with H = xi (1 + kappa) and t distributed by `curve`.
// Cells of the curve below H contribute the saturated atom F(H); cells
// above H contribute H / t at their midpoint.
void accumulate_threshold(ActivityField& f, Eigen::Index j, double h, double weight,
                          const MetaCurve& curve) {
  if (h >= 1.0) {
    deposit(f, j, 1.0, weight);
    return;
  }
  const Eigen::ArrayXd& u = curve.grid();
  const Eigen::ArrayXd& c = curve.cdf();
  const double f_h = curve(h);
  deposit(f, j, 1.0, weight * f_h);
  const auto first = static_cast<Eigen::Index>(
      std::upper_bound(u.data(), u.data() + u.size(), h) - u.data());
  if (first < u.size()) {
    deposit(f, j, h / (0.5 * (h + u(first))), weight * (c(first) - f_h));
    for (Eigen::Index i = first; i + 1 < u.size(); ++i) {
      const double m = c(i + 1) - c(i);
      if (m > 0.0) deposit(f, j, h / (0.5 * (u(i) + u(i + 1))), weight * m);
    }
  }
  deposit(f, j, h, weight * (1.0 - c(u.size() - 1)));
}

ActivityField curve_field(const detail::InteractionRule& rule, double xi, const MetaCurve& curve) {
  const auto nv = static_cast<Eigen::Index>(rule.v.size());
  ActivityField f{Eigen::ArrayXXd::Zero(kQBins + 1, nv), Eigen::ArrayXXd::Zero(kQBins + 1, nv),
                  0.0};
  const double w = 1.0 / rule.n_ang;
  for (Eigen::Index j = 0; j < nv; ++j)
    for (int i = 0; i < rule.n_ang; ++i)
      accumulate_threshold(f, j, xi * (1.0 + rule.kappa(i, j)), w, curve);
  finish(f);
  // Far field: kappa -> 0, so H -> xi.
  ActivityField far{Eigen::ArrayXXd::Zero(kQBins + 1, 1), Eigen::ArrayXXd::Zero(kQBins + 1, 1), 0.0};
  accumulate_threshold(far, 0, xi, 1.0, curve);
  f.far_mean = far.mean.col(0).cwiseProduct(far.mass.col(0)).sum() / far.mass.col(0).sum();
  return f;
}

double lambda_r2(const SystemParams& p) { return p.lambda() * p.r() * p.r(); }

// log E[mu^s] = -s n - (lambda r^2 / 2 pi) int v dv dpsi dphi E[1 - (1 - q g)^s],
// assembled as a shot-noise exponent.
ShotNoiseExponent field_exponent(const SystemParams& params, const detail::InteractionRule& rule,
                                 const ActivityField& f) {
  ShotNoiseBuilder b(params.noise_exponent());
  const double lr2 = lambda_r2(params);
  const auto nv = static_cast<Eigen::Index>(rule.v.size());
  std::vector<Eigen::Index> bins;
  for (Eigen::Index j = 0; j < nv; ++j) {
    bins.clear();
    for (Eigen::Index q = 0; q <= kQBins; ++q)
      if (f.mass(q, j) > 0.0) bins.push_back(q);
    const double base = lr2 * rule.wv[j] * rule.v[j] * rule.angle_weight();
    for (int i = 0; i < rule.n_ang; ++i) {
      const double kappa = rule.kappa(i, j);
      const double g = kappa / (1.0 + kappa);
      for (Eigen::Index q : bins)
        b.add(-std::log1p(-f.mean(q, j) * g), base * f.mass(q, j));
    }
  }
  // Far field contributes only through its mean: jumps ~ q theta v^{-alpha}.
  b.add_moments(lr2 * 2.0 * kPi * params.theta() * f.far_mean * rule.tail_power, 0.0);
  return b.build();
}

// eta^{(k)} = int v dv int dpsi int dphi E[q^k] g^k, k = 1..order.
std::vector<double> field_moments(const SystemParams& params, const detail::InteractionRule& rule,
                                  const ActivityField& f, int order) {
  std::vector<double> eta(static_cast<std::size_t>(order), 0.0);
  const auto nv = static_cast<Eigen::Index>(rule.v.size());
  for (Eigen::Index j = 0; j < nv; ++j) {
    const auto kap = rule.kappa.col(j);
    Eigen::ArrayXd g = kap / (1.0 + kap);
    Eigen::ArrayXd gk = g;
    Eigen::ArrayXd q = f.mean.col(j);
    Eigen::ArrayXd qk = q;
    const Eigen::ArrayXd m = f.mass.col(j);
    const double base = rule.wv[j] * rule.v[j] * rule.angle_weight() * 2.0 * kPi;
    for (int k = 0; k < order; ++k) {
      eta[static_cast<std::size_t>(k)] += base * gk.sum() * (m * qk).sum();
      gk *= g;
      qk *= q;
    }
  }
  eta[0] += 4.0 * kPi * kPi * params.theta() * f.far_mean * rule.tail_power;
  return eta;
}

MetaCurve invert_on_grid(const ShotNoiseExponent& e, const Eigen::ArrayXd& grid) {
  std::vector<double> xs(grid.data(), grid.data() + grid.size());
  // Reliabilities crowd near 1, so the characteristic function decays
  // slowly; a 1e-7 tail envelope still keeps truncation below 1e-6.
  GilPelaezOptions opts;
  opts.tail_tol = 1e-7;
  std::vector<double> cdf = gil_pelaez_cdf(e.log_mgf(), xs, e.inversion_options(opts));
  // P(mu <= 1) = 1 exactly; inverting there would need to resolve the gap
  // between 1 and the noise-limited maximum exp(-noise).
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] >= 1.0) cdf[i] = 1.0;
  return MetaCurve::monotonized(grid, Eigen::Map<const Eigen::ArrayXd>(cdf.data(), grid.size()));
}

double max_change(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) out = std::max(out, std::abs(a[k] - b[k]));
  return out;
}

constexpr int kMetaAngles = 128;

}  // namespace

double initial_eta(const SystemParams& params, int k) {
  const double d = params.delta();
  const double sign_binom = (k % 2 == 1 ? 1.0 : -1.0) * real_binomial(d - 1.0, k - 1);
  return 2.0 * kPi * kPi * kPi * d * std::pow(params.theta(), d) * std::pow(params.xi(), k) *
         sign_binom / std::sin(kPi * d);
}

std::vector<double> kernel_moments(const SystemParams& params, const MetaCurve& curve,
                                   int max_order) {
  const auto rule = detail::make_rule(params, kMetaAngles);
  return field_moments(params, rule, curve_field(rule, params.xi(), curve), max_order);
}

std::vector<double> kernel_moments_constant(const SystemParams& params, int max_order) {
  const auto rule = detail::make_rule(params, kMetaAngles);
  return field_moments(params, rule, constant_field(rule, params.xi()), max_order);
}

MetaResult meta_distribution(const SystemParams& params, const MetaOptions& opts) {
  if (opts.grid_size < 51) throw std::invalid_argument("meta_distribution: grid_size must be >= 51");
  const auto rule = detail::make_rule(params, kMetaAngles);
  const Eigen::ArrayXd grid = uniform_grid(opts.grid_size);

  // Initial state: every interferer active with probability xi.
  const ActivityField start = constant_field(rule, params.xi());
  std::vector<double> eta_prev = field_moments(params, rule, start, opts.max_order);
  const double closed = initial_eta(params, 1);
  const double gap = std::abs(eta_prev[0] - closed) / closed;
  MetaCurve prev = invert_on_grid(field_exponent(params, rule, start), grid);

  for (int n = 1; n <= opts.max_iter; ++n) {
    const ActivityField field = curve_field(rule, params.xi(), prev);
    std::vector<double> eta = field_moments(params, rule, field, opts.max_order);
    MetaCurve next = invert_on_grid(field_exponent(params, rule, field), grid);
    const double change = max_change(eta, eta_prev);
    if (change < opts.tol) return MetaResult{std::move(next), n, change, std::move(eta), gap};
    if (n == opts.max_iter) {
      std::ostringstream msg;
      msg << "meta_distribution: no convergence after " << n << " iterations (change " << change
          << ")";
      throw MetaConvergenceError(msg.str(), std::move(prev), std::move(next));
    }
    eta_prev = std::move(eta);
    prev = std::move(next);
  }
  throw std::logic_error("meta_distribution: unreachable");
}

// ---------------------------------------------------------------------------

double BetaFit::cdf(double u) const {
  if (point_mass) return u > m1 ? 1.0 : 0.0;
  return regularized_incomplete_beta(u, a(), b());
}

MetaCurve BetaFit::to_curve(const Eigen::ArrayXd& grid) const {
  Eigen::ArrayXd c(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) c(i) = cdf(grid(i));
  return MetaCurve::monotonized(grid, c);
}

BetaFit beta_from_moments(double m1, double m2) {
  if (!(m1 > 0.0 && m1 <= 1.0) || m2 > m1 + 1e-15)
    throw std::invalid_argument("beta_from_moments: moments outside the unit interval");
  BetaFit fit;
  fit.m1 = m1;
  fit.m2 = m2;
  fit.mu = m1;
  const double var = m2 - m1 * m1;
  if (var <= 1e-14 * m1 || m1 >= 1.0) {
    fit.point_mass = true;
    return fit;
  }
  fit.beta = (m1 - m2) * (1.0 - m1) / var;
  return fit;
}

BetaFit meta_distribution_beta(const SystemParams& params, double tol, int max_iter) {
  const auto rule = detail::make_rule(params, kMetaAngles);
  const double n = params.noise_exponent();
  const double pref = lambda_r2(params) / (2.0 * kPi);
  const auto fit_from = [&](const std::vector<double>& eta) {
    const double m1 = std::exp(-n - pref * eta[0]);
    const double m2 = std::exp(-2.0 * n - pref * (2.0 * eta[0] - eta[1]));
    return beta_from_moments(m1, m2);
  };
  const Eigen::ArrayXd fine = uniform_grid(1001);

  BetaFit fit = fit_from({initial_eta(params, 1), initial_eta(params, 2)});
  for (int it = 1; it <= max_iter; ++it) {
    const MetaCurve law = fit.point_mass ? MetaCurve::step(fine, fit.m1) : fit.to_curve(fine);
    BetaFit next = fit_from(field_moments(params, rule, curve_field(rule, params.xi(), law), 2));
    next.iterations = it;
    const bool settled = std::abs(next.mu - fit.mu) < tol &&
                         std::abs(next.beta - fit.beta) < tol * std::max(1.0, fit.beta);
    fit = next;
    if (settled) {
      fit.converged = true;
      return fit;
    }
  }
  return fit;
}

}  // namespace sinrlab
