#include "sinrlab/analysis.hpp"

#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sinrlab {

namespace {

constexpr double kPi = std::numbers::pi;

// int_0^x du / (1 + u^a) for a > 1, x possibly large.
double saturated_part(double x, double a) {
  QuadratureOptions q;
  q.abs_tol = 1e-13;
  const auto f = [a](double u) { return 1.0 / (1.0 + std::pow(u, a)); };
  if (x <= 1.0) return integrate_adaptive(f, 0.0, x, q).value;
  // Fold (1, x] with u = 1/y: du / (1 + u^a) = y^{a-2} / (1 + y^a) dy.
  const auto g = [a](double y) { return std::pow(y, a - 2.0) / (1.0 + std::pow(y, a)); };
  return integrate_adaptive(f, 0.0, 1.0, q).value + integrate_adaptive(g, 1.0 / x, 1.0, q).value;
}

// int_0^inf min{ratio (1 + u^{-a}), 1} / (1 + u^a) du. Past the kink u* the
// integrand is exactly ratio * u^{-a}, which integrates in closed form.
double simplified_kernel(double ratio, double a) {
  if (ratio >= 1.0) return (kPi / a) / std::sin(kPi / a);
  const double kink = std::pow(ratio / (1.0 - ratio), 1.0 / a);
  return saturated_part(kink, a) + ratio * std::pow(kink, 1.0 - a) / (a - 1.0);
}

FixedPointSolution solve_fixed(const SystemParams& params, SuccessMethod method,
                               const std::function<double(double)>& map,
                               const SolverOptions& opts) {
  FixedPointSolution sol;
  sol.method = method;
  sol.report = fixed_point_solve(map, params.noise_limited_success(), opts.damping, opts.tol,
                                 opts.max_iter);
  sol.p_s = sol.report.value;
  return sol;
}

// Log-spaced nodes x = ln w over which the field integral
// K int_0^inf [1 - (1 - c / (1 + w^a))^s] dw is a trapezoid sum.
struct FieldNodes {
  double x_lo;
  double x_hi;
  double h;
  long count;
};

FieldNodes field_nodes(double a, double h) {
  FieldNodes n;
  n.x_lo = -40.0;
  n.x_hi = 36.0 / (a - 1.0);
  n.count = static_cast<long>(std::ceil((n.x_hi - n.x_lo) / h));
  n.h = (n.x_hi - n.x_lo) / static_cast<double>(n.count);
  return n;
}

// -ln(1 - c / (1 + e^{a x})), evaluated without cancellation.
double field_jump(double x, double a, double c) {
  const double ax = a * x;
  if (c >= 1.0) return ax > 0 ? std::log1p(std::exp(-ax)) : -ax + std::log1p(std::exp(ax));
  return -std::log1p(-c / (1.0 + std::exp(ax)));
}

}  // namespace

std::string to_string(SuccessMethod m) {
  switch (m) {
    case SuccessMethod::exact: return "exact";
    case SuccessMethod::simplified: return "simplified";
    case SuccessMethod::closed_form: return "closed_form";
  }
  return "unknown";
}

double conditional_success_prob(std::span<const double> interferer_distances,
                                std::span<const double> active_probs, const SystemParams& params) {
  if (interferer_distances.size() != active_probs.size())
    throw std::invalid_argument("conditional_success_prob: distance and activity lists differ in length");
  const double scale = params.theta() * std::pow(params.r(), params.alpha());
  double log_p = -params.noise_exponent();
  for (std::size_t j = 0; j < interferer_distances.size(); ++j) {
    const double d = interferer_distances[j];
    if (!(d > 0.0)) throw std::invalid_argument("conditional_success_prob: distances must be positive");
    const double big_d = std::pow(d, params.alpha()) / scale;
    log_p += std::log1p(-active_probs[j] / (1.0 + big_d));
  }
  return std::exp(log_p);
}

double steady_state_activity(double xi, double mu) { return mu <= xi ? 1.0 : xi / mu; }

double conditional_active_prob(double u, double p_s, const SystemParams& params, int nodes) {
  const double ratio = params.xi() / p_s;
  if (ratio >= 1.0) return 1.0;
  const double r = params.r();
  const double num = params.theta() * std::pow(r, params.alpha());
  // Midpoint nodes on (0, pi) never land on psi = 0, where u = r is singular.
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double psi = (i + 0.5) * kPi / nodes;
    const double d2 = (u - r) * (u - r) + 4.0 * u * r * std::pow(std::sin(0.5 * psi), 2);
    const double kappa = d2 > 0.0 ? num * std::pow(d2, -0.5 * params.alpha())
                                   : std::numeric_limits<double>::infinity();
    acc += std::min(ratio * (1.0 + kappa), 1.0);
  }
  return acc / nodes;
}

FixedPointSolution success_probability_simplified(const SystemParams& params,
                                                  const SolverOptions& opts) {
  const double a = 0.5 * params.alpha();
  const double n = params.noise_exponent();
  const double k = params.interference_scale();
  const double xi = params.xi();
  return solve_fixed(params, SuccessMethod::simplified,
                     [=](double p) { return std::exp(-n - k * simplified_kernel(xi / p, a)); }, opts);
}

FixedPointSolution success_probability_exact(const SystemParams& params,
                                             const SolverOptions& opts) {
  const detail::InteractionRule rule = detail::make_rule(params, 256);
  const auto nv = static_cast<Eigen::Index>(rule.v.size());
  // G(v) = int g dphi with g = kappa / (1 + kappa), folded with the radial weight.
  Eigen::ArrayXd radial(nv);
  for (Eigen::Index j = 0; j < nv; ++j) {
    const auto col = rule.kappa.col(j);
    const double g = (col / (1.0 + col)).sum() * rule.angle_weight();
    radial(j) = rule.wv[j] * rule.v[j] * g;
  }
  const double lr2 = params.lambda() * params.r() * params.r();
  const double n = params.noise_exponent();
  const double xi = params.xi();
  const double far = lr2 * 2.0 * kPi * params.theta() * rule.tail_power;
  const auto map = [&](double p) {
    const double ratio = xi / p;
    double acc = 0.0;
    if (ratio >= 1.0) {
      acc = radial.sum();
    } else {
      for (Eigen::Index j = 0; j < nv; ++j) {
        const double z = (ratio * (1.0 + rule.kappa.col(j))).min(1.0).mean();
        acc += radial(j) * z;
      }
    }
    return std::exp(-n - lr2 * acc - far * std::min(ratio, 1.0));
  };
  return solve_fixed(params, SuccessMethod::exact, map, opts);
}

double light_traffic_solution(double c) {
  if (c < 0.0 || c > 1.0 / std::numbers::e + 1e-15) {
    std::ostringstream msg;
    msg << "no light-traffic solution: coefficient " << c << " exceeds 1/e";
    throw RegimeError(msg.str());
  }
  if (c == 0.0) return 1.0;
  return -c / lambert_w0(-std::min(c, 1.0 / std::numbers::e));
}

double success_probability_closed_form(const SystemParams& params) {
  // Light traffic: p is close to 1, so the kernel kink is placed where it
  // would sit at p = 1. Below it the activity is saturated and contributes a
  // constant; above it the activity is xi / p, giving the c / p term.
  const double a = 0.5 * params.alpha();
  const double xi = params.xi();
  const double k = params.interference_scale();
  double sat = 0.0, c = 0.0;
  if (xi >= 1.0) {
    sat = (kPi / a) / std::sin(kPi / a);
  } else {
    const double kink = std::pow(xi / (1.0 - xi), 1.0 / a);
    sat = saturated_part(kink, a);
    c = k * xi * std::pow(kink, 1.0 - a) / (a - 1.0);
  }
  const double big_a = params.noise_exponent() + k * sat;
  // p = exp(-A - c / p) has the solution -c / W0(-c e^A).
  if (c == 0.0) return std::exp(-big_a);
  return light_traffic_solution(c * std::exp(big_a)) * std::exp(-big_a);
}

double dominant_interference_constant(const SystemParams& params) {
  const double d = params.delta();
  const double r = params.r();
  return params.lambda() * kPi * kPi * d * std::pow(params.theta(), d) * r * r / std::sin(kPi * d);
}

double bound_success_probability(const SystemParams& params, Regime regime) {
  const double scale = regime == Regime::dominant ? 1.0 : params.xi();
  return std::exp(-params.noise_exponent() - scale * dominant_interference_constant(params));
}

std::complex<double> dominant_log_moment_series(std::complex<double> s, double activity_scale,
                                                const SystemParams& params, int max_terms) {
  using cd = std::complex<double>;
  const double dm1 = params.delta() - 1.0;
  cd binom_s(1.0, 0.0);
  double binom_d = 1.0;  // binom(delta - 1, k - 1)
  double scale_k = 1.0;
  cd sum(0.0, 0.0);
  for (int k = 1; k <= max_terms; ++k) {
    binom_s *= (s - static_cast<double>(k - 1)) / static_cast<double>(k);
    if (k >= 2) binom_d *= (dm1 - (k - 2)) / static_cast<double>(k - 1);
    scale_k *= activity_scale;
    const cd term = scale_k * binom_s * binom_d;
    sum += term;
    if (std::abs(binom_s) == 0.0) break;
  }
  return -s * params.noise_exponent() - dominant_interference_constant(params) * sum;
}

std::complex<double> dominant_log_moment(std::complex<double> s, double activity_scale,
                                         const SystemParams& params) {
  using cd = std::complex<double>;
  const double re = s.real();
  if (s.imag() == 0.0 && re >= 0.0 && re <= 64.0 && re == std::floor(re))
    return dominant_log_moment_series(s, activity_scale, params, static_cast<int>(re));

  // Direct trapezoid in x = ln w; the step resolves the phase rotation of
  // (1 - c / (1 + w^a))^s, whose rate in x is at most a |s|.
  const double a = 0.5 * params.alpha();
  const double h = std::min(0.02, 0.5 / (a * std::max(1.0, std::abs(s))));
  const FieldNodes nodes = field_nodes(a, h);
  cd acc(0.0, 0.0);
  for (long i = 0; i <= nodes.count; ++i) {
    const double x = nodes.x_lo + nodes.h * static_cast<double>(i);
    const double wgt = (i == 0 || i == nodes.count) ? 0.5 : 1.0;
    acc -= wgt * std::exp(x) * complex_expm1(-s * field_jump(x, a, activity_scale));
  }
  acc *= nodes.h;
  // Beyond x_hi the jumps are tiny: 1 - e^{-s L} ~ s c e^{-a x}.
  acc += s * activity_scale * std::exp((1.0 - a) * nodes.x_hi) / (a - 1.0);
  return -s * params.noise_exponent() - params.interference_scale() * acc;
}

std::complex<double> dominant_log_moment(double omega, double activity_scale,
                                         const SystemParams& params) {
  return dominant_log_moment(std::complex<double>(0.0, omega), activity_scale, params);
}

ShotNoiseExponent dominant_exponent(const SystemParams& params, double activity_scale) {
  const double a = 0.5 * params.alpha();
  const double k = params.interference_scale();
  const FieldNodes nodes = field_nodes(a, 0.004);
  ShotNoiseBuilder b(params.noise_exponent());
  for (long i = 0; i <= nodes.count; ++i) {
    const double x = nodes.x_lo + nodes.h * static_cast<double>(i);
    const double wgt = (i == 0 || i == nodes.count) ? 0.5 : 1.0;
    b.add(field_jump(x, a, activity_scale), k * wgt * nodes.h * std::exp(x));
  }
  const double tail = std::exp((1.0 - a) * nodes.x_hi) / (a - 1.0);
  b.add_moments(k * activity_scale * tail, 0.0);
  return b.build();
}

// ---------------------------------------------------------------------------

double throughput_density(const SystemParams& params, double p_s) {
  return params.lambda() * std::log2(1.0 + params.theta()) * p_s;
}

double variance_of_success(const MetaCurve& curve) { return std::max(0.0, curve.variance()); }

double likely_rate_95(const MetaCurve& curve) { return 1.0 - curve(0.95); }

FixedPointSolution solve_success(const SystemParams& params, SuccessMethod method,
                                 const SolverOptions& opts) {
  switch (method) {
    case SuccessMethod::exact: return success_probability_exact(params, opts);
    case SuccessMethod::simplified: return success_probability_simplified(params, opts);
    case SuccessMethod::closed_form: {
      FixedPointSolution sol;
      sol.method = method;
      sol.p_s = success_probability_closed_form(params);
      sol.report = {sol.p_s, 0, 0.0, true};
      return sol;
    }
  }
  throw std::invalid_argument("solve_success: unknown method");
}

DensityOptimum optimal_density(const SystemParams& params, SuccessMethod method, double lo,
                               double hi) {
  const auto objective = [&](double log_l) {
    const SystemParams p = params.with_lambda(std::exp(log_l));
    const FixedPointSolution sol = solve_success(p, method);
    if (!sol.converged()) throw NumericalError("optimal_density: success probability did not converge");
    return throughput_density(p, sol.p_s);
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo), b = std::log(hi);
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > 1e-4) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  DensityOptimum out;
  const double x = 0.5 * (a + b);
  out.lambda = std::exp(x);
  out.density = objective(x);
  out.interior = x - std::log(lo) > 1e-2 && std::log(hi) - x > 1e-2;
  return out;
}

}  // namespace sinrlab
