#include "sinrlab/analysis.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace sinrlab;

namespace {

constexpr double kPi = std::numbers::pi;

SystemParams defaults() { return build_params(RawParams::reference()); }

SystemParams with(double theta_db, double xi, double lambda = 1e-4, double r = 25.0) {
  RawParams raw;
  raw.theta_db = theta_db;
  raw.xi = xi;
  raw.lambda = lambda;
  raw.r = r;
  return build_params(raw);
}

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((g(lo) < 0) == (g(mid) < 0))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Independent evaluation of the double-integral fixed point with adaptive
// Gauss-Kronrod in every dimension; no shared tables with the library.
double exact_oracle(const SystemParams& p) {
  const double a = p.alpha(), th = p.theta(), xi = p.xi();
  QuadratureOptions q;
  q.abs_tol = 1e-10;
  q.max_intervals = 20000;
  const auto ring = [&](double v, double c) { return 1.0 + v * v - 2.0 * v * c; };
  const auto gain = [&](double v) {
    return integrate_adaptive([&](double phi) { return 1.0 / (1.0 + std::pow(ring(v, std::cos(phi)), 0.5 * a) / th); },
                              0.0, 2.0 * kPi, q)
        .value;
  };
  const auto activity = [&](double v, double ratio) {
    if (ratio >= 1.0) return 1.0;
    return integrate_adaptive(
               [&](double psi) {
                 const double d2 = ring(v, std::cos(psi));
                 return d2 <= 0.0 ? 1.0 : std::min(ratio * (1.0 + th * std::pow(d2, -0.5 * a)), 1.0);
               },
               0.0, 2.0 * kPi, q)
               .value /
           (2.0 * kPi);
  };
  constexpr double v_max = 400.0;
  const auto exponent = [&](double ps) {
    const double ratio = xi / ps;
    QuadratureOptions outer;
    outer.abs_tol = 1e-8;
    outer.max_intervals = 20000;
    double acc = 0.0;
    const double cuts[] = {0.0, 0.5, 1.0, 2.0, 10.0, 50.0, v_max};
    for (int i = 0; i + 1 < 7; ++i)
      acc += integrate_adaptive([&](double v) { return v * gain(v) * activity(v, ratio); }, cuts[i], cuts[i + 1],
                                outer)
                 .value;
    // Far field: activity -> min(ratio, 1), gain -> 2 pi theta v^-alpha.
    acc += std::min(ratio, 1.0) * 2.0 * kPi * th * std::pow(v_max, 2.0 - a) / (a - 2.0);
    return p.noise_exponent() + p.lambda() * p.r() * p.r() * acc;
  };
  return bisect([&](double ps) { return std::exp(-exponent(ps)) - ps; }, 1e-6, 1.0);
}

}  // namespace

TEST_CASE("conditional success probability trivial cases") {
  const auto p = defaults();
  CHECK(conditional_success_prob({}, {}, p) == doctest::Approx(std::exp(-p.noise_exponent())));
  // D = d^alpha / (theta r^alpha) = 1 at d = r theta^{1/alpha}.
  const std::vector<double> d{p.r() * std::pow(p.theta(), 1.0 / p.alpha())};
  const std::vector<double> a{1.0};
  CHECK(conditional_success_prob(d, a, p) == doctest::Approx(0.5 * std::exp(-p.noise_exponent())).epsilon(1e-12));
  CHECK_THROWS_AS(conditional_success_prob(d, std::vector<double>{}, p), std::invalid_argument);
}

TEST_CASE("conditional success probability against fading Monte Carlo") {
  const auto p = with(3.0, 0.1);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(15.0, 120.0), act(0.0, 1.0);
  std::vector<double> d(5), a(5);
  for (int j = 0; j < 5; ++j) {
    d[j] = dist(rng);
    a[j] = act(rng);
  }
  const double want = conditional_success_prob(d, a, p);
  std::exponential_distribution<double> fade(1.0);
  std::bernoulli_distribution on[5] = {std::bernoulli_distribution(a[0]), std::bernoulli_distribution(a[1]),
                                       std::bernoulli_distribution(a[2]), std::bernoulli_distribution(a[3]),
                                       std::bernoulli_distribution(a[4])};
  const long n = 1000000;
  long hits = 0;
  const double noise = 1.0 / p.rho();
  for (long i = 0; i < n; ++i) {
    const double s = fade(rng) * std::pow(p.r(), -p.alpha());
    double interference = 0.0;
    for (int j = 0; j < 5; ++j)
      if (on[j](rng)) interference += fade(rng) * std::pow(d[j], -p.alpha());
    hits += s > p.theta() * (noise + interference);
  }
  const double got = static_cast<double>(hits) / n;
  const double se = std::sqrt(want * (1.0 - want) / n);
  CHECK(std::abs(got - want) <= 3.0 * se);
}

TEST_CASE("steady-state activity") {
  CHECK(steady_state_activity(0.1, 0.1) == 1.0);
  CHECK(steady_state_activity(0.1, 0.5) == doctest::Approx(0.2));
  CHECK(steady_state_activity(0.5, 0.25) == 1.0);
}

TEST_CASE("conditional activity probability") {
  const auto p = defaults();
  CHECK(conditional_active_prob(30.0, 0.05, p) == 1.0);
  const double ps = 0.9;
  CHECK(conditional_active_prob(1e6 * p.r(), ps, p) == doctest::Approx(p.xi() / ps).epsilon(1e-6));

  // r = 50 m, u = r: periodic trapezoid with 1e4 nodes over the full circle.
  const auto q = with(0.0, 0.1, 1e-4, 50.0);
  const double p50 = success_probability_exact(q).p_s;
  const double r = q.r(), u = r;
  const int n = 10000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double psi = 2.0 * kPi * i / n;
    const double d2 = u * u + r * r - 2.0 * u * r * std::cos(psi);
    const double val = d2 <= 1e-300 ? 1.0 : std::min((q.xi() / p50) * (1.0 + q.theta() * std::pow(r, q.alpha()) /
                                                                                std::pow(d2, 0.5 * q.alpha())),
                                                      1.0);
    acc += val;
  }
  CHECK(conditional_active_prob(u, p50, q) == doctest::Approx(acc / n).epsilon(2e-4));
  // Range: between the far-field value and 1, decreasing away from u = r.
  double prev = 1.0;
  for (double uu : {50.0, 80.0, 150.0, 400.0, 2000.0}) {
    const double v = conditional_active_prob(uu, p50, q);
    CHECK(v >= q.xi() / p50 - 1e-12);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("fixed points in their limits") {
  const auto sparse = with(0.0, 0.1, 1e-12);
  const double noise_only = std::exp(-sparse.noise_exponent());
  CHECK(success_probability_simplified(sparse).p_s == doctest::Approx(noise_only).epsilon(1e-9));
  CHECK(success_probability_exact(sparse).p_s == doctest::Approx(noise_only).epsilon(1e-9));
  const auto easy = with(-60.0, 0.1);
  CHECK(success_probability_simplified(easy).p_s > 0.9999);
  CHECK(success_probability_exact(easy).p_s > 0.9999);
  // sqrt(lambda) r = 0.0025.
  const auto thin = with(0.0, 0.1, 1e-8);
  const double lo = success_probability_simplified(thin).p_s;
  CHECK(success_probability_exact(thin).p_s == doctest::Approx(lo).epsilon(0.01));
}

TEST_CASE("exact fixed point against nested adaptive quadrature") {
  for (double theta_db : {-5.0, 5.0}) {
    const auto p = with(theta_db, 0.2);
    const auto sol = success_probability_exact(p);
    REQUIRE(sol.converged());
    CHECK(sol.p_s == doctest::Approx(exact_oracle(p)).epsilon(5e-4));
  }
}

TEST_CASE("success probability ordering and monotonicity") {
  for (double theta_db : {-10.0, 0.0, 10.0})
    for (double xi : {0.05, 0.3}) {
      const auto p = with(theta_db, xi);
      const double dom = bound_success_probability(p, Regime::dominant);
      const double lb = success_probability_simplified(p).p_s;
      const double ex = success_probability_exact(p).p_s;
      const double fav = bound_success_probability(p, Regime::favorable);
      CHECK(dom <= lb + 1e-9);
      CHECK(lb <= ex + 1e-9);
      CHECK(ex <= fav + 1e-9);
    }
  double prev = 1.0;
  for (double lambda : {1e-5, 3e-5, 1e-4, 3e-4}) {
    const double v = success_probability_exact(with(0.0, 0.1, lambda)).p_s;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("interference bounds") {
  const auto sparse = with(0.0, 0.3, 1e-14);
  const double noise_only = std::exp(-sparse.noise_exponent());
  CHECK(bound_success_probability(sparse, Regime::dominant) == doctest::Approx(noise_only));
  CHECK(bound_success_probability(sparse, Regime::favorable) == doctest::Approx(noise_only));
  const auto saturated = with(0.0, 1.0);
  CHECK(bound_success_probability(saturated, Regime::favorable) ==
        doctest::Approx(bound_success_probability(saturated, Regime::dominant)));
  const auto p = defaults();
  const double d = p.delta();
  const double k = p.lambda() * kPi * kPi * d * std::pow(p.theta(), d) * p.r() * p.r() / std::sin(kPi * d);
  CHECK(dominant_interference_constant(p) == doctest::Approx(k).epsilon(1e-14));
}

TEST_CASE("light-traffic closed form") {
  CHECK(light_traffic_solution(1e-9) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(light_traffic_solution(1.0 / std::numbers::e) == doctest::Approx(1.0 / std::numbers::e).epsilon(1e-7));
  CHECK_THROWS_AS(light_traffic_solution(0.5), RegimeError);
  // The closed form solves p = exp(-c/p): check the residual directly.
  const double c = 0.2;
  const double ps = light_traffic_solution(c);
  CHECK(ps == doctest::Approx(std::exp(-c / ps)).epsilon(1e-12));

  const auto light = with(0.0, 0.01, 1e-5);
  const double lo = success_probability_simplified(light).p_s;
  CHECK(std::abs(success_probability_closed_form(light) - lo) / lo <= 0.02);
  CHECK_THROWS_AS(success_probability_closed_form(with(10.0, 0.5, 1e-3)), RegimeError);
}

TEST_CASE("dominant log-moment") {
  const auto p = defaults();
  CHECK(std::abs(dominant_log_moment(1e-9, 1.0, p)) < 1e-8);
  CHECK(dominant_log_moment(std::complex<double>(1.0, 0.0), 1.0, p).real() ==
        doctest::Approx(std::log(bound_success_probability(p, Regime::dominant))).epsilon(1e-10));
  for (int s : {1, 2, 3}) {
    // Finite sum over k <= s of binom(s,k) binom(delta-1,k-1).
    double sum = 0.0;
    for (int k = 1; k <= s; ++k) sum += real_binomial<double>(s, k) * real_binomial(p.delta() - 1.0, k - 1);
    const double want = -s * p.noise_exponent() - dominant_interference_constant(p) * sum;
    CHECK(dominant_log_moment(std::complex<double>(s, 0.0), 1.0, p).real() == doctest::Approx(want).epsilon(1e-10));
    CHECK(dominant_log_moment_series(std::complex<double>(s, 0.0), 1.0, p).real() ==
          doctest::Approx(want).epsilon(1e-10));
  }
  // The binned shot-noise exponent reproduces the direct evaluation; the
  // binning shows up only once omega times the bin width nears one.
  const ShotNoiseExponent e = dominant_exponent(p, 1.0);
  for (double w : {0.3, 3.0})
    CHECK(std::abs(e.at_omega(w) - dominant_log_moment(w, 1.0, p)) <= 1e-6);
  CHECK(std::abs(e.at_omega(10.0) - dominant_log_moment(10.0, 1.0, p)) <= 1e-4);
}

TEST_CASE("dominant moments and CDF against Poisson topologies") {
  const auto p = defaults();
  const double radius = 2000.0;
  const double alpha = p.alpha(), scale = p.theta() * std::pow(p.r(), alpha);
  std::mt19937_64 rng(5);
  std::poisson_distribution<int> count(p.lambda() * kPi * radius * radius);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int trials = 20000;
  const double xs[] = {0.5, 0.7, 0.9};
  double below[3] = {0.0, 0.0, 0.0};
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    double log_mu = -p.noise_exponent();
    const int n = count(rng);
    for (int j = 0; j < n; ++j) {
      const double d = radius * std::sqrt(uni(rng));
      log_mu += std::log1p(-1.0 / (1.0 + std::pow(d, alpha) / scale));
    }
    acc += std::exp(2.0 * log_mu);
    for (int i = 0; i < 3; ++i) below[i] += std::exp(log_mu) < xs[i];
  }
  const double mc = acc / trials;
  const double model = std::exp(dominant_log_moment(std::complex<double>(2.0, 0.0), 1.0, p).real());
  CHECK(mc == doctest::Approx(model).epsilon(0.01));

  const ShotNoiseExponent e = dominant_exponent(p, 1.0);
  GilPelaezOptions opts;
  opts.tail_tol = 1e-7;
  const auto cdf = gil_pelaez_cdf(e.log_mgf(), xs, e.inversion_options(opts));
  for (int i = 0; i < 3; ++i) {
    const double f = below[i] / trials;
    const double se = std::sqrt(std::max(f * (1.0 - f), 1e-4) / trials);
    CHECK(std::abs(cdf[static_cast<std::size_t>(i)] - f) <= 4.0 * se);
  }
}

TEST_CASE("critical arrival rates") {
  // Rates climb towards 1 as the threshold drops.
  double prev = 0.0;
  for (double theta_db : {0.0, -10.0, -20.0}) {
    const double rate = critical_arrival_rate(with(theta_db, 0.1), 0.1, StabilityKind::sufficient).rate;
    CHECK(rate > prev);
    prev = rate;
  }
  CHECK(prev > 0.95);
  const auto mild = with(-10.0, 0.1);
  CHECK(critical_arrival_rate(mild, 0.1, StabilityKind::necessary).rate >=
        critical_arrival_rate(mild, 0.1, StabilityKind::sufficient).rate);
  const auto p = defaults();
  const auto s = stability_region(p, 0.3);
  CHECK(s.xi_sufficient <= s.xi_necessary);
  CHECK(s.xi_sufficient == doctest::Approx(0.7).epsilon(0.1 / 0.7));
  CHECK_THROWS_AS(critical_arrival_rate(p, 1.5, StabilityKind::sufficient), std::invalid_argument);
}

TEST_CASE("meta distribution initial moments") {
  const auto p = defaults();
  const auto eta = kernel_moments_constant(p, 4);
  for (int k = 1; k <= 4; ++k)
    CHECK(eta[static_cast<std::size_t>(k - 1)] == doctest::Approx(initial_eta(p, k)).epsilon(1e-6));
  // With t = 1 for every interferer q = min(H, 1) >= xi pointwise.
  const auto from_curve = kernel_moments(p, MetaCurve::step(uniform_grid(401), 1.0), 1);
  CHECK(from_curve[0] >= eta[0]);
}

TEST_CASE("meta distribution limits and first moment") {
  const auto quiet = with(0.0, 1e-5);
  const auto q = meta_distribution(quiet);
  // Everything sits in the last grid cell, just below exp(-noise) ~ 1.
  CHECK(q.curve(0.995) < 0.01);
  CHECK(q.curve(1.0) > 0.99);

  const auto p = defaults();
  const auto m = meta_distribution(p);
  CHECK(m.normalization_gap < 1e-4);
  CHECK(m.iterations <= 10);
  CHECK(std::abs(m.curve.mean() - success_probability_exact(p).p_s) <= 0.03);
  const Eigen::ArrayXd& c = m.curve.cdf();
  for (Eigen::Index i = 1; i < c.size(); ++i) CHECK(c(i) >= c(i - 1));
  CHECK(c(0) >= 0.0);
  CHECK(c(c.size() - 1) <= 1.0);
}

TEST_CASE("beta moment matching") {
  const BetaFit fit = beta_from_moments(0.8, 0.66);
  CHECK(fit.beta == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(fit.a() == doctest::Approx(5.6).epsilon(1e-12));
  const double a = fit.a(), b = fit.b();
  const double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
  CHECK(var == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(a / (a + b) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(beta_from_moments(0.7, 0.49).point_mass);
  CHECK_THROWS_AS(beta_from_moments(0.5, 0.6), std::invalid_argument);

  const auto p = defaults();
  const BetaFit f = meta_distribution_beta(p);
  CHECK(f.converged);
  CHECK(f.mu == doctest::Approx(f.m1).epsilon(1e-15));
}

TEST_CASE("planning metrics") {
  const auto p = defaults();
  CHECK(throughput_density(with(-200.0, 0.1), 0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(throughput_density(p, 0.5) == doctest::Approx(1e-4 * 1.0 * 0.5));
  const auto grid = uniform_grid(101);
  CHECK(variance_of_success(MetaCurve::step(grid, 0.6)) == doctest::Approx(0.0).epsilon(1e-12));
  Eigen::ArrayXd below = Eigen::ArrayXd::Zero(grid.size());
  below(grid.size() - 1) = 1.0;
  CHECK(likely_rate_95(MetaCurve(grid, below)) == doctest::Approx(1.0));
  CHECK(likely_rate_95(MetaCurve::step(grid, 0.5)) == doctest::Approx(0.0));

  const DensityOptimum opt = optimal_density(p, SuccessMethod::exact);
  CHECK(opt.interior);
  for (double f : {0.5, 2.0}) {
    const auto q = p.with_lambda(opt.lambda * f);
    CHECK(throughput_density(q, success_probability_exact(q).p_s) <= opt.density * (1.0 + 1e-9));
  }
}
