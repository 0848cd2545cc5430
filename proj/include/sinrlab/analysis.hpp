#pragma once

#include "sinrlab/core.hpp"
#include "sinrlab/numerics.hpp"
#include "sinrlab/shot_noise.hpp"

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sinrlab {

// ---------------------------------------------------------------------------
// Typical-link success probability

enum class SuccessMethod { exact, simplified, closed_form };
std::string to_string(SuccessMethod m);

struct FixedPointSolution {
  double p_s = 0.0;
  SuccessMethod method = SuccessMethod::exact;
  FixedPointReport report;
  bool converged() const { return report.converged; }
};

struct SolverOptions {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 2000;
};

/// Success probability of one link given interferer distances to its
/// receiver and their activity probabilities.
double conditional_success_prob(std::span<const double> interferer_distances,
                                std::span<const double> active_probs, const SystemParams& params);

/// Long-run busy fraction of a Geo/Geo/1 queue: 1 if mu <= xi else xi / mu.
double steady_state_activity(double xi, double mu);

/// Activity probability of a link whose receiver is at distance u from the
/// receiver of an active link, averaged over the orientation of the latter.
double conditional_active_prob(double u, double p_s, const SystemParams& params, int nodes = 2048);

/// Fixed point of the single-integral approximation (a lower bound on the
/// exact solution). Non-convergence is reported in the returned report.
FixedPointSolution success_probability_simplified(const SystemParams& params,
                                                  const SolverOptions& opts = {});

/// Fixed point of the full double-integral characterisation.
FixedPointSolution success_probability_exact(const SystemParams& params,
                                             const SolverOptions& opts = {});

/// Raised when the light-traffic closed form has no real solution.
class RegimeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// -c / W0(-c), the solution of p = exp(-c / p). Requires 0 <= c <= 1/e.
double light_traffic_solution(double c);

/// Light-traffic closed form. The activity kernel is integrated exactly up
/// to the point where it saturates at 1, which keeps the coefficient finite:
/// p = exp(-A - c / p) with A the saturated part, solved by Lambert W.
/// The kink is placed where it sits at p = 1. Throws RegimeError when
/// c e^A > 1/e.
double success_probability_closed_form(const SystemParams& params);

enum class Regime { dominant, favorable };

/// exp(-noise - scale * lambda pi^2 delta theta^delta r^2 / sin(pi delta)),
/// scale = 1 (every transmitter backlogged) or xi (no retransmissions).
double bound_success_probability(const SystemParams& params, Regime regime);

/// lambda pi^2 delta theta^delta r^2 / sin(pi delta).
double dominant_interference_constant(const SystemParams& params);

/// log E[mu^s] in a field where each interferer is active with probability
/// `activity_scale`. Integer s in [0, 64] uses the finite binomial sum;
/// other s are integrated directly.
std::complex<double> dominant_log_moment(std::complex<double> s, double activity_scale,
                                         const SystemParams& params);
/// Same at s = j omega.
std::complex<double> dominant_log_moment(double omega, double activity_scale,
                                         const SystemParams& params);

/// The finite-support binomial sum, valid for any s but only exact when the
/// support is finite (non-negative integer s).
std::complex<double> dominant_log_moment_series(std::complex<double> s, double activity_scale,
                                                const SystemParams& params, int max_terms = 64);

/// Shot-noise form of the same log-moment function, for repeated evaluation
/// along the imaginary axis.
ShotNoiseExponent dominant_exponent(const SystemParams& params, double activity_scale);

// ---------------------------------------------------------------------------
// Stability

enum class StabilityKind { sufficient, necessary };

struct CriticalRate {
  double rate = 0.0;
  bool feasible = true;  // false: the condition fails even at the smallest rate
};

struct StabilityResult {
  double epsilon = 0.0;
  double xi_sufficient = 0.0;
  double xi_necessary = 0.0;
  bool sufficient_feasible = true;
  bool necessary_feasible = true;
};

/// Largest arrival rate whose instability probability P(mu <= xi) stays
/// within epsilon, for the backlogged (sufficient) or the no-retransmission
/// (necessary) interference field. `params.xi()` is ignored.
CriticalRate critical_arrival_rate(const SystemParams& params, double epsilon,
                                   StabilityKind kind);

StabilityResult stability_region(const SystemParams& params, double epsilon);

// ---------------------------------------------------------------------------
// Meta distribution

struct MetaOptions {
  int grid_size = 201;
  double tol = 1e-3;
  int max_iter = 30;
  int max_order = 64;
};

/// Raised when the meta-distribution iteration fails to settle; carries the
/// last two iterates for inspection.
class MetaConvergenceError : public NumericalError {
 public:
  MetaConvergenceError(const std::string& what, MetaCurve previous, MetaCurve last)
      : NumericalError(what), previous_(std::move(previous)), last_(std::move(last)) {}
  const MetaCurve& previous() const { return previous_; }
  const MetaCurve& last() const { return last_; }

 private:
  MetaCurve previous_;
  MetaCurve last_;
};

struct MetaResult {
  MetaCurve curve;
  int iterations = 0;
  double last_change = 0.0;  // max_k |eta_n - eta_{n-1}| at exit
  /// Kernel moments eta^{(k)}, k = 1.., of the converged activity field.
  std::vector<double> eta;
  /// Relative gap between the numerically integrated and the closed-form
  /// initial moment eta_0^{(1)}; a normalization self-check.
  double normalization_gap = 0.0;
};

MetaResult meta_distribution(const SystemParams& params, const MetaOptions& opts = {});

/// Closed form of the initial kernel moment, where every interferer is
/// active with probability xi: 2 pi^3 delta theta^delta xi^k (-1)^{k+1}
/// binom(delta - 1, k - 1) / sin(pi delta).
double initial_eta(const SystemParams& params, int k);

/// Numerical kernel moments eta^{(k)}, k = 1..max_order, of the activity
/// field induced by a reliability law `curve` (exposed for verification).
std::vector<double> kernel_moments(const SystemParams& params, const MetaCurve& curve,
                                   int max_order);
/// Same with every interferer active with probability xi.
std::vector<double> kernel_moments_constant(const SystemParams& params, int max_order);

struct BetaFit {
  double mu = 0.0;
  double beta = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool point_mass = false;  // m2 == m1^2: degenerate law, Beta not defined

  double a() const { return mu * beta / (1.0 - mu); }
  double b() const { return beta; }
  double cdf(double u) const;
  MetaCurve to_curve(const Eigen::ArrayXd& grid) const;
};

/// Moment matching: mean m1 and variance m2 - m1^2.
BetaFit beta_from_moments(double m1, double m2);

BetaFit meta_distribution_beta(const SystemParams& params, double tol = 1e-4, int max_iter = 50);

// ---------------------------------------------------------------------------
// Planning metrics

double throughput_density(const SystemParams& params, double p_s);
double variance_of_success(const MetaCurve& curve);
double likely_rate_95(const MetaCurve& curve);

struct DensityOptimum {
  double lambda = 0.0;
  double density = 0.0;
  bool interior = false;  // maximiser strictly inside the search bracket
};

/// Golden-section search of lambda * log2(1 + theta) * p_s(lambda) on
/// log lambda over [lo, hi].
DensityOptimum optimal_density(const SystemParams& params, SuccessMethod method,
                               double lo = 1e-6, double hi = 1e-2);

/// Dispatches to the requested solver (closed form wrapped as a
/// trivially converged report).
FixedPointSolution solve_success(const SystemParams& params, SuccessMethod method,
                                 const SolverOptions& opts = {});

}  // namespace sinrlab
