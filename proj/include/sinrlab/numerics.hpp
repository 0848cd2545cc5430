#pragma once

#include <cmath>
#include <complex>
#include <concepts>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sinrlab {

/// A numerical routine exhausted its budget or left its domain.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Special functions

/// Principal branch of the Lambert W function, w * exp(w) = x for x >= -1/e.
template <std::floating_point T>
T lambert_w0(T x) {
  const T inv_e = T(1) / std::numbers::e_v<T>;
  if (std::isnan(x) || x < -inv_e) throw std::domain_error("lambert_w0: x < -1/e");
  if (x == T(0)) return T(0);
  if (x == -inv_e) return T(-1);
  if (std::isinf(x)) return x;

  T w;
  if (x < T(-0.25)) {
    // Branch-point series in p = sqrt(2 (e x + 1)).
    const T p = std::sqrt(T(2) * (std::numbers::e_v<T> * x + T(1)));
    w = T(-1) + p - p * p / T(3) + T(11) / T(72) * p * p * p;
  } else if (x < T(3)) {
    w = std::log1p(x);
    w = w * (T(1) - std::log1p(w) / (T(2) + w));
  } else {
    const T l1 = std::log(x);
    const T l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  // Halley iteration; cubic convergence means a handful of steps suffices.
  for (int it = 0; it < 64; ++it) {
    const T ew = std::exp(w);
    const T f = w * ew - x;
    const T wp1 = w + T(1);
    if (wp1 == T(0)) break;
    const T denom = ew * wp1 - (w + T(2)) * f / (T(2) * wp1);
    const T step = f / denom;
    w -= step;
    if (std::abs(step) <= T(4) * std::numeric_limits<T>::epsilon() * (T(1) + std::abs(w))) break;
  }
  return w;
}

/// Generalised binomial coefficient z (z-1) ... (z-k+1) / k! for complex z.
template <std::floating_point T>
std::complex<T> complex_binomial(std::complex<T> z, int k) {
  if (k < 0) throw std::invalid_argument("complex_binomial: k must be non-negative");
  std::complex<T> acc(1);
  for (int i = 0; i < k; ++i) acc *= (z - T(i)) / T(i + 1);
  return acc;
}

template <std::floating_point T>
T real_binomial(T z, int k) {
  return complex_binomial(std::complex<T>(z), k).real();
}

/// exp(z) - 1 without cancellation for small |z|.
inline std::complex<double> complex_expm1(std::complex<double> z) {
  const double s = std::sin(0.5 * z.imag());
  const double c = std::cos(z.imag());
  return {std::expm1(z.real()) * c - 2.0 * s * s, std::exp(z.real()) * std::sin(z.imag())};
}

/// Regularized incomplete beta function I_x(a, b), the Beta(a, b) CDF.
double regularized_incomplete_beta(double x, double a, double b);

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureOptions {
  double abs_tol = 1e-6;
  double rel_tol = 0.0;
  int max_intervals = 4000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Globally adaptive 7/15-point Gauss-Kronrod on a finite interval. Does
/// not throw; check `converged`.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts = {});

/// Integral of f over (0, inf). The domain is split at 1 and the tail is
/// folded back through u -> 1/u so both pieces are finite intervals. Extra
/// breakpoints (kinks of f) are honoured on either side of the split.
/// Throws NumericalError if the tolerance is not met.
double integrate_radial(const std::function<double(double)>& f, double tol = 1e-6,
                        std::span<const double> breakpoints = {});

/// Fixed-order Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
  explicit GaussLegendre(int n);
};

// ---------------------------------------------------------------------------
// Characteristic-function inversion

/// Maps omega > 0 to log E[X^{j omega}] for a random variable X on (0, 1].
using LogMgf = std::function<std::complex<double>(double)>;

struct GilPelaezOptions {
  double omega_min = 1e-6;
  /// Upper limit chosen as the first Omega with |E[X^{j Omega}]| / Omega below this.
  double tail_tol = 1e-9;
  double max_omega = 1e5;
  /// Absolute error target; a truncation remainder beyond 100x this throws.
  double abs_tol = 1e-6;
  /// Lower bound on the fastest phase rotation of the characteristic function,
  /// used to size quadrature panels when it oscillates faster than E[ln X] suggests.
  double min_rate = 0.0;
};

struct GilPelaezDiagnostics {
  double omega_max = 0.0;
  double tail_bound = 0.0;
  int nodes = 0;
};

/// P(X < x) = 1/2 - (1/pi) int_0^inf Im{x^{-j w} E[X^{j w}]} dw / w, clamped to [0, 1].
double gil_pelaez_cdf(const LogMgf& log_mgf, double x, const GilPelaezOptions& opts = {},
                      GilPelaezDiagnostics* diag = nullptr);

/// Vectorised form: the characteristic function is evaluated once on a
/// shared node set and reused for every abscissa. Values outside (0, 1] map
/// to 0 (x <= 0) or 1 (x > 1 is beyond the support).
std::vector<double> gil_pelaez_cdf(const LogMgf& log_mgf, std::span<const double> xs,
                                   const GilPelaezOptions& opts = {},
                                   GilPelaezDiagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Fixed-point iteration

struct FixedPointReport {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Damped Picard iteration p <- (1 - damping) p + damping T(p) on (0, 1].
/// Stops once |T(p) - p| <= tol; exhausting max_iter yields converged = false.
FixedPointReport fixed_point_solve(const std::function<double(double)>& map, double init,
                                   double damping = 0.5, double tol = 1e-10,
                                   int max_iter = 10000);

}  // namespace sinrlab
