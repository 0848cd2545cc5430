#include "sinrlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sinrlab {

namespace {

// The critical rates are read off CDF crossings; a 1e-7 tail envelope keeps
// the truncation remainder far below the 1e-6 accuracy target.
GilPelaezOptions stability_inversion() {
  GilPelaezOptions o;
  o.tail_tol = 1e-7;
  return o;
}

// P(mu <= xi) for the field in which every interferer is active with
// probability `scale`; exact up to inversion error where it matters for a
// comparison with epsilon, an upper bound below 0.1 epsilon.
double instability(const SystemParams& params, double scale, double xi, double epsilon) {
  const ShotNoiseExponent e = dominant_exponent(params, scale);
  // Markov: P(-ln mu >= -ln xi) <= E[-ln mu] / (-ln xi). A sparse field has
  // a characteristic function that barely decays, so the inversion is
  // skipped when the bound alone puts the probability well below epsilon.
  if (xi >= 1.0) return 1.0;
  const double bound = (e.shift() + e.mean_jump_integral()) / -std::log(xi);
  if (bound < 0.1 * epsilon) return bound;
  return gil_pelaez_cdf(e.log_mgf(), xi, e.inversion_options(stability_inversion()));
}

}  // namespace

CriticalRate critical_arrival_rate(const SystemParams& params, double epsilon,
                                   StabilityKind kind) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("critical_arrival_rate: epsilon must lie in [0, 1]");
  constexpr double lo_rate = 1e-4;

  if (kind == StabilityKind::sufficient) {
    // The backlogged field does not depend on the candidate rate, so its CDF
    // is inverted once on a dense grid and the crossing interpolated.
    const ShotNoiseExponent e = dominant_exponent(params, 1.0);
    constexpr int n = 4001;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = lo_rate + (1.0 - lo_rate) * i / (n - 1);
    std::vector<double> cdf =
        gil_pelaez_cdf(e.log_mgf(), xs, e.inversion_options(stability_inversion()));
    for (int i = 1; i < n; ++i) cdf[i] = std::max(cdf[i], cdf[i - 1]);
    if (cdf.front() > epsilon) return {0.0, false};
    if (cdf.back() <= epsilon) return {1.0, true};
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), epsilon);
    const auto i = static_cast<std::size_t>(it - cdf.begin());
    const double t = (epsilon - cdf[i - 1]) / std::max(cdf[i] - cdf[i - 1], 1e-300);
    return {xs[i - 1] + t * (xs[i] - xs[i - 1]), true};
  }

  // The no-retransmission field thins with the candidate rate itself, so
  // every probe rebuilds the exponent. P(mu <= xi) - epsilon is increasing in
  // xi; a bracketing Illinois iteration needs far fewer probes than halving.
  const auto excess = [&](double xi) { return instability(params, xi, xi, epsilon) - epsilon; };
  double lo = lo_rate, hi = 1.0;
  double f_lo = excess(lo);
  if (f_lo > 0.0) return {0.0, false};
  double f_hi = excess(hi);
  if (f_hi <= 0.0) return {1.0, true};
  int side = 0;
  for (int i = 0; i < 40 && hi - lo > 1e-5; ++i) {
    double mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double f_mid = excess(mid);
    if (f_mid <= 0.0) {
      lo = mid;
      f_lo = f_mid;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      f_hi = f_mid;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
    if (std::abs(f_mid) < 1e-7) break;
  }
  return {lo, true};
}

StabilityResult stability_region(const SystemParams& params, double epsilon) {
  const CriticalRate s = critical_arrival_rate(params, epsilon, StabilityKind::sufficient);
  const CriticalRate n = critical_arrival_rate(params, epsilon, StabilityKind::necessary);
  return {epsilon, s.rate, n.rate, s.feasible, n.feasible};
}

}  // namespace sinrlab
