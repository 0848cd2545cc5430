#include "sinrlab/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>

namespace sinrlab {

namespace {

// Kronrod 15-point abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights.
constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWk[7];
  double gauss = fc * kWg[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kXk[i];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    kronrod += kWk[i] * (f1 + f2);
    if (i % 2 == 1) gauss += kWg[i / 2] * (f1 + f2);
  }
  kronrod *= h;
  gauss *= h;
  double err = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod)) err = std::numeric_limits<double>::infinity();
  return {a, b, kronrod, err};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<Segment> heap;
  Segment first = gauss_kronrod15(f, a, b);
  out.evaluations = 15;
  heap.push(first);
  double total = first.value;
  double total_err = first.error;
  int intervals = 1;

  auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

  while (total_err > target() && intervals < opts.max_intervals) {
    Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted at machine precision
    heap.pop();
    Segment left = gauss_kronrod15(f, worst.a, mid);
    Segment right = gauss_kronrod15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }

  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  out.converged = std::isfinite(total) && total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
  return out;
}

double integrate_radial(const std::function<double(double)>& f, double tol,
                        std::span<const double> breakpoints) {
  std::vector<double> inner = {0.0, 1.0};
  std::vector<double> outer = {0.0, 1.0};  // in y = 1/u
  for (double b : breakpoints) {
    if (!(b > 0.0) || !std::isfinite(b) || b == 1.0) continue;
    if (b < 1.0)
      inner.push_back(b);
    else
      outer.push_back(1.0 / b);
  }
  std::sort(inner.begin(), inner.end());
  std::sort(outer.begin(), outer.end());
  inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
  outer.erase(std::unique(outer.begin(), outer.end()), outer.end());

  const auto pieces = static_cast<double>(inner.size() + outer.size() - 2);
  QuadratureOptions opts;
  opts.abs_tol = tol / pieces;
  opts.max_intervals = 2000;

  const auto folded = [&f](double y) {
    if (y <= 0.0) return 0.0;
    return f(1.0 / y) / (y * y);
  };

  double total = 0.0;
  auto run = [&](const std::function<double(double)>& g, const std::vector<double>& cuts) {
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const QuadratureResult r = integrate_adaptive(g, cuts[i], cuts[i + 1], opts);
      if (!r.converged) {
        std::ostringstream msg;
        msg << "integrate_radial: no convergence on [" << cuts[i] << ", " << cuts[i + 1]
            << "] (estimate " << r.value << ", error " << r.error << ", target " << opts.abs_tol
            << ")";
        throw NumericalError(msg.str());
      }
      total += r.value;
    }
  };
  run(f, inner);
  run(folded, outer);
  return total;
}

GaussLegendre::GaussLegendre(int n) : nodes(n), weights(n) {
  if (n < 1) throw std::invalid_argument("GaussLegendre: n must be positive");
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

// ---------------------------------------------------------------------------

std::vector<double> gil_pelaez_cdf(const LogMgf& log_mgf, std::span<const double> xs,
                                   const GilPelaezOptions& opts, GilPelaezDiagnostics* diag) {
  using cd = std::complex<double>;
  std::vector<double> out(xs.size(), 0.0);

  std::vector<std::size_t> active;
  std::vector<double> logs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0)) {
      out[i] = 0.0;
    } else if (xs[i] > 1.0) {
      out[i] = 1.0;
    } else {
      active.push_back(i);
      logs.push_back(std::log(xs[i]));
    }
  }
  if (active.empty()) return out;

  // E[ln X] from the slope of the phase at the origin; it bounds how fast the
  // characteristic function itself rotates.
  const double probe = 1e-4;
  const double mean_log = log_mgf(probe).imag() / probe;
  double rate = std::abs(mean_log);
  for (double l : logs) rate = std::max(rate, std::abs(l) + std::abs(mean_log));
  rate = std::max({rate, opts.min_rate, 1e-3});

  // Upper limit: first Omega where the integrand envelope drops below tail_tol.
  double omega_hi = 1.0;
  double env = 0.0;
  for (;;) {
    env = std::exp(log_mgf(omega_hi).real()) / omega_hi;
    if (env < opts.tail_tol) break;
    if (omega_hi >= opts.max_omega) {
      omega_hi = opts.max_omega;
      env = std::exp(log_mgf(omega_hi).real()) / omega_hi;
      break;
    }
    omega_hi = std::min(omega_hi * 1.25, opts.max_omega);
  }
  const double tail_bound = env / std::numbers::pi;
  if (tail_bound > 100.0 * opts.abs_tol) {
    std::ostringstream msg;
    msg << "gil_pelaez_cdf: characteristic function has not decayed by omega = " << omega_hi
        << " (tail bound " << tail_bound << ")";
    throw NumericalError(msg.str());
  }

  // 16-point Gauss-Legendre panels, each spanning at most ~2.5 periods of the
  // fastest oscillation present.
  constexpr int kOrder = 16;
  static const GaussLegendre gl(kOrder);
  const double span = omega_hi - opts.omega_min;
  const double h_target = std::min(4.0, 2.5 * 2.0 * std::numbers::pi / rate);
  const auto panels = static_cast<long>(std::ceil(span / h_target));
  const double h = span / static_cast<double>(panels);

  const std::size_t nx = active.size();
  std::vector<cd> base(nx * kOrder);
  std::vector<cd> step(nx);
  std::vector<cd> rot(nx, cd(1.0, 0.0));
  std::vector<double> acc(nx, 0.0);
  std::array<double, kOrder> offset{};
  for (int k = 0; k < kOrder; ++k) offset[k] = 0.5 * h * (1.0 + gl.nodes[k]);
  for (std::size_t i = 0; i < nx; ++i) {
    for (int k = 0; k < kOrder; ++k)
      base[i * kOrder + k] = std::exp(cd(0.0, -logs[i] * (opts.omega_min + offset[k])));
    step[i] = std::exp(cd(0.0, -logs[i] * h));
  }

  std::array<cd, kOrder> coef{};
  for (long p = 0; p < panels; ++p) {
    const double start = opts.omega_min + static_cast<double>(p) * h;
    for (int k = 0; k < kOrder; ++k) {
      const double w = start + offset[k];
      coef[k] = std::exp(log_mgf(w)) * (0.5 * h * gl.weights[k] / w);
    }
    for (std::size_t i = 0; i < nx; ++i) {
      const cd* b = &base[i * kOrder];
      cd s(0.0, 0.0);
      for (int k = 0; k < kOrder; ++k) s += b[k] * coef[k];
      acc[i] += (rot[i] * s).imag();
      rot[i] *= step[i];
    }
    if ((p & 63) == 63)
      for (auto& r : rot) r /= std::abs(r);
  }

  for (std::size_t i = 0; i < nx; ++i) {
    // The omitted sliver [0, omega_min] has integrand -> E[ln X] - ln x.
    const double sliver = opts.omega_min * (mean_log - logs[i]);
    const double value = 0.5 - (acc[i] + sliver) / std::numbers::pi;
    out[active[i]] = std::clamp(value, 0.0, 1.0);
  }
  if (diag) {
    diag->omega_max = omega_hi;
    diag->tail_bound = tail_bound;
    diag->nodes = static_cast<int>(panels * kOrder);
  }
  return out;
}

double gil_pelaez_cdf(const LogMgf& log_mgf, double x, const GilPelaezOptions& opts,
                      GilPelaezDiagnostics* diag) {
  const double xs[1] = {x};
  return gil_pelaez_cdf(log_mgf, std::span<const double>(xs, 1), opts, diag).front();
}

// ---------------------------------------------------------------------------

FixedPointReport fixed_point_solve(const std::function<double(double)>& map, double init,
                                   double damping, double tol, int max_iter) {
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("fixed_point_solve: damping must lie in (0, 1]");
  constexpr double kFloor = 1e-300;
  FixedPointReport rep;
  double p = std::clamp(init, kFloor, 1.0);
  for (int it = 0; it < max_iter; ++it) {
    const double t = map(p);
    if (!std::isfinite(t)) throw NumericalError("fixed_point_solve: map returned a non-finite value");
    rep.iterations = it + 1;
    rep.residual = std::abs(t - p);
    if (rep.residual <= tol) {
      rep.value = p;
      rep.converged = true;
      return rep;
    }
    p = std::clamp((1.0 - damping) * p + damping * t, kFloor, 1.0);
  }
  rep.value = p;
  rep.residual = std::abs(map(p) - p);
  rep.converged = rep.residual <= tol;
  return rep;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double incbeta_cf(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) return h;
  }
  throw NumericalError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("regularized_incomplete_beta: a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * incbeta_cf(x, a, b) / a;
  return 1.0 - front * incbeta_cf(1.0 - x, b, a) / b;
}

}  // namespace sinrlab
