#include "sinrlab/analysis.hpp"
#include "sinrlab/sim.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace sinrlab;

namespace {

SystemParams params_with(double theta_db, double xi, double r = 25.0, double lambda = 1e-4) {
  RawParams raw;
  raw.theta_db = theta_db;
  raw.xi = xi;
  raw.r = r;
  raw.lambda = lambda;
  return build_params(raw);
}

bool same(const SimStats& a, const SimStats& b) {
  return a.attempts == b.attempts && a.successes == b.successes && a.active_slots == b.active_slots &&
         a.final_queue_length == b.final_queue_length && a.arrival_count == b.arrival_count &&
         a.initial_queue_length == b.initial_queue_length && a.departures == b.departures &&
         a.coactive == b.coactive && a.typical_index == b.typical_index;
}

}  // namespace

TEST_CASE("wrap distance") {
  const Region region = Region::make(1000.0);
  const Eigen::Vector2d o(0.0, 0.0);
  CHECK(wrap_distance(o, o, region) == 0.0);
  CHECK(wrap_distance(o, Eigen::Vector2d(999.0, 0.0), region) == doctest::Approx(1.0));
  CHECK(wrap_distance(o, Eigen::Vector2d(500.0, 500.0), region) == doctest::Approx(500.0 * std::numbers::sqrt2));
  const Region open = Region::make(1000.0, false);
  CHECK(wrap_distance(o, Eigen::Vector2d(999.0, 0.0), open) == doctest::Approx(999.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector2d a(u(rng), u(rng)), b(u(rng), u(rng));
    const double d = wrap_distance(a, b, region);
    CHECK(d <= (a - b).norm() + 1e-12);
    CHECK(d <= 500.0 * std::numbers::sqrt2 + 1e-9);
  }
}

TEST_CASE("topology generation") {
  const auto p = params_with(0.0, 0.1);
  const Region region;
  int within = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Topology t = generate_topology(p, region, seed);
    within += std::abs(static_cast<double>(t.size()) - 100.0) <= 30.0;
  }
  CHECK(within >= 950);

  const Topology a = generate_topology(p, region, 42);
  const Topology b = generate_topology(p, region, 42);
  CHECK(a.tx == b.tx);
  CHECK(a.rx == b.rx);
  const Eigen::Vector2d centre(500.0, 500.0);
  double nearest = 1e300;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    CHECK(wrap_distance(a.tx.col(i), a.rx.col(i), region) == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(a.rx.col(i).minCoeff() >= 0.0);
    CHECK(a.rx.col(i).maxCoeff() < 1000.0);
    nearest = std::min(nearest, (a.rx.col(i) - centre).norm());
  }
  CHECK((a.rx.col(a.typical_index) - centre).norm() == nearest);

  // A bounded window keeps receivers inside instead of wrapping them.
  const Topology w = generate_topology(p, Region::make(1000.0, false), 7);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    CHECK((w.tx.col(i) - w.rx.col(i)).norm() == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("sparse regions redraw empty realisations") {
  const auto p = params_with(0.0, 0.1, 25.0, 1e-6);  // mean 0.01 links in 100 m x 100 m
  const Topology t = generate_topology(p, Region::make(100.0), 1);
  CHECK(t.size() >= 1);
  CHECK(t.empty_redraws > 0);
}

TEST_CASE("simulation bookkeeping") {
  const auto p = params_with(0.0, 0.2);
  const Topology t = generate_topology(p, Region{}, 9);
  const SimStats s = run_simulation(t, p, 3000, 300, 77);
  CHECK(s.conserves_packets());
  for (std::size_t i = 0; i < s.links(); ++i) {
    CHECK(s.successes[i] <= s.attempts[i]);
    CHECK(s.attempts[i] <= s.measured_slots());
    CHECK(s.active_slots[i] >= s.attempts[i]);
    CHECK(s.coactive(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) == s.active_slots[i]);
  }
  CHECK(same(s, run_simulation(t, p, 3000, 300, 77)));
  CHECK(!same(s, run_simulation(t, p, 3000, 300, 78)));
  CHECK_THROWS_AS(run_simulation(t, p, 100, 100, 1), std::invalid_argument);
}

TEST_CASE("no arrivals means no activity") {
  // The model requires xi > 0; 1e-12 per slot yields no arrival in practice.
  const auto p = params_with(0.0, 1e-12);
  const Topology t = generate_topology(p, Region{}, 2);
  const SimStats s = run_simulation(t, p, 2000, 100, 5);
  for (std::size_t i = 0; i < s.links(); ++i) {
    CHECK(s.attempts[i] == 0);
    CHECK(s.active_slots[i] == 0);
  }
  CHECK(unstable_fraction(s, p) == 0.0);
}

TEST_CASE("isolated link is noise limited") {
  const auto p = params_with(0.0, 0.5, 400.0);
  Eigen::Matrix2Xd tx(2, 1), rx(2, 1);
  tx << 100.0, 100.0;
  rx << 500.0, 100.0;
  const Topology t = Topology::from_points(tx, rx, Region{});
  const SimStats s = run_simulation(t, p, 40000, 1000, 13);
  const double want = std::exp(-p.noise_exponent());
  const double n = static_cast<double>(s.attempts[0]);
  const double got = static_cast<double>(s.successes[0]) / n;
  CHECK(std::abs(got - want) <= 3.0 * std::sqrt(want * (1.0 - want) / n));
}

TEST_CASE("backlogged mode matches the dominant bound") {
  const auto p = params_with(0.0, 0.1);
  SimOptions opts;
  opts.dominant = true;
  opts.track_coactivity = false;
  const Ensemble e = simulate_ensemble(p, Region{}, 12, 2500, 500, 99, 2, opts);
  Eigen::ArrayXd per(static_cast<Eigen::Index>(e.runs.size()));
  for (std::size_t k = 0; k < e.runs.size(); ++k) {
    const SimStats& s = e.runs[k];
    CHECK(s.conserves_packets());
    for (std::size_t i = 0; i < s.links(); ++i) CHECK(s.attempts[i] == s.measured_slots());
    per(static_cast<Eigen::Index>(k)) = pooled_success({s});
  }
  const double se = std::sqrt((per - per.mean()).square().sum() / (per.size() - 1) / per.size());
  CHECK(std::abs(pooled_success(e.runs) - bound_success_probability(p, Regime::dominant)) <= 3.0 * se);
  // Every link sends every slot, so the two pooling rules coincide.
  CHECK(attempt_weighted_success(e.runs) == doctest::Approx(pooled_success(e.runs)).epsilon(1e-12));
}

TEST_CASE("ensembles do not depend on the worker count") {
  const auto p = params_with(0.0, 0.1);
  const Ensemble a = simulate_ensemble(p, Region{}, 4, 800, 100, 5, 1);
  const Ensemble b = simulate_ensemble(p, Region{}, 4, 800, 100, 5, 3);
  for (std::size_t k = 0; k < 4; ++k) CHECK(same(a.runs[k], b.runs[k]));
  const auto s0 = realization_seeds(5, 0), s1 = realization_seeds(5, 1);
  CHECK(s0.topology != s1.topology);
  CHECK(s0.topology != s0.dynamics);
}

TEST_CASE("empirical meta distribution") {
  SimStats s;
  s.attempts = {100, 200, 50, 10};
  s.successes = {80, 160, 40, 10};
  const Eigen::ArrayXd grid = uniform_grid(101);
  const EmpiricalMeta m = empirical_meta({s}, grid);
  CHECK(m.links_used == 3);
  CHECK(m.links_excluded == 1);
  CHECK(m.curve(0.79) == 0.0);
  CHECK(m.curve(0.81) == 1.0);
  SimStats none;
  none.attempts = {3};
  none.successes = {1};
  CHECK_THROWS(empirical_meta({none}, grid));

  // Its mean agrees with pooled_success on a real run.
  const auto p = params_with(5.0, 0.2);
  const Ensemble e = simulate_ensemble(p, Region{}, 3, 4000, 500, 21, 2);
  const EmpiricalMeta em = empirical_meta(e.runs, uniform_grid(201));
  CHECK(em.links_excluded == 0);
  CHECK(std::abs(em.curve.mean() - pooled_success(e.runs)) <= 0.01);
  CHECK(attempt_weighted_success(e.runs) <= pooled_success(e.runs));
}

TEST_CASE("unstable fraction at the load extremes") {
  const Topology t = generate_topology(params_with(0.0, 0.01), Region{}, 4);
  const auto light = params_with(0.0, 0.01);
  CHECK(unstable_fraction(run_simulation(t, light, 4000, 400, 1), light) <= 0.02);
  const auto full = params_with(0.0, 1.0);
  CHECK(unstable_fraction(run_simulation(t, full, 2000, 200, 1), full) == 1.0);
}

TEST_CASE("conditional activity decouples far away") {
  const auto p = params_with(0.0, 0.1);
  const Ensemble e = simulate_ensemble(p, Region{}, 4, 5000, 500, 8, 2);
  const double max_d = 700.0;
  const auto bins = activity_vs_distance(e.runs, e.topologies, 14, max_d, DistanceReference::transmitter, true);
  double active = 0.0, links = 0.0;
  for (const auto& r : e.runs)
    for (long a : r.active_slots) {
      active += static_cast<double>(a) / static_cast<double>(r.measured_slots());
      links += 1.0;
    }
  const double mean_activity = active / links;
  for (const auto& b : bins) {
    CHECK(b.samples > 0.0);
    if (b.distance >= 5.0 / std::sqrt(p.lambda())) CHECK(b.activity == doctest::Approx(mean_activity).epsilon(0.1));
  }
  CHECK(bins.front().activity > bins.back().activity);
  // Runs without co-activity tracking cannot be binned.
  SimOptions off;
  off.track_coactivity = false;
  const SimStats s = run_simulation(e.topologies[0], p, 500, 50, 1, off);
  CHECK_THROWS_AS(activity_vs_distance(s, e.topologies[0], 4, 100.0), std::invalid_argument);
}

TEST_CASE("stats JSON round trip") {
  const auto p = params_with(0.0, 0.1);
  const Topology t = generate_topology(p, Region{}, 3);
  const SimStats s = run_simulation(t, p, 600, 100, 3);
  const SimStats back = sim_stats_from_json(to_json(s));
  CHECK(same(s, back));
  CHECK(back.slots == s.slots);
  CHECK(back.warmup == s.warmup);
}
