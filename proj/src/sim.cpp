#include "sinrlab/sim.hpp"

#include "sinrlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sinrlab {

namespace {

enum Purpose : std::uint64_t { kTopology = 0, kArrivals = 1, kFading = 2 };

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t link, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(link), static_cast<std::uint32_t>(link >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

double wrap_coord(double x, double side) {
  x = std::fmod(x, side);
  return x < 0.0 ? x + side : x;
}

bool inside(const Eigen::Vector2d& p, const Region& region) {
  return p.x() >= 0.0 && p.x() < region.side && p.y() >= 0.0 && p.y() < region.side;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto rng = stream(master, a, b + 0x100);
  return rng();
}

double wrap_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Region& region) {
  Eigen::Vector2d d = (a - b).cwiseAbs();
  if (region.wrap) d = d.cwiseMin(Eigen::Vector2d::Constant(region.side) - d);
  return d.norm();
}

Topology Topology::from_points(Eigen::Matrix2Xd tx, Eigen::Matrix2Xd rx, Region region) {
  if (tx.cols() != rx.cols()) throw std::invalid_argument("Topology: tx and rx counts differ");
  if (tx.cols() == 0) throw std::invalid_argument("Topology: no links");
  Topology t;
  t.tx = std::move(tx);
  t.rx = std::move(rx);
  t.region = region;
  const Eigen::Vector2d centre = Eigen::Vector2d::Constant(0.5 * region.side);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (!inside(t.tx.col(i), region) || !inside(t.rx.col(i), region))
      throw std::invalid_argument("Topology: coordinate outside the region");
    const double d = (t.rx.col(i) - centre).norm();
    if (d < best) {
      best = d;
      t.typical_index = i;
    }
  }
  return t;
}

Topology generate_topology(const SystemParams& params, const Region& region, std::uint64_t seed) {
  const double mean = params.lambda() * region.side * region.side;
  for (int redraw = 0;; ++redraw) {
    auto rng = stream(seed, static_cast<std::uint64_t>(redraw), kTopology);
    const long n = std::poisson_distribution<long>(mean)(rng);
    if (n == 0) {
      if (redraw > 1000) throw std::runtime_error("generate_topology: density too low for the region");
      continue;
    }
    std::uniform_real_distribution<double> pos(0.0, region.side);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    Eigen::Matrix2Xd tx(2, n), rx(2, n);
    for (long i = 0; i < n; ++i) {
      tx.col(i) << pos(rng), pos(rng);
      for (;;) {
        const double a = angle(rng);
        Eigen::Vector2d y = tx.col(i) + params.r() * Eigen::Vector2d(std::cos(a), std::sin(a));
        if (region.wrap) {
          y << wrap_coord(y.x(), region.side), wrap_coord(y.y(), region.side);
        } else if (!inside(y, region)) {
          continue;  // keep every receiver inside a bounded window
        }
        rx.col(i) = y;
        break;
      }
    }
    Topology t = Topology::from_points(std::move(tx), std::move(rx), region);
    t.empty_redraws = redraw;
    return t;
  }
}

bool SimStats::conserves_packets() const {
  for (std::size_t i = 0; i < links(); ++i)
    if (initial_queue_length[i] + arrival_count[i] != departures[i] + final_queue_length[i])
      return false;
  return true;
}

SimStats run_simulation(const Topology& topology, const SystemParams& params, long slots, long warmup,
                        std::uint64_t seed, const SimOptions& opts) {
  if (!(slots > warmup && warmup >= 0))
    throw std::invalid_argument("run_simulation: need slots > warmup >= 0");
  const Eigen::Index n = topology.size();
  const double alpha = params.alpha();

  // gain(i, j): path gain from transmitter j to receiver i.
  Eigen::MatrixXd gain(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      gain(i, j) = std::pow(wrap_distance(topology.tx.col(j), topology.rx.col(i), topology.region), -alpha);
  const double noise = 1.0 / params.rho();  // sigma^2 / P_tx
  const double theta = params.theta();

  std::vector<std::mt19937_64> arrivals_rng, fading_rng;
  for (Eigen::Index i = 0; i < n; ++i) {
    arrivals_rng.push_back(stream(seed, static_cast<std::uint64_t>(i), kArrivals));
    fading_rng.push_back(stream(seed, static_cast<std::uint64_t>(i), kFading));
  }
  std::bernoulli_distribution arrival(params.xi());
  std::exponential_distribution<double> fade(1.0);

  const auto un = static_cast<std::size_t>(n);
  SimStats s;
  s.attempts.assign(un, 0);
  s.successes.assign(un, 0);
  s.active_slots.assign(un, 0);
  s.final_queue_length.assign(un, 0);
  s.arrival_count.assign(un, 0);
  s.initial_queue_length.assign(un, 0);
  s.departures.assign(un, 0);
  s.slots = slots;
  s.warmup = warmup;
  s.typical_index = topology.typical_index;
  if (opts.track_coactivity) s.coactive = Eigen::MatrixXi::Zero(n, n);

  std::vector<long> queue(un, 0);
  std::vector<Eigen::Index> active;
  std::vector<char> success(un, 0);
  for (long t = 0; t < slots; ++t) {
    const bool measured = t >= warmup;
    if (t == warmup) s.initial_queue_length = queue;
    for (std::size_t i = 0; i < un; ++i) {
      if (arrival(arrivals_rng[i])) {
        ++queue[i];
        if (measured) ++s.arrival_count[i];
      }
    }
    active.clear();
    for (Eigen::Index i = 0; i < n; ++i)
      if (opts.dominant || queue[static_cast<std::size_t>(i)] > 0) active.push_back(i);

    for (Eigen::Index i : active) {
      auto& rng = fading_rng[static_cast<std::size_t>(i)];
      const double signal = fade(rng) * gain(i, i);
      double interference = 0.0;
      for (Eigen::Index j : active)
        if (j != i) interference += fade(rng) * gain(i, j);
      success[static_cast<std::size_t>(i)] = signal > theta * (noise + interference);
    }
    for (Eigen::Index i : active) {
      const auto ui = static_cast<std::size_t>(i);
      const bool ok = success[ui];
      const bool had_packet = queue[ui] > 0;
      if (ok && had_packet) --queue[ui];
      if (!measured) continue;
      ++s.attempts[ui];
      if (ok) ++s.successes[ui];
      if (ok && had_packet) ++s.departures[ui];
      if (had_packet || opts.dominant) ++s.active_slots[ui];
    }
    if (measured && opts.track_coactivity)
      for (Eigen::Index i : active)
        for (Eigen::Index j : active) ++s.coactive(i, j);
  }
  s.final_queue_length = queue;
  return s;
}

double pooled_success(const std::vector<SimStats>& runs) {
  double acc = 0.0;
  long links = 0;
  for (const auto& r : runs)
    for (std::size_t i = 0; i < r.links(); ++i) {
      if (r.attempts[i] == 0) continue;
      acc += static_cast<double>(r.successes[i]) / static_cast<double>(r.attempts[i]);
      ++links;
    }
  if (links == 0) throw std::runtime_error("pooled_success: no transmissions recorded");
  return acc / static_cast<double>(links);
}

double attempt_weighted_success(const std::vector<SimStats>& runs) {
  double succ = 0.0, att = 0.0;
  for (const auto& r : runs)
    for (std::size_t i = 0; i < r.links(); ++i) {
      succ += static_cast<double>(r.successes[i]);
      att += static_cast<double>(r.attempts[i]);
    }
  if (att == 0.0) throw std::runtime_error("attempt_weighted_success: no transmissions recorded");
  return succ / att;
}

EmpiricalMeta empirical_meta(const std::vector<SimStats>& runs, const Eigen::ArrayXd& grid,
                             long min_attempts) {
  std::vector<double> mu;
  std::size_t excluded = 0;
  for (const auto& r : runs)
    for (std::size_t i = 0; i < r.links(); ++i) {
      if (r.attempts[i] < min_attempts) {
        ++excluded;
        continue;
      }
      mu.push_back(static_cast<double>(r.successes[i]) / static_cast<double>(r.attempts[i]));
    }
  if (mu.empty()) throw std::runtime_error("empirical_meta: no link has enough attempts");
  std::sort(mu.begin(), mu.end());
  Eigen::ArrayXd cdf(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const auto below = std::lower_bound(mu.begin(), mu.end(), grid(k)) - mu.begin();
    cdf(k) = static_cast<double>(below) / static_cast<double>(mu.size());
  }
  return {MetaCurve(grid, cdf), mu.size(), excluded};
}

namespace {

struct BinAccumulator {
  std::vector<double> hits;
  std::vector<double> total;
};

void accumulate_activity(BinAccumulator& acc, const SimStats& s, const Topology& topo, int bins,
                         double max_distance, DistanceReference ref, bool all_references) {
  if (s.coactive.size() == 0)
    throw std::invalid_argument("activity_vs_distance: run did not track co-activity");
  const Eigen::Index n = topo.size();
  const double width = max_distance / bins;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!all_references && i != s.typical_index) continue;
    const double ref_active = s.coactive(i, i);
    if (ref_active <= 0.0) continue;
    const Eigen::Vector2d origin = ref == DistanceReference::transmitter ? topo.tx.col(i) : topo.rx.col(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = wrap_distance(origin, topo.rx.col(j), topo.region);
      const auto b = static_cast<long>(d / width);
      if (b < 0 || b >= bins) continue;
      acc.hits[static_cast<std::size_t>(b)] += s.coactive(i, j);
      acc.total[static_cast<std::size_t>(b)] += ref_active;
    }
  }
}

std::vector<ActivityBin> finish_bins(const BinAccumulator& acc, int bins, double max_distance) {
  std::vector<ActivityBin> out;
  const double width = max_distance / bins;
  for (int b = 0; b < bins; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    if (acc.total[ub] <= 0.0) continue;
    out.push_back({(b + 0.5) * width, acc.hits[ub] / acc.total[ub], acc.total[ub]});
  }
  return out;
}

}  // namespace

std::vector<ActivityBin> activity_vs_distance(const std::vector<SimStats>& runs,
                                              const std::vector<Topology>& topologies, int bins,
                                              double max_distance, DistanceReference ref,
                                              bool all_references) {
  if (runs.size() != topologies.size())
    throw std::invalid_argument("activity_vs_distance: runs and topologies differ in count");
  if (bins <= 0 || !(max_distance > 0.0))
    throw std::invalid_argument("activity_vs_distance: need bins > 0 and max_distance > 0");
  BinAccumulator acc{std::vector<double>(static_cast<std::size_t>(bins), 0.0),
                     std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
  for (std::size_t k = 0; k < runs.size(); ++k)
    accumulate_activity(acc, runs[k], topologies[k], bins, max_distance, ref, all_references);
  return finish_bins(acc, bins, max_distance);
}

std::vector<ActivityBin> activity_vs_distance(const SimStats& stats, const Topology& topology,
                                              int bins, double max_distance, DistanceReference ref,
                                              bool all_references) {
  return activity_vs_distance(std::vector<SimStats>{stats}, std::vector<Topology>{topology}, bins,
                              max_distance, ref, all_references);
}

double unstable_fraction(const SimStats& stats, const SystemParams& params) {
  if (stats.links() == 0) return 0.0;
  std::size_t unstable = 0;
  for (std::size_t i = 0; i < stats.links(); ++i) {
    if (stats.attempts[i] == 0) continue;
    const double mu = static_cast<double>(stats.successes[i]) / static_cast<double>(stats.attempts[i]);
    if (mu <= params.xi()) ++unstable;
  }
  return static_cast<double>(unstable) / static_cast<double>(stats.links());
}

RealizationSeeds realization_seeds(std::uint64_t master_seed, std::size_t index) {
  return {derive_seed(master_seed, index, kTopology), derive_seed(master_seed, index, kFading)};
}

Ensemble simulate_ensemble(const SystemParams& params, const Region& region, int realizations,
                           long slots, long warmup, std::uint64_t master_seed, unsigned jobs,
                           const SimOptions& opts) {
  if (realizations <= 0) throw std::invalid_argument("simulate_ensemble: realizations must be positive");
  Ensemble e;
  const auto n = static_cast<std::size_t>(realizations);
  e.topologies.resize(n);
  e.runs.resize(n);
  parallel_for(n, jobs, [&](std::size_t k) {
    const RealizationSeeds seeds = realization_seeds(master_seed, k);
    e.topologies[k] = generate_topology(params, region, seeds.topology);
    e.runs[k] = run_simulation(e.topologies[k], params, slots, warmup, seeds.dynamics, opts);
  });
  return e;
}

}  // namespace sinrlab
