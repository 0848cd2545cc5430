#pragma once

#include "sinrlab/core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sinrlab {

/// Transmitter/receiver pairs in a square region. Column i of `tx` and `rx`
/// is link i.
struct Topology {
  Eigen::Matrix2Xd tx;
  Eigen::Matrix2Xd rx;
  Region region;
  Eigen::Index typical_index = 0;
  /// Number of empty draws that were discarded before a non-empty one.
  int empty_redraws = 0;

  Eigen::Index size() const { return tx.cols(); }

  /// Builds a topology from explicit coordinates (validated).
  static Topology from_points(Eigen::Matrix2Xd tx, Eigen::Matrix2Xd rx, Region region);
};

/// Per-link outcomes of one run, counted over slots [warmup, slots).
struct SimStats {
  std::vector<long> attempts;
  std::vector<long> successes;
  std::vector<long> active_slots;
  std::vector<long> final_queue_length;
  std::vector<long> arrival_count;
  /// Queue lengths when statistics start; with `departures` this makes the
  /// conservation identity initial + arrivals = departures + final exact.
  std::vector<long> initial_queue_length;
  /// Packets removed from the queue (differs from successes only when idle
  /// links send dummy packets).
  std::vector<long> departures;
  long slots = 0;
  long warmup = 0;
  Eigen::Index typical_index = 0;
  /// coactive(i, j): slots in which links i and j were both active. Row
  /// typical_index holds the activity of every link conditioned on the
  /// typical link being active.
  Eigen::MatrixXi coactive;

  std::size_t links() const { return attempts.size(); }
  long measured_slots() const { return slots - warmup; }
  bool conserves_packets() const;
};

struct SimOptions {
  /// Every link transmits every slot, with dummy packets when idle.
  bool dominant = false;
  bool track_coactivity = true;
};

/// Poisson number of links, uniform transmitters, receivers at distance r in
/// a uniform direction. Deterministic in `seed`.
Topology generate_topology(const SystemParams& params, const Region& region, std::uint64_t seed);

/// Torus metric when region.wrap, Euclidean otherwise.
double wrap_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Region& region);

SimStats run_simulation(const Topology& topology, const SystemParams& params, long slots, long warmup,
                        std::uint64_t seed, const SimOptions& opts = {});

/// Success probability of a typical link: the per-link ratio
/// successes/attempts averaged over every link that transmitted, pooled
/// across runs. This is the first moment of the empirical reliability law.
double pooled_success(const std::vector<SimStats>& runs);
/// Sum of successes over sum of attempts. Links that are backlogged more
/// often weigh more, so this sits below pooled_success() under queueing.
double attempt_weighted_success(const std::vector<SimStats>& runs);

struct EmpiricalMeta {
  MetaCurve curve;
  std::size_t links_used = 0;
  std::size_t links_excluded = 0;
};

/// Fraction of links whose empirical reliability successes/attempts falls
/// strictly below each grid value. Links with fewer than `min_attempts`
/// measured attempts are excluded.
EmpiricalMeta empirical_meta(const std::vector<SimStats>& runs, const Eigen::ArrayXd& grid,
                             long min_attempts = 50);

enum class DistanceReference { transmitter, receiver };

struct ActivityBin {
  double distance = 0.0;   // bin centre
  double activity = 0.0;   // P(link active | reference link active)
  double samples = 0.0;    // reference-active slots pooled into the bin
};

/// Conditional activity of other links against their distance to the
/// reference link (its transmitter or its receiver, measured to their
/// receivers). With `all_references` every link serves as reference in
/// turn, which pools far more samples than the typical link alone. Bins
/// without samples are omitted.
std::vector<ActivityBin> activity_vs_distance(const SimStats& stats, const Topology& topology,
                                              int bins, double max_distance,
                                              DistanceReference ref = DistanceReference::transmitter,
                                              bool all_references = false);
/// Pools several runs bin by bin.
std::vector<ActivityBin> activity_vs_distance(const std::vector<SimStats>& runs,
                                              const std::vector<Topology>& topologies, int bins,
                                              double max_distance, DistanceReference ref,
                                              bool all_references);

/// Fraction of links with successes/attempts <= xi; links that never
/// transmitted count as stable.
double unstable_fraction(const SimStats& stats, const SystemParams& params);

/// Independent topology/dynamics realisations run on a worker pool. Seeds
/// are derived from the master seed and the realisation index only, so the
/// result does not depend on `jobs`.
struct Ensemble {
  std::vector<Topology> topologies;
  std::vector<SimStats> runs;
};
Ensemble simulate_ensemble(const SystemParams& params, const Region& region, int realizations,
                           long slots, long warmup, std::uint64_t master_seed, unsigned jobs,
                           const SimOptions& opts = {});

/// Derived stream seed for (master, a, b).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

/// Seeds used by simulate_ensemble() for realisation `index`.
struct RealizationSeeds {
  std::uint64_t topology = 0;
  std::uint64_t dynamics = 0;
};
RealizationSeeds realization_seeds(std::uint64_t master_seed, std::size_t index);

std::string to_json(const SimStats& stats);
SimStats sim_stats_from_json(const std::string& text);

}  // namespace sinrlab
