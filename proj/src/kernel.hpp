#pragma once

// Discretisation shared by the exact success-probability solver and the
// meta-distribution iteration. Distances are in units of the link length r.

#include "sinrlab/core.hpp"

#include <Eigen/Core>

#include <vector>

namespace sinrlab::detail {

/// Radial nodes v (distance from the typical receiver, in units of r) with
/// composite Gauss-Legendre weights, and midpoint angular nodes on (0, pi).
/// kappa(i, j) = theta / d^alpha with d^2 = 1 + v_j^2 - 2 v_j cos(angle_i):
/// the normalised interference-to-signal ratio of a transmitter at (v_j,
/// angle_i) towards a receiver one link length away.
struct InteractionRule {
  std::vector<double> v;
  std::vector<double> wv;
  int n_ang = 0;
  Eigen::ArrayXXd kappa;
  double v_max = 0.0;
  /// int_{v_max}^inf v^{1-alpha} dv
  double tail_power = 0.0;

  /// Full-circle weight of one angular node.
  double angle_weight() const;
};

InteractionRule make_rule(const SystemParams& params, int n_ang, int per_panel = 20);

}  // namespace sinrlab::detail
