#include "kernel.hpp"

#include "sinrlab/numerics.hpp"

#include <cmath>
#include <numbers>

namespace sinrlab::detail {

double InteractionRule::angle_weight() const { return 2.0 * std::numbers::pi / n_ang; }

InteractionRule make_rule(const SystemParams& params, int n_ang, int per_panel) {
  // Panels cluster around v = 1, where a transmitter can sit on top of the
  // receiver it interferes with.
  static const double edges[] = {0.0,  0.3,  0.6,  0.8, 0.9,  0.95, 0.98, 1.0,   1.02,
                                 1.05, 1.1,  1.2,  1.4, 1.7,  2.0,  3.0,  5.0,   8.0,
                                 13.0, 20.0, 35.0, 60.0, 100.0, 200.0, 400.0, 1000.0};
  const GaussLegendre gl(per_panel);
  InteractionRule rule;
  for (std::size_t p = 0; p + 1 < std::size(edges); ++p) {
    const double a = edges[p], b = edges[p + 1];
    for (int k = 0; k < per_panel; ++k) {
      rule.v.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[k]);
      rule.wv.push_back(0.5 * (b - a) * gl.weights[k]);
    }
  }
  rule.v_max = edges[std::size(edges) - 1];
  const double alpha = params.alpha();
  rule.tail_power = std::pow(rule.v_max, 2.0 - alpha) / (alpha - 2.0);

  rule.n_ang = n_ang;
  const auto nv = static_cast<Eigen::Index>(rule.v.size());
  rule.kappa.resize(n_ang, nv);
  for (Eigen::Index j = 0; j < nv; ++j) {
    const double v = rule.v[j];
    for (int i = 0; i < n_ang; ++i) {
      const double ang = (i + 0.5) * std::numbers::pi / n_ang;
      const double d2 = (1.0 - v) * (1.0 - v) + 4.0 * v * std::pow(std::sin(0.5 * ang), 2);
      rule.kappa(i, j) = params.theta() * std::pow(d2, -0.5 * alpha);
    }
  }
  return rule;
}

}  // namespace sinrlab::detail
