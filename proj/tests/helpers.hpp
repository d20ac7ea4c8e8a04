#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "radopf/network.hpp"

namespace radopf::testing {

inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline NodeLimits wide_limits() {
  NodeLimits lm;
  lm.v_min = 0.81;
  lm.v_max = 1.21;
  lm.p_min = -1.0;
  lm.p_max = 1.0;
  lm.q_min = -1.0;
  lm.q_max = 1.0;
  return lm;
}

/// Chain 0 <- 1 <- 2 <- ... <- n with shared limits and per-branch (r, x).
inline Network make_chain(const std::vector<std::array<double, 2>>& rx,
                          const NodeLimits& limits = wide_limits(),
                          double l_max = 4.0, double v0 = 1.0) {
  NetworkData data;
  data.v0 = v0;
  for (size_t i = 0; i < rx.size(); ++i) {
    data.nodes.push_back({std::to_string(i + 1), limits});
    data.branches.push_back({std::to_string(i + 1), std::to_string(i),
                             rx[i][0], rx[i][1], l_max});
  }
  return Network::from_data(data);
}

/// Star: all nodes hang off the root.
inline Network make_star(int n, double r = 0.01, double x = 0.02,
                         const NodeLimits& limits = wide_limits(),
                         double l_max = 4.0) {
  NetworkData data;
  data.v0 = 1.0;
  for (int i = 1; i <= n; ++i) {
    data.nodes.push_back({std::to_string(i), limits});
    data.branches.push_back({std::to_string(i), "0", r, x, l_max});
  }
  return Network::from_data(data);
}

/// Two-bus network with a fixed load (negative injection) at node 1.
inline Network make_2bus(double r, double x, double p_load, double q_load,
                         double l_max = 4.0, double v_min = 0.81,
                         double v_max = 1.21) {
  NetworkData data;
  data.v0 = 1.0;
  NodeLimits lm;
  lm.v_min = v_min;
  lm.v_max = v_max;
  lm.p_min = lm.p_max = -p_load;
  lm.q_min = lm.q_max = -q_load;
  data.nodes.push_back({"1", lm});
  data.branches.push_back({"1", "0", r, x, l_max});
  return Network::from_data(data);
}

/// Grid-scan g over [lo, hi] for sign changes, then bisect each bracket.
template <typename F>
std::vector<double> find_roots(F&& g, double lo, double hi, int grid = 4000,
                               int bisect_iters = 100) {
  std::vector<double> roots;
  double prev_x = lo, prev_g = g(lo);
  for (int k = 1; k <= grid; ++k) {
    const double x = lo + (hi - lo) * k / grid;
    const double gx = g(x);
    if (prev_g == 0.0) roots.push_back(prev_x);
    if ((prev_g < 0.0 && gx > 0.0) || (prev_g > 0.0 && gx < 0.0)) {
      double a = prev_x, b = x, ga = prev_g;
      for (int it = 0; it < bisect_iters; ++it) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if ((ga < 0.0) == (gm < 0.0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_g = gx;
  }
  return roots;
}

/// Independent nonconvex OPF oracle for a 2-bus fixed-load network under
/// the loss objective: eliminates the flow equations by hand into a single
/// quadratic in the child voltage and scans for feasible roots. Returns
/// the minimal loss, or +inf when infeasible.
inline double oracle_2bus_loss(const Network& net) {
  const Branch& br = net.branch_of(1);
  const NodeLimits& lm = net.limits(1);
  const double p = lm.p_min;  // fixed injection
  const double q = lm.q_min;
  const double z2 = br.z_abs2();
  const double A = net.v0() + 2.0 * (br.r * p + br.x * q);
  const double B = z2 * (p * p + q * q);
  auto g = [&](double v) { return v * v - A * v + B; };
  double best = std::numeric_limits<double>::infinity();
  for (double v : find_roots(g, lm.v_min, lm.v_max)) {
    const double l = (p * p + q * q) / v;
    if (l <= br.l_max + 1e-12) best = std::min(best, br.r * l);
  }
  return best;
}

/// Same oracle for the chain 0 <- 1 <- 2 with fixed loads at both nodes:
/// one outer scan over v1; for each v1 the leaf branch gives its own
/// quadratic in v2 (both roots tried), leaving a single equation in v1.
inline double oracle_3bus_chain_loss(const Network& net) {
  const Branch& b1 = net.branch_of(1);
  const Branch& b2 = net.branch_of(2);
  const NodeLimits& lm1 = net.limits(1);
  const NodeLimits& lm2 = net.limits(2);
  const double p1 = lm1.p_min, q1 = lm1.q_min;
  const double p2 = lm2.p_min, q2 = lm2.q_min;

  double best = std::numeric_limits<double>::infinity();
  for (int root_choice = 0; root_choice < 2; ++root_choice) {
    auto leaf = [&](double v1, double& v2, double& l2) -> bool {
      const double A = v1 + 2.0 * (b2.r * p2 + b2.x * q2);
      const double B = b2.z_abs2() * (p2 * p2 + q2 * q2);
      const double disc = A * A - 4.0 * B;
      if (disc < 0.0) return false;
      v2 = root_choice == 0 ? 0.5 * (A + std::sqrt(disc))
                            : 0.5 * (A - std::sqrt(disc));
      if (v2 <= 0.0) return false;
      l2 = (p2 * p2 + q2 * q2) / v2;
      return true;
    };
    auto g = [&](double v1) {
      double v2, l2;
      if (!leaf(v1, v2, l2)) return std::numeric_limits<double>::quiet_NaN();
      const double P10 = p1 + p2 - b2.r * l2;
      const double Q10 = q1 + q2 - b2.x * l2;
      const double A = net.v0() + 2.0 * (b1.r * P10 + b1.x * Q10);
      return v1 * v1 - A * v1 + b1.z_abs2() * (P10 * P10 + Q10 * Q10);
    };
    for (double v1 : find_roots(g, lm1.v_min, lm1.v_max)) {
      double v2, l2;
      if (!leaf(v1, v2, l2)) continue;
      if (v2 < lm2.v_min - 1e-10 || v2 > lm2.v_max + 1e-10) continue;
      if (l2 > b2.l_max + 1e-12) continue;
      const double P10 = p1 + p2 - b2.r * l2;
      const double Q10 = q1 + q2 - b2.x * l2;
      const double l1 = (P10 * P10 + Q10 * Q10) / v1;
      if (l1 > b1.l_max + 1e-12) continue;
      best = std::min(best, b1.r * l1 + b2.r * l2);
    }
  }
  return best;
}

}  // namespace radopf::testing
